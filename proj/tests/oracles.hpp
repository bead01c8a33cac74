#pragma once

// Test-only reference computations. Nothing here calls into the code paths it
// is used to check: the network forward pass, the rank assignment and the
// Pearson correlation are re-derived from scratch.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <random>
#include <string>
#include <vector>

#include "depara/refnet.hpp"
#include "depara/tensor_store.hpp"

namespace oracle {

using depara::Activation;
using depara::DenseLayer;
using depara::MatrixD;
using depara::MatrixF;
using depara::ProbeBundle;
using depara::RefNet;

struct ForwardResult {
    std::vector<double> output;
    std::vector<int> relu_pattern; // sign pattern of every relu pre-activation
};

inline ForwardResult forward(const RefNet& net, const std::vector<double>& x, std::size_t tap) {
    ForwardResult r;
    std::vector<double> h = x;
    for (std::size_t l = 0; l < tap; ++l) {
        const DenseLayer& layer = net.layers()[l];
        std::vector<double> next(layer.d_out());
        for (std::size_t i = 0; i < layer.d_out(); ++i) {
            long double acc = layer.bias[i];
            for (std::size_t j = 0; j < layer.d_in(); ++j) {
                acc += static_cast<long double>(layer.weights(i, j)) * h[j];
            }
            const double z = static_cast<double>(acc);
            switch (layer.activation) {
            case Activation::identity: next[i] = z; break;
            case Activation::tanh: next[i] = std::tanh(z); break;
            case Activation::relu:
                next[i] = z > 0 ? z : 0;
                r.relu_pattern.push_back(z > 0 ? 1 : 0);
                break;
            }
        }
        h = std::move(next);
    }
    r.output = std::move(h);
    return r;
}

inline double sq_norm_of_output(const RefNet& net, const std::vector<double>& x, std::size_t tap) {
    long double s = 0;
    for (double v : forward(net, x, tap).output) s += static_cast<long double>(v) * v;
    return static_cast<double>(s);
}

/// Central differences of ||F(x)||^2. `smooth` is false when some relu changes
/// sign inside the stencil, i.e. the function is not differentiable there.
struct FiniteDiff {
    std::vector<double> grad;
    bool smooth = true;
};

inline FiniteDiff central_difference(const RefNet& net, const std::vector<double>& x, std::size_t tap, double h) {
    FiniteDiff fd;
    const auto pattern = forward(net, x, tap).relu_pattern;
    fd.grad.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto xp = x;
        auto xm = x;
        xp[i] += h;
        xm[i] -= h;
        if (forward(net, xp, tap).relu_pattern != pattern || forward(net, xm, tap).relu_pattern != pattern) {
            fd.smooth = false;
        }
        fd.grad[i] = (sq_norm_of_output(net, xp, tap) - sq_norm_of_output(net, xm, tap)) / (2 * h);
    }
    return fd;
}

/// Product W_L ... W_1 of a purely linear network.
inline MatrixD composed_weights(const RefNet& net) {
    const auto& first = net.layers().front().weights;
    MatrixD w(first.rows(), first.cols());
    for (std::size_t i = 0; i < first.flat().size(); ++i) w.flat()[i] = first.flat()[i];
    for (std::size_t l = 1; l < net.depth(); ++l) {
        const auto& a = net.layers()[l].weights;
        MatrixD next(a.rows(), w.cols());
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j < w.cols(); ++j) {
                long double acc = 0;
                for (std::size_t k = 0; k < a.cols(); ++k) acc += static_cast<long double>(a(i, k)) * w(k, j);
                next(i, j) = static_cast<double>(acc);
            }
        w = std::move(next);
    }
    return w;
}

/// 2 W^T W x.
inline std::vector<double> linear_closed_form(const MatrixD& w, const std::vector<double>& x) {
    std::vector<long double> wx(w.rows(), 0);
    for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j) wx[i] += static_cast<long double>(w(i, j)) * x[j];
    std::vector<double> g(w.cols());
    for (std::size_t j = 0; j < w.cols(); ++j) {
        long double acc = 0;
        for (std::size_t i = 0; i < w.rows(); ++i) acc += static_cast<long double>(w(i, j)) * wx[i];
        g[j] = static_cast<double>(2 * acc);
    }
    return g;
}

/// Rank by counting: 1 + #smaller + (#equal - 1) / 2.
inline std::vector<double> counting_ranks(const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::size_t less = 0;
        std::size_t equal = 0;
        for (double u : v) {
            if (u < v[i]) ++less;
            if (u == v[i]) ++equal;
        }
        r[i] = 1.0 + static_cast<double>(less) + 0.5 * static_cast<double>(equal - 1);
    }
    return r;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    long double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= a.size();
    mb /= b.size();
    long double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return static_cast<double>(sab / std::sqrt(saa * sbb));
}

inline double brute_force_spearman(const std::vector<double>& a, const std::vector<double>& b) {
    return pearson(counting_ranks(a), counting_ranks(b));
}

/// 1 - 6 sum(d^2) / (m^3 - m); valid only without ties.
inline double shortcut_spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const auto ra = counting_ranks(a);
    const auto rb = counting_ranks(b);
    long double d2 = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
    const long double m = static_cast<long double>(a.size());
    return static_cast<double>(1 - 6 * d2 / (m * m * m - m));
}

inline bool has_ties(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return std::adjacent_find(v.begin(), v.end()) != v.end();
}

// ---- random generators -------------------------------------------------

inline RefNet random_net(std::mt19937_64& rng, std::size_t depth, std::size_t max_dim, bool linear_only,
                         bool zero_bias = false, std::size_t min_dim = 1) {
    std::uniform_int_distribution<std::size_t> dim(min_dim, max_dim);
    std::uniform_int_distribution<int> act(0, 2);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<DenseLayer> layers;
    std::size_t d_in = dim(rng);
    for (std::size_t l = 0; l < depth; ++l) {
        const std::size_t d_out = dim(rng);
        DenseLayer layer;
        layer.weights = MatrixF(d_out, d_in);
        const double scale = 1.0 / std::sqrt(static_cast<double>(d_in));
        for (float& w : layer.weights.flat()) w = static_cast<float>(gauss(rng) * scale);
        layer.bias.resize(d_out);
        for (float& b : layer.bias) b = zero_bias ? 0.0f : static_cast<float>(0.1 * gauss(rng));
        layer.activation = linear_only ? Activation::identity : static_cast<Activation>(act(rng));
        layers.push_back(std::move(layer));
        d_in = d_out;
    }
    return RefNet(std::move(layers));
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> x(dim);
    for (double& v : x) v = gauss(rng);
    return x;
}

inline MatrixD random_probe(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
    MatrixD m(n, dim);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& v : m.flat()) v = gauss(rng);
    return m;
}

inline ProbeBundle random_bundle(std::mt19937_64& rng, std::size_t n, std::size_t d_embed, std::size_t d_input,
                                 const std::string& probe_id = "probe") {
    std::normal_distribution<float> gauss(0.0f, 1.0f);
    ProbeBundle b;
    b.model_id = "model-" + std::to_string(rng() % 1000);
    b.layer_id = "layer";
    b.probe_id = probe_id;
    b.embeddings = MatrixF(n, d_embed);
    b.attributions = MatrixF(n, d_input);
    for (float& v : b.embeddings.flat()) v = gauss(rng);
    for (float& v : b.attributions.flat()) v = gauss(rng);
    return b;
}

inline bool bitwise_equal(const ProbeBundle& a, const ProbeBundle& b) {
    const auto same = [](std::span<const float> x, std::span<const float> y) {
        return x.size() == y.size() && std::memcmp(x.data(), y.data(), x.size() * sizeof(float)) == 0;
    };
    return a.model_id == b.model_id && a.layer_id == b.layer_id && a.probe_id == b.probe_id &&
           a.embeddings.rows() == b.embeddings.rows() && a.attributions.rows() == b.attributions.rows() &&
           same(a.embeddings.flat(), b.embeddings.flat()) && same(a.attributions.flat(), b.attributions.flat());
}

inline double max_rel_error(const std::vector<double>& got, const std::vector<double>& want, double floor) {
    double worst = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        if (std::abs(want[i]) <= floor) continue;
        worst = std::max(worst, std::abs(got[i] - want[i]) / std::abs(want[i]));
    }
    return worst;
}

} // namespace oracle
