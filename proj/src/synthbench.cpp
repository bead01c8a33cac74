#include "depara/synthbench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>

#include "depara/graph.hpp"
#include "depara/rank_stats.hpp"
#include "depara/rng.hpp"
#include "depara/similarity.hpp"

namespace depara {
namespace {

MatrixD gaussian(Xoshiro256ss& rng, std::size_t rows, std::size_t cols) {
    MatrixD m(rows, cols);
    for (double& v : m.flat()) v = rng.normal();
    return m;
}

// Modified Gram-Schmidt on the rows: the Q factor of QR(Aᵀ) with positive R diagonal.
MatrixD orthonormal_rows(MatrixD a) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ri = a.row(i);
        for (std::size_t j = 0; j < i; ++j) {
            const auto rj = a.row(j);
            double dot = 0.0;
            for (std::size_t c = 0; c < ri.size(); ++c) dot += ri[c] * rj[c];
            for (std::size_t c = 0; c < ri.size(); ++c) ri[c] -= dot * rj[c];
        }
        double norm = 0.0;
        for (double v : ri) norm += v * v;
        norm = std::sqrt(norm);
        if (norm < 1e-12) {
            throw Error("Gaussian draw is rank deficient; choose another seed");
        }
        for (double& v : ri) v /= norm;
    }
    return a;
}

RefNet linear_net(const MatrixD& w) {
    DenseLayer layer;
    layer.weights = MatrixF(w.rows(), w.cols());
    for (std::size_t i = 0; i < w.flat().size(); ++i) {
        layer.weights.flat()[i] = static_cast<float>(w.flat()[i]);
    }
    layer.bias.assign(w.rows(), 0.0f);
    layer.activation = Activation::identity;
    return RefNet({std::move(layer)});
}

} // namespace

std::string variant_name(double sigma) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "variant-%g", sigma);
    return buf;
}

SynthFamily generate_family(std::uint64_t seed, std::size_t d_input, std::size_t d_embed, std::size_t n_probe,
                            std::span<const double> sigmas) {
    if (n_probe < 2) {
        throw ValidationError("n_probe must be >= 2");
    }
    if (d_input < 1 || d_embed < 1) {
        throw ValidationError("dimensions must be >= 1");
    }
    if (d_embed > d_input) {
        throw ValidationError("d_embed > d_input: orthonormal rows impossible");
    }
    for (double s : sigmas) {
        if (!(s >= 0.0) || !std::isfinite(s)) throw ValidationError("noise sigma must be finite and >= 0");
    }

    SynthFamily family;
    family.seed = seed;

    Xoshiro256ss base_rng(seed, base_weight_stream);
    const MatrixD w0 = orthonormal_rows(gaussian(base_rng, d_embed, d_input));
    family.base_net = linear_net(w0);

    Xoshiro256ss probe_rng(seed, probe_stream);
    family.probe = gaussian(probe_rng, n_probe, d_input);

    for (std::size_t i = 0; i < sigmas.size(); ++i) {
        const double sigma = sigmas[i];
        const std::string id = variant_name(sigma);
        if (std::any_of(family.variants.begin(), family.variants.end(),
                        [&](const SynthVariant& v) { return v.variant_id == id; })) {
            throw ValidationError("duplicate sigma " + id);
        }
        Xoshiro256ss rng(seed, first_variant_stream + i);
        const MatrixD g = gaussian(rng, d_embed, d_input);
        double frob = 0.0;
        for (double v : g.flat()) frob += v * v;
        frob = std::sqrt(frob);
        MatrixD w = w0;
        for (std::size_t k = 0; k < w.flat().size(); ++k) {
            w.flat()[k] += sigma * g.flat()[k] / frob;
        }
        family.variants.push_back({id, linear_net(w), 0.0, sigma});
    }
    return family;
}

ProbeBundle family_bundle(const SynthFamily& family, const RefNet& net, const std::string& model_id) {
    return export_bundle(net, family.probe, LayerTap{1},
                         {model_id, "tap-1", "synth-" + std::to_string(family.seed)});
}

std::vector<SigmaScore> monotonicity_harness(const SynthFamily& family, double lambda) {
    if (family.variants.size() < 2) {
        throw ValidationError("monotonicity harness needs at least 2 sigmas");
    }
    const DeparaGraph base = build_graph(family_bundle(family, family.base_net, "base"));
    std::vector<SigmaScore> out;
    for (const SynthVariant& v : family.variants) {
        const DeparaGraph g = build_graph(family_bundle(family, v.net, v.variant_id));
        out.push_back({v.noise_sigma, graph_similarity(g, base, lambda).score});
    }
    std::stable_sort(out.begin(), out.end(), [](const SigmaScore& a, const SigmaScore& b) { return a.sigma < b.sigma; });
    return out;
}

std::vector<SigmaScore> median_sweep(std::span<const std::uint64_t> seeds, std::size_t d_input, std::size_t d_embed,
                                     std::size_t n_probe, std::span<const double> sigmas, double lambda) {
    if (seeds.empty()) {
        throw ValidationError("median_sweep needs at least one seed");
    }
    std::map<double, std::vector<double>> by_sigma;
    for (std::uint64_t seed : seeds) {
        const SynthFamily family = generate_family(seed, d_input, d_embed, n_probe, sigmas);
        for (const SigmaScore& s : monotonicity_harness(family, lambda)) by_sigma[s.sigma].push_back(s.score);
    }
    std::vector<SigmaScore> out;
    for (auto& [sigma, scores] : by_sigma) out.push_back({sigma, median(std::move(scores))});
    return out;
}

std::string write_family(const SynthFamily& family, const std::string& root) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(root) / ("family-" + std::to_string(family.seed));
    const auto emit = [&](const std::string& name, const RefNet& net) {
        const fs::path sub = dir / name;
        fs::create_directories(sub);
        save_refnet(net, (sub / "net.depn").string());
        save_bundle(family_bundle(family, net, name), (sub / "bundle.depb").string());
    };
    emit("base", family.base_net);
    for (const SynthVariant& v : family.variants) emit(v.variant_id, v.net);
    return dir.string();
}

} // namespace depara
