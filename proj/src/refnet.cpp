#include "depara/refnet.hpp"

#include <cmath>

#include <json.hpp>

#include "binary_io.hpp"
#include "meta_util.hpp"

namespace depara {
namespace {

using nlohmann::json;

constexpr const char* supported_activations = "identity, relu, tanh";

double activate(Activation a, double z) {
    switch (a) {
    case Activation::identity: return z;
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::tanh: return std::tanh(z);
    }
    return z;
}

// Derivative expressed through the pre-activation z and output y = act(z).
double activate_grad(Activation a, double z, double y) {
    switch (a) {
    case Activation::identity: return 1.0;
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - y * y;
    }
    return 1.0;
}

void check_tap(const RefNet& net, LayerTap tap) {
    if (tap.layer_index < 1 || tap.layer_index > net.depth()) {
        throw ValidationError("tap out of range: layer " + std::to_string(tap.layer_index) + " of " +
                              std::to_string(net.depth()));
    }
}

void check_input(const RefNet& net, std::span<const double> x) {
    if (x.size() != net.input_dim()) {
        throw ValidationError("input dimension mismatch: got " + std::to_string(x.size()) + ", net expects " +
                              std::to_string(net.input_dim()));
    }
}

// Pre-activations and outputs for layers 1..tap; outputs[0] is the input.
struct Trace {
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> outputs;
};

Trace run(const RefNet& net, std::span<const double> x, LayerTap tap) {
    check_tap(net, tap);
    check_input(net, x);
    Trace t;
    t.outputs.emplace_back(x.begin(), x.end());
    for (std::size_t l = 0; l < tap.layer_index; ++l) {
        const DenseLayer& layer = net.layers()[l];
        const auto& in = t.outputs.back();
        std::vector<double> z(layer.d_out());
        std::vector<double> y(layer.d_out());
        for (std::size_t r = 0; r < layer.d_out(); ++r) {
            double acc = layer.bias[r];
            const auto w = layer.weights.row(r);
            for (std::size_t c = 0; c < w.size(); ++c) {
                acc += static_cast<double>(w[c]) * in[c];
            }
            z[r] = acc;
            y[r] = activate(layer.activation, acc);
        }
        t.pre.push_back(std::move(z));
        t.outputs.push_back(std::move(y));
    }
    return t;
}

} // namespace

std::string_view to_string(Activation a) noexcept {
    switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    }
    return "identity";
}

Activation parse_activation(std::string_view name) {
    if (name == "identity") return Activation::identity;
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    throw ValidationError("unknown activation '" + std::string(name) + "' (supported: " + supported_activations +
                          ")");
}

RefNet::RefNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) {
        throw ValidationError("network needs at least one layer");
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const DenseLayer& layer = layers_[l];
        if (layer.d_in() == 0 || layer.d_out() == 0) {
            throw ValidationError("layer " + std::to_string(l + 1) + " has an empty weight matrix");
        }
        if (layer.bias.size() != layer.d_out()) {
            throw ValidationError("layer " + std::to_string(l + 1) + " bias length differs from d_out");
        }
        if (l > 0 && layer.d_in() != layers_[l - 1].d_out()) {
            throw ValidationError("dimension chain violation at layer " + std::to_string(l + 1) + ": d_in " +
                                  std::to_string(layer.d_in()) + " != previous d_out " +
                                  std::to_string(layers_[l - 1].d_out()));
        }
        for (float w : layer.weights.flat()) {
            if (!std::isfinite(w)) throw ValidationError("non-finite weight in layer " + std::to_string(l + 1));
        }
        for (float b : layer.bias) {
            if (!std::isfinite(b)) throw ValidationError("non-finite bias in layer " + std::to_string(l + 1));
        }
    }
}

std::size_t RefNet::width(LayerTap tap) const {
    check_tap(*this, tap);
    return layers_[tap.layer_index - 1].d_out();
}

std::vector<double> forward(const RefNet& net, std::span<const double> x, LayerTap tap) {
    return run(net, x, tap).outputs.back();
}

std::vector<double> grad_sq_norm(const RefNet& net, std::span<const double> x, LayerTap tap) {
    const Trace t = run(net, x, tap);
    std::vector<double> grad = t.outputs.back();
    for (double& g : grad) g *= 2.0;

    for (std::size_t l = tap.layer_index; l-- > 0;) {
        const DenseLayer& layer = net.layers()[l];
        const auto& z = t.pre[l];
        const auto& y = t.outputs[l + 1];
        for (std::size_t r = 0; r < grad.size(); ++r) {
            grad[r] *= activate_grad(layer.activation, z[r], y[r]);
        }
        std::vector<double> upstream(layer.d_in(), 0.0);
        for (std::size_t r = 0; r < layer.d_out(); ++r) {
            const double gr = grad[r];
            if (gr == 0.0) continue;
            const auto w = layer.weights.row(r);
            for (std::size_t c = 0; c < w.size(); ++c) {
                upstream[c] += static_cast<double>(w[c]) * gr;
            }
        }
        grad = std::move(upstream);
    }
    return grad;
}

std::vector<double> attribution(const RefNet& net, std::span<const double> x, LayerTap tap) {
    std::vector<double> v = grad_sq_norm(net, x, tap);
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = x[i] * v[i];
    }
    return v;
}

ProbeBundle export_bundle(const RefNet& net, const MatrixD& probe, LayerTap tap, const BundleIds& ids) {
    check_tap(net, tap);
    if (probe.rows() < 2) {
        throw ValidationError("probe needs at least 2 points (n >= 2)");
    }
    if (probe.cols() != net.input_dim()) {
        throw ValidationError("probe dimension mismatch: rows have " + std::to_string(probe.cols()) +
                              " values, net expects " + std::to_string(net.input_dim()));
    }
    ProbeBundle b;
    b.model_id = ids.model_id;
    b.layer_id = ids.layer_id;
    b.probe_id = ids.probe_id;
    b.embeddings = MatrixF(probe.rows(), net.width(tap));
    b.attributions = MatrixF(probe.rows(), net.input_dim());
    for (std::size_t k = 0; k < probe.rows(); ++k) {
        const auto x = probe.row(k);
        const auto e = forward(net, x, tap);
        const auto v = attribution(net, x, tap);
        for (std::size_t j = 0; j < e.size(); ++j) b.embeddings(k, j) = static_cast<float>(e[j]);
        for (std::size_t j = 0; j < v.size(); ++j) b.attributions(k, j) = static_cast<float>(v[j]);
    }
    validate_bundle(b);
    return b;
}

// DEPN v1: prefix, JSON architecture, then per layer the row-major weights
// followed by the bias, all f32 little-endian.

std::vector<std::uint8_t> encode_refnet(const RefNet& net) {
    if (net.depth() == 0) {
        throw ValidationError("cannot encode an empty network");
    }
    std::vector<std::uint8_t> payload;
    json layers = json::array();
    for (const DenseLayer& layer : net.layers()) {
        for (float w : layer.weights.flat()) detail::put_f32(payload, w);
        for (float b : layer.bias) detail::put_f32(payload, b);
        layers.push_back({{"d_in", layer.d_in()}, {"d_out", layer.d_out()}, {"activation", to_string(layer.activation)}});
    }
    const json meta = {
        {"input_dim", net.input_dim()},
        {"output_dim", net.output_dim()},
        {"layers", layers},
        {"dtype", "f32le"},
        {"checksum", detail::format_crc(detail::crc32(payload))},
    };
    const std::string text = meta.dump();
    std::vector<std::uint8_t> out;
    detail::write_prefix(out, net_magic, net_version, static_cast<std::uint32_t>(text.size()));
    out.insert(out.end(), text.begin(), text.end());
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

namespace {

struct NetArchitecture {
    struct Layer {
        std::size_t d_in;
        std::size_t d_out;
        Activation activation;
    };
    std::vector<Layer> layers;
    std::uint32_t checksum = 0;
    std::size_t payload_bytes = 0;
};

NetArchitecture parse_architecture(detail::Reader& reader) {
    const auto prefix = detail::parse_prefix(reader.take(detail::prefix_size));
    if (std::string(prefix.magic.data(), 4) != "DEPN") {
        throw FormatError("not a DEPN file");
    }
    if (prefix.version != net_version) {
        throw FormatError("unsupported DEPN version " + std::to_string(prefix.version));
    }
    if (prefix.flags != 0) {
        throw FormatError("unsupported DEPN flags " + std::to_string(prefix.flags));
    }
    const json meta = detail::parse_meta(reader.take(prefix.meta_len), prefix.meta_len);
    if (detail::meta_string(meta, "dtype") != "f32le") {
        throw FormatError("unsupported DEPN dtype (expected f32le)");
    }
    NetArchitecture arch;
    arch.checksum = detail::parse_crc(detail::meta_string(meta, "checksum"));
    const std::size_t input_dim = detail::meta_count(meta, "input_dim");
    const auto it = meta.find("layers");
    if (it == meta.end() || !it->is_array() || it->empty()) {
        throw FormatError("metadata field 'layers' missing or empty");
    }
    std::size_t prev = input_dim;
    for (const json& entry : *it) {
        if (!entry.is_object()) throw FormatError("layer entry is not an object");
        NetArchitecture::Layer layer{detail::meta_count(entry, "d_in"), detail::meta_count(entry, "d_out"),
                                     Activation::identity};
        try {
            layer.activation = parse_activation(detail::meta_string(entry, "activation"));
        } catch (const ValidationError& e) {
            throw FormatError(e.what());
        }
        if (layer.d_in != prev) {
            throw FormatError("dimension chain violation at layer " + std::to_string(arch.layers.size() + 1) +
                              ": d_in " + std::to_string(layer.d_in) + " != " + std::to_string(prev));
        }
        if (layer.d_out == 0) throw FormatError("layer with d_out = 0");
        prev = layer.d_out;
        arch.payload_bytes += 4 * (layer.d_in * layer.d_out + layer.d_out);
        arch.layers.push_back(layer);
    }
    if (const auto out = meta.find("output_dim"); out != meta.end() && out->is_number_unsigned() &&
                                                  out->get<std::size_t>() != prev) {
        throw FormatError("output_dim disagrees with last layer");
    }
    return arch;
}

RefNet parse_weights(const NetArchitecture& arch, const std::uint8_t* payload) {
    if (detail::crc32({payload, arch.payload_bytes}) != arch.checksum) {
        throw FormatError("corrupt payload (checksum mismatch)");
    }
    std::vector<DenseLayer> layers;
    const std::uint8_t* p = payload;
    for (const auto& shape : arch.layers) {
        DenseLayer layer;
        layer.activation = shape.activation;
        layer.weights = MatrixF(shape.d_out, shape.d_in);
        for (float& w : layer.weights.flat()) {
            w = detail::get_f32(p);
            p += 4;
        }
        layer.bias.resize(shape.d_out);
        for (float& b : layer.bias) {
            b = detail::get_f32(p);
            p += 4;
        }
        layers.push_back(std::move(layer));
    }
    try {
        return RefNet(std::move(layers));
    } catch (const ValidationError& e) {
        throw FormatError(e.what());
    }
}

} // namespace

RefNet decode_refnet(std::span<const std::uint8_t> bytes) {
    detail::Reader reader(bytes);
    const NetArchitecture arch = parse_architecture(reader);
    const std::uint8_t* payload = reader.take(arch.payload_bytes);
    if (reader.remaining() != 0) {
        throw FormatError("trailing bytes after DEPN payload");
    }
    return parse_weights(arch, payload);
}

void write_refnet(const RefNet& net, std::ostream& out) { detail::write_all(out, encode_refnet(net)); }

RefNet read_refnet(std::istream& in) {
    std::vector<std::uint8_t> buf;
    detail::read_exact(in, buf, detail::prefix_size);
    const auto prefix = detail::parse_prefix(buf.data());
    if (std::string(prefix.magic.data(), 4) != "DEPN") {
        throw FormatError("not a DEPN file");
    }
    detail::read_exact(in, buf, prefix.meta_len);
    detail::Reader reader(buf);
    const NetArchitecture arch = parse_architecture(reader);
    const std::size_t header_len = buf.size();
    detail::read_exact(in, buf, arch.payload_bytes);
    return parse_weights(arch, buf.data() + header_len);
}

void save_refnet(const RefNet& net, const std::string& path) { detail::write_file(path, encode_refnet(net)); }

RefNet load_refnet(const std::string& path) { return decode_refnet(detail::read_file(path)); }

} // namespace depara
