#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "depara/matrix.hpp"
#include "depara/tensor_store.hpp"

namespace depara {

enum class Activation { identity, relu, tanh };

std::string_view to_string(Activation a) noexcept;
/// Throws ValidationError listing the supported names.
Activation parse_activation(std::string_view name);

struct DenseLayer {
    MatrixF weights;            // d_out x d_in
    std::vector<float> bias;    // d_out
    Activation activation = Activation::identity;

    std::size_t d_in() const noexcept { return weights.cols(); }
    std::size_t d_out() const noexcept { return weights.rows(); }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// 1-based index of the layer whose post-activation output is the embedding.
struct LayerTap {
    std::size_t layer_index = 1;
};

/// Dense feed-forward reference network. Weights are stored in f32 and every
/// evaluation accumulates in f64.
class RefNet {
public:
    RefNet() = default;
    /// Throws ValidationError on a broken dimension chain or non-finite weights.
    explicit RefNet(std::vector<DenseLayer> layers);

    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::size_t depth() const noexcept { return layers_.size(); }
    std::size_t input_dim() const noexcept { return layers_.empty() ? 0 : layers_.front().d_in(); }
    std::size_t output_dim() const noexcept { return layers_.empty() ? 0 : layers_.back().d_out(); }
    std::size_t width(LayerTap tap) const;

    friend bool operator==(const RefNet&, const RefNet&) = default;

private:
    std::vector<DenseLayer> layers_;
};

/// Post-activation output of layer `tap`.
std::vector<double> forward(const RefNet& net, std::span<const double> x, LayerTap tap);

/// d||F(x)||^2 / dx by reverse-mode differentiation seeded with 2 F(x).
/// ReLU has derivative 0 at exactly 0.
std::vector<double> grad_sq_norm(const RefNet& net, std::span<const double> x, LayerTap tap);

/// Gradient*Input: v_i = x_i * grad_sq_norm(x)_i.
std::vector<double> attribution(const RefNet& net, std::span<const double> x, LayerTap tap);

struct BundleIds {
    std::string model_id;
    std::string layer_id;
    std::string probe_id;
};

/// Runs every probe row through the net and packs embeddings and attributions.
ProbeBundle export_bundle(const RefNet& net, const MatrixD& probe, LayerTap tap, const BundleIds& ids);

inline constexpr char net_magic[5] = "DEPN";
inline constexpr std::uint16_t net_version = 1;

std::vector<std::uint8_t> encode_refnet(const RefNet& net);
RefNet decode_refnet(std::span<const std::uint8_t> bytes);
void write_refnet(const RefNet& net, std::ostream& out);
RefNet read_refnet(std::istream& in);
void save_refnet(const RefNet& net, const std::string& path);
RefNet load_refnet(const std::string& path);

} // namespace depara
