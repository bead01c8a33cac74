#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "depara/matrix.hpp"
#include "depara/refnet.hpp"

namespace depara {

// Synthetic task families whose relatedness is controlled by the size of a
// weight perturbation. This is a desk-scale proxy for a real model zoo: the
// ground truth is perturbation magnitude, not transfer accuracy.

struct SynthVariant {
    std::string variant_id;
    RefNet net;
    double rotation_angle = 0.0; // reserved nuisance; generate_family leaves it at 0
    double noise_sigma = 0.0;
};

struct SynthFamily {
    std::uint64_t seed = 0;
    RefNet base_net;
    std::vector<SynthVariant> variants;
    MatrixD probe; // n_probe x d_input, standard normal, shared by every variant
};

/// RNG streams used by generate_family.
inline constexpr std::uint64_t base_weight_stream = 0;
inline constexpr std::uint64_t probe_stream = 1;
inline constexpr std::uint64_t first_variant_stream = 2; // variant i uses stream 2 + i

/// Base: one linear layer W0 (d_embed x d_input) with orthonormal rows, taken
/// from the QR factorization (positive R diagonal) of a seeded Gaussian.
/// Variant sigma: W0 + sigma * G / ||G||_F with G seeded Gaussian.
SynthFamily generate_family(std::uint64_t seed, std::size_t d_input, std::size_t d_embed, std::size_t n_probe,
                            std::span<const double> sigmas);

/// "variant-<sigma>" with sigma in %g notation.
std::string variant_name(double sigma);

/// Bundle of `net` on the family probe at tap 1; probe_id is "synth-<seed>".
ProbeBundle family_bundle(const SynthFamily& family, const RefNet& net, const std::string& model_id);

struct SigmaScore {
    double sigma = 0.0;
    double score = 0.0;
};

/// Score of every variant against the base, sorted by sigma ascending.
std::vector<SigmaScore> monotonicity_harness(const SynthFamily& family, double lambda);

/// Median over seeds of monotonicity_harness, per sigma (ascending).
std::vector<SigmaScore> median_sweep(std::span<const std::uint64_t> seeds, std::size_t d_input, std::size_t d_embed,
                                     std::size_t n_probe, std::span<const double> sigmas, double lambda);

/// Writes family-<seed>/{base,variant-<sigma>}/{net.depn,bundle.depb} under `root`.
/// Returns the family directory.
std::string write_family(const SynthFamily& family, const std::string& root);

} // namespace depara
