#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eggsep/rng.hpp"
#include "eggsep/tensor.hpp"

namespace eggsep {

struct EvalTriple {
    Tensor x;  // unobserved source
    Tensor b;  // observed source
    Tensor y;  // mixture, y = x + b exactly
};

// Observed-source set {b}, mixture set {y}, and optional held-out ground
// truth. observed_b and mixtures_y are disjoint draws. sup_pairs are (y, b)
// pairs with known decomposition, used only by the supervised upper bound.
struct SeparationDataset {
    std::vector<Tensor> observed_b;
    std::vector<Tensor> mixtures_y;
    std::vector<EvalTriple> eval;
    std::vector<std::pair<Tensor, Tensor>> sup_pairs;

    std::string name;
    std::vector<std::size_t> sample_shape;
    double value_max = 1.0;  // per-source range; mixtures reach 2 * value_max
    std::uint64_t seed = 0;

    std::size_t sample_dim() const { return shape_numel(sample_shape); }
    void validate() const;  // shape agreement, non-negativity, exact y = x + b
};

enum class SynthFamily : std::uint8_t { bars, blobs, tones, denoise };

const char* family_name(SynthFamily f);
SynthFamily family_from_name(const std::string& s);

struct SynthConfig {
    SynthFamily family = SynthFamily::bars;
    std::size_t height = 16;
    std::size_t width = 16;
    std::size_t n_b = 256;
    std::size_t n_y = 256;
    std::size_t n_eval = 64;
    std::size_t n_sup = 0;  // 0 -> same as n_y
    double noise_sigma = 0.1;  // denoise family only
    std::uint64_t seed = 0;

    void validate() const;
};

SeparationDataset gen_synthetic(const SynthConfig& cfg);

// MNIST-protocol loader for one IDX image/label archive pair. low_is_b selects
// whether digits 0-4 (true) or 5-9 (false) form the observed distribution.
SeparationDataset load_idx(const std::string& images_path, const std::string& labels_path, bool low_is_b);

// Dataset directory: stacked EGT1 tensors plus a JSON manifest.
void save_dataset(const SeparationDataset& ds, const std::string& dir);
SeparationDataset load_dataset(const std::string& dir);

}  // namespace eggsep
