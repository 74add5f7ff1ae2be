#pragma once

#include <cstdint>
#include <vector>

#include "eggsep/dataset.hpp"
#include "eggsep/models.hpp"
#include "eggsep/rng.hpp"

namespace eggsep {

struct LmConfig {
    std::size_t latent_dim = 64;
    std::size_t stage1_epochs = 150;
    std::size_t stage2_epochs = 150;
    std::size_t infer_steps = 500;
    double code_lr = 0.01;
    double weight_lr = 0.001;
    std::size_t batch_size = 32;
    std::vector<std::size_t> hidden = {256, 512};
    std::uint64_t seed = 0;

    void validate() const;
};

// G_B is trained in stage 1 and frozen afterwards; stage 2 learns G_X plus
// per-mixture code pairs (z_y^B, z_y^X). All codes live in the unit ball.
struct LmModel {
    GeneratorModel g_b;
    GeneratorModel g_x;
    LatentTable codes_b;    // stage 1, one per observed sample
    LatentTable codes_y_b;  // stage 2, one per training mixture
    LatentTable codes_y_x;
    std::vector<double> stage1_loss;
    std::vector<double> stage2_loss;
};

struct GloResult {
    GeneratorModel generator;
    LatentTable codes;
    std::vector<double> epoch_loss;
};

// Joint optimization of generator weights and free per-sample codes on L1
// reconstruction; codes projected to the unit ball after every step.
GloResult train_glo(const std::vector<Tensor>& samples, const LmConfig& cfg);

// Stage 2: minimizes L1(G_B(z_y^B) + G_X(z_y^X), y) over G_X and both code
// tables, with G_B frozen. z_y^B starts from the stage-1 code of the
// nearest-by-L1 observed sample.
void train_lm_stage2(LmModel& model, const std::vector<Tensor>& observed_b,
                     const std::vector<Tensor>& mixtures_y, const LmConfig& cfg);

// Both stages.
LmModel train_lm(const std::vector<Tensor>& observed_b, const std::vector<Tensor>& mixtures_y,
                 const LmConfig& cfg);

struct LmInference {
    Tensor z_b, z_x;
    Tensor b_est, x_est;
    double recon_l1 = 0.0;
};

// Test-time code optimization (Adam on codes only, unit-ball projection);
// the generators are frozen.
LmInference lm_infer(const Tensor& y, const GeneratorModel& g_b, const GeneratorModel& g_x,
                     std::size_t steps, double code_lr, std::uint64_t seed);
std::vector<LmInference> lm_infer_batch(const std::vector<Tensor>& ys, const GeneratorModel& g_b,
                                        const GeneratorModel& g_x, std::size_t steps, double code_lr,
                                        std::uint64_t seed);

// m = b_est / (b_est + x_est + eps); in [0,1] for non-negative estimates,
// increasing in b_est and decreasing in x_est.
Tensor lmm_mask(const Tensor& b_est, const Tensor& x_est);

// Align-corners bilinear interpolation; constants stay constant and values
// remain inside the input range. Target must not be smaller than the source.
Tensor bilinear_upsample(const Tensor& m, std::size_t out_h, std::size_t out_w);

// The LMM -> NES bridge: per-mixture LMM mask from the stage-2 codes,
// upsampled to the dataset resolution when it differs, then
// x^0 = y .* (1 - m).
std::vector<Tensor> lmm_init_for_nes(const SeparationDataset& ds, const LmModel& model);

}  // namespace eggsep
