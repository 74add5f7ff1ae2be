#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eggsep/dataset.hpp"
#include "eggsep/metrics.hpp"
#include "eggsep/rng.hpp"
#include "eggsep/training.hpp"

namespace eggsep {

enum class NesInit : std::uint8_t { constant, external };

struct NesConfig {
    std::size_t iterations = 10;  // N
    std::size_t epochs = 25;      // P, per iteration
    double lr = 0.001;
    NesInit init = NesInit::constant;
    double init_constant = 0.5;  // c
    std::size_t batch_size = 32;
    std::vector<std::size_t> hidden = {512, 512};
    bool resample_pairs_per_epoch = false;  // default: one pairing per iteration
    bool warm_start = false;                // default: fresh weights each iteration
    bool record_history = true;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainPair {
    Tensor y;  // b + x_draw
    Tensor b;
};

struct NesIterationRecord {
    std::vector<double> epoch_loss;
    double final_loss = 0.0;
    // eval metrics, NaN when the dataset has no eval triples
    double eval_mean_psnr;
    double eval_mean_ssim;
    double eval_median_sdr;
    double eval_median_si_sdr;
    double median_abs_err;  // Eq.-14 style |e^t| median on eval triples
};

struct NesState {
    std::vector<Tensor> x_estimates;
    MaskModel model;
    std::vector<NesIterationRecord> iterations;
    // populated when record_history: the model after each iteration, and the
    // X estimates that iteration trained on (its synthetic-mixture inputs)
    std::vector<MaskModel> model_history;
    std::vector<std::vector<Tensor>> x_input_history;
};

// x^0 = c * y per sample. Degenerate c close to 0 is allowed but warned
// against by the config validator; here only c in (0,1) is accepted.
std::vector<Tensor> nes_init_constant(const std::vector<Tensor>& mixtures, double c);

// One pair per observed b, with x drawn uniformly with replacement; the
// pairing is fixed for the whole iteration.
std::vector<TrainPair> synthesize_pairs(const std::vector<Tensor>& observed_b,
                                        const std::vector<Tensor>& x_estimates, Rng& rng);

// Trains a freshly initialized mask for P epochs on the synthetic pairs.
TrainedMask nes_iteration(const std::vector<TrainPair>& pairs, const NesConfig& cfg, Rng& rng);

// x = y .* (1 - m(y)); non-negative by the mask bounds.
std::vector<Tensor> nes_reestimate(const MaskModel& model, const std::vector<Tensor>& mixtures);

NesState nes_run(const SeparationDataset& ds, const NesConfig& cfg,
                 std::optional<std::vector<Tensor>> x0 = std::nullopt);

// Per-iteration snapshot dump (EGT1 estimates + JSON trace) for offline diffs.
void dump_nes_state(const NesState& state, const std::string& dir);

}  // namespace eggsep
