#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "eggsep/config.hpp"

namespace eggsep {

// Per-method eval-set estimates plus traces. Estimates from mask-producing
// methods satisfy b_hat + x_hat = y exactly and 0 <= x_hat <= y; this is
// asserted on every emitted sample.
struct MethodRun {
    std::vector<Tensor> x_est;
    std::vector<Tensor> b_est;
    nlohmann::json traces;
};

MethodRun run_method(const ExperimentConfig& cfg, const SeparationDataset& ds);

struct ExperimentResult {
    nlohmann::json report;  // deterministic; excludes timings
    double wall_seconds = 0.0;
};

SeparationDataset obtain_dataset(const ExperimentConfig& cfg);

// Runs the configured method, computes metrics on the eval triples, writes
// report.json / report.csv (and sample dumps when requested) under
// cfg.out_dir. Wall-clock timings go to a separate timings.json so the
// report itself is bit-identical across reruns.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_outputs = true);

// ---- reproduce suites ----

struct SuiteCell {
    std::string family;
    Method method;
    std::uint64_t seed;
    double mean_psnr = 0, mean_ssim = 0, median_sdr = 0, median_si_sdr = 0;
};

struct SuiteResult {
    std::string suite;
    std::vector<SuiteCell> cells;
    std::string table_csv;
};

// suite: images-synthetic | denoise | tones | mnist. mnist requires
// mnist_dir with the standard IDX archive names and is otherwise an error.
SuiteResult run_suite(const std::string& suite, std::size_t jobs, const std::string& out_dir,
                      const std::string& mnist_dir = "");

// Desk-scale experiment config for one suite cell (exposed for tests).
ExperimentConfig suite_cell_config(const std::string& family, Method method, std::uint64_t seed,
                                   const std::string& out_dir);

}  // namespace eggsep
