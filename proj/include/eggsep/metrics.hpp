#pragma once

#include <functional>
#include <string>
#include <vector>

#include "eggsep/dataset.hpp"
#include "eggsep/tensor.hpp"

namespace eggsep {

// dB values are capped at +/-100 so reports stay finite and comparable;
// exact matches report +100.
constexpr double kDbCap = 100.0;

double psnr(const Tensor& est, const Tensor& gt, double peak = 1.0);
double ssim(const Tensor& est, const Tensor& gt, int window = 11, double sigma = 1.5, double k1 = 0.01,
            double k2 = 0.03, double level = 1.0);
double sdr(const Tensor& est, const Tensor& gt);
double si_sdr(const Tensor& est, const Tensor& gt);

// Per-sample metrics with mean/median aggregates.
struct MetricReport {
    std::vector<double> psnr_db;
    std::vector<double> ssim_score;
    std::vector<double> sdr_db;
    std::vector<double> si_sdr_db;

    double mean_psnr = 0, median_psnr = 0;
    double mean_ssim = 0, median_ssim = 0;
    double mean_sdr = 0, median_sdr = 0;
    double mean_si_sdr = 0, median_si_sdr = 0;

    static MetricReport compute(const std::vector<Tensor>& est, const std::vector<Tensor>& gt,
                                double peak = 1.0);
    std::string to_csv() const;  // one row per sample
};

double median(std::vector<double> v);

// Eq.-style optimal mask: b / (y + eps), clamped to [0,1].
Tensor optimal_mask(const Tensor& b, const Tensor& y);

using MaskFn = std::function<Tensor(const Tensor&)>;

// ---- convergence diagnostics ----

// Per-iteration |e^t| = |b - m^t(y) .* y| on the eval triples, plus the
// |b/y^t| ratio statistics and the lambda estimate when synthetic mixtures
// are supplied.
struct LambdaReport {
    double lambda_hat = 0.0;  // max valid elementwise ratio
    double q50 = 0.0;
    double q90 = 0.0;
    std::size_t flagged = 0;        // elements violating |b/y^t| < 1/lambda_hat
    std::size_t denom_guarded = 0;  // elements excluded by the denominator floor
    std::size_t considered = 0;
};

struct ConvergenceTrace {
    std::vector<Tensor> abs_err;           // per iteration, stacked [n_eval x ...]
    std::vector<double> median_abs_err;    // per iteration
    std::vector<double> mean_abs_err;
    std::vector<double> ratio_median;      // |b / y^t| median, when y_t provided
    std::vector<LambdaReport> lambda;      // when y_t provided

    std::string to_csv() const;  // one row per sample per iteration
};

ConvergenceTrace error_series(const std::vector<MaskFn>& per_iteration_masks,
                              const std::vector<EvalTriple>& eval);

// lambda_hat = max over elements of |b - m(y).*y| / |b - m(y^t).*y| with a
// denominator floor of floor_scale * median(|b|). y_t holds one synthetic
// mixture per eval triple (same b, estimated x). Throws when every
// denominator is degenerate.
LambdaReport estimate_lambda(const MaskFn& mask, const std::vector<EvalTriple>& eval,
                             const std::vector<Tensor>& y_t, double floor_scale = 1e-6);

}  // namespace eggsep
