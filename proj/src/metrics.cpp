#include "eggsep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace eggsep {

namespace {

double clamp_db(double db) { return std::min(kDbCap, std::max(-kDbCap, db)); }

}  // namespace

double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median: empty");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double psnr(const Tensor& est, const Tensor& gt, double peak) {
    if (!est.same_shape(gt))
        throw std::invalid_argument("psnr: shape mismatch " + est.shape_str() + " vs " + gt.shape_str());
    double mse = 0.0;
    for (std::size_t i = 0; i < est.numel(); ++i) {
        const double d = est.data[i] - gt.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(est.numel());
    if (mse == 0.0) return kDbCap;
    return clamp_db(10.0 * std::log10(peak * peak / mse));
}

double ssim(const Tensor& est, const Tensor& gt, int window, double sigma, double k1, double k2,
            double level) {
    if (!est.same_shape(gt))
        throw std::invalid_argument("ssim: shape mismatch " + est.shape_str() + " vs " + gt.shape_str());
    if (est.rank() != 2) throw std::invalid_argument("ssim: inputs must be 2-D");
    const std::size_t h = est.rows(), w = est.cols();
    const std::size_t win = static_cast<std::size_t>(window);
    if (h < win || w < win)
        throw std::invalid_argument("ssim: input " + est.shape_str() + " smaller than window " +
                                    std::to_string(window));

    // normalized Gaussian window
    std::vector<double> g(win * win);
    const double c = (static_cast<double>(win) - 1.0) / 2.0;
    double gsum = 0.0;
    for (std::size_t i = 0; i < win; ++i)
        for (std::size_t j = 0; j < win; ++j) {
            const double di = static_cast<double>(i) - c, dj = static_cast<double>(j) - c;
            g[i * win + j] = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
            gsum += g[i * win + j];
        }
    for (double& v : g) v /= gsum;

    const double c1 = (k1 * level) * (k1 * level);
    const double c2 = (k2 * level) * (k2 * level);

    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t top = 0; top + win <= h; ++top)
        for (std::size_t left = 0; left + win <= w; ++left) {
            double mu1 = 0, mu2 = 0;
            for (std::size_t i = 0; i < win; ++i)
                for (std::size_t j = 0; j < win; ++j) {
                    const double wgt = g[i * win + j];
                    mu1 += wgt * est.at(top + i, left + j);
                    mu2 += wgt * gt.at(top + i, left + j);
                }
            double var1 = 0, var2 = 0, cov = 0;
            for (std::size_t i = 0; i < win; ++i)
                for (std::size_t j = 0; j < win; ++j) {
                    const double wgt = g[i * win + j];
                    const double d1 = est.at(top + i, left + j) - mu1;
                    const double d2 = gt.at(top + i, left + j) - mu2;
                    var1 += wgt * d1 * d1;
                    var2 += wgt * d2 * d2;
                    cov += wgt * d1 * d2;
                }
            const double num = (2.0 * mu1 * mu2 + c1) * (2.0 * cov + c2);
            const double den = (mu1 * mu1 + mu2 * mu2 + c1) * (var1 + var2 + c2);
            total += num / den;
            ++count;
        }
    return total / static_cast<double>(count);
}

double sdr(const Tensor& est, const Tensor& gt) {
    if (!est.same_shape(gt))
        throw std::invalid_argument("sdr: shape mismatch " + est.shape_str() + " vs " + gt.shape_str());
    double sig = 0.0, err = 0.0;
    for (std::size_t i = 0; i < gt.numel(); ++i) {
        sig += gt.data[i] * gt.data[i];
        const double d = gt.data[i] - est.data[i];
        err += d * d;
    }
    if (sig == 0.0) throw std::invalid_argument("sdr: ground truth is all-zero");
    if (err == 0.0) return kDbCap;
    return clamp_db(10.0 * std::log10(sig / err));
}

double si_sdr(const Tensor& est, const Tensor& gt) {
    if (!est.same_shape(gt))
        throw std::invalid_argument("si_sdr: shape mismatch " + est.shape_str() + " vs " + gt.shape_str());
    double sig = 0.0, proj = 0.0;
    for (std::size_t i = 0; i < gt.numel(); ++i) {
        sig += gt.data[i] * gt.data[i];
        proj += est.data[i] * gt.data[i];
    }
    if (sig == 0.0) throw std::invalid_argument("si_sdr: ground truth is all-zero");
    const double alpha = proj / sig;
    double target = 0.0, noise = 0.0;
    for (std::size_t i = 0; i < gt.numel(); ++i) {
        const double t = alpha * gt.data[i];
        const double n = est.data[i] - t;
        target += t * t;
        noise += n * n;
    }
    if (target == 0.0) return -kDbCap;
    if (noise == 0.0) return kDbCap;
    return clamp_db(10.0 * std::log10(target / noise));
}

MetricReport MetricReport::compute(const std::vector<Tensor>& est, const std::vector<Tensor>& gt,
                                   double peak) {
    if (est.size() != gt.size() || est.empty())
        throw std::invalid_argument("metric report: estimate/truth counts differ or empty");
    MetricReport r;
    for (std::size_t i = 0; i < est.size(); ++i) {
        r.psnr_db.push_back(psnr(est[i], gt[i], peak));
        r.ssim_score.push_back(est[i].rank() == 2 && est[i].rows() >= 11 && est[i].cols() >= 11
                                   ? ssim(est[i], gt[i])
                                   : std::numeric_limits<double>::quiet_NaN());
        r.sdr_db.push_back(sdr(est[i], gt[i]));
        r.si_sdr_db.push_back(si_sdr(est[i], gt[i]));
    }
    auto mean_of = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    r.mean_psnr = mean_of(r.psnr_db);
    r.median_psnr = median(r.psnr_db);
    const bool has_ssim = !std::isnan(r.ssim_score.front());
    r.mean_ssim = has_ssim ? mean_of(r.ssim_score) : std::numeric_limits<double>::quiet_NaN();
    r.median_ssim = has_ssim ? median(r.ssim_score) : std::numeric_limits<double>::quiet_NaN();
    r.mean_sdr = mean_of(r.sdr_db);
    r.median_sdr = median(r.sdr_db);
    r.mean_si_sdr = mean_of(r.si_sdr_db);
    r.median_si_sdr = median(r.si_sdr_db);
    return r;
}

std::string MetricReport::to_csv() const {
    std::ostringstream os;
    os << "sample,psnr_db,ssim,sdr_db,si_sdr_db\n";
    for (std::size_t i = 0; i < psnr_db.size(); ++i)
        os << i << ',' << psnr_db[i] << ',' << ssim_score[i] << ',' << sdr_db[i] << ',' << si_sdr_db[i]
           << '\n';
    return os.str();
}

Tensor optimal_mask(const Tensor& b, const Tensor& y) {
    Tensor m = div_eps(b, y);
    for (double& v : m.data) v = std::min(1.0, std::max(0.0, v));
    return m;
}

ConvergenceTrace error_series(const std::vector<MaskFn>& per_iteration_masks,
                              const std::vector<EvalTriple>& eval) {
    if (per_iteration_masks.empty()) throw std::invalid_argument("error_series: no mask history");
    if (eval.empty()) throw std::invalid_argument("error_series: no eval triples");
    ConvergenceTrace trace;
    for (const MaskFn& mask : per_iteration_masks) {
        std::vector<Tensor> errs;
        std::vector<double> all;
        for (const EvalTriple& e : eval) {
            const Tensor m = mask(e.y);
            Tensor err(e.y.shape);
            for (std::size_t i = 0; i < err.numel(); ++i)
                err.data[i] = std::abs(e.b.data[i] - m.data[i] * e.y.data[i]);
            all.insert(all.end(), err.data.begin(), err.data.end());
            errs.push_back(std::move(err));
        }
        trace.abs_err.push_back(stack(errs));
        trace.median_abs_err.push_back(median(all));
        double s = 0.0;
        for (double v : all) s += v;
        trace.mean_abs_err.push_back(s / static_cast<double>(all.size()));
    }
    return trace;
}

std::string ConvergenceTrace::to_csv() const {
    std::ostringstream os;
    os << "iteration,sample,median_abs_err,mean_abs_err\n";
    for (std::size_t t = 0; t < abs_err.size(); ++t) {
        const std::vector<Tensor> per_sample = unstack(abs_err[t]);
        for (std::size_t s = 0; s < per_sample.size(); ++s) {
            std::vector<double> v(per_sample[s].data);
            os << t << ',' << s << ',' << median(v) << ',' << mean_value(per_sample[s]) << '\n';
        }
    }
    return os.str();
}

LambdaReport estimate_lambda(const MaskFn& mask, const std::vector<EvalTriple>& eval,
                             const std::vector<Tensor>& y_t, double floor_scale) {
    if (eval.empty() || y_t.size() != eval.size())
        throw std::invalid_argument("estimate_lambda: eval/synthetic mixture counts differ");

    std::vector<double> abs_b;
    for (const EvalTriple& e : eval)
        for (double v : e.b.data) abs_b.push_back(std::abs(v));
    const double floor = floor_scale * std::max(median(abs_b), 1e-300);

    LambdaReport rep;
    std::vector<double> ratios;
    std::vector<double> by_ratios;  // |b / y^t| per considered element
    for (std::size_t s = 0; s < eval.size(); ++s) {
        const EvalTriple& e = eval[s];
        if (!y_t[s].same_shape(e.y))
            throw std::invalid_argument("estimate_lambda: synthetic mixture shape mismatch");
        const Tensor m_true = mask(e.y);
        const Tensor m_synth = mask(y_t[s]);
        for (std::size_t i = 0; i < e.y.numel(); ++i) {
            const double num = std::abs(e.b.data[i] - m_true.data[i] * e.y.data[i]);
            const double den = std::abs(e.b.data[i] - m_synth.data[i] * e.y.data[i]);
            if (den <= floor) {
                ++rep.denom_guarded;
                continue;
            }
            ratios.push_back(num / den);
            by_ratios.push_back(std::abs(e.b.data[i]) / (std::abs(y_t[s].data[i]) + 1e-8));
        }
    }
    if (ratios.empty()) throw std::runtime_error("estimate_lambda: degenerate denominators everywhere");

    rep.considered = ratios.size();
    rep.lambda_hat = *std::max_element(ratios.begin(), ratios.end());
    std::vector<double> sorted(ratios);
    std::sort(sorted.begin(), sorted.end());
    rep.q50 = sorted[sorted.size() / 2];
    rep.q90 = sorted[static_cast<std::size_t>(0.9 * static_cast<double>(sorted.size() - 1))];
    const double radius = rep.lambda_hat > 0.0 ? 1.0 / rep.lambda_hat
                                               : std::numeric_limits<double>::infinity();
    for (double r : by_ratios)
        if (r >= radius) ++rep.flagged;
    return rep;
}

}  // namespace eggsep
