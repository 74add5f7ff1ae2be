#include "eggsep/nes.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace eggsep {

void NesConfig::validate() const {
    if (iterations == 0) throw std::invalid_argument("nes config: iterations must be >= 1");
    if (epochs == 0) throw std::invalid_argument("nes config: epochs must be >= 1");
    if (lr <= 0.0) throw std::invalid_argument("nes config: lr must be positive");
    if (!(init_constant > 0.0 && init_constant < 1.0))
        throw std::invalid_argument("nes config: init constant must be in (0,1)");
    if (batch_size == 0) throw std::invalid_argument("nes config: batch size must be >= 1");
}

std::vector<Tensor> nes_init_constant(const std::vector<Tensor>& mixtures, double c) {
    if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("nes_init_constant: c must be in (0,1)");
    std::vector<Tensor> x0;
    x0.reserve(mixtures.size());
    for (const Tensor& y : mixtures) x0.push_back(scale(y, c));
    return x0;
}

std::vector<TrainPair> synthesize_pairs(const std::vector<Tensor>& observed_b,
                                        const std::vector<Tensor>& x_estimates, Rng& rng) {
    if (observed_b.empty() || x_estimates.empty())
        throw std::invalid_argument("synthesize_pairs: empty source set");
    if (!observed_b.front().same_shape(x_estimates.front()))
        throw std::invalid_argument("synthesize_pairs: shape mismatch between b and x estimates");
    std::vector<TrainPair> pairs;
    pairs.reserve(observed_b.size());
    for (const Tensor& b : observed_b) {
        const Tensor& x = x_estimates[rng.index(x_estimates.size())];
        pairs.push_back({add(b, x), b});
    }
    return pairs;
}

TrainedMask nes_iteration(const std::vector<TrainPair>& pairs, const NesConfig& cfg, Rng& rng) {
    if (pairs.empty()) throw std::invalid_argument("nes_iteration: no pairs");
    std::vector<Tensor> ys, bs;
    ys.reserve(pairs.size());
    bs.reserve(pairs.size());
    for (const TrainPair& p : pairs) {
        ys.push_back(p.y);
        bs.push_back(p.b);
    }
    MaskTrainOptions opt;
    opt.epochs = cfg.epochs;
    opt.batch_size = cfg.batch_size;
    opt.lr = cfg.lr;
    opt.hidden = cfg.hidden;
    return train_mask(ys, bs, opt, rng);
}

std::vector<Tensor> nes_reestimate(const MaskModel& model, const std::vector<Tensor>& mixtures) {
    std::vector<Tensor> xs;
    xs.reserve(mixtures.size());
    for (const Tensor& y : mixtures) {
        auto [b_hat, x_hat] = mask_apply(y, model(y));
        for (double v : x_hat.data)
            if (v < 0.0) throw std::runtime_error("nes_reestimate: negative estimate");
        xs.push_back(std::move(x_hat));
    }
    return xs;
}

namespace {

NesIterationRecord evaluate_iteration(const MaskModel& model, const SeparationDataset& ds) {
    NesIterationRecord rec;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rec.eval_mean_psnr = rec.eval_mean_ssim = rec.eval_median_sdr = rec.eval_median_si_sdr =
        rec.median_abs_err = nan;
    if (ds.eval.empty()) return rec;

    std::vector<Tensor> x_est, x_gt;
    std::vector<double> errs;
    for (const EvalTriple& e : ds.eval) {
        auto [b_hat, x_hat] = mask_apply(e.y, model(e.y));
        for (std::size_t i = 0; i < e.y.numel(); ++i)
            errs.push_back(std::abs(e.b.data[i] - b_hat.data[i]));
        x_est.push_back(std::move(x_hat));
        x_gt.push_back(e.x);
    }
    const MetricReport rep = MetricReport::compute(x_est, x_gt, ds.value_max);
    rec.eval_mean_psnr = rep.mean_psnr;
    rec.eval_mean_ssim = rep.mean_ssim;
    rec.eval_median_sdr = rep.median_sdr;
    rec.eval_median_si_sdr = rep.median_si_sdr;
    rec.median_abs_err = median(errs);
    return rec;
}

}  // namespace

NesState nes_run(const SeparationDataset& ds, const NesConfig& cfg, std::optional<std::vector<Tensor>> x0) {
    cfg.validate();
    if (ds.observed_b.empty() || ds.mixtures_y.empty())
        throw std::invalid_argument("nes_run: dataset has empty training sets");
    if (cfg.init == NesInit::external) {
        if (!x0 || x0->size() != ds.mixtures_y.size())
            throw std::invalid_argument("nes_run: external init requires one x estimate per mixture");
    }

    Rng rng(cfg.seed);
    NesState state;
    state.x_estimates =
        cfg.init == NesInit::external ? std::move(*x0) : nes_init_constant(ds.mixtures_y, cfg.init_constant);

    for (std::size_t t = 0; t < cfg.iterations; ++t) {
        if (cfg.record_history) state.x_input_history.push_back(state.x_estimates);
        TrainedMask trained;
        if (cfg.warm_start && t > 0) {
            // keep weights and optimizer state, train P more epochs on new pairs
            trained.model = std::move(state.model);
            std::vector<TrainPair> pairs = synthesize_pairs(ds.observed_b, state.x_estimates, rng);
            std::vector<Tensor> ys, bs;
            for (TrainPair& p : pairs) {
                ys.push_back(std::move(p.y));
                bs.push_back(std::move(p.b));
            }
            for (std::size_t e = 0; e < cfg.epochs; ++e)
                trained.epoch_loss.push_back(
                    train_mask_epoch(trained.model, ys, bs, cfg.batch_size, rng));
        } else if (!cfg.resample_pairs_per_epoch) {
            const std::vector<TrainPair> pairs = synthesize_pairs(ds.observed_b, state.x_estimates, rng);
            trained = nes_iteration(pairs, cfg, rng);
        } else {
            // fresh model, new pairing before every epoch
            AdamConfig adam;
            adam.lr = cfg.lr;
            trained.model = make_mask_model(ds.sample_shape, cfg.hidden, rng, adam);
            for (std::size_t e = 0; e < cfg.epochs; ++e) {
                std::vector<TrainPair> pairs = synthesize_pairs(ds.observed_b, state.x_estimates, rng);
                std::vector<Tensor> ys, bs;
                for (TrainPair& p : pairs) {
                    ys.push_back(std::move(p.y));
                    bs.push_back(std::move(p.b));
                }
                trained.epoch_loss.push_back(
                    train_mask_epoch(trained.model, ys, bs, cfg.batch_size, rng));
            }
        }

        state.model = std::move(trained.model);
        state.x_estimates = nes_reestimate(state.model, ds.mixtures_y);

        NesIterationRecord rec = evaluate_iteration(state.model, ds);
        rec.epoch_loss = std::move(trained.epoch_loss);
        rec.final_loss = rec.epoch_loss.empty() ? 0.0 : rec.epoch_loss.back();
        state.iterations.push_back(std::move(rec));
        if (cfg.record_history) state.model_history.push_back(state.model);
    }
    return state;
}

void dump_nes_state(const NesState& state, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_egt_file(stack(state.x_estimates), dir + "/x_estimates.egt");
    nlohmann::json trace = nlohmann::json::array();
    for (std::size_t t = 0; t < state.iterations.size(); ++t) {
        const NesIterationRecord& rec = state.iterations[t];
        nlohmann::json row;
        row["iteration"] = t + 1;
        row["epoch_loss"] = rec.epoch_loss;
        row["final_loss"] = rec.final_loss;
        if (std::isfinite(rec.eval_mean_psnr)) {
            row["eval_mean_psnr"] = rec.eval_mean_psnr;
            row["eval_mean_ssim"] = rec.eval_mean_ssim;
            row["eval_median_sdr"] = rec.eval_median_sdr;
            row["eval_median_si_sdr"] = rec.eval_median_si_sdr;
            row["median_abs_err"] = rec.median_abs_err;
        }
        trace.push_back(std::move(row));
    }
    std::ofstream os(dir + "/nes_trace.json");
    if (!os) throw std::runtime_error("cannot write " + dir + "/nes_trace.json");
    os << trace.dump(2) << '\n';
}

}  // namespace eggsep
