#include "eggsep/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "eggsep/image_io.hpp"
#include "eggsep/metrics.hpp"

namespace eggsep {

namespace {

namespace fs = std::filesystem;

void check_mask_estimates(const Tensor& y, const Tensor& b_hat, const Tensor& x_hat) {
    for (std::size_t i = 0; i < y.numel(); ++i) {
        if (b_hat.data[i] + x_hat.data[i] != y.data[i])
            throw std::runtime_error("mask estimate violates b_hat + x_hat = y");
        if (!(x_hat.data[i] >= 0.0 && x_hat.data[i] <= y.data[i]))
            throw std::runtime_error("mask estimate violates 0 <= x_hat <= y");
    }
}

// collect eval estimates from a mask function, asserting the mask algebra
void estimates_from_mask(const SeparationDataset& ds, const MaskFn& mask, MethodRun& out) {
    for (const EvalTriple& e : ds.eval) {
        auto [b_hat, x_hat] = mask_apply(e.y, mask(e.y));
        check_mask_estimates(e.y, b_hat, x_hat);
        out.b_est.push_back(std::move(b_hat));
        out.x_est.push_back(std::move(x_hat));
    }
}

nlohmann::json nes_traces(const NesState& state, const SeparationDataset& ds, std::uint64_t seed) {
    nlohmann::json traces;
    nlohmann::json iters = nlohmann::json::array();
    for (std::size_t t = 0; t < state.iterations.size(); ++t) {
        const NesIterationRecord& rec = state.iterations[t];
        nlohmann::json row;
        row["iteration"] = t + 1;
        row["final_loss"] = rec.final_loss;
        if (std::isfinite(rec.eval_mean_psnr)) {
            row["eval_mean_psnr"] = rec.eval_mean_psnr;
            row["eval_median_sdr"] = rec.eval_median_sdr;
            row["median_abs_err"] = rec.median_abs_err;
        }
        iters.push_back(std::move(row));
    }
    traces["iterations"] = std::move(iters);

    if (!ds.eval.empty() && !state.model_history.empty()) {
        // lambda estimates per iteration: synthetic mixtures pair each eval b
        // with an x estimate drawn from the iteration's input estimates
        Rng rng(seed ^ 0xabcdef12345ull);
        nlohmann::json lambdas = nlohmann::json::array();
        for (std::size_t t = 0; t < state.model_history.size(); ++t) {
            const std::vector<Tensor>& pool = state.x_input_history[t];
            std::vector<Tensor> y_t;
            y_t.reserve(ds.eval.size());
            for (const EvalTriple& e : ds.eval) y_t.push_back(add(e.b, pool[rng.index(pool.size())]));
            const MaskModel& model = state.model_history[t];
            try {
                const LambdaReport rep =
                    estimate_lambda([&](const Tensor& y) { return model(y); }, ds.eval, y_t);
                lambdas.push_back({{"iteration", t + 1},
                                   {"lambda_hat", rep.lambda_hat},
                                   {"q50", rep.q50},
                                   {"q90", rep.q90},
                                   {"flagged", rep.flagged},
                                   {"denom_guarded", rep.denom_guarded}});
            } catch (const std::runtime_error&) {
                lambdas.push_back({{"iteration", t + 1}, {"degenerate", true}});
            }
        }
        traces["lambda"] = std::move(lambdas);

        std::vector<MaskFn> masks;
        for (const MaskModel& m : state.model_history)
            masks.push_back([&m](const Tensor& y) { return m(y); });
        const ConvergenceTrace conv = error_series(masks, ds.eval);
        traces["median_abs_err"] = conv.median_abs_err;
        traces["mean_abs_err"] = conv.mean_abs_err;
    }
    return traces;
}

std::vector<Tensor> am_init_estimates(const MaskModel& mask, const std::vector<Tensor>& mixtures) {
    // x0 = y .* (1 - m_AM(y)), symmetric to the LMM bridge
    std::vector<Tensor> x0;
    x0.reserve(mixtures.size());
    for (const Tensor& y : mixtures) {
        auto [b_hat, x_hat] = mask_apply(y, mask(y));
        x0.push_back(std::move(x_hat));
    }
    return x0;
}

}  // namespace

SeparationDataset obtain_dataset(const ExperimentConfig& cfg) {
    if (cfg.dataset_dir) return load_dataset(*cfg.dataset_dir);
    return gen_synthetic(*cfg.synth);
}

MethodRun run_method(const ExperimentConfig& cfg, const SeparationDataset& ds) {
    if (ds.eval.empty()) throw std::runtime_error("run_method: dataset has no eval triples");
    MethodRun out;
    switch (cfg.method) {
        case Method::constant: {
            for (const EvalTriple& e : ds.eval) {
                out.x_est.push_back(const_estimate(e.y));
                out.b_est.push_back(const_estimate(e.y));
            }
            break;
        }
        case Method::nmf: {
            Rng rng(cfg.nmf.seed);
            const NmfFactorization bases = nmf_train_bases(stack(ds.observed_b), cfg.nmf.bases,
                                                           cfg.nmf.sparsity, cfg.nmf.train_iters, rng);
            const NmfSeparation train_sep = nmf_separate(stack(ds.mixtures_y), bases.w,
                                                         cfg.nmf.sparsity, cfg.nmf.separate_iters, rng,
                                                         ds.sample_shape);
            std::vector<Tensor> eval_y;
            for (const EvalTriple& e : ds.eval) eval_y.push_back(e.y);
            NmfSeparation eval_sep = nmf_infer(stack(eval_y), bases.w, train_sep.w_x, cfg.nmf.sparsity,
                                               cfg.nmf.separate_iters, rng, ds.sample_shape);
            out.x_est = std::move(eval_sep.x_est);
            out.b_est = std::move(eval_sep.b_est);
            out.traces["train_objective_first"] = bases.objective.front();
            out.traces["train_objective_last"] = bases.objective.back();
            out.traces["separate_objective_last"] = train_sep.objective.back();
            break;
        }
        case Method::am: {
            AmResult am = am_train(ds.observed_b, ds.mixtures_y, cfg.am);
            estimates_from_mask(ds, [&](const Tensor& y) { return am.mask(y); }, out);
            out.traces["disc_loss"] = am.disc_loss;
            out.traces["mask_loss"] = am.mask_loss;
            break;
        }
        case Method::lm: {
            const LmModel lm = train_lm(ds.observed_b, ds.mixtures_y, cfg.lm);
            std::vector<Tensor> eval_y;
            for (const EvalTriple& e : ds.eval) eval_y.push_back(e.y);
            const std::vector<LmInference> inf =
                lm_infer_batch(eval_y, lm.g_b, lm.g_x, cfg.lm.infer_steps, cfg.lm.code_lr, cfg.seed);
            for (const LmInference& r : inf) {
                out.b_est.push_back(r.b_est);
                out.x_est.push_back(r.x_est);
            }
            out.traces["stage1_loss_last"] = lm.stage1_loss.back();
            out.traces["stage2_loss_last"] = lm.stage2_loss.back();
            break;
        }
        case Method::lmm: {
            const LmModel lm = train_lm(ds.observed_b, ds.mixtures_y, cfg.lm);
            std::vector<Tensor> eval_y;
            for (const EvalTriple& e : ds.eval) eval_y.push_back(e.y);
            const std::vector<LmInference> inf =
                lm_infer_batch(eval_y, lm.g_b, lm.g_x, cfg.lm.infer_steps, cfg.lm.code_lr, cfg.seed);
            for (std::size_t i = 0; i < ds.eval.size(); ++i) {
                Tensor m = lmm_mask(inf[i].b_est, inf[i].x_est);
                auto [b_hat, x_hat] = mask_apply(ds.eval[i].y, m);
                check_mask_estimates(ds.eval[i].y, b_hat, x_hat);
                out.b_est.push_back(std::move(b_hat));
                out.x_est.push_back(std::move(x_hat));
            }
            out.traces["stage1_loss_last"] = lm.stage1_loss.back();
            out.traces["stage2_loss_last"] = lm.stage2_loss.back();
            break;
        }
        case Method::nes: {
            const NesState state = nes_run(ds, cfg.nes);
            estimates_from_mask(ds, [&](const Tensor& y) { return state.model(y); }, out);
            out.traces = nes_traces(state, ds, cfg.seed);
            break;
        }
        case Method::am_nes: {
            AmResult am = am_train(ds.observed_b, ds.mixtures_y, cfg.am);
            NesConfig nes_cfg = cfg.nes;
            nes_cfg.init = NesInit::external;
            const NesState state = nes_run(ds, nes_cfg, am_init_estimates(am.mask, ds.mixtures_y));
            estimates_from_mask(ds, [&](const Tensor& y) { return state.model(y); }, out);
            out.traces = nes_traces(state, ds, cfg.seed);
            out.traces["initializer"] = "am";
            break;
        }
        case Method::lmm_nes: {
            const LmModel lm = train_lm(ds.observed_b, ds.mixtures_y, cfg.lm);
            NesConfig nes_cfg = cfg.nes;
            nes_cfg.init = NesInit::external;
            const NesState state = nes_run(ds, nes_cfg, lmm_init_for_nes(ds, lm));
            estimates_from_mask(ds, [&](const Tensor& y) { return state.model(y); }, out);
            out.traces = nes_traces(state, ds, cfg.seed);
            out.traces["initializer"] = "lmm";
            out.traces["stage2_loss_last"] = lm.stage2_loss.back();
            break;
        }
        case Method::supervised: {
            if (ds.sup_pairs.empty())
                throw std::runtime_error("supervised method requires a dataset with sup pairs");
            SupervisedConfig sup = cfg.sup;
            const TrainedMask trained = supervised_train(ds.sup_pairs, sup);
            estimates_from_mask(ds, [&](const Tensor& y) { return trained.model(y); }, out);
            out.traces["final_loss"] = trained.epoch_loss.back();
            break;
        }
    }
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_outputs) {
    const auto t0 = std::chrono::steady_clock::now();
    const SeparationDataset ds = obtain_dataset(cfg);
    MethodRun run = run_method(cfg, ds);

    std::vector<Tensor> x_gt;
    for (const EvalTriple& e : ds.eval) x_gt.push_back(e.x);
    const MetricReport metrics = MetricReport::compute(run.x_est, x_gt, ds.value_max);

    nlohmann::json report;
    report["config_ini"] = cfg.canonical_ini();
    report["dataset"] = {{"name", ds.name},
                         {"sample_shape", ds.sample_shape},
                         {"n_b", ds.observed_b.size()},
                         {"n_y", ds.mixtures_y.size()},
                         {"n_eval", ds.eval.size()},
                         {"n_sup", ds.sup_pairs.size()}};
    report["method"] = method_name(cfg.method);
    report["seed"] = cfg.seed;
    nlohmann::json m;
    m["mean_psnr"] = metrics.mean_psnr;
    m["median_psnr"] = metrics.median_psnr;
    if (std::isfinite(metrics.mean_ssim)) {
        m["mean_ssim"] = metrics.mean_ssim;
        m["median_ssim"] = metrics.median_ssim;
    }
    m["mean_sdr"] = metrics.mean_sdr;
    m["median_sdr"] = metrics.median_sdr;
    m["mean_si_sdr"] = metrics.mean_si_sdr;
    m["median_si_sdr"] = metrics.median_si_sdr;
    m["per_sample_psnr"] = metrics.psnr_db;
    m["per_sample_sdr"] = metrics.sdr_db;
    report["metrics"] = std::move(m);
    report["traces"] = std::move(run.traces);

    ExperimentResult result;
    result.report = std::move(report);
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (write_outputs) {
        fs::create_directories(cfg.out_dir);
        {
            std::ofstream os(cfg.out_dir + "/report.json", std::ios::binary);
            if (!os) throw std::runtime_error("cannot write " + cfg.out_dir + "/report.json");
            os << result.report.dump(2) << '\n';
        }
        {
            std::ofstream os(cfg.out_dir + "/report.csv", std::ios::binary);
            os << metrics.to_csv();
        }
        {
            nlohmann::json timings;
            timings["wall_seconds"] = result.wall_seconds;
            std::ofstream os(cfg.out_dir + "/timings.json");
            os << timings.dump(2) << '\n';
        }
        if (cfg.dump_samples) {
            const std::size_t count = std::min<std::size_t>(8, ds.eval.size());
            auto to_unit = [&](const Tensor& t) {
                Tensor u = t;
                for (double& v : u.data) v = std::min(1.0, std::max(0.0, v / ds.value_max));
                return u;
            };
            for (std::size_t i = 0; i < count; ++i) {
                const std::string prefix = cfg.out_dir + "/sample" + std::to_string(i);
                save_pgm(to_unit(ds.eval[i].y), prefix + "_mix.pgm");
                save_pgm(to_unit(run.x_est[i]), prefix + "_x_est.pgm");
                save_pgm(to_unit(run.b_est[i]), prefix + "_b_est.pgm");
                save_pgm(to_unit(ds.eval[i].x), prefix + "_x_true.pgm");
                save_pgm(to_unit(ds.eval[i].b), prefix + "_b_true.pgm");
            }
        }
    }
    return result;
}

// ---- suites ----

ExperimentConfig suite_cell_config(const std::string& family, Method method, std::uint64_t seed,
                                   const std::string& out_dir) {
    std::ostringstream ini;
    ini << "[dataset]\n";
    ini << "family = " << family << "\n";
    ini << "seed = " << seed + 1000 << "\n";
    if (family == "tones") {
        ini << "n_b = 128\nn_y = 128\nn_eval = 48\n";
    } else {
        ini << "n_b = 256\nn_y = 256\nn_eval = 64\n";
    }
    ini << "\n[method]\n";
    ini << "name = " << method_name(method) << "\n";
    ini << "seed = " << seed << "\n";
    if (family == "tones") {
        ini << "hidden = 192,192\n";
        ini << "lm_hidden = 96,192\n";
        ini << "latent_dim = 48\n";
        ini << "stage1_epochs = 150\nstage2_epochs = 200\ninfer_steps = 300\n";
        ini << "disc_hidden = 256,128\n";
        ini << "bases = 24\n";
        ini << "am_epochs = 40\n";
        ini << "sup_epochs = 200\n";
    } else {
        ini << "hidden = 256,256\n";
        ini << "lm_hidden = 128,256\n";
        ini << "latent_dim = 32\n";
        ini << "stage1_epochs = 200\nstage2_epochs = 200\ninfer_steps = 300\n";
        ini << "disc_hidden = 256,128\n";
    }
    ini << "\n[output]\n";
    ini << "dir = " << out_dir << "\n";
    return ExperimentConfig::load_string(ini.str(), "suite:" + family, /*apply_env_override=*/false);
}

SuiteResult run_suite(const std::string& suite, std::size_t jobs, const std::string& out_dir,
                      const std::string& mnist_dir) {
    const std::vector<std::uint64_t> seeds{7, 11, 13};
    const std::vector<Method> methods{Method::constant, Method::nmf,     Method::am,
                                      Method::lmm,      Method::nes,     Method::lmm_nes,
                                      Method::supervised};
    std::vector<std::string> families;
    if (suite == "images-synthetic")
        families = {"bars", "blobs"};
    else if (suite == "denoise")
        families = {"denoise"};
    else if (suite == "tones")
        families = {"tones"};
    else if (suite == "mnist")
        families = {"mnist"};
    else
        throw ConfigError("unknown suite: " + suite +
                          " (expected images-synthetic, denoise, tones or mnist)");

    SuiteResult result;
    result.suite = suite;

    if (suite == "mnist") {
        if (mnist_dir.empty())
            throw ConfigError("mnist suite requires --mnist-dir pointing at the IDX archives");
        const std::string images = mnist_dir + "/train-images-idx3-ubyte";
        const std::string labels = mnist_dir + "/train-labels-idx1-ubyte";
        if (!fs::exists(images) || !fs::exists(labels))
            throw ConfigError("mnist suite: missing " + images + " or " + labels);
        // the full-scale protocol is a spot check: const and nes only
        SeparationDataset ds = load_idx(images, labels, true);
        for (const Method method : {Method::constant, Method::nes}) {
            ExperimentConfig cfg = suite_cell_config("bars", method, 7, out_dir);
            cfg.synth.reset();
            SuiteCell cell;
            cell.family = "mnist";
            cell.method = method;
            cell.seed = 7;
            MethodRun run = run_method(cfg, ds);
            std::vector<Tensor> x_gt;
            for (const EvalTriple& e : ds.eval) x_gt.push_back(e.x);
            const MetricReport rep = MetricReport::compute(run.x_est, x_gt, ds.value_max);
            cell.mean_psnr = rep.mean_psnr;
            cell.mean_ssim = rep.mean_ssim;
            cell.median_sdr = rep.median_sdr;
            cell.median_si_sdr = rep.median_si_sdr;
            result.cells.push_back(cell);
        }
    } else {
        struct Job {
            std::string family;
            Method method;
            std::uint64_t seed;
        };
        std::vector<Job> jobs_list;
        for (const std::string& family : families)
            for (const Method method : methods)
                for (const std::uint64_t seed : seeds) jobs_list.push_back({family, method, seed});

        result.cells.resize(jobs_list.size());
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                const std::size_t k = next.fetch_add(1);
                if (k >= jobs_list.size()) return;
                const Job& job = jobs_list[k];
                const std::string cell_dir = out_dir + "/" + job.family + "_" +
                                             method_name(job.method) + "_s" + std::to_string(job.seed);
                ExperimentConfig cfg = suite_cell_config(job.family, job.method, job.seed, cell_dir);
                const ExperimentResult r = run_experiment(cfg, /*write_outputs=*/true);
                SuiteCell cell;
                cell.family = job.family;
                cell.method = job.method;
                cell.seed = job.seed;
                cell.mean_psnr = r.report["metrics"]["mean_psnr"].get<double>();
                cell.mean_ssim = r.report["metrics"].value("mean_ssim", 0.0);
                cell.median_sdr = r.report["metrics"]["median_sdr"].get<double>();
                cell.median_si_sdr = r.report["metrics"]["median_si_sdr"].get<double>();
                result.cells[k] = cell;
            }
        };
        const std::size_t n_workers = std::max<std::size_t>(1, jobs);
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i + 1 < n_workers; ++i) pool.emplace_back(worker);
        worker();
        for (std::thread& t : pool) t.join();
    }

    // Table-shaped CSV: one row per family and metric, methods in the fixed
    // column order, cells averaged over seeds.
    std::ostringstream csv;
    csv << "family,metric";
    for (const Method m : methods) csv << ',' << method_name(m);
    csv << '\n';
    const std::vector<std::pair<std::string, double SuiteCell::*>> rows =
        suite == "tones" ? std::vector<std::pair<std::string, double SuiteCell::*>>{
                               {"median_sdr", &SuiteCell::median_sdr},
                               {"median_si_sdr", &SuiteCell::median_si_sdr}}
                         : std::vector<std::pair<std::string, double SuiteCell::*>>{
                               {"mean_psnr", &SuiteCell::mean_psnr},
                               {"mean_ssim", &SuiteCell::mean_ssim}};
    for (const std::string& family : families) {
        for (const auto& [metric, field] : rows) {
            csv << family << ',' << metric;
            for (const Method m : methods) {
                double sum = 0.0;
                std::size_t count = 0;
                for (const SuiteCell& cell : result.cells)
                    if (cell.family == family && cell.method == m) {
                        sum += cell.*field;
                        ++count;
                    }
                csv << ',' << (count ? format_double(sum / static_cast<double>(count)) : std::string("-"));
            }
            csv << '\n';
        }
    }
    result.table_csv = csv.str();

    fs::create_directories(out_dir);
    std::ofstream os(out_dir + "/" + suite + "_table.csv", std::ios::binary);
    os << result.table_csv;
    return result;
}

}  // namespace eggsep
