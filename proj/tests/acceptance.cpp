// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Heavy quantitative criteria run the same desk-scale suite cells
// as `eggsep reproduce`, seeds {7, 11, 13}.
// argv[1] = path to the eggsep binary (for the CLI determinism criterion).

#include <malloc.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>
#include <vector>

#include "eggsep/baselines.hpp"
#include "eggsep/experiment.hpp"
#include "eggsep/latent_mixtures.hpp"
#include "eggsep/metrics.hpp"
#include "eggsep/nes.hpp"
#include "gradcheck.hpp"
#include "svd_oracle.hpp"

using namespace eggsep;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& name, const std::string& outcome) {
    if (outcome.empty()) {
        std::cout << "[PASS] criterion " << id << ": " << name << '\n';
    } else if (outcome.rfind("SKIP", 0) == 0) {
        std::cout << "[SKIP] criterion " << id << ": " << name << " (" << outcome.substr(6) << ")\n";
    } else {
        std::cout << "[FAIL] criterion " << id << ": " << name << " (" << outcome << ")\n";
        ++failures;
    }
    std::cout.flush();
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

// run suite cells in two worker threads; each cell is isolated
void run_parallel(std::vector<std::function<void()>> jobs) {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= jobs.size()) return;
            jobs[k]();
        }
    };
    std::thread other(worker);
    worker();
    other.join();
}

// ---- criterion 1: gradient correctness, 100 random instances, < 10 s ----

std::string criterion_gradients() {
    using eggsep::testing::gradcheck;
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(12345);
    auto rand_t = [&](std::vector<std::size_t> shape, double lo, double hi) {
        Tensor t(std::move(shape));
        for (double& v : t.data) {
            const double mag = rng.uniform(lo, hi);
            v = rng.uniform() < 0.5 ? -mag : mag;
        }
        return t;
    };

    std::vector<std::pair<std::string, std::function<eggsep::testing::GradCheckResult()>>> ops;
    ops.emplace_back("add", [&] {
        return gradcheck([](Graph& g, const auto& in) { return g.sum(g.add(in[0], in[1])); },
                         {rand_t({3, 4}, 0.2, 2.0), rand_t({3, 4}, 0.2, 2.0)});
    });
    ops.emplace_back("sub", [&] {
        return gradcheck([](Graph& g, const auto& in) { return g.sum(g.sub(in[0], in[1])); },
                         {rand_t({3, 4}, 0.2, 2.0), rand_t({3, 4}, 0.2, 2.0)});
    });
    ops.emplace_back("mul", [&] {
        return gradcheck([](Graph& g, const auto& in) { return g.sum(g.mul(in[0], in[1])); },
                         {rand_t({3, 4}, 0.2, 2.0), rand_t({3, 4}, 0.2, 2.0)});
    });
    ops.emplace_back("div_eps", [&] {
        return gradcheck([](Graph& g, const auto& in) { return g.sum(g.div_eps(in[0], in[1])); },
                         {rand_t({3, 4}, 0.2, 2.0), rand_t({3, 4}, 0.5, 2.0)});
    });
    ops.emplace_back("matmul", [&] {
        return gradcheck([](Graph& g, const auto& in) { return g.sum(g.matmul(in[0], in[1])); },
                         {rand_t({3, 4}, 0.2, 2.0), rand_t({4, 2}, 0.2, 2.0)});
    });
    ops.emplace_back("row_bias", [&] {
        return gradcheck([](Graph& g, const auto& in) { return g.sum(g.row_bias(in[0], in[1])); },
                         {rand_t({3, 4}, 0.2, 2.0), rand_t({4}, 0.2, 2.0)});
    });
    ops.emplace_back("relu", [&] {
        return gradcheck([](Graph& g, const auto& in) { return g.sum(g.relu(in[0])); },
                         {rand_t({4, 4}, 0.2, 2.0)});
    });
    ops.emplace_back("sigmoid", [&] {
        return gradcheck([](Graph& g, const auto& in) { return g.sum(g.sigmoid(in[0])); },
                         {rand_t({4, 4}, 0.2, 2.0)});
    });
    ops.emplace_back("sum", [&] {
        return gradcheck([](Graph& g, const auto& in) { return g.sum(g.mul(in[0], in[0])); },
                         {rand_t({8}, 0.2, 2.0)});
    });
    ops.emplace_back("mean", [&] {
        return gradcheck([](Graph& g, const auto& in) { return g.mean(g.mul(in[0], in[0])); },
                         {rand_t({8}, 0.2, 2.0)});
    });
    ops.emplace_back("l1", [&] {
        return gradcheck([](Graph& g, const auto& in) { return g.l1(in[0], in[1]); },
                         {rand_t({3, 4}, 0.2, 2.0), rand_t({3, 4}, 2.5, 3.5)});
    });
    ops.emplace_back("mse", [&] {
        return gradcheck([](Graph& g, const auto& in) { return g.mse(in[0], in[1]); },
                         {rand_t({3, 4}, 0.2, 2.0), rand_t({3, 4}, 0.2, 2.0)});
    });

    int instances = 0;
    double worst = 0.0;
    std::string worst_op;
    while (instances < 100) {
        for (auto& [name, run] : ops) {
            const auto res = run();
            if (res.max_rel_err > worst) {
                worst = res.max_rel_err;
                worst_op = name;
            }
            ++instances;
            if (instances >= 100) break;
        }
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (worst >= 1e-6)
        return "max relative error " + fmt(worst) + " on " + worst_op + " (limit 1e-6)";
    if (secs >= 10.0) return "runtime " + fmt(secs) + " s (limit 10 s)";
    return "";
}

// ---- criterion 2: masking algebra over every emitted estimate ----

std::string criterion_masking_algebra() {
    std::ostringstream ini;
    ini << "[dataset]\nfamily = bars\nheight = 8\nwidth = 8\nn_b = 24\nn_y = 24\nn_eval = 8\nseed = 7\n"
        << "\n[method]\nname = nes\nseed = 7\niterations = 2\nepochs = 5\nbatch_size = 8\n"
        << "hidden = 16,16\nlatent_dim = 8\nstage1_epochs = 25\nstage2_epochs = 25\ninfer_steps = 25\n"
        << "lm_hidden = 8,16\nam_epochs = 5\nsup_epochs = 10\n";
    const std::string base = ini.str();

    for (const Method method :
         {Method::am, Method::lmm, Method::nes, Method::lmm_nes, Method::supervised}) {
        std::string text = base;
        const std::size_t pos = text.find("name = nes");
        text.replace(pos, 10, std::string("name = ") + method_name(method));
        const ExperimentConfig cfg = ExperimentConfig::load_string(text, "acceptance", false);
        const SeparationDataset ds = obtain_dataset(cfg);
        const MethodRun run = run_method(cfg, ds);
        for (std::size_t i = 0; i < ds.eval.size(); ++i) {
            const Tensor& y = ds.eval[i].y;
            const Tensor& bh = run.b_est[i];
            const Tensor& xh = run.x_est[i];
            for (std::size_t k = 0; k < y.numel(); ++k) {
                if (bh.data[k] + xh.data[k] != y.data[k])
                    return std::string(method_name(method)) + ": b+x != y at element " +
                           std::to_string(k);
                if (!(xh.data[k] >= 0.0 && xh.data[k] <= y.data[k]))
                    return std::string(method_name(method)) + ": x outside [0, y]";
                if (!(bh.data[k] >= 0.0 && bh.data[k] <= y.data[k]))
                    return std::string(method_name(method)) + ": implied mask outside [0,1]";
            }
        }
    }
    return "";
}

// ---- criterion 3: Eq. 13 / Eq. 16 scalar oracles ----

std::string criterion_contraction_oracle() {
    // locally invariant: b=0.5, y^t=1.0, y=1.2, m = b/y^t
    const double b = 0.5, y_t = 1.0, y = 1.2;
    EvalTriple e;
    e.b = Tensor::scalar(b);
    e.x = Tensor::scalar(y - b);
    e.y = Tensor::scalar(y);
    const MaskFn invariant = [&](const Tensor& in) { return Tensor::full(in.shape, b / y_t); };
    const ConvergenceTrace trace = error_series({invariant}, {e});
    const double expected = std::abs(b / y_t) * std::abs(y_t - y);
    if (std::abs(trace.abs_err[0].data[0] - expected) > 1e-12)
        return "contraction identity off by " + fmt(std::abs(trace.abs_err[0].data[0] - expected));

    // perfect generalization: m = b/y exactly -> e^1 = 0 exactly
    EvalTriple p;
    p.b = Tensor::scalar(0.5);
    p.x = Tensor::scalar(0.5);
    p.y = Tensor::scalar(1.0);
    const MaskFn perfect = [&](const Tensor& in) {
        Tensor m(in.shape);
        for (std::size_t i = 0; i < in.numel(); ++i) m.data[i] = 0.5 / in.data[i];
        return m;
    };
    const ConvergenceTrace ptrace = error_series({perfect}, {p});
    if (ptrace.abs_err[0].data[0] != 0.0) return "perfect generalization error is not exactly zero";

    // lambda endpoints
    const LambdaReport inv_rep =
        estimate_lambda(invariant, {e}, {Tensor::scalar(y_t)});
    if (std::abs(inv_rep.lambda_hat - 1.0) > 1e-12) return "invariant mask lambda != 1";
    const LambdaReport perf_rep = estimate_lambda(perfect, {p}, {Tensor::scalar(1.5)});
    if (perf_rep.lambda_hat != 0.0) return "perfect mask lambda != 0";
    return "";
}

// ---- criterion 4: NMF monotonicity and planted rank-1 recovery ----

std::string criterion_nmf() {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        Tensor data({12, 18});
        for (double& v : data.data) v = rng.uniform(0.0, 1.0);
        const NmfFactorization f = nmf_train_bases(data, 4, 0.1, 200, rng);
        for (std::size_t i = 1; i < f.objective.size(); ++i)
            if (f.objective[i] > f.objective[i - 1] * (1.0 + 1e-12) + 1e-12)
                return "objective increased at update " + std::to_string(i) + " (seed " +
                       std::to_string(seed) + ")";
    }
    Rng rng(99);
    Tensor h({10, 1}), w({1, 14});
    for (double& v : h.data) v = rng.uniform(0.2, 1.0);
    for (double& v : w.data) v = rng.uniform(0.2, 1.0);
    const Tensor data = matmul(h, w);
    const NmfFactorization f = nmf_train_bases(data, 1, 0.0, 2000, rng);
    const Tensor recon = matmul(f.h, f.w);
    double err = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < data.numel(); ++i) {
        err += (data.data[i] - recon.data[i]) * (data.data[i] - recon.data[i]);
        norm += data.data[i] * data.data[i];
    }
    const double rel = std::sqrt(err / norm);
    if (rel >= 1e-6) return "rank-1 recovery error " + fmt(rel) + " (limit 1e-6)";
    return "";
}

// ---- criterion 5: GLO/LM invariants ----

std::string criterion_glo_lm() {
    LmConfig cfg;
    cfg.latent_dim = 8;
    cfg.stage1_epochs = 120;
    cfg.stage2_epochs = 100;
    cfg.infer_steps = 600;
    cfg.batch_size = 4;
    cfg.hidden = {16, 32};
    cfg.seed = 5;

    Rng gen_rng(41);
    std::vector<Tensor> bs, xs, ys;
    for (int i = 0; i < 12; ++i) {
        Tensor b({1, 12}), x({1, 12});
        const double c = gen_rng.uniform(2.0, 9.0);
        for (std::size_t k = 0; k < 12; ++k) {
            const double d = (static_cast<double>(k) - c) / 1.5;
            b.data[k] = std::exp(-0.5 * d * d);
            x.data[k] = 0.4 * std::exp(-0.5 * (11.0 - static_cast<double>(k) - c) * 0.3);
        }
        bs.push_back(b);
        xs.push_back(x);
        ys.push_back(add(b, x));
    }

    LmModel model;
    GloResult stage1 = train_glo(bs, cfg);
    model.g_b = std::move(stage1.generator);
    model.codes_b = std::move(stage1.codes);
    if (!model.codes_b.all_in_unit_ball()) return "stage-1 codes escaped the unit ball";

    std::vector<std::vector<double>> before;
    for (const auto& layer : model.g_b.net.layers) before.push_back(layer.w.data);
    train_lm_stage2(model, bs, ys, cfg);
    for (std::size_t l = 0; l < before.size(); ++l)
        if (model.g_b.net.layers[l].w.data != before[l]) return "G_B changed during stage 2";
    if (!model.codes_y_b.all_in_unit_ball() || !model.codes_y_x.all_in_unit_ball())
        return "stage-2 codes escaped the unit ball";

    // plant and recover
    Rng rng(43);
    Tensor z1({cfg.latent_dim}), z2({cfg.latent_dim});
    for (double& v : z1.data) v = rng.normal(0.0, 0.25);
    for (double& v : z2.data) v = rng.normal(0.0, 0.25);
    project_unit_ball_inplace(z1);
    project_unit_ball_inplace(z2);
    const Tensor y = add(model.g_b(z1), model.g_x(z2));
    const LmInference inf = lm_infer(y, model.g_b, model.g_x, cfg.infer_steps, 0.02, 47);
    if (inf.recon_l1 >= 1e-2) return "plant-and-recover reconstruction L1 " + fmt(inf.recon_l1);
    return "";
}

// ---- criterion 6: spectral norm vs SVD oracle ----

std::string criterion_spectral_norm() {
    Rng rng(7);
    for (int round = 0; round < 10; ++round) {
        Tensor w({8, 8});
        for (double& v : w.data) v = rng.normal();
        Tensor u({8});
        for (double& v : u.data) v = rng.normal();
        const SpectralNormResult r = spectral_normalize(w, 50, u);
        const double oracle = eggsep::testing::svd_max_singular_value(w);
        if (std::abs(r.sigma - oracle) >= 1e-4)
            return "estimate " + fmt(r.sigma) + " vs oracle " + fmt(oracle);
    }
    return "";
}

// ---- criteria 7-10: desk-scale quantitative runs ----

struct CellKey {
    std::string family;
    Method method;
    std::uint64_t seed;
    bool operator<(const CellKey& o) const {
        return std::tie(family, method, seed) < std::tie(o.family, o.method, o.seed);
    }
};

std::map<CellKey, nlohmann::json> g_cells;

void run_cells() {
    const std::vector<std::uint64_t> seeds{7, 11, 13};
    std::vector<CellKey> keys;
    for (const auto seed : seeds) {
        keys.push_back({"bars", Method::constant, seed});
        keys.push_back({"bars", Method::nes, seed});
        keys.push_back({"bars", Method::supervised, seed});
        keys.push_back({"denoise", Method::nes, seed});
        keys.push_back({"denoise", Method::supervised, seed});
        keys.push_back({"tones", Method::nes, seed});
        keys.push_back({"tones", Method::lmm_nes, seed});
    }
    std::vector<nlohmann::json> results(keys.size());
    std::vector<std::function<void()>> jobs;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        jobs.push_back([&, i] {
            const CellKey& key = keys[i];
            const ExperimentConfig cfg =
                suite_cell_config(key.family, key.method, key.seed, "/tmp/eggsep_acceptance_out");
            const auto t0 = std::chrono::steady_clock::now();
            results[i] = run_experiment(cfg, /*write_outputs=*/false).report;
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            std::ostringstream os;
            os << "  cell " << key.family << "/" << method_name(key.method) << "/s" << key.seed
               << ": mean PSNR " << fmt(results[i]["metrics"]["mean_psnr"].get<double>())
               << " dB, mean SDR " << fmt(results[i]["metrics"]["mean_sdr"].get<double>()) << " dB ("
               << fmt(secs) << " s)\n";
            std::cout << os.str();
            std::cout.flush();
        });
    }
    run_parallel(std::move(jobs));
    for (std::size_t i = 0; i < keys.size(); ++i) g_cells[keys[i]] = std::move(results[i]);
}

double cell_metric(const std::string& family, Method method, std::uint64_t seed,
                   const std::string& metric) {
    return g_cells.at({family, method, seed})["metrics"][metric].get<double>();
}

double mean_over_seeds(const std::string& family, Method method, const std::string& metric) {
    double s = 0.0;
    for (const std::uint64_t seed : {7ull, 11ull, 13ull}) s += cell_metric(family, method, seed, metric);
    return s / 3.0;
}

std::string criterion_bars_ordering() {
    const double nes = mean_over_seeds("bars", Method::nes, "mean_psnr");
    const double cst = mean_over_seeds("bars", Method::constant, "mean_psnr");
    const double sup = mean_over_seeds("bars", Method::supervised, "mean_psnr");
    std::ostringstream detail;
    detail << "const " << fmt(cst) << ", nes " << fmt(nes) << ", supervised " << fmt(sup) << " dB";
    if (nes < cst + 8.0) return "NES not 8 dB above const: " + detail.str();
    if (nes < sup - 2.0) return "NES more than 2 dB below supervised: " + detail.str();
    std::cout << "  bars PSNR: " << detail.str() << '\n';
    return "";
}

std::string criterion_tones_init() {
    const double nes = mean_over_seeds("tones", Method::nes, "mean_sdr");
    const double lmm_nes = mean_over_seeds("tones", Method::lmm_nes, "mean_sdr");
    std::cout << "  tones mean SDR: nes " << fmt(nes) << ", lmm+nes " << fmt(lmm_nes) << " dB\n";
    if (lmm_nes < nes + 0.5)
        return "LMM+NES " + fmt(lmm_nes) + " dB not 0.5 dB above NES " + fmt(nes) + " dB";
    return "";
}

std::string criterion_denoise_parity() {
    const double nes = mean_over_seeds("denoise", Method::nes, "mean_psnr");
    const double sup = mean_over_seeds("denoise", Method::supervised, "mean_psnr");
    std::cout << "  denoise PSNR: nes " << fmt(nes) << ", supervised " << fmt(sup) << " dB\n";
    if (nes < sup - 0.5)
        return "NES " + fmt(nes) + " dB more than 0.5 dB below supervised " + fmt(sup) + " dB";
    return "";
}

std::string criterion_convergence() {
    // (a) bars: median |e^t| non-increasing (5% slack) for >= 2 of 3 seeds
    int ok_seeds = 0;
    for (const std::uint64_t seed : {7ull, 11ull, 13ull}) {
        const auto& trace = g_cells.at({"bars", Method::nes, seed})["traces"]["median_abs_err"];
        bool monotone = true;
        for (std::size_t t = 1; t < trace.size(); ++t)
            if (trace[t].get<double>() > trace[t - 1].get<double>() * 1.05) monotone = false;
        if (monotone) ++ok_seeds;
    }
    if (ok_seeds < 2)
        return "median |e^t| non-increasing for only " + std::to_string(ok_seeds) + "/3 bars seeds";
    std::cout << "  bars |e^t| monotone (5% slack) for " << ok_seeds << "/3 seeds\n";

    // (b) tones: iteration-1 lambda quantiles, LMM init <= const init
    double q50_const = 0, q90_const = 0, q50_lmm = 0, q90_lmm = 0;
    for (const std::uint64_t seed : {7ull, 11ull, 13ull}) {
        const auto& lc = g_cells.at({"tones", Method::nes, seed})["traces"]["lambda"][0];
        const auto& ll = g_cells.at({"tones", Method::lmm_nes, seed})["traces"]["lambda"][0];
        if (lc.contains("degenerate") || ll.contains("degenerate")) return "degenerate lambda trace";
        q50_const += lc["q50"].get<double>() / 3.0;
        q90_const += lc["q90"].get<double>() / 3.0;
        q50_lmm += ll["q50"].get<double>() / 3.0;
        q90_lmm += ll["q90"].get<double>() / 3.0;
    }
    std::cout << "  tones lambda q50: const-init " << fmt(q50_const) << ", lmm-init " << fmt(q50_lmm)
              << "; q90: " << fmt(q90_const) << " vs " << fmt(q90_lmm) << '\n';
    if (q50_lmm > q50_const || q90_lmm > q90_const)
        return "LMM-init lambda quantiles not <= const-init";
    return "";
}

// ---- criterion 11: optional MNIST spot check ----

std::string criterion_mnist() {
    const char* dir = std::getenv("EGGSEP_MNIST_DIR");
    if (!dir) return "SKIP: EGGSEP_MNIST_DIR not set; synthetic suites only";
    const std::string images = std::string(dir) + "/train-images-idx3-ubyte";
    const std::string labels = std::string(dir) + "/train-labels-idx1-ubyte";
    if (!fs::exists(images) || !fs::exists(labels)) return "SKIP: IDX archives not found";

    const SeparationDataset ds = load_idx(images, labels, true);
    std::vector<Tensor> est, gt;
    for (const EvalTriple& e : ds.eval) {
        est.push_back(e.y);
        gt.push_back(e.x);
    }
    const double const_psnr = MetricReport::compute(est, gt).mean_psnr;
    if (std::abs(const_psnr - 10.6) > 1.0)
        return "const PSNR " + fmt(const_psnr) + " dB not within 10.6 +/- 1.0";

    NesConfig cfg;
    cfg.iterations = 6;
    cfg.epochs = 10;
    cfg.hidden = {384, 384};
    cfg.seed = 7;
    cfg.record_history = false;
    const NesState state = nes_run(ds, cfg);
    const double nes_psnr = state.iterations.back().eval_mean_psnr;
    std::cout << "  mnist: const " << fmt(const_psnr) << " dB, nes " << fmt(nes_psnr) << " dB\n";
    if (nes_psnr < 20.0) return "NES PSNR " + fmt(nes_psnr) + " dB below 20 dB";
    return "";
}

// ---- criterion 12: CLI determinism ----

std::string criterion_determinism(const std::string& bin) {
    const std::string work = "/tmp/eggsep_acceptance_cli";
    fs::remove_all(work);
    fs::create_directories(work);
    auto write_cfg = [&](const std::string& path, const std::string& out) {
        std::ofstream os(path);
        os << "[dataset]\nfamily = blobs\nheight = 12\nwidth = 12\nn_b = 32\nn_y = 32\nn_eval = 8\n"
           << "seed = 7\n\n[method]\nname = nes\nseed = 7\niterations = 2\nepochs = 5\n"
           << "batch_size = 8\nhidden = 24,24\n\n[output]\ndir = " << out << '\n';
    };
    write_cfg(work + "/a.ini", work + "/a");
    write_cfg(work + "/b.ini", work + "/b");
    auto run = [&](const std::string& cfg) {
        const int rc = std::system((bin + " run " + cfg + " >/dev/null").c_str());
        return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    };
    if (run(work + "/a.ini") != 0) return "first run failed";
    if (run(work + "/b.ini") != 0) return "second run failed";
    auto slurp = [](const std::string& p) {
        std::ifstream is(p, std::ios::binary);
        std::ostringstream os;
        os << is.rdbuf();
        return os.str();
    };
    const std::string a = slurp(work + "/a/report.json");
    if (a.empty()) return "report.json missing";
    if (a != slurp(work + "/b/report.json")) return "reports differ between identical runs";
    return "";
}

}  // namespace

int main(int argc, char** argv) {
    mallopt(M_MMAP_MAX, 0);
    mallopt(M_TRIM_THRESHOLD, 512 * 1024 * 1024);

    const std::string bin = argc > 1 ? argv[1] : "";
    std::cout << "eggsep acceptance suite (seeds 7, 11, 13)\n";

    report(1, "autodiff matches central finite differences (rel err < 1e-6, < 10 s)",
           criterion_gradients());
    report(2, "masking algebra holds for every emitted estimate", criterion_masking_algebra());
    report(3, "scalar contraction and perfect-generalization oracles", criterion_contraction_oracle());
    report(4, "NMF monotonicity and planted rank-1 recovery", criterion_nmf());
    report(5, "GLO/LM invariants: unit ball, frozen G_B, plant-and-recover", criterion_glo_lm());
    report(6, "spectral norm within 1e-4 of the SVD oracle", criterion_spectral_norm());

    std::cout << "running desk-scale suite cells...\n";
    run_cells();
    report(7, "bars: NES >= const + 8 dB and within 2 dB of supervised", criterion_bars_ordering());
    report(8, "tones: LMM+NES >= NES + 0.5 dB mean SDR", criterion_tones_init());
    report(9, "denoise: NES within 0.5 dB of supervised", criterion_denoise_parity());
    report(10, "convergence diagnostics: |e^t| non-increasing; LMM lambda <= const lambda",
           criterion_convergence());
    report(11, "optional MNIST spot check", criterion_mnist());
    report(12, "bit-identical reports from identical configs",
           bin.empty() ? "SKIP: eggsep binary path not supplied" : criterion_determinism(bin));

    std::cout << (failures ? "ACCEPTANCE FAILURES: " : "acceptance suite passed, failures: ")
              << failures << '\n';
    return failures ? 1 : 0;
}
