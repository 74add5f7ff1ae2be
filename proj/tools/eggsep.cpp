#include <malloc.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "eggsep/config.hpp"
#include "eggsep/experiment.hpp"
#include "eggsep/metrics.hpp"

namespace {

using namespace eggsep;

int cmd_gen_data(const std::string& config_path) {
    const ExperimentConfig cfg = ExperimentConfig::load_file(config_path);
    if (!cfg.synth) throw ConfigError("gen-data: config must specify a synthetic family, not a dir");
    const SeparationDataset ds = gen_synthetic(*cfg.synth);
    save_dataset(ds, cfg.out_dir);
    std::cout << "dataset '" << ds.name << "' " << Tensor(ds.sample_shape).shape_str() << ": "
              << ds.observed_b.size() << " observed, " << ds.mixtures_y.size() << " mixtures, "
              << ds.eval.size() << " eval triples, " << ds.sup_pairs.size() << " supervised pairs -> "
              << cfg.out_dir << '\n';
    return 0;
}

int cmd_run(const std::string& config_path) {
    const ExperimentConfig cfg = ExperimentConfig::load_file(config_path);
    const ExperimentResult r = run_experiment(cfg);
    std::cout << "method " << method_name(cfg.method) << " seed " << cfg.seed << ": mean PSNR "
              << r.report["metrics"]["mean_psnr"].get<double>() << " dB, median SDR "
              << r.report["metrics"]["median_sdr"].get<double>() << " dB (" << r.wall_seconds
              << " s) -> " << cfg.out_dir << "/report.json\n";
    return 0;
}

int cmd_reproduce(const std::string& suite, std::size_t jobs, const std::string& out_dir,
                  const std::string& mnist_dir) {
    const SuiteResult r = run_suite(suite, jobs, out_dir, mnist_dir);
    std::cout << r.table_csv;
    std::cout << "table -> " << out_dir << "/" << suite << "_table.csv\n";
    return 0;
}

int cmd_eval(const std::string& estimates_path, const std::string& truth_path) {
    const std::vector<Tensor> est = unstack(read_egt_file(estimates_path));
    const std::vector<Tensor> gt = unstack(read_egt_file(truth_path));
    if (est.size() != gt.size())
        throw std::runtime_error("eval: estimate and truth sample counts differ");
    const MetricReport rep = MetricReport::compute(est, gt);
    nlohmann::json out;
    out["n"] = est.size();
    out["mean_psnr"] = rep.mean_psnr;
    out["median_psnr"] = rep.median_psnr;
    if (!std::isnan(rep.mean_ssim)) {
        out["mean_ssim"] = rep.mean_ssim;
        out["median_ssim"] = rep.median_ssim;
    }
    out["mean_sdr"] = rep.mean_sdr;
    out["median_sdr"] = rep.median_sdr;
    out["mean_si_sdr"] = rep.mean_si_sdr;
    out["median_si_sdr"] = rep.median_si_sdr;
    std::cout << out.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    // keep large tensor blocks on the heap instead of mmap round trips
    mallopt(M_MMAP_MAX, 0);
    mallopt(M_TRIM_THRESHOLD, 512 * 1024 * 1024);

    CLI::App app{"eggsep: separation laboratory for observed/unobserved additive mixtures"};
    app.require_subcommand(1);

    std::string config_path, suite, out_dir = "out", mnist_dir, estimates_path, truth_path;
    std::size_t jobs = 1;

    CLI::App* gen = app.add_subcommand("gen-data", "generate a dataset directory from a config");
    gen->add_option("config", config_path, "INI config file")->required();

    CLI::App* run = app.add_subcommand("run", "run one experiment from a config");
    run->add_option("config", config_path, "INI config file")->required();

    CLI::App* rep = app.add_subcommand("reproduce", "run a full method-comparison suite");
    rep->add_option("suite", suite, "images-synthetic | denoise | tones | mnist")->required();
    rep->add_option("--jobs", jobs, "parallel worker slots");
    rep->add_option("--out", out_dir, "output directory");
    rep->add_option("--mnist-dir", mnist_dir, "directory with the MNIST IDX archives");

    CLI::App* ev = app.add_subcommand("eval", "metrics for stacked EGT1 estimates vs truth");
    ev->add_option("estimates", estimates_path, "EGT1 file of stacked estimates")->required();
    ev->add_option("truth", truth_path, "EGT1 file of stacked ground truth")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // usage errors exit 2
    }

    try {
        if (gen->parsed()) return cmd_gen_data(config_path);
        if (run->parsed()) return cmd_run(config_path);
        if (rep->parsed()) return cmd_reproduce(suite, jobs, out_dir, mnist_dir);
        if (ev->parsed()) return cmd_eval(estimates_path, truth_path);
    } catch (const eggsep::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
