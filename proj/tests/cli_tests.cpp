// End-to-end checks of the eggsep binary: exit codes, determinism of
// gen-data and run, the eval subcommand, and the committed golden report.
// argv[1] = path to the eggsep binary, argv[2] = this directory (golden files).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "eggsep/rng.hpp"
#include "eggsep/tensor.hpp"

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
    std::cout << (ok ? "[ok]   " : "[FAIL] ") << what << '\n';
    if (!ok) ++failures;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    os << text;
}

int run_cmd(const std::string& cmd) {
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

bool same_bytes(const std::string& a, const std::string& b) { return slurp(a) == slurp(b); }

const char* kTinyNes = R"(
[dataset]
family = bars
height = 8
width = 8
n_b = 24
n_y = 24
n_eval = 8
seed = 7

[method]
name = nes
seed = 7
iterations = 2
epochs = 4
batch_size = 8
hidden = 16,16

[output]
dir = %OUT%
)";

std::string config_with_out(const std::string& tmpl, const std::string& out) {
    std::string text = tmpl;
    const std::string token = "%OUT%";
    const std::size_t pos = text.find(token);
    text.replace(pos, token.size(), out);
    return text;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::cerr << "usage: cli_tests <eggsep-binary> <tests-dir>\n";
        return 2;
    }
    const std::string bin = argv[1];
    const std::string tests_dir = argv[2];
    const std::string work = "/tmp/eggsep_cli_tests";
    fs::remove_all(work);
    fs::create_directories(work);

    // ---- usage errors exit 2 ----
    check(run_cmd(bin + " frobnicate >/dev/null 2>&1") == 2, "unknown subcommand exits 2");
    {
        write_file(work + "/bad_method.ini",
                   "[dataset]\nfamily = bars\nseed = 1\n\n[method]\nname = banana\nseed = 1\n");
        check(run_cmd(bin + " run " + work + "/bad_method.ini >/dev/null 2>&1") == 2,
              "unknown method name exits 2");
    }
    {
        write_file(work + "/unknown_key.ini",
                   "[dataset]\nfamily = bars\nseed = 1\nbogus = 1\n\n[method]\nname = const\nseed = 1\n");
        check(run_cmd(bin + " run " + work + "/unknown_key.ini >/dev/null 2>&1") == 2,
              "unknown config key exits 2");
    }

    // ---- gen-data determinism ----
    {
        const char* tmpl =
            "[dataset]\nfamily = bars\nheight = 8\nwidth = 8\nn_b = 16\nn_y = 16\nn_eval = 8\nseed = "
            "7\n\n[method]\nname = const\nseed = 7\n\n[output]\ndir = %OUT%\n";
        write_file(work + "/gen1.ini", config_with_out(tmpl, work + "/ds1"));
        write_file(work + "/gen2.ini", config_with_out(tmpl, work + "/ds2"));
        check(run_cmd(bin + " gen-data " + work + "/gen1.ini >/dev/null") == 0, "gen-data runs");
        check(run_cmd(bin + " gen-data " + work + "/gen2.ini >/dev/null") == 0, "gen-data runs again");
        bool identical = true;
        for (const char* f : {"observed_b.egt", "mixtures_y.egt", "eval_x.egt", "eval_b.egt",
                              "eval_y.egt", "sup_y.egt", "sup_b.egt", "manifest.json"})
            identical = identical && same_bytes(work + "/ds1/" + f, work + "/ds2/" + f);
        check(identical, "gen-data twice is byte-identical");
    }

    // ---- run determinism on a tiny NES config ----
    {
        write_file(work + "/run1.ini", config_with_out(kTinyNes, work + "/out1"));
        check(run_cmd(bin + " run " + work + "/run1.ini >/dev/null") == 0, "run completes");
        fs::copy_file(work + "/out1/report.json", work + "/report_first.json");
        check(run_cmd(bin + " run " + work + "/run1.ini >/dev/null") == 0, "run completes again");
        check(same_bytes(work + "/out1/report.json", work + "/report_first.json"),
              "identical config gives a bit-identical report");
    }

    // ---- EGGSEP_SEED override changes the report ----
    {
        write_file(work + "/run3.ini", config_with_out(kTinyNes, work + "/out3"));
        check(run_cmd("EGGSEP_SEED=99 " + bin + " run " + work + "/run3.ini >/dev/null") == 0,
              "run with EGGSEP_SEED completes");
        check(!same_bytes(work + "/out1/report.json", work + "/out3/report.json"),
              "EGGSEP_SEED overrides the config seed");
        const std::string report = slurp(work + "/out3/report.json");
        check(report.find("seed = 99") != std::string::npos, "override is echoed in the config");
    }

    // ---- run on a generated dataset dir ----
    {
        write_file(work + "/run_dir.ini", "[dataset]\ndir = " + work +
                                              "/ds1\n\n[method]\nname = const\nseed = "
                                              "5\n\n[output]\ndir = " +
                                              work + "/out_dir\n");
        check(run_cmd(bin + " run " + work + "/run_dir.ini >/dev/null") == 0,
              "run on a dataset directory completes");
    }

    // ---- eval subcommand ----
    {
        using namespace eggsep;
        Rng rng(3);
        std::vector<Tensor> est, gt;
        for (int i = 0; i < 4; ++i) {
            Tensor t({16, 16});
            for (double& v : t.data) v = rng.uniform();
            gt.push_back(t);
            for (double& v : t.data) v = std::min(1.0, v + 0.05);
            est.push_back(t);
        }
        write_egt_file(stack(est), work + "/est.egt");
        write_egt_file(stack(gt), work + "/gt.egt");
        const int rc = run_cmd(bin + " eval " + work + "/est.egt " + work + "/gt.egt > " + work +
                               "/eval_out.json");
        check(rc == 0, "eval completes");
        const std::string out = slurp(work + "/eval_out.json");
        check(out.find("mean_psnr") != std::string::npos, "eval prints metrics");
    }

    // ---- committed golden report: lmm+nes on bars, seed 7 ----
    {
        const std::string golden = tests_dir + "/golden/bars_lmm_nes_seed7_report.json";
        const char* tmpl = R"(
[dataset]
family = bars
height = 8
width = 8
n_b = 24
n_y = 24
n_eval = 8
seed = 7

[method]
name = lmm+nes
seed = 7
iterations = 2
epochs = 4
batch_size = 8
hidden = 16,16
latent_dim = 8
stage1_epochs = 20
stage2_epochs = 20
infer_steps = 20
lm_hidden = 8,16

[output]
dir = %OUT%
)";
        write_file(work + "/golden.ini", config_with_out(tmpl, work + "/golden_out"));
        check(run_cmd(bin + " run " + work + "/golden.ini >/dev/null") == 0, "golden config runs");
        if (!fs::exists(golden)) {
            std::cout << "[FAIL] golden file missing: " << golden << '\n';
            ++failures;
        } else {
            check(same_bytes(work + "/golden_out/report.json", golden),
                  "lmm+nes bars seed-7 report matches the committed golden file");
        }
    }

    std::cout << (failures ? "FAILURES: " : "all cli tests passed, failures: ") << failures << '\n';
    return failures ? 1 : 0;
}
