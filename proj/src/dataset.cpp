#include "eggsep/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace eggsep {

void SeparationDataset::validate() const {
    auto check_sample = [&](const Tensor& t, const char* what) {
        if (t.shape != sample_shape)
            throw std::runtime_error(std::string("dataset ") + name + ": " + what + " has shape " +
                                     t.shape_str() + ", expected " + Tensor(sample_shape).shape_str());
        for (double v : t.data)
            if (!(v >= 0.0)) throw std::runtime_error(std::string("dataset ") + name + ": negative value in " + what);
    };
    for (const Tensor& t : observed_b) check_sample(t, "observed_b sample");
    for (const Tensor& t : mixtures_y) check_sample(t, "mixture sample");
    for (const EvalTriple& e : eval) {
        check_sample(e.x, "eval x");
        check_sample(e.b, "eval b");
        check_sample(e.y, "eval y");
        for (std::size_t i = 0; i < e.y.numel(); ++i)
            if (e.y.data[i] != e.x.data[i] + e.b.data[i])
                throw std::runtime_error("dataset " + name + ": eval triple violates y = x + b exactly");
    }
    for (const auto& [y, b] : sup_pairs) {
        check_sample(y, "sup y");
        check_sample(b, "sup b");
    }
}

const char* family_name(SynthFamily f) {
    switch (f) {
        case SynthFamily::bars: return "bars";
        case SynthFamily::blobs: return "blobs";
        case SynthFamily::tones: return "tones";
        case SynthFamily::denoise: return "denoise";
    }
    return "?";
}

SynthFamily family_from_name(const std::string& s) {
    if (s == "bars") return SynthFamily::bars;
    if (s == "blobs") return SynthFamily::blobs;
    if (s == "tones") return SynthFamily::tones;
    if (s == "denoise") return SynthFamily::denoise;
    throw std::invalid_argument("unknown dataset family: " + s);
}

void SynthConfig::validate() const {
    if (height == 0 || width == 0) throw std::invalid_argument("synth config: zero sample extent");
    if (n_b == 0 || n_y == 0) throw std::invalid_argument("synth config: sample counts must be positive");
    if (noise_sigma < 0.0) throw std::invalid_argument("synth config: noise sigma must be >= 0");
}

namespace {

void clamp01(Tensor& t) {
    for (double& v : t.data) v = std::min(1.0, std::max(0.0, v));
}

// ---- bars: horizontal bars for B, vertical bars for X ----

Tensor bars_sample(std::size_t h, std::size_t w, bool horizontal, Rng& rng) {
    Tensor t = Tensor::zeros({h, w});
    const std::size_t extent = horizontal ? h : w;
    const std::size_t count = 1 + rng.index(3);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t pos = rng.index(extent);
        const double intensity = rng.uniform(0.3, 1.0);
        if (horizontal)
            for (std::size_t j = 0; j < w; ++j) t.data[pos * w + j] = std::max(t.data[pos * w + j], intensity);
        else
            for (std::size_t i = 0; i < h; ++i) t.data[i * w + pos] = std::max(t.data[i * w + pos], intensity);
    }
    return t;
}

// ---- blobs: axis-aligned Gaussian bumps for B, rings for X ----

Tensor blob_sample(std::size_t h, std::size_t w, Rng& rng) {
    Tensor t = Tensor::zeros({h, w});
    const std::size_t count = 1 + rng.index(2);
    for (std::size_t k = 0; k < count; ++k) {
        const double ci = rng.uniform(2.0, static_cast<double>(h) - 3.0);
        const double cj = rng.uniform(2.0, static_cast<double>(w) - 3.0);
        const double si = rng.uniform(1.2, 2.8);
        const double sj = rng.uniform(1.2, 2.8);
        const double intensity = rng.uniform(0.4, 1.0);
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w; ++j) {
                const double di = (static_cast<double>(i) - ci) / si;
                const double dj = (static_cast<double>(j) - cj) / sj;
                t.data[i * w + j] += intensity * std::exp(-0.5 * (di * di + dj * dj));
            }
    }
    clamp01(t);
    return t;
}

Tensor ring_sample(std::size_t h, std::size_t w, Rng& rng) {
    Tensor t = Tensor::zeros({h, w});
    const std::size_t count = 1 + rng.index(2);
    for (std::size_t k = 0; k < count; ++k) {
        const double ci = rng.uniform(3.0, static_cast<double>(h) - 4.0);
        const double cj = rng.uniform(3.0, static_cast<double>(w) - 4.0);
        const double radius = rng.uniform(2.5, std::min(h, w) * 0.35);
        const double width = rng.uniform(0.7, 1.4);
        const double intensity = rng.uniform(0.4, 1.0);
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w; ++j) {
                const double di = static_cast<double>(i) - ci;
                const double dj = static_cast<double>(j) - cj;
                const double r = std::sqrt(di * di + dj * dj);
                const double d = (r - radius) / width;
                t.data[i * w + j] += intensity * std::exp(-0.5 * d * d);
            }
    }
    clamp01(t);
    return t;
}

// ---- tones: sustained harmonic stacks (B) with correlated low-amplitude
// vibrato glides (X) on a time-frequency grid. Columns are time, rows are
// frequency. The glide register and onset depend on the stack, mirroring the
// vocals/instrumental dependence the family stands in for. ----

void add_track(Tensor& t, double row, std::size_t col, double amp) {
    const std::size_t h = t.shape[0], w = t.shape[1];
    const std::size_t r0 = static_cast<std::size_t>(std::floor(row));
    const double frac = row - std::floor(row);
    if (r0 < h) t.data[r0 * w + col] += amp * (1.0 - frac);
    if (r0 + 1 < h) t.data[(r0 + 1) * w + col] += amp * frac;
}

void tones_pair(std::size_t h, std::size_t w, Rng& rng, Tensor& b, Tensor& x) {
    b = Tensor::zeros({h, w});
    x = Tensor::zeros({h, w});

    const std::size_t notes = 1 + rng.index(2);
    double first_f0 = 0.0;
    std::size_t first_on = 0;
    for (std::size_t k = 0; k < notes; ++k) {
        const double f0 = rng.uniform(4.0, static_cast<double>(h) * 0.3);
        const std::size_t span = w / 2 + rng.index(w / 2);
        const std::size_t t_on = rng.index(w - span + 1);
        const double amp = rng.uniform(0.6, 1.0);
        if (k == 0) {
            first_f0 = f0;
            first_on = t_on;
        }
        const std::size_t harmonics = 3 + rng.index(3);
        const double env_rate = rng.uniform(0.05, 0.2);
        const double env_phase = rng.uniform(0.0, 6.28318530717958647692);
        for (std::size_t c = t_on; c < t_on + span && c < w; ++c) {
            const double env = 1.0 + 0.1 * std::sin(env_rate * static_cast<double>(c) + env_phase);
            for (std::size_t m = 1; m <= harmonics; ++m) {
                const double row = f0 * static_cast<double>(m);
                if (row >= static_cast<double>(h) - 1.0) break;
                add_track(b, row, c, amp * env / static_cast<double>(m));
            }
        }
    }

    const std::size_t glides = 1 + rng.index(2);
    for (std::size_t k = 0; k < glides; ++k) {
        // onset and register track the first note of the stack
        const std::size_t span = w / 4 + rng.index(w / 4);
        const std::size_t max_on = w - span;
        std::size_t t_on = first_on + rng.index(w / 8 + 1);
        if (t_on > max_on) t_on = max_on;
        const double base = std::min(static_cast<double>(h) * 0.45,
                                     std::max(3.0, first_f0 + rng.uniform(-2.0, 4.0)));
        const double vib_amp = rng.uniform(1.0, 3.0);
        const double vib_rate = rng.uniform(0.5, 1.1);
        const double vib_phase = rng.uniform(0.0, 6.28318530717958647692);
        const double drift = rng.uniform(-0.08, 0.08);
        const double amp = rng.uniform(0.3, 0.5);
        const std::size_t harmonics = 2 + rng.index(2);
        for (std::size_t c = t_on; c < t_on + span && c < w; ++c) {
            const double dt = static_cast<double>(c - t_on);
            const double row = base + drift * dt + vib_amp * std::sin(vib_rate * dt + vib_phase);
            if (row < 1.0) continue;
            for (std::size_t m = 1; m <= harmonics; ++m) {
                const double rm = row * static_cast<double>(m);
                if (rm >= static_cast<double>(h) - 1.0) break;
                add_track(x, rm, c, amp / static_cast<double>(m));
            }
        }
    }

    clamp01(b);
    clamp01(x);
}

// ---- denoise: clean blob image for B, positively clamped Gaussian noise for X ----

Tensor clamped_noise(std::size_t h, std::size_t w, double sigma, Rng& rng) {
    Tensor t({h, w});
    for (double& v : t.data) v = std::max(0.0, rng.normal(0.0, sigma));
    return t;
}

struct PairDraw {
    Tensor b, x;
};

PairDraw draw_pair(const SynthConfig& cfg, Rng& rng) {
    PairDraw p;
    switch (cfg.family) {
        case SynthFamily::bars:
            p.b = bars_sample(cfg.height, cfg.width, true, rng);
            p.x = bars_sample(cfg.height, cfg.width, false, rng);
            break;
        case SynthFamily::blobs:
            p.b = blob_sample(cfg.height, cfg.width, rng);
            p.x = ring_sample(cfg.height, cfg.width, rng);
            break;
        case SynthFamily::tones:
            tones_pair(cfg.height, cfg.width, rng, p.b, p.x);
            break;
        case SynthFamily::denoise:
            p.b = blob_sample(cfg.height, cfg.width, rng);
            p.x = clamped_noise(cfg.height, cfg.width, cfg.noise_sigma, rng);
            break;
    }
    return p;
}

}  // namespace

SeparationDataset gen_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    SeparationDataset ds;
    ds.name = family_name(cfg.family);
    ds.sample_shape = {cfg.height, cfg.width};
    ds.value_max = 1.0;
    ds.seed = cfg.seed;

    // Draw order is fixed: observed, mixtures, eval, supervised. Every draw
    // produces a (b, x) pair so the stream stays aligned across sets; the
    // observed set keeps only the b half, which also makes it disjoint from
    // the mixture draws.
    for (std::size_t i = 0; i < cfg.n_b; ++i) ds.observed_b.push_back(draw_pair(cfg, rng).b);
    for (std::size_t i = 0; i < cfg.n_y; ++i) {
        PairDraw p = draw_pair(cfg, rng);
        ds.mixtures_y.push_back(add(p.b, p.x));
    }
    for (std::size_t i = 0; i < cfg.n_eval; ++i) {
        PairDraw p = draw_pair(cfg, rng);
        EvalTriple e;
        e.y = add(p.b, p.x);
        e.b = std::move(p.b);
        e.x = std::move(p.x);
        ds.eval.push_back(std::move(e));
    }
    const std::size_t n_sup = cfg.n_sup == 0 ? cfg.n_y : cfg.n_sup;
    for (std::size_t i = 0; i < n_sup; ++i) {
        PairDraw p = draw_pair(cfg, rng);
        ds.sup_pairs.emplace_back(add(p.b, p.x), std::move(p.b));
    }
    ds.validate();
    return ds;
}

// ---- IDX ----

namespace {

std::uint32_t read_be_u32(std::ifstream& is, const std::string& path, std::size_t& offset) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is)
        throw std::runtime_error("IDX: " + path + " truncated at offset " + std::to_string(offset));
    offset += 4;
    return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

}  // namespace

SeparationDataset load_idx(const std::string& images_path, const std::string& labels_path, bool low_is_b) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw std::runtime_error("IDX: cannot open " + images_path);
    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs) throw std::runtime_error("IDX: cannot open " + labels_path);

    std::size_t img_off = 0, lab_off = 0;
    const std::uint32_t img_magic = read_be_u32(imgs, images_path, img_off);
    if (img_magic != 0x00000803)
        throw std::runtime_error("IDX: bad image magic in " + images_path);
    const std::uint32_t lab_magic = read_be_u32(labs, labels_path, lab_off);
    if (lab_magic != 0x00000801)
        throw std::runtime_error("IDX: bad label magic in " + labels_path);

    const std::uint32_t n_images = read_be_u32(imgs, images_path, img_off);
    const std::uint32_t rows = read_be_u32(imgs, images_path, img_off);
    const std::uint32_t cols = read_be_u32(imgs, images_path, img_off);
    const std::uint32_t n_labels = read_be_u32(labs, labels_path, lab_off);
    if (n_images != n_labels)
        throw std::runtime_error("IDX: image count " + std::to_string(n_images) + " != label count " +
                                 std::to_string(n_labels));

    std::vector<unsigned char> labels(n_labels);
    labs.read(reinterpret_cast<char*>(labels.data()), n_labels);
    if (!labs)
        throw std::runtime_error("IDX: " + labels_path + " truncated at offset " + std::to_string(lab_off));

    const std::size_t px = static_cast<std::size_t>(rows) * cols;
    std::vector<unsigned char> buf(px);
    std::vector<Tensor> low, high;
    for (std::uint32_t i = 0; i < n_images; ++i) {
        imgs.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(px));
        if (!imgs)
            throw std::runtime_error("IDX: " + images_path + " truncated at offset " +
                                     std::to_string(img_off));
        img_off += px;
        Tensor t({rows, cols});
        for (std::size_t k = 0; k < px; ++k) t.data[k] = static_cast<double>(buf[k]) / 255.0;
        (labels[i] <= 4 ? low : high).push_back(std::move(t));
    }

    std::vector<Tensor>& bs = low_is_b ? low : high;
    std::vector<Tensor>& xs = low_is_b ? high : low;
    if (bs.size() < 4 || xs.size() < 2)
        throw std::runtime_error("IDX: not enough images per class in " + images_path);

    // 12k observed / 12k mixtures / 5000 eval triples when the archive is
    // large enough (the full 60k train set), proportionally fewer otherwise.
    const std::size_t n_obs = std::min<std::size_t>(12000, bs.size() * 2 / 5);
    const std::size_t x_pool = xs.size() / 2;
    const std::size_t n_eval =
        std::min<std::size_t>(5000, std::min(bs.size() - 2 * n_obs, xs.size() - x_pool));

    SeparationDataset ds;
    ds.name = low_is_b ? "mnist-b04" : "mnist-b59";
    ds.sample_shape = {rows, cols};
    ds.value_max = 1.0;
    ds.seed = 0;

    Rng rng(0x1db5u);  // the protocol itself is fixed; files are the only input
    for (std::size_t i = 0; i < n_obs; ++i) ds.observed_b.push_back(bs[i]);
    for (std::size_t i = 0; i < n_obs; ++i) {
        const Tensor& b = bs[n_obs + i];
        const Tensor& x = xs[rng.index(x_pool)];
        ds.mixtures_y.push_back(add(x, b));
        ds.sup_pairs.emplace_back(add(x, b), b);
    }
    for (std::size_t i = 0; i < n_eval; ++i) {
        EvalTriple e;
        e.b = bs[2 * n_obs + i];
        e.x = xs[x_pool + i];
        e.y = add(e.x, e.b);
        ds.eval.push_back(std::move(e));
    }
    ds.validate();
    return ds;
}

// ---- dataset directory ----

void save_dataset(const SeparationDataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["name"] = ds.name;
    manifest["sample_shape"] = ds.sample_shape;
    manifest["value_max"] = ds.value_max;
    manifest["seed"] = ds.seed;
    manifest["n_b"] = ds.observed_b.size();
    manifest["n_y"] = ds.mixtures_y.size();
    manifest["n_eval"] = ds.eval.size();
    manifest["n_sup"] = ds.sup_pairs.size();

    write_egt_file(stack(ds.observed_b), dir + "/observed_b.egt");
    write_egt_file(stack(ds.mixtures_y), dir + "/mixtures_y.egt");
    if (!ds.eval.empty()) {
        std::vector<Tensor> xs, bs, ys;
        for (const auto& e : ds.eval) {
            xs.push_back(e.x);
            bs.push_back(e.b);
            ys.push_back(e.y);
        }
        write_egt_file(stack(xs), dir + "/eval_x.egt");
        write_egt_file(stack(bs), dir + "/eval_b.egt");
        write_egt_file(stack(ys), dir + "/eval_y.egt");
    }
    if (!ds.sup_pairs.empty()) {
        std::vector<Tensor> ys, bs;
        for (const auto& [y, b] : ds.sup_pairs) {
            ys.push_back(y);
            bs.push_back(b);
        }
        write_egt_file(stack(ys), dir + "/sup_y.egt");
        write_egt_file(stack(bs), dir + "/sup_b.egt");
    }
    std::ofstream os(dir + "/manifest.json");
    if (!os) throw std::runtime_error("cannot write " + dir + "/manifest.json");
    os << manifest.dump(2) << '\n';
}

SeparationDataset load_dataset(const std::string& dir) {
    std::ifstream is(dir + "/manifest.json");
    if (!is) throw std::runtime_error("cannot open " + dir + "/manifest.json");
    nlohmann::json manifest = nlohmann::json::parse(is);

    SeparationDataset ds;
    ds.name = manifest["name"].get<std::string>();
    ds.sample_shape = manifest["sample_shape"].get<std::vector<std::size_t>>();
    ds.value_max = manifest["value_max"].get<double>();
    ds.seed = manifest["seed"].get<std::uint64_t>();
    ds.observed_b = unstack(read_egt_file(dir + "/observed_b.egt"));
    ds.mixtures_y = unstack(read_egt_file(dir + "/mixtures_y.egt"));
    if (manifest["n_eval"].get<std::size_t>() > 0) {
        auto xs = unstack(read_egt_file(dir + "/eval_x.egt"));
        auto bs = unstack(read_egt_file(dir + "/eval_b.egt"));
        auto ys = unstack(read_egt_file(dir + "/eval_y.egt"));
        if (xs.size() != bs.size() || bs.size() != ys.size())
            throw std::runtime_error("dataset dir: eval tensor counts disagree");
        for (std::size_t i = 0; i < xs.size(); ++i)
            ds.eval.push_back({std::move(xs[i]), std::move(bs[i]), std::move(ys[i])});
    }
    if (manifest["n_sup"].get<std::size_t>() > 0) {
        auto ys = unstack(read_egt_file(dir + "/sup_y.egt"));
        auto bs = unstack(read_egt_file(dir + "/sup_b.egt"));
        if (ys.size() != bs.size()) throw std::runtime_error("dataset dir: sup tensor counts disagree");
        for (std::size_t i = 0; i < ys.size(); ++i)
            ds.sup_pairs.emplace_back(std::move(ys[i]), std::move(bs[i]));
    }
    ds.validate();
    return ds;
}

}  // namespace eggsep
