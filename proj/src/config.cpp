#include "eggsep/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace eggsep {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

}  // namespace

IniFile IniFile::parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config: " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return parse_string(os.str(), path);
}

IniFile IniFile::parse_string(const std::string& text, const std::string& origin) {
    IniFile ini;
    ini.origin_ = origin;
    std::istringstream is(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
            ini.sections_[section];
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        if (section.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside any section");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        auto [it, inserted] = ini.sections_[section].emplace(key, Entry{value, false});
        (void)it;
        if (!inserted)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                              "' in [" + section + "]");
    }
    return ini;
}

bool IniFile::has_section(const std::string& sec) const { return sections_.count(sec) != 0; }

bool IniFile::has(const std::string& sec, const std::string& key) const {
    const auto s = sections_.find(sec);
    return s != sections_.end() && s->second.count(key) != 0;
}

std::string IniFile::get(const std::string& sec, const std::string& key) const {
    const auto s = sections_.find(sec);
    if (s == sections_.end() || !s->second.count(key))
        throw ConfigError(origin_ + ": missing required key '" + key + "' in [" + sec + "]");
    const Entry& e = s->second.at(key);
    e.consumed = true;
    return e.value;
}

std::string IniFile::get_or(const std::string& sec, const std::string& key,
                            const std::string& def) const {
    return has(sec, key) ? get(sec, key) : def;
}

std::uint64_t IniFile::get_u64(const std::string& sec, const std::string& key,
                               std::uint64_t def) const {
    if (!has(sec, key)) return def;
    return get_u64_required(sec, key);
}

std::uint64_t IniFile::get_u64_required(const std::string& sec, const std::string& key) const {
    const std::string v = get(sec, key);
    try {
        std::size_t pos = 0;
        const std::uint64_t out = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError(origin_ + ": key '" + key + "' in [" + sec + "] is not an integer: " + v);
    }
}

double IniFile::get_double(const std::string& sec, const std::string& key, double def) const {
    if (!has(sec, key)) return def;
    const std::string v = get(sec, key);
    try {
        std::size_t pos = 0;
        const double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError(origin_ + ": key '" + key + "' in [" + sec + "] is not a number: " + v);
    }
}

bool IniFile::get_bool(const std::string& sec, const std::string& key, bool def) const {
    if (!has(sec, key)) return def;
    const std::string v = get(sec, key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(origin_ + ": key '" + key + "' in [" + sec + "] is not a boolean: " + v);
}

std::vector<std::size_t> IniFile::get_size_list(const std::string& sec, const std::string& key,
                                                const std::vector<std::size_t>& def) const {
    if (!has(sec, key)) return def;
    const std::string v = get(sec, key);
    std::vector<std::size_t> out;
    std::istringstream is(v);
    std::string item;
    while (std::getline(is, item, ',')) {
        item = trim(item);
        try {
            std::size_t pos = 0;
            out.push_back(std::stoull(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(origin_ + ": key '" + key + "' in [" + sec +
                              "] is not a comma-separated size list: " + v);
        }
    }
    if (out.empty())
        throw ConfigError(origin_ + ": key '" + key + "' in [" + sec + "] is empty");
    return out;
}

void IniFile::ensure_all_consumed() const {
    for (const auto& [sec, entries] : sections_)
        for (const auto& [key, entry] : entries)
            if (!entry.consumed)
                throw ConfigError(origin_ + ": unknown key '" + key + "' in [" + sec + "]");
}

const char* method_name(Method m) {
    switch (m) {
        case Method::constant: return "const";
        case Method::nmf: return "nmf";
        case Method::am: return "am";
        case Method::lm: return "lm";
        case Method::lmm: return "lmm";
        case Method::nes: return "nes";
        case Method::am_nes: return "am+nes";
        case Method::lmm_nes: return "lmm+nes";
        case Method::supervised: return "supervised";
    }
    return "?";
}

Method method_from_name(const std::string& s) {
    if (s == "const") return Method::constant;
    if (s == "nmf") return Method::nmf;
    if (s == "am") return Method::am;
    if (s == "lm") return Method::lm;
    if (s == "lmm") return Method::lmm;
    if (s == "nes") return Method::nes;
    if (s == "am+nes") return Method::am_nes;
    if (s == "lmm+nes") return Method::lmm_nes;
    if (s == "supervised") return Method::supervised;
    throw ConfigError("unknown method: " + s);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // prefer the shorter form when it round-trips
    for (int prec = 1; prec <= 16; ++prec) {
        char probe[64];
        std::snprintf(probe, sizeof probe, "%.*g", prec, v);
        if (std::strtod(probe, nullptr) == v) return probe;
    }
    return buf;
}

ExperimentConfig ExperimentConfig::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config: " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return load_string(os.str(), path);
}

ExperimentConfig ExperimentConfig::load_string(const std::string& text, const std::string& origin,
                                               bool apply_env_override) {
    const IniFile ini = IniFile::parse_string(text, origin);
    ExperimentConfig cfg;

    // [dataset]
    if (!ini.has_section("dataset")) throw ConfigError(origin + ": missing [dataset] section");
    if (ini.has("dataset", "dir")) {
        cfg.dataset_dir = ini.get("dataset", "dir");
    } else {
        SynthConfig s;
        s.family = family_from_name(ini.get("dataset", "family"));
        s.height = ini.get_u64("dataset", "height", s.family == SynthFamily::tones ? 64 : 16);
        s.width = ini.get_u64("dataset", "width", s.family == SynthFamily::tones ? 64 : 16);
        s.n_b = ini.get_u64("dataset", "n_b", 256);
        s.n_y = ini.get_u64("dataset", "n_y", 256);
        s.n_eval = ini.get_u64("dataset", "n_eval", 64);
        s.n_sup = ini.get_u64("dataset", "n_sup", 0);
        s.noise_sigma = ini.get_double("dataset", "noise_sigma", 0.1);
        s.seed = ini.get_u64_required("dataset", "seed");
        s.validate();
        cfg.synth = s;
    }

    // [method]
    if (!ini.has_section("method")) throw ConfigError(origin + ": missing [method] section");
    cfg.method = method_from_name(ini.get("method", "name"));
    cfg.seed = ini.get_u64_required("method", "seed");
    if (apply_env_override) {
        if (const char* env = std::getenv("EGGSEP_SEED")) {
            try {
                cfg.seed = std::stoull(env);
            } catch (const std::exception&) {
                throw ConfigError("EGGSEP_SEED is not an integer: " + std::string(env));
            }
        }
    }

    cfg.nes.iterations = ini.get_u64("method", "iterations", 10);
    cfg.nes.epochs = ini.get_u64("method", "epochs", 25);
    cfg.nes.lr = ini.get_double("method", "lr", 0.001);
    cfg.nes.init_constant = ini.get_double("method", "init_constant", 0.5);
    cfg.nes.batch_size = ini.get_u64("method", "batch_size", 32);
    cfg.nes.hidden = ini.get_size_list("method", "hidden", {512, 512});
    cfg.nes.resample_pairs_per_epoch = ini.get_bool("method", "resample_pairs_per_epoch", false);
    cfg.nes.warm_start = ini.get_bool("method", "warm_start", false);
    cfg.nes.seed = cfg.seed;

    cfg.lm.latent_dim = ini.get_u64("method", "latent_dim", 64);
    cfg.lm.stage1_epochs = ini.get_u64("method", "stage1_epochs", 150);
    cfg.lm.stage2_epochs = ini.get_u64("method", "stage2_epochs", 150);
    cfg.lm.infer_steps = ini.get_u64("method", "infer_steps", 500);
    cfg.lm.code_lr = ini.get_double("method", "code_lr", 0.01);
    cfg.lm.weight_lr = ini.get_double("method", "weight_lr", 0.001);
    cfg.lm.batch_size = cfg.nes.batch_size;
    cfg.lm.hidden = ini.get_size_list("method", "lm_hidden", {256, 512});
    cfg.lm.seed = cfg.seed;

    cfg.nmf.bases = ini.get_u64("method", "bases", 32);
    cfg.nmf.sparsity = ini.get_double("method", "sparsity", 0.1);
    cfg.nmf.train_iters = ini.get_u64("method", "nmf_train_iters", 200);
    cfg.nmf.separate_iters = ini.get_u64("method", "nmf_separate_iters", 200);
    cfg.nmf.seed = cfg.seed;

    cfg.am.mask_lr = ini.get_double("method", "am_mask_lr", 0.001);
    cfg.am.disc_lr = ini.get_double("method", "am_disc_lr", 0.001);
    cfg.am.magnitude_weight = ini.get_double("method", "magnitude_weight", 0.1);
    cfg.am.epochs = ini.get_u64("method", "am_epochs", 60);
    cfg.am.batch_size = cfg.nes.batch_size;
    cfg.am.mask_hidden = cfg.nes.hidden;
    cfg.am.disc_hidden = ini.get_size_list("method", "disc_hidden", {512, 256});
    cfg.am.seed = cfg.seed;

    cfg.sup.epochs = ini.get_u64("method", "sup_epochs", 250);
    cfg.sup.lr = cfg.nes.lr;
    cfg.sup.batch_size = cfg.nes.batch_size;
    cfg.sup.hidden = cfg.nes.hidden;
    cfg.sup.seed = cfg.seed;

    // [output]
    cfg.out_dir = ini.get_or("output", "dir", "out");
    cfg.dump_samples = ini.get_bool("output", "dump_samples", false);

    ini.ensure_all_consumed();
    return cfg;
}

std::string ExperimentConfig::canonical_ini() const {
    std::ostringstream os;
    os << "[dataset]\n";
    if (dataset_dir) {
        os << "dir = " << *dataset_dir << '\n';
    } else {
        const SynthConfig& s = *synth;
        os << "family = " << family_name(s.family) << '\n';
        os << "height = " << s.height << '\n';
        os << "width = " << s.width << '\n';
        os << "n_b = " << s.n_b << '\n';
        os << "n_y = " << s.n_y << '\n';
        os << "n_eval = " << s.n_eval << '\n';
        os << "n_sup = " << s.n_sup << '\n';
        os << "noise_sigma = " << format_double(s.noise_sigma) << '\n';
        os << "seed = " << s.seed << '\n';
    }
    os << "\n[method]\n";
    os << "name = " << method_name(method) << '\n';
    os << "seed = " << seed << '\n';
    os << "iterations = " << nes.iterations << '\n';
    os << "epochs = " << nes.epochs << '\n';
    os << "lr = " << format_double(nes.lr) << '\n';
    os << "init_constant = " << format_double(nes.init_constant) << '\n';
    os << "batch_size = " << nes.batch_size << '\n';
    os << "hidden = ";
    for (std::size_t i = 0; i < nes.hidden.size(); ++i) os << (i ? "," : "") << nes.hidden[i];
    os << '\n';
    os << "resample_pairs_per_epoch = " << (nes.resample_pairs_per_epoch ? "true" : "false") << '\n';
    os << "warm_start = " << (nes.warm_start ? "true" : "false") << '\n';
    os << "latent_dim = " << lm.latent_dim << '\n';
    os << "stage1_epochs = " << lm.stage1_epochs << '\n';
    os << "stage2_epochs = " << lm.stage2_epochs << '\n';
    os << "infer_steps = " << lm.infer_steps << '\n';
    os << "code_lr = " << format_double(lm.code_lr) << '\n';
    os << "weight_lr = " << format_double(lm.weight_lr) << '\n';
    os << "lm_hidden = ";
    for (std::size_t i = 0; i < lm.hidden.size(); ++i) os << (i ? "," : "") << lm.hidden[i];
    os << '\n';
    os << "bases = " << nmf.bases << '\n';
    os << "sparsity = " << format_double(nmf.sparsity) << '\n';
    os << "nmf_train_iters = " << nmf.train_iters << '\n';
    os << "nmf_separate_iters = " << nmf.separate_iters << '\n';
    os << "am_mask_lr = " << format_double(am.mask_lr) << '\n';
    os << "am_disc_lr = " << format_double(am.disc_lr) << '\n';
    os << "magnitude_weight = " << format_double(am.magnitude_weight) << '\n';
    os << "am_epochs = " << am.epochs << '\n';
    os << "disc_hidden = ";
    for (std::size_t i = 0; i < am.disc_hidden.size(); ++i) os << (i ? "," : "") << am.disc_hidden[i];
    os << '\n';
    os << "sup_epochs = " << sup.epochs << '\n';
    os << "\n[output]\n";
    os << "dir = " << out_dir << '\n';
    os << "dump_samples = " << (dump_samples ? "true" : "false") << '\n';
    return os.str();
}

}  // namespace eggsep
