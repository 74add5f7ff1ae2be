#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "eggsep/baselines.hpp"
#include "eggsep/dataset.hpp"
#include "eggsep/latent_mixtures.hpp"
#include "eggsep/nes.hpp"

namespace eggsep {

// Config errors map to CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat INI: [section] headers, key = value lines, # or ; comments. Keys are
// tracked on read so unknown keys can be rejected after loading.
class IniFile {
public:
    static IniFile parse_file(const std::string& path);
    static IniFile parse_string(const std::string& text, const std::string& origin);

    bool has_section(const std::string& sec) const;
    bool has(const std::string& sec, const std::string& key) const;

    std::string get(const std::string& sec, const std::string& key) const;  // throws when missing
    std::string get_or(const std::string& sec, const std::string& key, const std::string& def) const;
    std::uint64_t get_u64(const std::string& sec, const std::string& key, std::uint64_t def) const;
    std::uint64_t get_u64_required(const std::string& sec, const std::string& key) const;
    double get_double(const std::string& sec, const std::string& key, double def) const;
    bool get_bool(const std::string& sec, const std::string& key, bool def) const;
    std::vector<std::size_t> get_size_list(const std::string& sec, const std::string& key,
                                           const std::vector<std::size_t>& def) const;

    void ensure_all_consumed() const;  // unknown keys are errors

private:
    struct Entry {
        std::string value;
        mutable bool consumed = false;
    };
    std::map<std::string, std::map<std::string, Entry>> sections_;
    std::string origin_;
};

enum class Method : std::uint8_t { constant, nmf, am, lm, lmm, nes, am_nes, lmm_nes, supervised };

const char* method_name(Method m);
Method method_from_name(const std::string& s);

struct ExperimentConfig {
    // dataset: either a synthetic family or a generated dataset directory
    std::optional<SynthConfig> synth;
    std::optional<std::string> dataset_dir;

    Method method = Method::constant;
    std::uint64_t seed = 0;

    NesConfig nes;
    LmConfig lm;
    NmfConfig nmf;
    AmConfig am;
    SupervisedConfig sup;

    std::string out_dir = "out";
    bool dump_samples = false;

    // Parses, applies the EGGSEP_SEED override, validates strictly.
    static ExperimentConfig load_file(const std::string& path);
    static ExperimentConfig load_string(const std::string& text, const std::string& origin,
                                        bool apply_env_override = true);

    // Canonical INI with every effective value materialized; reparsing it
    // reproduces this config exactly.
    std::string canonical_ini() const;
};

std::string format_double(double v);  // shortest round-trip decimal form

}  // namespace eggsep
