#pragma once

/// @file
/// Run configuration: a line-oriented `key = value` grammar with the three
/// sections [model], [run] and [tolerances]. The full schema lives in
/// docs/config.md.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bandspec/cutoff.hpp"
#include "bandspec/errors.hpp"
#include "bandspec/model.hpp"

namespace bandspec {

/// section -> key -> raw value, ordered so the canonical text is stable.
using RawConfig = std::map<std::string, std::map<std::string, std::string>>;

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline const std::set<std::string>& known_keys(const std::string& section) {
    static const std::map<std::string, std::set<std::string>> keys{
        {"model",
         {"preset", "family", "label", "c0", "delta0", "c", "delta", "offdiag_coeffs",
          "offdiag_exponents", "delta0_prime", "kappa", "kappa_prime", "theta", "epsilon0",
          "offdiag_scales", "bandwidth", "diagonal"}},
        {"run",
         {"command", "n_first", "n_last", "N", "tau", "tau_epsilon0", "tau_theta", "chi",
          "n_values", "fit_first", "fit_last", "seed", "gram_order", "gram_entry_bound", "out"}},
        {"tolerances",
         {"stability_rel", "rate_slack", "residual_floor", "horizon", "tail_check"}},
    };
    return keys.at(section);
}

/// offdiag_<l> with l >= 1 holds the table of band l.
inline bool is_offdiag_table_key(const std::string& key) {
    if (key.rfind("offdiag_", 0) != 0 || key.size() == 8) return false;
    for (std::size_t i = 8; i < key.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(key[i]))) return false;
    }
    return key[8] != '0';
}

}  // namespace detail

/// Parses config text. Errors carry the 1-based line number.
inline RawConfig parse_config_text(const std::string& text) {
    RawConfig raw;
    std::istringstream in(text);
    std::string line, section;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::string where = "config line " + std::to_string(number) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "unterminated section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section != "model" && section != "run" && section != "tolerances") {
                throw ConfigError(where + "unknown section [" + section + "]");
            }
            raw[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
        if (section.empty()) throw ConfigError(where + "key outside any section");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + "empty key");
        const bool table_key = section == "model" && detail::is_offdiag_table_key(key);
        if (!table_key && !detail::known_keys(section).count(key)) {
            throw ConfigError(where + "unknown key '" + key + "' in [" + section + "]");
        }
        if (!raw[section].emplace(key, value).second) {
            throw ConfigError(where + "duplicate key '" + key + "' in [" + section + "]");
        }
    }
    return raw;
}

inline RawConfig read_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config_text(text.str());
}

/// Canonical text: sections and keys sorted, values trimmed. Two configs with
/// the same canonical text describe the same run.
inline std::string canonical_text(const RawConfig& raw) {
    std::string out;
    for (const auto& [section, entries] : raw) {
        out += "[" + section + "]\n";
        for (const auto& [key, value] : entries) out += key + " = " + value + "\n";
    }
    return out;
}

namespace detail {

inline double parse_double(const std::string& text, const std::string& name) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || trim(text.substr(used)).size() != 0 || !std::isfinite(v)) {
        throw ConfigError("key " + name + ": '" + text + "' is not a finite number");
    }
    return v;
}

inline Index parse_index(const std::string& text, const std::string& name) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || trim(text.substr(used)).size() != 0) {
        throw ConfigError("key " + name + ": '" + text + "' is not an integer");
    }
    return static_cast<Index>(v);
}

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) out.push_back(trim(item));
    if (!out.empty() && out.back().empty()) out.pop_back();
    return out;
}

inline std::vector<double> parse_double_list(const std::string& text, const std::string& name) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(parse_double(item, name));
    if (out.empty()) throw ConfigError("key " + name + ": empty list");
    return out;
}

inline std::vector<Index> parse_index_list(const std::string& text, const std::string& name) {
    std::vector<Index> out;
    for (const auto& item : split_list(text)) out.push_back(parse_index(item, name));
    if (out.empty()) throw ConfigError("key " + name + ": empty list");
    return out;
}

/// Preset model sections; user keys in [model] override them.
inline std::map<std::string, std::string> preset_entries(const std::string& name) {
    if (name == "M1") {
        return {{"family", "power_like"}, {"c0", "1"}, {"delta0", "2"}, {"c", "0"},
                {"offdiag_coeffs", "1"}, {"offdiag_exponents", "0.5"}, {"delta", "0.5"}};
    }
    if (name == "M2") {
        return {{"family", "power_like"}, {"c0", "1"}, {"delta0", "1"}, {"c", "0"},
                {"offdiag_coeffs", "1"}, {"offdiag_exponents", "0.25"}, {"delta", "0.25"}};
    }
    if (name == "M3") {
        return {{"family", "power_like"}, {"c0", "1"}, {"delta0", "1.5"}, {"c", "0"},
                {"offdiag_coeffs", "0.5, 0.5"}, {"offdiag_exponents", "0.5, 0.5"},
                {"delta", "0.5"}};
    }
    if (name == "S1") {
        return {{"family", "stretched_exp"}, {"c0", "1"}, {"delta0", "0"}, {"c", "1"},
                {"theta", "0.5"}, {"kappa", "0.5"}, {"epsilon0", "1"},
                {"offdiag_scales", "0.01"}};
    }
    throw ConfigError("key model.preset: unknown preset '" + name + "' (M1, M2, M3, S1)");
}

}  // namespace detail

/// Typed view of the [model] section.
struct ModelConfig {
    std::string family;
    std::string label;
    PowerLikeParams power;
    SpecialFamilyParams special;
    std::vector<double> offdiag_scales;
    std::vector<double> diagonal_table;
    std::vector<std::vector<double>> offdiag_tables;
    int bandwidth = 1;

    BandModel build() const {
        if (family == "power_like") return make_power_like(power, label);
        if (family == "diagonal") {
            const double c0 = power.c0, delta0 = power.delta0, c = power.c;
            EntrySequence d(
                [=](Index n) {
                    const double x = static_cast<double>(n);
                    return c0 * std::pow(x, delta0) + c * std::pow(x, delta0 - 1.0);
                },
                "diagonal");
            return BandModel::diagonal(d, bandwidth, label);
        }
        if (family == "table") {
            EntrySequence d = EntrySequence::table(diagonal_table, "diagonal table");
            if (offdiag_tables.empty()) return BandModel::diagonal(d, 1, label);
            std::vector<EntrySequence> a;
            for (std::size_t l = 0; l < offdiag_tables.size(); ++l) {
                a.push_back(EntrySequence::table(offdiag_tables[l],
                                                 "offdiag table " + std::to_string(l + 1)));
            }
            return BandModel(d, std::move(a), label);
        }
        std::vector<EntrySequence> a;
        for (double s : offdiag_scales) a.push_back(family_offdiagonal(special, s));
        return make_special_family(special, std::move(a), std::nullopt, label);
    }

    bool is_power_like() const { return family == "power_like"; }
    bool is_special() const {
        return family == "log_power" || family == "pure_log" || family == "stretched_exp";
    }
};

struct RunSettings {
    std::optional<std::string> command;
    Index n_first = 1;
    std::optional<Index> n_last;
    std::optional<Index> order;  ///< truncation size N
    std::string tau = "quarter";
    double tau_epsilon0 = 1.0;
    double tau_theta = 0.5;
    std::string chi = "smoothstep";
    std::vector<Index> n_values;
    std::optional<Index> fit_first;
    std::optional<Index> fit_last;
    std::uint64_t seed = 1;
    Index gram_order = 50;
    double gram_entry_bound = 5.0;
    std::optional<std::string> out;
};

struct Tolerances {
    double stability_rel = 1e-8;
    double rate_slack = 0.15;
    double residual_floor = 1e-13;
    std::optional<Index> horizon;
    Index tail_check = 200;
};

struct RunConfig {
    RawConfig raw;
    std::optional<ModelConfig> model;
    RunSettings run;
    Tolerances tolerances;

    std::string canonical() const { return canonical_text(raw); }

    const ModelConfig& require_model() const {
        if (!model) throw ConfigError("missing required section [model] (key model.family)");
        return *model;
    }

    TauPolicy tau_policy() const {
        if (run.tau == "quarter") return TauPolicy::quarter();
        if (run.tau == "stretched") return TauPolicy::stretched(run.tau_epsilon0, run.tau_theta);
        throw ConfigError("key run.tau: expected quarter or stretched, got '" + run.tau + "'");
    }

    CutoffFunction cutoff() const {
        if (run.chi == "smoothstep") return CutoffFunction::smoothstep();
        throw ConfigError("key run.chi: expected smoothstep, got '" + run.chi + "'");
    }

    Index require_n_last() const {
        if (!run.n_last) throw ConfigError("missing required key run.n_last");
        return *run.n_last;
    }

    Index require_order() const {
        if (!run.order) throw ConfigError("missing required key run.N");
        return *run.order;
    }
};

namespace detail {

inline ModelConfig build_model_config(const std::map<std::string, std::string>& given) {
    std::map<std::string, std::string> entries;
    std::string label;
    if (auto it = given.find("preset"); it != given.end()) {
        entries = preset_entries(it->second);
        label = it->second;
    }
    for (const auto& [k, v] : given) {
        if (k != "preset") entries[k] = v;
    }
    auto get = [&](const std::string& key) -> std::optional<std::string> {
        auto it = entries.find(key);
        if (it == entries.end()) return std::nullopt;
        return it->second;
    };
    auto num = [&](const std::string& key, double fallback) {
        auto v = get(key);
        return v ? parse_double(*v, "model." + key) : fallback;
    };
    auto required = [&](const std::string& key) {
        auto v = get(key);
        if (!v) throw ConfigError("missing required key model." + key);
        return *v;
    };

    ModelConfig mc;
    mc.family = required("family");
    mc.label = get("label").value_or(label.empty() ? mc.family : label);
    std::set<std::string> allowed{"family", "label"};
    auto allow = [&](std::initializer_list<const char*> keys) {
        for (const char* k : keys) allowed.insert(k);
    };

    if (mc.family == "power_like") {
        allow({"c0", "delta0", "c", "delta", "offdiag_coeffs", "offdiag_exponents"});
        mc.power.c0 = num("c0", 1.0);
        mc.power.delta0 = parse_double(required("delta0"), "model.delta0");
        mc.power.c = num("c", 0.0);
        const auto coeffs = parse_double_list(required("offdiag_coeffs"), "model.offdiag_coeffs");
        const auto exps =
            parse_double_list(required("offdiag_exponents"), "model.offdiag_exponents");
        if (coeffs.size() != exps.size()) {
            throw ConfigError("keys model.offdiag_coeffs and model.offdiag_exponents differ in length");
        }
        double top = exps.front();
        for (std::size_t l = 0; l < coeffs.size(); ++l) {
            mc.power.offdiag.emplace_back(coeffs[l], exps[l]);
            top = std::max(top, exps[l]);
        }
        mc.power.delta = num("delta", top);
        mc.bandwidth = static_cast<int>(coeffs.size());
    } else if (mc.family == "diagonal") {
        allow({"c0", "delta0", "c", "bandwidth"});
        mc.power.c0 = num("c0", 1.0);
        mc.power.delta0 = parse_double(required("delta0"), "model.delta0");
        mc.power.c = num("c", 0.0);
        const Index m = get("bandwidth") ? parse_index(*get("bandwidth"), "model.bandwidth") : 1;
        if (m < 1) throw ConfigError("key model.bandwidth must be >= 1");
        mc.bandwidth = static_cast<int>(m);
    } else if (mc.family == "table") {
        allow({"diagonal"});
        mc.diagonal_table = parse_double_list(required("diagonal"), "model.diagonal");
        for (int l = 1;; ++l) {
            const std::string key = "offdiag_" + std::to_string(l);
            auto v = get(key);
            if (!v) break;
            allowed.insert(key);
            mc.offdiag_tables.push_back(parse_double_list(*v, "model." + key));
        }
        mc.bandwidth = std::max<int>(1, static_cast<int>(mc.offdiag_tables.size()));
    } else if (mc.family == "log_power" || mc.family == "pure_log" ||
               mc.family == "stretched_exp") {
        allow({"c0", "delta0", "delta0_prime", "c", "kappa", "kappa_prime", "theta", "epsilon0",
               "offdiag_scales"});
        mc.special.kind = mc.family == "log_power"  ? FamilyKind::log_power
                          : mc.family == "pure_log" ? FamilyKind::pure_log
                                                    : FamilyKind::stretched_exp;
        mc.special.c0 = num("c0", 1.0);
        mc.special.delta0 = num("delta0", 1.0);
        mc.special.delta0_prime = num("delta0_prime", 0.0);
        mc.special.c = num("c", 0.0);
        mc.special.kappa = num("kappa", 0.0);
        mc.special.kappa_prime = num("kappa_prime", 0.0);
        mc.special.theta = num("theta", 0.5);
        mc.special.epsilon0 = num("epsilon0", 1.0);
        mc.offdiag_scales = parse_double_list(required("offdiag_scales"), "model.offdiag_scales");
        mc.bandwidth = static_cast<int>(mc.offdiag_scales.size());
    } else {
        throw ConfigError("key model.family: unknown family '" + mc.family +
                          "' (power_like, diagonal, table, log_power, pure_log, stretched_exp)");
    }
    for (const auto& [k, v] : given) {
        if (k != "preset" && !allowed.count(k)) {
            throw ConfigError("key model." + k + " does not apply to family " + mc.family);
        }
    }
    try {
        (void)mc.build();
    } catch (const PreconditionError& e) {
        throw ConfigError(std::string("[model]: ") + e.what());
    }
    return mc;
}

}  // namespace detail

/// Typed configuration with every value validated; nothing is computed here.
inline RunConfig make_run_config(RawConfig raw) {
    RunConfig cfg;
    cfg.raw = std::move(raw);
    if (auto it = cfg.raw.find("model"); it != cfg.raw.end() && !it->second.empty()) {
        cfg.model = detail::build_model_config(it->second);
    }
    const auto section = [&](const char* name) {
        static const std::map<std::string, std::string> empty;
        auto it = cfg.raw.find(name);
        return it == cfg.raw.end() ? empty : it->second;
    };
    const auto run = section("run");
    auto get = [&](const std::map<std::string, std::string>& s,
                   const std::string& key) -> std::optional<std::string> {
        auto it = s.find(key);
        if (it == s.end()) return std::nullopt;
        return it->second;
    };
    auto& r = cfg.run;
    r.command = get(run, "command");
    if (auto v = get(run, "n_first")) r.n_first = detail::parse_index(*v, "run.n_first");
    if (auto v = get(run, "n_last")) r.n_last = detail::parse_index(*v, "run.n_last");
    if (auto v = get(run, "N")) r.order = detail::parse_index(*v, "run.N");
    if (auto v = get(run, "tau")) r.tau = *v;
    if (auto v = get(run, "tau_epsilon0")) r.tau_epsilon0 = detail::parse_double(*v, "run.tau_epsilon0");
    if (auto v = get(run, "tau_theta")) r.tau_theta = detail::parse_double(*v, "run.tau_theta");
    if (auto v = get(run, "chi")) r.chi = *v;
    if (auto v = get(run, "n_values")) r.n_values = detail::parse_index_list(*v, "run.n_values");
    if (auto v = get(run, "fit_first")) r.fit_first = detail::parse_index(*v, "run.fit_first");
    if (auto v = get(run, "fit_last")) r.fit_last = detail::parse_index(*v, "run.fit_last");
    if (auto v = get(run, "seed")) {
        const Index s = detail::parse_index(*v, "run.seed");
        if (s < 0) throw ConfigError("key run.seed must be >= 0");
        r.seed = static_cast<std::uint64_t>(s);
    }
    if (auto v = get(run, "gram_order")) r.gram_order = detail::parse_index(*v, "run.gram_order");
    if (auto v = get(run, "gram_entry_bound")) {
        r.gram_entry_bound = detail::parse_double(*v, "run.gram_entry_bound");
    }
    r.out = get(run, "out");

    if (r.n_first < 1) throw ConfigError("key run.n_first must be >= 1");
    if (r.n_last && *r.n_last < r.n_first) throw ConfigError("key run.n_last must be >= run.n_first");
    if (r.order && *r.order < 2) throw ConfigError("key run.N must be >= 2");
    if (r.gram_order < 2) throw ConfigError("key run.gram_order must be >= 2");
    if (!(r.gram_entry_bound > 0.0)) throw ConfigError("key run.gram_entry_bound must be > 0");
    (void)cfg.tau_policy();
    (void)cfg.cutoff();

    const auto tol = section("tolerances");
    auto& t = cfg.tolerances;
    if (auto v = get(tol, "stability_rel")) t.stability_rel = detail::parse_double(*v, "tolerances.stability_rel");
    if (auto v = get(tol, "rate_slack")) t.rate_slack = detail::parse_double(*v, "tolerances.rate_slack");
    if (auto v = get(tol, "residual_floor")) t.residual_floor = detail::parse_double(*v, "tolerances.residual_floor");
    if (auto v = get(tol, "horizon")) t.horizon = detail::parse_index(*v, "tolerances.horizon");
    if (auto v = get(tol, "tail_check")) t.tail_check = detail::parse_index(*v, "tolerances.tail_check");
    if (!(t.stability_rel > 0.0)) throw ConfigError("key tolerances.stability_rel must be > 0");
    if (!(t.residual_floor > 0.0)) throw ConfigError("key tolerances.residual_floor must be > 0");
    if (t.tail_check < 1) throw ConfigError("key tolerances.tail_check must be >= 1");
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    return make_run_config(read_config_file(path));
}

}  // namespace bandspec
