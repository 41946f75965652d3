#pragma once

/// @file
/// `bandspec <subcommand> --config <path> [--out <dir>] [--force] [--threads <k>]`
///
/// Exit codes: 0 success, 1 configuration or precondition error, 2 numerical
/// failure, 3 property violation. CSV schemas are listed in docs/csv.md.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bandspec/asymptotics.hpp"
#include "bandspec/certificate.hpp"
#include "bandspec/config.hpp"
#include "bandspec/conjugation.hpp"
#include "bandspec/enclosure.hpp"
#include "bandspec/parallel.hpp"
#include "bandspec/report.hpp"

namespace bandspec {

inline constexpr const char* kOutputDirVariable = "BANDSPEC_OUT";
inline constexpr const char* kCacheFormat = "bandspec-results-v1";

/// Mutable state shared by the steps of one command.
struct CommandContext {
    const RunConfig& config;
    unsigned threads = 1;
    ArtifactFiles files;
    std::vector<std::string> violations;
    std::vector<std::string> summary;
};

namespace commands {

inline void eigs(CommandContext& ctx) {
    const auto& cfg = ctx.config;
    const BandModel model = cfg.require_model().build();
    const Index order = cfg.require_order();
    CsvTable t{{"n", "lambda_n", "d_n"}, {}};
    SpectralSummary s;
    if (cfg.run.n_last) {
        if (*cfg.run.n_last > order) throw ConfigError("key run.n_last must be <= run.N");
        s = eigenvalues(truncate(model, order), {cfg.run.n_first, *cfg.run.n_last}, ctx.threads);
    } else {
        s = eigenvalues(truncate(model, order));
    }
    for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
        const Index n = s.first_index + static_cast<Index>(i);
        t.add_row({format_number(n), format_number(s.eigenvalues[i]), format_number(model.d(n))});
    }
    ctx.files["eigs.csv"] = to_csv(t);
    ctx.summary.push_back("eigenvalues of the order-" + std::to_string(order) + " section (" +
                          s.method + "): " + std::to_string(s.eigenvalues.size()) + " values");
}

/// Relative slack for comparing a computed eigenvalue against an exact bound.
inline double containment_slack(double lambda) { return 1e-12 * (1.0 + std::abs(lambda)); }

inline void enclose(CommandContext& ctx, bool with_plot) {
    const auto& cfg = ctx.config;
    const BandModel model = cfg.require_model().build();
    const Index order = cfg.require_order();
    const Index first = cfg.run.n_first, last = cfg.require_n_last();
    const auto ev = stable_eigenvalues(model, {first, last}, order, cfg.tolerances.stability_rel,
                                       ctx.threads);
    CsvTable t{{"n", "d_n", "lower", "upper", "arg_lower", "arg_upper", "tail_certified",
                "lambda_n", "stable", "contained"},
               {}};
    std::vector<EnclosureResult> rows(static_cast<std::size_t>(last - first + 1));
    parallel_for(rows.size(), ctx.threads, [&](std::size_t i) {
        const Index n = first + static_cast<Index>(i);
        rows[i] = bandspec::enclose(model, n, cfg.tolerances.horizon.value_or(default_horizon(n)),
                                    cfg.tolerances.tail_check);
    });
    std::vector<double> d_n, lambda;
    Index violations = 0, stable = 0, uncertified = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const double l = ev.lambda[i];
        const bool contained =
            r.lower <= l + containment_slack(l) && l <= r.upper + containment_slack(l);
        if (ev.stable[i]) {
            ++stable;
            if (!contained) {
                ++violations;
                if (violations == 1) {
                    ctx.violations.push_back("enclose: lambda_n = " + format_number(l) +
                                             " outside [" + format_number(r.lower) + ", " +
                                             format_number(r.upper) + "] at n = " +
                                             std::to_string(r.n));
                }
            }
        }
        if (!r.tail_certified) ++uncertified;
        d_n.push_back(model.d(r.n));
        lambda.push_back(l);
        t.add_row({format_number(r.n), format_number(d_n.back()), format_number(r.lower),
                   format_number(r.upper), format_number(r.arg_lower), format_number(r.arg_upper),
                   format_flag(r.tail_certified), format_number(l), format_flag(ev.stable[i]),
                   format_flag(contained)});
    }
    ctx.files["enclose.csv"] = to_csv(t);
    if (with_plot && rows.size() >= 2) {
        ctx.files["enclosure.svg"] = enclosure_plot_svg(
            rows, d_n, lambda, "Min-max enclosure of lambda_n around d(n), " + model.label());
    }
    ctx.summary.push_back("enclosure d_n^- <= lambda_n <= d_n^+ on n = " + std::to_string(first) +
                          ".." + std::to_string(last) + ": " + std::to_string(stable) +
                          " stable indices, " + std::to_string(violations) + " violations, " +
                          std::to_string(uncertified) + " lower ends without tail certification");
}

inline void certify(CommandContext& ctx) {
    const auto& cfg = ctx.config;
    const BandModel model = cfg.require_model().build();
    const Index order = cfg.require_order();
    const TauPolicy tau = cfg.tau_policy();
    const Index first = cfg.run.n_first, last = cfg.require_n_last();
    const auto ev = stable_eigenvalues(model, {first, last}, order, cfg.tolerances.stability_rel,
                                       ctx.threads);

    const std::size_t count = static_cast<std::size_t>(last - first + 1);
    std::vector<std::optional<CertificateResult>> results(count);
    std::vector<std::string> failure(count);
    parallel_for(count, ctx.threads, [&](std::size_t i) {
        try {
            results[i] = bandspec::certify(model, first + static_cast<Index>(i), tau);
        } catch (const PreconditionError& e) {
            failure[i] = e.what();
        } catch (const InapplicableError& e) {
            failure[i] = e.what();
        }
    });
    // Empirical n_1: certificate applicable with hypotheses verified from here through `last`.
    std::optional<Index> n1;
    for (std::size_t i = count; i-- > 0;) {
        if (!results[i] || !results[i]->hypotheses_hold) break;
        n1 = first + static_cast<Index>(i);
    }

    CsvTable t{{"n", "tau_n", "d_n", "rho_sup", "bound", "arg_sup", "lambda_n", "abs_residual",
                "stable", "applicable", "hypotheses_hold", "checked", "contained"},
               {}};
    Index violations = 0, checked_count = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const Index n = first + static_cast<Index>(i);
        const double l = ev.lambda[i], dn = model.d(n), residual = std::abs(l - dn);
        const auto& r = results[i];
        const bool checked = r && n1 && n >= *n1 && ev.stable[i];
        const bool contained = r && residual <= r->bound + containment_slack(l);
        if (checked) {
            ++checked_count;
            if (!contained) {
                ++violations;
                if (violations == 1) {
                    ctx.violations.push_back("certify: |lambda_n - d(n)| = " + format_number(residual) +
                                             " exceeds bound " + format_number(r->bound) +
                                             " at n = " + std::to_string(n));
                }
            }
        }
        const double nan = std::numeric_limits<double>::quiet_NaN();
        t.add_row({format_number(n), r ? format_number(r->tau_n) : "", format_number(dn),
                   format_number(r ? r->rho_sup : nan), format_number(r ? r->bound : nan),
                   r ? format_number(r->arg_sup) : "", format_number(l), format_number(residual),
                   format_flag(ev.stable[i]), format_flag(r.has_value()),
                   format_flag(r && r->hypotheses_hold), format_flag(checked),
                   format_flag(contained)});
    }
    ctx.files["certify.csv"] = to_csv(t);

    CsvTable h{{"n_first", "n_last", "tau_policy", "empirical_n1", "monotone_from", "gap_from",
                "checked", "violations"},
               {}};
    auto opt = [](const std::optional<Index>& v) { return v ? format_number(*v) : std::string(); };
    std::optional<Index> monotone_from, gap_from;
    Index h_first = first;
    while (h_first <= last && !results[static_cast<std::size_t>(h_first - first)]) ++h_first;
    if (h_first <= last) {
        try {
            const auto rep = check_gap_hypotheses(model, tau, h_first, last);
            monotone_from = rep.monotone_from;
            gap_from = rep.gap_from;
        } catch (const PreconditionError&) {
        }
    }
    h.add_row({format_number(first), format_number(last), tau.describe(), opt(n1),
               opt(monotone_from), opt(gap_from), format_number(checked_count),
               format_number(violations)});
    ctx.files["certify_summary.csv"] = to_csv(h);
    ctx.summary.push_back("certificate |lambda_n - d(n)| <= 15 m^3 sup rho_n with tau_n = " +
                          tau.describe() + ": empirical n1 = " + (n1 ? std::to_string(*n1) : "none") +
                          ", " + std::to_string(checked_count) + " indices checked, " +
                          std::to_string(violations) + " violations");
}

/// With `use_config_order` false the section order is always the lab order,
/// leaving run.N to size the eigenvalue runs of `report`.
inline void conjugate(CommandContext& ctx, std::vector<Index> n_values, bool use_config_order = true) {
    const auto& cfg = ctx.config;
    const BandModel model = cfg.require_model().build();
    const TauPolicy tau = cfg.tau_policy();
    const CutoffFunction chi = cfg.cutoff();
    if (n_values.empty()) throw ConfigError("missing required key run.n_values");
    CsvTable t{{"n", "N", "tau_n", "commutator_residual", "conj_error", "conj_error_bound",
                "comm_norm", "comm_bound", "lambda_n_split", "d_n", "norm_a", "spectrum_deviation",
                "offdiag_mass_a", "offdiag_mass_b"},
               {}};
    for (Index n : n_values) {
        const Index order = use_config_order ? cfg.run.order.value_or(lab_order(model, n, tau))
                                             : lab_order(model, n, tau);
        const ConjugationReport r = conjugation_report(model, n, tau, chi, order);
        if (!r.conjugation_bound_holds()) {
            ctx.violations.push_back("conjugate: ||B_n - (D + Ã_n)|| = " + format_number(r.conj_error) +
                                     " exceeds " + format_number(r.conj_error_bound) + " at n = " +
                                     std::to_string(n));
        }
        if (!r.commutator_bound_holds()) {
            ctx.violations.push_back("conjugate: ||[A_n, P_n]|| = " + format_number(r.comm_norm) +
                                     " exceeds " + format_number(r.comm_bound) + " at n = " +
                                     std::to_string(n));
        }
        t.add_row({format_number(r.n), format_number(r.order), format_number(r.tau_n),
                   format_number(r.commutator_residual), format_number(r.conj_error),
                   format_number(r.conj_error_bound), format_number(r.comm_norm), format_number(r.comm_bound),
                   format_number(r.lambda_n_of_split), format_number(r.d_n), format_number(r.norm_a),
                   format_number(r.spectrum_deviation), format_number(r.offdiag_mass_a),
                   format_number(r.offdiag_mass_b)});
        ctx.summary.push_back("conjugation at n = " + std::to_string(n) + " (N = " +
                              std::to_string(order) + "): ||B_n - (D + Ã_n)|| = " +
                              format_number(r.conj_error) + " <= " + format_number(r.conj_error_bound) +
                              ", ||[A_n, P_n]|| = " + format_number(r.comm_norm) + " <= " +
                              format_number(r.comm_bound));
    }
    ctx.files["conjugate.csv"] = to_csv(t);
}

inline void rate(CommandContext& ctx) {
    const auto& cfg = ctx.config;
    const ModelConfig& mc = cfg.require_model();
    const BandModel model = mc.build();
    const Index order = cfg.require_order();
    const Index first = cfg.run.n_first, last = cfg.require_n_last();
    const Index fit_first = cfg.run.fit_first.value_or(first);
    const Index fit_last = cfg.run.fit_last.value_or(last);
    const double slack = cfg.tolerances.rate_slack, floor = cfg.tolerances.residual_floor;

    const ResidualSeries series =
        residual_series(model, first, last, order, cfg.tolerances.stability_rel, ctx.threads);
    CsvTable res{{"n", "lambda_n", "d_n", "residual", "stable"}, {}};
    for (const auto& e : series.entries) {
        res.add_row({format_number(e.n), format_number(e.lambda_n), format_number(e.d_n),
                     format_number(e.residual), format_flag(e.stable)});
    }
    ctx.files["residual.csv"] = to_csv(res);

    const Magnitude magnitude = mc.is_special() ? Magnitude::relative : Magnitude::absolute;
    const FitKind kind = mc.is_special() ? family_fit_kind(mc.special.kind) : FitKind::pure_power;
    std::optional<RateVerdict> verdict;
    if (mc.is_power_like() && mc.power.kappa() > 0.0) {
        verdict = verify_power_rate(mc.power, series, fit_first, fit_last, slack);
    } else if (mc.is_special()) {
        verdict = verify_family_rate(mc.special, series, fit_first, fit_last, slack);
    }
    std::optional<RateFit> fit;
    if (verdict) fit = verdict->fit;
    else if (!usable_points(series, fit_first, fit_last, magnitude, floor).first.empty()) {
        fit = fit_rate(series, fit_first, fit_last, kind, magnitude, floor);
    }

    // Second-order perturbation estimate, fitted the same way as a cross-check.
    std::optional<RateFit> oracle_fit;
    if (mc.is_power_like() || mc.is_special()) {
        ResidualSeries oracle = series;
        for (auto& e : oracle.entries) {
            e.residual = perturbation_oracle(model, e.n);
            e.lambda_n = e.d_n + e.residual;
            e.stable = true;
        }
        if (usable_points(oracle, fit_first, fit_last, magnitude, floor).first.size() >=
            static_cast<std::size_t>(kMinFitPoints)) {
            oracle_fit = fit_rate(oracle, fit_first, fit_last, kind, magnitude, floor);
        }
    }

    CsvTable f{{"quantity", "magnitude", "fit_kind", "window_first", "window_last", "exponent",
                "log_exponent", "log_constant", "r_squared", "used", "excluded",
                "predicted_exponent", "pass"},
               {}};
    const std::string mag = magnitude == Magnitude::absolute ? "absolute" : "relative";
    auto add_fit = [&](const std::string& quantity, const std::optional<RateFit>& x) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        f.add_row({quantity, mag, to_string(kind), format_number(fit_first), format_number(fit_last),
                   format_number(x ? x->exponent : nan), format_number(x ? x->log_exponent : nan),
                   format_number(x ? x->log_constant : nan), format_number(x ? x->r_squared : nan),
                   format_number(x ? x->used_count : Index{0}),
                   format_number(x ? x->excluded_count : Index{0}),
                   format_number(verdict ? verdict->predicted_exponent : nan),
                   quantity == "residual" && verdict ? format_flag(verdict->pass) : ""});
    };
    add_fit("residual", fit);
    add_fit("oracle", oracle_fit);
    ctx.files["rate_fit.csv"] = to_csv(f);

    if (fit || verdict) {
        std::optional<double> predicted;
        if (verdict) predicted.emplace(verdict->predicted_exponent);
        try {
            ctx.files["residual.svg"] = residual_plot_svg(
                series, magnitude, fit, predicted,
                "Residual decay of lambda_n - d(n), " + series.model_label);
        } catch (const PreconditionError&) {
            // fewer than two plottable residuals: nothing to draw
        }
    }
    if (verdict && !verdict->pass) {
        ctx.violations.push_back("rate: fitted exponent " + format_number(verdict->fit->exponent) +
                                 " exceeds predicted " + verdict->predicted + " + slack " +
                                 format_number(slack));
    }
    std::string line = "residual rate over n = " + std::to_string(fit_first) + ".." +
                       std::to_string(fit_last) + ": ";
    line += fit ? "fitted exponent " + format_number(fit->exponent) : std::string("no fit (residuals below floor)");
    if (verdict) line += ", predicted " + verdict->predicted + ", " + (verdict->pass ? "pass" : "FAIL");
    if (oracle_fit) line += ", perturbation estimate exponent " + format_number(oracle_fit->exponent);
    ctx.summary.push_back(line);
}

inline void gram_singular(CommandContext& ctx) {
    const auto& cfg = ctx.config;
    const Index order = cfg.run.gram_order;
    const double bound = cfg.run.gram_entry_bound;
    std::mt19937_64 rng(cfg.run.seed);
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> sub, diag, super;
    for (Index i = 0; i <= order; ++i) {
        sub.push_back(dist(rng));
        diag.push_back(dist(rng));
        super.push_back(dist(rng));
    }
    const GramJacobi j = gram_of_jacobi(EntrySequence::table(sub, "sub"),
                                        EntrySequence::table(diag, "diag"),
                                        EntrySequence::table(super, "super"),
                                        std::min<Index>(order, 50));
    const auto via_gram = singular_values_via_gram(j, order);
    const auto oracle = singular_values_dense_oracle(j, order);
    const double scale = std::max(1.0, oracle.back());
    CsvTable t{{"k", "sigma_gram", "sigma_oracle", "abs_diff"}, {}};
    double worst = 0.0;
    for (std::size_t k = 0; k < via_gram.size(); ++k) {
        const double diff = std::abs(via_gram[k] - oracle[k]);
        worst = std::max(worst, diff);
        t.add_row({format_number(static_cast<Index>(k + 1)), format_number(via_gram[k]),
                   format_number(oracle[k]), format_number(diff)});
    }
    ctx.files["gram_singular.csv"] = to_csv(t);
    if (!(worst <= 1e-8 * scale)) {
        ctx.violations.push_back("gram-singular: singular values differ from the dense oracle by " +
                                 format_number(worst));
    }
    ctx.summary.push_back("singular values of J_N (N = " + std::to_string(order) +
                          ") from the pentadiagonal J^T J: max deviation from dense oracle " +
                          format_number(worst));
}

inline void report(CommandContext& ctx) {
    const auto& cfg = ctx.config;
    const BandModel model = cfg.require_model().build();
    const Index last = cfg.require_n_last();
    enclose(ctx, true);
    certify(ctx);
    rate(ctx);
    std::vector<Index> n_values = cfg.run.n_values;
    if (n_values.empty()) {
        const TauPolicy tau = cfg.tau_policy();
        for (Index n : {Index{40}, Index{100}, Index{200}}) {
            if (n <= last && n - 2 * tau(n) >= 1) n_values.push_back(n);
        }
    }
    if (!n_values.empty()) conjugate(ctx, n_values, false);
    std::string text = "model: " + model.label() + " (bandwidth " +
                       std::to_string(model.bandwidth()) + ")\n";
    for (const auto& line : ctx.summary) text += "- " + line + "\n";
    ctx.files["summary.txt"] = text;
}

}  // namespace commands

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"eigs", "enclose", "certify", "conjugate",
                                                "rate", "gram-singular", "report"};
    return names;
}

/// Runs one command and returns the produced files; violations are collected
/// in the context rather than thrown so the CSVs are still written.
inline void run_command(const std::string& name, CommandContext& ctx) {
    if (name == "eigs") commands::eigs(ctx);
    else if (name == "enclose") commands::enclose(ctx, true);
    else if (name == "certify") commands::certify(ctx);
    else if (name == "conjugate") commands::conjugate(ctx, ctx.config.run.n_values);
    else if (name == "rate") commands::rate(ctx);
    else if (name == "gram-singular") commands::gram_singular(ctx);
    else if (name == "report") commands::report(ctx);
    else throw ConfigError("unknown command '" + name + "'");
}

inline std::filesystem::path default_output_dir() {
    if (const char* env = std::getenv(kOutputDirVariable); env && *env) return env;
    return ".";
}

inline int exit_code_for(const std::exception_ptr& e) {
    try {
        std::rethrow_exception(e);
    } catch (const ConfigError&) {
        return 1;
    } catch (const PreconditionError&) {
        return 1;
    } catch (const PropertyViolation&) {
        return 3;
    } catch (...) {
        return 2;
    }
}

inline int cli_main(int argc, char** argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
    CLI::App app{"Spectral asymptotics of banded self-adjoint matrices"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    bool force = false;
    unsigned threads = 1;
    for (const auto& name : command_names()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "run configuration file")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_flag("--force", force, "ignore cached results");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 256u));
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        const RunConfig cfg = load_run_config(config_path);
        if (cfg.run.command && *cfg.run.command != command) {
            throw ConfigError("key run.command = '" + *cfg.run.command +
                              "' does not match subcommand '" + command + "'");
        }
        const std::filesystem::path dir =
            !out_dir.empty() ? std::filesystem::path(out_dir)
                             : cfg.run.out ? std::filesystem::path(*cfg.run.out) : default_output_dir();
        const std::string key =
            sha256_hex(std::string(kCacheFormat) + "\n" + command + "\n" + cfg.canonical());
        const ResultCache cache(dir / ".cache");

        std::optional<ArtifactFiles> files;
        if (!force) files = cache.load(key);
        const bool hit = files.has_value();
        CommandContext ctx{cfg, threads, {}, {}, {}};
        if (!hit) {
            run_command(command, ctx);
            files = ctx.files;
        }
        for (const auto& [name, content] : *files) write_file_atomic(dir / name, content);
        out << command << ": " << (hit ? "cached " : "") << "results in " << dir.string()
            << " (config " << key.substr(0, 12) << ")\n";
        for (const auto& line : ctx.summary) out << "  " << line << "\n";
        for (const auto& [name, content] : *files) out << "  wrote " << name << "\n";
        if (!ctx.violations.empty()) {
            for (const auto& v : ctx.violations) err << "bandspec " << v << "\n";
            return 3;
        }
        if (!hit) cache.store(key, *files);
        return 0;
    } catch (const std::exception& e) {
        err << "bandspec " << command << ": " << e.what() << "\n";
        return exit_code_for(std::current_exception());
    }
}

}  // namespace bandspec
