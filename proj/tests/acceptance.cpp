// Acceptance driver: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "bandspec/bandspec.hpp"
#include "bandspec/cli.hpp"
#include "bandspec/config.hpp"

using namespace bandspec;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void run(int id, const std::string& name, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("[%s] %d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

ModelConfig preset_config(const std::string& name) {
    return make_run_config(RawConfig{{"model", {{"preset", name}}}}).require_model();
}

BandModel preset(const std::string& name) { return preset_config(name).build(); }

double slack(double lambda) { return 1e-12 * (1.0 + std::abs(lambda)); }

constexpr Index kOrder = 2000;
constexpr Index kLast = 500;

// Shared eigenvalues for criteria 2 and 3: lambda_1..lambda_500 of A_2000 with doubling flags.
const StableEigenvalues& shared_eigs(const std::string& name) {
    static std::map<std::string, StableEigenvalues> cache;
    auto it = cache.find(name);
    if (it == cache.end()) it = cache.emplace(name, stable_eigenvalues(preset(name), {1, kLast}, kOrder)).first;
    return it->second;
}

Outcome oracle_equivalence() {
    std::mt19937_64 rng(20241);
    std::uniform_int_distribution<Index> order_dist(2, 100);
    std::uniform_int_distribution<int> band_dist(1, 3);
    std::uniform_real_distribution<double> entry(-1.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const int m = band_dist(rng);
        const Index n = std::max<Index>(order_dist(rng), m + 1);
        std::vector<std::vector<double>> bands(static_cast<std::size_t>(m) + 1);
        const double scale = std::pow(10.0, entry(rng) * 3.0);
        for (int k = 0; k <= m; ++k) {
            for (Index j = 0; j < n - k; ++j) bands[static_cast<std::size_t>(k)].push_back(scale * entry(rng));
        }
        const SymmetricBandMatrix a(bands);
        const auto oracle = eigenvalues_dense_oracle(DenseSymmetricMatrix(a)).eigenvalues;
        const auto ql = eigenvalues(a).eigenvalues;
        const auto bis = eigenvalues(a, {1, n}).eigenvalues;
        const double norm = std::max(std::abs(oracle.front()), std::abs(oracle.back()));
        for (std::size_t i = 0; i < oracle.size(); ++i) {
            worst = std::max(worst, std::abs(ql[i] - oracle[i]) / norm);
            worst = std::max(worst, std::abs(bis[i] - oracle[i]) / norm);
        }
    }
    return {worst <= 1e-9, "200 random band matrices (N <= 100, m <= 3), max |dlambda|/||M|| = " +
                               fmt("%.3g", worst)};
}

Outcome enclosure_containment() {
    std::ostringstream detail;
    bool pass = true;
    for (const std::string name : {"M1", "M2", "M3"}) {
        const BandModel model = preset(name);
        const auto& ev = shared_eigs(name);
        Index checked = 0, bad = 0, uncertified = 0;
        for (Index n = 1; n <= kLast; ++n) {
            const auto i = static_cast<std::size_t>(n - 1);
            if (!ev.stable[i]) continue;
            const auto r = bandspec::enclose(model, n);
            if (!r.tail_certified) ++uncertified;
            ++checked;
            const double l = ev.lambda[i];
            if (l < r.lower - slack(l) || l > r.upper + slack(l)) ++bad;
        }
        pass = pass && bad == 0 && checked > 0;
        detail << name << " " << bad << "/" << checked << " outside";
        if (uncertified) detail << " (" << uncertified << " tails uncertified)";
        detail << "; ";
    }
    return {pass, detail.str() + "N = 2000, n = 1..500, stable n only"};
}

Outcome certificate_containment() {
    std::ostringstream detail;
    bool pass = true;
    const TauPolicy tau = TauPolicy::quarter();
    for (const std::string name : {"M1", "M2", "M3"}) {
        const BandModel model = preset(name);
        const auto& ev = shared_eigs(name);
        const auto n1 = empirical_threshold(model, tau, 4, 400);
        if (!n1) {
            pass = false;
            detail << name << " no n1; ";
            continue;
        }
        Index checked = 0, bad = 0;
        double worst_ratio = 0.0;
        for (Index n = *n1; n <= 400; ++n) {
            const auto i = static_cast<std::size_t>(n - 1);
            if (!ev.stable[i]) continue;
            const auto c = certify(model, n, tau);
            const double residual = std::abs(ev.lambda[i] - model.d(n));
            ++checked;
            if (residual > c.bound + slack(ev.lambda[i])) ++bad;
            if (c.bound > 0.0) worst_ratio = std::max(worst_ratio, residual / c.bound);
        }
        pass = pass && bad == 0 && checked > 0;
        detail << name << " n1 = " << *n1 << ", " << bad << "/" << checked
               << " outside, max residual/bound = " << fmt("%.3g", worst_ratio) << "; ";
    }
    return {pass, detail.str() + "tau = floor(n/4), N = 2000"};
}

Outcome rate_power_like() {
    std::ostringstream detail;
    bool pass = true;
    const std::vector<std::pair<std::string, double>> targets = {{"M1", -0.85}, {"M2", -0.35}};
    for (const auto& [name, threshold] : targets) {
        const BandModel model = preset(name);
        const auto params = preset_config(name).power;
        const auto series = residual_series(model, 100, 400, 1600);
        const auto verdict = verify_power_rate(params, series, 100, 400);
        const auto fit = fit_rate(series, 100, 400, FitKind::pure_power);

        // Oracle cross-check: the second-order estimate must track the computed residual.
        ResidualSeries oracle = series;
        double worst_rel = 0.0;
        for (auto& e : oracle.entries) {
            const double est = perturbation_oracle(model, e.n);
            if (e.stable) worst_rel = std::max(worst_rel, std::abs(e.residual - est) / std::abs(est));
            e.residual = est;
            e.lambda_n = e.d_n + est;
        }
        const auto oracle_fit = fit_rate(oracle, 100, 400, FitKind::pure_power);
        const bool ok = verdict.pass && fit.exponent <= threshold &&
                        std::abs(fit.exponent - oracle_fit.exponent) <= 0.1 && worst_rel <= 0.2;
        pass = pass && ok;
        detail << name << " exponent " << fmt("%.4g", fit.exponent) << " (need <= "
               << fmt("%.3g", threshold) << ", predicted " << fmt("%.3g", verdict.predicted_exponent)
               << "), oracle exponent " << fmt("%.4g", oracle_fit.exponent)
               << ", max |residual - oracle|/|oracle| = " << fmt("%.3g", worst_rel) << "; ";
    }
    return {pass, detail.str() + "n in [100, 400], N = 1600"};
}

Outcome conjugation_lab() {
    std::ostringstream detail;
    bool pass = true;
    const BandModel model = preset("M1");
    const TauPolicy tau = TauPolicy::quarter();
    const CutoffFunction chi = CutoffFunction::smoothstep();
    for (Index n : {40, 100, 200}) {
        const Index order = lab_order(model, n, tau);
        const auto r = conjugation_report(model, n, tau, chi, order);
        const double comm_rel = r.commutator_residual / (1.0 + r.norm_a);
        const double spec_rel = r.spectrum_deviation / r.norm_a;
        const bool ok = comm_rel <= 1e-12 && r.conjugation_bound_holds() &&
                        r.commutator_bound_holds() && spec_rel <= 1e-9;
        pass = pass && ok;
        detail << "n = " << n << " (N = " << order << "): residual " << fmt("%.2g", comm_rel)
               << ", ||B-(D+A~)|| " << fmt("%.3g", r.conj_error) << " <= " << fmt("%.3g", r.conj_error_bound)
               << ", ||[A,P]|| " << fmt("%.3g", r.comm_norm) << " <= " << fmt("%.3g", r.comm_bound)
               << ", spectrum " << fmt("%.2g", spec_rel) << "; ";
    }
    std::string text = detail.str();
    return {pass, text.substr(0, text.size() - 2)};
}

Outcome split_eigenvalue() {
    const BandModel model = preset("M1");
    const TauPolicy tau = TauPolicy::quarter();
    const CutoffFunction chi = CutoffFunction::smoothstep();
    const auto hyp = check_gap_hypotheses(model, tau, 4, 300);
    if (!hyp.gap_from || !hyp.monotone_from) return {false, "hypotheses never hold on [4, 300]"};
    const Index from = std::max(*hyp.gap_from, *hyp.monotone_from);
    double worst = 0.0;
    Index bad = 0;
    for (Index n = from; n <= 300; ++n) {
        const Index order = std::max(3 * n, lab_order(model, n, tau));
        const auto c = split_eigenvalue_check(model, n, tau, chi, order);
        const double rel = std::abs(c.lambda_n_split - c.d_n) / std::abs(c.d_n);
        worst = std::max(worst, rel);
        if (rel > 1e-10) ++bad;
    }
    return {bad == 0, "M1 n = " + std::to_string(from) + "..300: " + std::to_string(bad) +
                          " mismatches, max |lambda_n(D + A~_n) - d(n)|/d(n) = " + fmt("%.3g", worst)};
}

Outcome stretched_family() {
    const auto mc = preset_config("S1");
    const BandModel model = mc.build();
    // Last index with a finite diagonal entry; sections beyond it trip the overflow guard.
    Index finite = 1, infinite = 2;
    while (std::isfinite(model.d(infinite))) finite = infinite, infinite *= 2;
    while (infinite - finite > 1) {
        const Index mid = finite + (infinite - finite) / 2;
        (std::isfinite(model.d(mid)) ? finite : infinite) = mid;
    }
    const Index order = 400;
    const auto series = residual_series(model, 40, 200, order);
    const auto verdict = verify_family_rate(mc.special, series, 50, 200);
    const double e = verdict.fit ? verdict.fit->exponent : 0.0;
    const bool pass = verdict.fit && e <= -0.85;
    return {pass, "S1 relative exponent " + fmt("%.4g", e) + " (need <= -0.85, predicted " +
                      fmt("%.3g", verdict.predicted_exponent) + ") over n in [50, 200], N = 400" +
                      ", d(j) finite for j <= " + std::to_string(finite)};
}

Outcome gram_singular_values() {
    constexpr Index order = 50;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> entry(-5.0, 5.0);
    double worst = 0.0;
    bool pass = true;
    for (int trial = 0; trial < 20; ++trial) {
        auto draw = [&] {
            std::vector<double> v(order + 2);
            for (double& x : v) x = entry(rng);
            return EntrySequence::table(v);
        };
        const auto j = gram_of_jacobi(draw(), draw(), draw());
        const auto fast = singular_values_via_gram(j, order);
        const auto oracle = singular_values_dense_oracle(j, order);
        const double scale = std::max(1.0, oracle.back());
        for (std::size_t k = 0; k < fast.size(); ++k) {
            const double d = std::abs(fast[k] - oracle[k]) / scale;
            worst = std::max(worst, d);
            if (d > 1e-8) pass = false;
        }
    }
    return {pass, "20 random Jacobi matrices, N = 50, entries in [-5, 5], max |dsigma|/scale = " +
                      fmt("%.3g", worst)};
}

Outcome report_determinism() {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / ("bandspec-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path config = root / "m1.cfg";
    write_file_atomic(config,
                      "[model]\npreset = M1\n\n[run]\nn_first = 1\nn_last = 300\nN = 1200\n"
                      "n_values = 40, 100\nfit_first = 100\nfit_last = 300\n");
    std::vector<std::string> produced;
    auto run_once = [&](const std::string& dir, const std::string& threads) {
        std::vector<std::string> args = {"bandspec", "report", "--config", config.string(), "--out",
                                         (root / dir).string(), "--force", "--threads", threads};
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        std::ostringstream out, err;
        const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
        if (code != 0) throw std::runtime_error("report exited " + std::to_string(code) + ": " + err.str());
    };
    run_once("a", "1");
    run_once("b", "2");
    Index compared = 0;
    bool same = true;
    for (const auto& entry : fs::directory_iterator(root / "a")) {
        if (entry.path().extension() != ".csv") continue;
        ++compared;
        const fs::path other = root / "b" / entry.path().filename();
        if (!fs::exists(other) || read_file(entry.path()) != read_file(other)) {
            same = false;
            produced.push_back(entry.path().filename().string());
        }
    }
    fs::remove_all(root);
    std::string detail = std::to_string(compared) + " CSV files compared across two runs (1 and 2 threads)";
    if (!same) {
        detail += ", differing:";
        for (const auto& p : produced) detail += " " + p;
    }
    return {same && compared > 0, detail};
}

}  // namespace

int main() {
    run(1, "eigensolver agrees with dense oracle", oracle_equivalence);
    run(2, "enclosure contains lambda_n (M1, M2, M3)", enclosure_containment);
    run(3, "certificate contains lambda_n from empirical n1", certificate_containment);
    run(4, "power-like convergence rates", rate_power_like);
    run(5, "conjugation lab (M1)", conjugation_lab);
    run(6, "split operator keeps d(n) as n-th eigenvalue (M1)", split_eigenvalue);
    run(7, "stretched exponential relative rate (S1)", stretched_family);
    run(8, "Gram singular values match dense oracle", gram_singular_values);
    run(9, "report output is byte-identical across runs", report_determinism);
    std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
    return failures == 0 ? 0 : 1;
}
