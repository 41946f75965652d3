#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "bandspec/cli.hpp"

using namespace bandspec;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() /
                ("bandspec_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                 "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

fs::path write_config(const fs::path& dir, const std::string& text) {
    const auto p = dir / "run.cfg";
    std::ofstream(p) << text;
    return p;
}

struct Outcome {
    int code;
    std::string out, err;
};

Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "bandspec");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(read_file(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST(ConfigParser, SectionsCommentsAndCanonicalForm) {
    const auto raw = parse_config_text("# header\n[run]\nN = 10   # size\n\n[model]\npreset=M1\n");
    EXPECT_EQ(raw.at("run").at("N"), "10");
    EXPECT_EQ(canonical_text(raw), "[model]\npreset = M1\n[run]\nN = 10\n");
    const auto again = parse_config_text("[model]\n  preset =   M1\n[run]\nN=10");
    EXPECT_EQ(canonical_text(raw), canonical_text(again));
}

TEST(ConfigParser, Errors) {
    EXPECT_THROW(parse_config_text("[model]\nbogus = 1\n"), ConfigError);
    EXPECT_THROW(parse_config_text("[nope]\n"), ConfigError);
    EXPECT_THROW(parse_config_text("N = 3\n"), ConfigError);
    EXPECT_THROW(parse_config_text("[run]\nN = 3\nN = 4\n"), ConfigError);
    EXPECT_THROW(parse_config_text("[run]\njust text\n"), ConfigError);
    try {
        parse_config_text("[run]\n\nsize = 3\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("size"), std::string::npos);
    }
}

TEST(RunConfig, PresetsBuildModels) {
    const auto cfg = make_run_config(parse_config_text("[model]\npreset = M3\n"));
    const auto model = cfg.require_model().build();
    EXPECT_EQ(model.bandwidth(), 2);
    EXPECT_DOUBLE_EQ(model.d(4), 8.0);
    EXPECT_DOUBLE_EQ(model.a(2, 4), 1.0);
    const auto s1 = make_run_config(parse_config_text("[model]\npreset = S1\n")).require_model().build();
    EXPECT_NEAR(s1.d(4), std::exp(2.0), 1e-12);
    const auto over = make_run_config(parse_config_text("[model]\npreset = M1\nc0 = 2\n"));
    EXPECT_DOUBLE_EQ(over.require_model().build().d(3), 18.0);
}

TEST(RunConfig, ValueAndSchemaErrors) {
    auto bad = [](const std::string& text) { return make_run_config(parse_config_text(text)); };
    EXPECT_THROW(bad("[model]\nfamily = power_like\ndelta0 = 2\n"), ConfigError);  // no offdiag
    EXPECT_THROW(bad("[model]\npreset = M9\n"), ConfigError);
    EXPECT_THROW(bad("[model]\npreset = M1\ntheta = 0.5\n"), ConfigError);
    EXPECT_THROW(bad("[run]\nN = ten\n"), ConfigError);
    EXPECT_THROW(bad("[run]\ntau = whatever\n"), ConfigError);
    EXPECT_THROW(bad("[run]\nn_first = 5\nn_last = 2\n"), ConfigError);
    EXPECT_THROW(bad("[tolerances]\nstability_rel = -1\n"), ConfigError);
    EXPECT_THROW(bad("[model]\nfamily = power_like\ndelta0 = 2\noffdiag_coeffs = 1\n"
                     "offdiag_exponents = 0.5\ndelta = 0.1\n"), ConfigError);
    try {
        (void)bad("[run]\nN = 5\n").require_model();
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("family"), std::string::npos);
    }
}

TEST(RunConfig, TableFamily) {
    const auto cfg = make_run_config(parse_config_text(
        "[model]\nfamily = table\ndiagonal = 1, 4, 9\noffdiag_1 = 1, 1\noffdiag_2 = 0.5\n"));
    const auto model = cfg.require_model().build();
    EXPECT_EQ(model.bandwidth(), 2);
    EXPECT_EQ(model.d(3), 9.0);
    EXPECT_EQ(model.a(2, 1), 0.5);
    EXPECT_EQ(model.a(2, 2), 0.0);
}

TEST(Csv, FormatAndHeader) {
    CsvTable t{{"n", "x"}, {}};
    EXPECT_EQ(to_csv(t), "n,x\n");
    t.add_row({format_number(Index{3}), format_number(0.1)});
    EXPECT_EQ(to_csv(t), "n,x\n3,0.10000000000000001\n");
    EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
    EXPECT_THROW(t.add_row({"1"}), PreconditionError);
    TempDir dir;
    emit_csv(CsvTable{{"a", "b"}, {}}, dir.path() / "empty.csv");
    EXPECT_EQ(read_file(dir.path() / "empty.csv"), "a,b\n");
}

TEST(Sha256, KnownDigest) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Plot, ResidualPlotFitsSlope) {
    ResidualSeries s;
    s.model_label = "synthetic";
    for (Index n = 10; n <= 100; ++n) s.entries.push_back({n, n + 5.0 / n, double(n), 5.0 / n, true});
    const auto fit = fit_rate(s, 10, 100, FitKind::pure_power);
    EXPECT_NEAR(fit.exponent, -1.0, 1e-10);
    const auto svg = residual_plot_svg(s, Magnitude::absolute, fit, -1.0, "decay");
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("fit: slope -1"), std::string::npos);
    EXPECT_NE(svg.find("predicted slope -1"), std::string::npos);
    EXPECT_EQ(svg.find("href"), std::string::npos);
    ResidualSeries one;
    one.entries.push_back({5, 25.2, 25.0, 0.2, true});
    EXPECT_THROW(residual_plot_svg(one, Magnitude::absolute, std::nullopt, std::nullopt, "x"),
                 PreconditionError);
}

TEST(Cli, EigsOnPureDiagonal) {
    TempDir dir;
    const auto cfg = write_config(dir.path(), "[model]\nfamily = diagonal\ndelta0 = 2\n[run]\nN = 5\n");
    const auto r = run({"eigs", "--config", cfg.string(), "--out", dir.path().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = read_csv(dir.path() / "eigs.csv");
    ASSERT_EQ(rows.size(), 6u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"n", "lambda_n", "d_n"}));
    for (int n = 1; n <= 5; ++n) {
        EXPECT_EQ(std::stod(rows[n][1]), double(n * n));
        EXPECT_EQ(rows[n][1], rows[n][2]);
    }
}

TEST(Cli, MissingKeyExitsOneNamingKey) {
    TempDir dir;
    const auto cfg = write_config(dir.path(), "[model]\nfamily = diagonal\ndelta0 = 2\n");
    const auto r = run({"eigs", "--config", cfg.string(), "--out", dir.path().string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("run.N"), std::string::npos);
    EXPECT_EQ(run({"eigs", "--config", (dir.path() / "absent.cfg").string()}).code, 1);
    EXPECT_EQ(run({"frobnicate"}).code, 1);
    EXPECT_EQ(run({"eigs"}).code, 1);
}

TEST(Cli, CommandMismatchIsConfigError) {
    TempDir dir;
    const auto cfg = write_config(dir.path(), "[model]\npreset = M1\n[run]\ncommand = rate\nN = 5\n");
    EXPECT_EQ(run({"eigs", "--config", cfg.string(), "--out", dir.path().string()}).code, 1);
}

TEST(Cli, CertifyRowAtTwoHundred) {
    TempDir dir;
    const auto cfg = write_config(dir.path(), "[model]\npreset = M1\n[run]\nn_first = 190\nn_last = 200\nN = 800\n");
    const auto r = run({"certify", "--config", cfg.string(), "--out", dir.path().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = read_csv(dir.path() / "certify.csv");
    const auto& header = rows[0];
    const auto col = [&](const std::string& name) {
        return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
    };
    const auto& last = rows.back();
    EXPECT_EQ(last[col("n")], "200");
    EXPECT_EQ(std::stod(last[col("d_n")]), 40000.0);
    EXPECT_LE(std::stod(last[col("abs_residual")]), std::stod(last[col("bound")]));
    EXPECT_EQ(last[col("contained")], "yes");
    EXPECT_TRUE(fs::exists(dir.path() / "certify_summary.csv"));
}

TEST(Cli, RateResidualColumnsAndPlot) {
    TempDir dir;
    const auto cfg = write_config(dir.path(), "[model]\npreset = M1\n[run]\nn_first = 20\nn_last = 120\nN = 480\n");
    const auto r = run({"rate", "--config", cfg.string(), "--out", dir.path().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = read_csv(dir.path() / "residual.csv");
    EXPECT_EQ(rows[0], (std::vector<std::string>{"n", "lambda_n", "d_n", "residual", "stable"}));
    EXPECT_EQ(rows.size(), 102u);
    const auto svg = read_file(dir.path() / "residual.svg");
    EXPECT_NE(svg.find("predicted slope -1"), std::string::npos);
}

TEST(Cli, RerunIsByteIdenticalAndCached) {
    TempDir a, b;
    const std::string text = "[model]\npreset = M1\n[run]\nn_first = 20\nn_last = 60\nN = 240\n";
    const auto cfg = write_config(a.path(), text);
    ASSERT_EQ(run({"report", "--config", cfg.string(), "--out", a.path().string()}).code, 0);
    const auto first = read_file(a.path() / "certify.csv");
    const auto cached = run({"report", "--config", cfg.string(), "--out", a.path().string()});
    ASSERT_EQ(cached.code, 0);
    EXPECT_NE(cached.out.find("cached"), std::string::npos);
    EXPECT_EQ(read_file(a.path() / "certify.csv"), first);
    const auto fresh = run({"report", "--config", cfg.string(), "--out", b.path().string(), "--force",
                            "--threads", "3"});
    ASSERT_EQ(fresh.code, 0);
    EXPECT_EQ(fresh.out.find("cached"), std::string::npos);
    for (const char* name : {"enclose.csv", "certify.csv", "residual.csv", "rate_fit.csv"}) {
        EXPECT_EQ(read_file(a.path() / name), read_file(b.path() / name)) << name;
    }
}

TEST(Cli, PropertyViolationExitsThree) {
    TempDir dir;
    // A decreasing rate slack makes the one-sided rate check fail on purpose.
    const auto cfg = write_config(dir.path(),
                                  "[model]\npreset = M1\n[run]\nn_first = 20\nn_last = 120\nN = 480\n"
                                  "[tolerances]\nrate_slack = -2\n");
    const auto r = run({"rate", "--config", cfg.string(), "--out", dir.path().string()});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("rate"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir.path() / "residual.csv"));
}

TEST(Cli, OutputDirectoryFromEnvironment) {
    TempDir dir;
    const auto cfg = write_config(dir.path(), "[model]\nfamily = diagonal\ndelta0 = 1\n[run]\nN = 3\n");
    const auto target = dir.path() / "env_out";
    ::setenv(kOutputDirVariable, target.c_str(), 1);
    const auto r = run({"eigs", "--config", cfg.string()});
    ::unsetenv(kOutputDirVariable);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(target / "eigs.csv"));
}

TEST(Cli, GramSingular) {
    TempDir dir;
    const auto cfg = write_config(dir.path(), "[run]\nseed = 7\ngram_order = 50\n");
    const auto r = run({"gram-singular", "--config", cfg.string(), "--out", dir.path().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_csv(dir.path() / "gram_singular.csv").size(), 51u);
}

TEST(Cli, ConjugateWritesReport) {
    TempDir dir;
    const auto cfg = write_config(dir.path(), "[model]\npreset = M1\n[run]\nn_values = 40, 60\n");
    const auto r = run({"conjugate", "--config", cfg.string(), "--out", dir.path().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = read_csv(dir.path() / "conjugate.csv");
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[1][1], "68");  // N = n + 2 tau_n + 8
}
