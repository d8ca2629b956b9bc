#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fpg/cli.hpp"
#include "fpg/errors.hpp"

using namespace fpg;
using namespace fpg::cli;
namespace fs = std::filesystem;

namespace {

const fs::path scenarios = FPG_SCENARIO_DIR;

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / "fpg_cli_test" / name;
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Minimal reader for what CsvWriter produces.
std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> row{""};
        bool quoted = false;
        for (std::size_t k = 0; k < line.size(); ++k) {
            const char ch = line[k];
            if (quoted) {
                if (ch == '"' && k + 1 < line.size() && line[k + 1] == '"') {
                    row.back() += '"';
                    ++k;
                } else if (ch == '"') {
                    quoted = false;
                } else {
                    row.back() += ch;
                }
            } else if (ch == '"') {
                quoted = true;
            } else if (ch == ',') {
                row.emplace_back();
            } else {
                row.back() += ch;
            }
        }
        rows.push_back(row);
    }
    return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t k = 0; k < header.size(); ++k)
        if (header[k] == name) return k;
    ADD_FAILURE() << "no column " << name;
    return 0;
}

int run_quiet(const fs::path& file, RunOptions opt) {
    std::ostringstream err;
    return run(file, opt, err);
}

int run_text(const std::string& json, const fs::path& out) {
    const fs::path file = out.parent_path() / (out.filename().string() + ".json");
    fs::create_directories(out.parent_path());
    std::ofstream(file) << json;
    RunOptions opt;
    opt.out = out;
    return run_quiet(file, opt);
}

std::vector<fs::path> files_in(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path().filename());
    std::sort(out.begin(), out.end());
    return out;
}

void expect_same_tree(const fs::path& a, const fs::path& b) {
    const auto fa = files_in(a), fb = files_in(b);
    ASSERT_EQ(fa, fb);
    for (const auto& f : fa) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

const std::string het_agents = R"("agents": [
    {"delta": 2.0, "theta": 0.5, "epsilon": 1.5, "mu": 0.10, "nu": 0.2, "sigma": 0.30},
    {"delta": 0.5, "theta": 0.8, "epsilon": 0.7, "mu": 0.15, "nu": 0.1, "sigma": 0.25}])";

}  // namespace

TEST(ParseScenario, RejectsMalformedInput) {
    EXPECT_THROW(parse_scenario("{"), ConfigError);
    EXPECT_THROW(parse_scenario(R"({"schema_version": 2, "mode": "nash"})"), ConfigError);
    EXPECT_THROW(parse_scenario(R"({"schema_version": 1, "mode": "nash", "kapa": 2})"), ConfigError);
    EXPECT_THROW(parse_scenario(R"({"schema_version": 1, "kappa": 2, )" + het_agents + "}"), ConfigError);
    EXPECT_THROW(parse_scenario(R"({"schema_version": 1, "mode": "walk", )" + het_agents + "}"), ConfigError);
    EXPECT_THROW(parse_scenario(R"({"schema_version": 1, "mode": "mfg"})"), ConfigError);
    EXPECT_THROW(parse_scenario(R"({"schema_version": 1, "mode": "nash", "agents": [{"delta": -1, "mu": 0.1}, {"delta": 1, "mu": 0.1}]})"),
                 ConfigError);
    EXPECT_THROW(parse_scenario(R"({"schema_version": 1, "mode": "nash", "agents": [{"delta": 1}]})"), ConfigError);
    EXPECT_THROW(parse_scenario(R"({"schema_version": 1, "mode": "nash", "kappa": "two", )" + het_agents + "}"),
                 ConfigError);
}

TEST(ParseScenario, ErrorNamesTheKey) {
    try {
        parse_scenario(R"({"schema_version": 1, "mode": "nash", "kapa": 2})");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("kapa"), std::string::npos);
    }
}

TEST(ParseScenario, BundledScenariosParse) {
    for (const auto& e : fs::directory_iterator(scenarios))
        EXPECT_NO_THROW(load_scenario(e.path())) << e.path();
}

TEST(Run, MertonScenarioPiColumn) {
    const auto out = scratch("merton");
    RunOptions opt;
    opt.out = out;
    ASSERT_EQ(run_quiet(scenarios / "merton_theta0.json", opt), 0);
    const auto s = load_scenario(scenarios / "merton_theta0.json");
    const auto rows = read_csv(out / "equilibrium.csv");
    ASSERT_EQ(rows.size(), s.agents.size() + 1);
    const std::size_t c = column(rows[0], "pi");
    for (std::size_t i = 0; i < s.agents.size(); ++i) {
        const auto& a = s.agents[i];
        const double expect = a.mu * a.delta / (a.sigma * a.sigma);
        EXPECT_NEAR(std::stod(rows[i + 1][c]), expect, 1e-14 * expect);
    }
}

TEST(Run, TableSweepRegimes) {
    const auto out = scratch("table1");
    RunOptions opt;
    opt.out = out;
    ASSERT_EQ(run_quiet(scenarios / "table1_sweep.json", opt), 0);
    const auto rows = read_csv(out / "equilibrium.csv");
    // cell, admissible, strong, behaviour
    const std::vector<std::vector<std::string>> expect = {
        {"kappa>1,beta>0,lambda>beta", "yes", "yes", "decreasing to 1"},
        {"kappa>1,beta>0,lambda<beta", "yes", "yes", "increasing to 1"},
        {"kappa>1,beta>0,lambda=beta", "yes", "yes", "constant 1"},
        {"kappa>1,beta=0", "yes", "yes", "decreasing to 0"},
        {"kappa>1,beta<0", "yes", "yes", "decreasing to 0"},
        {"kappa<1,beta>0,lambda>beta", "yes", "no", "finite-time blow-up at 0.693147"},
        {"kappa<1,beta>0,lambda<beta", "yes", "yes", "decreasing to 0"},
        {"kappa<1,beta>0,lambda=beta", "yes", "no", "constant 1"},
        {"kappa<1,beta=0", "no", "no", "finite-time blow-up at 1"},
        {"kappa<1,beta<0", "yes", "yes", "finite-time blow-up at 0.81093"},
        {"kappa=1", "yes", "yes", "constant 1.3"},
    };
    ASSERT_EQ(rows.size(), expect.size() + 1);
    const std::size_t c0 = column(rows[0], "cell");
    for (std::size_t k = 0; k < expect.size(); ++k) {
        ASSERT_EQ(rows[k + 1].size(), rows[0].size());
        for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(rows[k + 1][c0 + j], expect[k][j]) << k;
    }
    // curves stop at the blow-up time
    for (const auto& r : read_csv(out / "consumption_curves.csv"))
        if (r[0] == "k<1 b>0 l>b") EXPECT_LT(std::stod(r[1]), std::log(2.0));
}

TEST(Run, SameSeedIsByteIdentical) {
    for (const char* name : {"nash_het3.json", "mfg_sampler.json", "table1_sweep.json"}) {
        const auto a = scratch(std::string("rep_a_") + name), b = scratch(std::string("rep_b_") + name);
        RunOptions opt;
        opt.out = a;
        ASSERT_EQ(run_quiet(scenarios / name, opt), 0);
        opt.out = b;
        ASSERT_EQ(run_quiet(scenarios / name, opt), 0);
        expect_same_tree(a, b);
    }
}

TEST(Run, ThreadCountDoesNotChangeResults) {
    const auto a = scratch("thr1"), b = scratch("thr4");
    RunOptions opt;
    opt.paths = 2000;
    opt.dt = 0.01;
    opt.threads = 1;
    opt.out = a;
    ASSERT_EQ(run_quiet(scenarios / "simulate_small.json", opt), 0);
    opt.threads = 4;
    opt.out = b;
    ASSERT_EQ(run_quiet(scenarios / "simulate_small.json", opt), 0);
    expect_same_tree(a, b);
}

TEST(Run, SeedOverrideChangesSimulation) {
    const auto a = scratch("seed_a"), b = scratch("seed_b");
    RunOptions opt;
    opt.paths = 500;
    opt.dt = 0.01;
    opt.out = a;
    ASSERT_EQ(run_quiet(scenarios / "simulate_small.json", opt), 0);
    opt.seed = 99;
    opt.out = b;
    ASSERT_EQ(run_quiet(scenarios / "simulate_small.json", opt), 0);
    EXPECT_NE(slurp(a / "drift.csv"), slurp(b / "drift.csv"));
    EXPECT_NE(slurp(b / "manifest.json").find("\"seed\": 99"), std::string::npos);
}

TEST(Run, EmitJsonWritesNoCsv) {
    const auto out = scratch("json_only");
    RunOptions opt;
    opt.out = out;
    opt.emit = Emit::json;
    ASSERT_EQ(run_quiet(scenarios / "nash_het3.json", opt), 0);
    for (const auto& f : files_in(out)) EXPECT_NE(f.extension(), ".csv") << f;
    EXPECT_TRUE(fs::exists(out / "diagnostics.json"));
    EXPECT_TRUE(fs::exists(out / "manifest.json"));
}

TEST(Run, ExitCodes) {
    const auto base = scratch("codes");
    EXPECT_EQ(run_text(R"({"schema_version": 1, "mode": "nash", "kapa": 2})", base / "config"), 1);
    RunOptions opt;
    opt.out = base / "missing";
    EXPECT_EQ(run_quiet(base / "does_not_exist.json", opt), 1);
    // psi^sigma = Theta = 1 without idiosyncratic noise
    EXPECT_EQ(run_text(R"({"schema_version": 1, "mode": "nash", "kappa": 2, "agents": [
        {"delta": 3.0, "theta": 1.0, "mu": 0.1, "sigma": 0.3},
        {"delta": 2.0, "theta": 0.5, "mu": 0.1, "sigma": 0.3}]})",
                       base / "degenerate"),
              2);
    EXPECT_FALSE(fs::exists(base / "degenerate" / "equilibrium.csv"));
    EXPECT_EQ(run_text(R"({"schema_version": 1, "mode": "nash", "kappa": 2, )" + het_agents + "}", base / "ok"), 0);
}

TEST(Binary, UsageErrors) {
    const std::string bin = FPG_BINARY;
    const auto quiet = " >/dev/null 2>&1";
    auto code = [](int status) { return WIFEXITED(status) ? WEXITSTATUS(status) : -1; };
    EXPECT_EQ(code(std::system((bin + quiet).c_str())), 1);
    EXPECT_EQ(code(std::system((bin + " --scenario x.json --frobnicate" + quiet).c_str())), 1);
    EXPECT_EQ(code(std::system((bin + " --scenario x.json --emit xml" + quiet).c_str())), 1);
    const auto out = scratch("binary");
    EXPECT_EQ(code(std::system(
                  (bin + " --scenario " + (scenarios / "merton_theta0.json").string() + " --out " + out.string() + quiet)
                      .c_str())),
              0);
    EXPECT_TRUE(fs::exists(out / "equilibrium.csv"));
}

TEST(FormatNumber, ShortestRoundTrip) {
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(2.0), "2");
    EXPECT_EQ(format_number(-1.5e-300), "-1.5e-300");
    EXPECT_EQ(format_number(INFINITY), "inf");
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-30.0, 30.0);
    for (int k = 0; k < 10000; ++k) {
        const double v = std::ldexp(u(rng), static_cast<int>(u(rng)));
        EXPECT_EQ(std::stod(format_number(v)), v);
    }
}

TEST(CsvWriter, QuotesAndShape) {
    CsvWriter w({"a", "b"});
    w.row().cell("x,y").cell(std::string("say \"hi\""));
    w.row().cell(1.25).cell(std::size_t{3});
    EXPECT_EQ(w.str(), "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n1.25,3\n");
    EXPECT_THROW(w.row().cell(1.0).row(), Error);
}
