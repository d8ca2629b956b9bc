#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fpg/core_types.hpp"
#include "fpg/simulator.hpp"

namespace fpg::cli {

inline constexpr int schema_version = 1;
inline constexpr const char* tool_version = "1.0.0";

enum class Mode { nash, mfg, best_response, simulate, classify, convergence };
enum class Emit { csv, json, both };

struct PathSpec {
    std::string label;
    double lambda = 1.0, beta = 0.0, kappa = 0.0;
};

struct Scenario {
    std::string name;
    Mode mode = Mode::nash;
    double kappa = 0.0;
    std::vector<AgentType> agents;
    std::optional<TypeDistribution> distribution;

    double horizon = 1.0;
    std::size_t grid_points = 11;
    std::uint64_t seed = 1;
    std::size_t mc_samples = 100000;

    // simulate
    std::size_t paths = 20000;
    double dt = 0.002;
    bool antithetic = false;
    std::size_t checkpoints = 4;
    std::vector<Perturbation> perturbations;
    std::size_t n_common = 64, n_idio = 4096;

    // best_response: which agent responds to the others' equilibrium play
    std::size_t player = 0;

    // classify
    std::vector<PathSpec> classify_paths;

    // convergence
    std::vector<std::size_t> ns;
    std::size_t replications = 32;
};

// Throws ConfigError with the offending key.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::filesystem::path& file);

struct RunOptions {
    std::filesystem::path out = ".";
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::optional<std::size_t> paths;
    std::optional<double> dt;
    Emit emit = Emit::both;
};

// Runs one scenario and writes its artifacts; returns the process exit code
// (0 ok, 1 config, 2 degenerate market, 3 numerical failure). Messages go to err.
int run(const std::filesystem::path& scenario_file, const RunOptions& opt, std::ostream& err);
int run(const Scenario& s, const RunOptions& opt, std::ostream& err);

// Shortest decimal that round-trips.
std::string format_number(double v);

// Fields containing a comma, quote or newline are quoted.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    CsvWriter& row();
    CsvWriter& cell(double v);
    CsvWriter& cell(const std::string& v);
    CsvWriter& cell(std::size_t v);
    std::string str() const;

private:
    std::size_t columns_;
    std::string text_;
    std::size_t in_row_ = 0;
};

}  // namespace fpg::cli
