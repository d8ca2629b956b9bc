#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fpg/cli.hpp"
#include "fpg/errors.hpp"

namespace fpg::cli {

namespace {

using nlohmann::json;

template <class T>
T get(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("bad value for '") + key + "'");
    }
}

AgentType parse_agent(const json& j) {
    if (!j.is_object()) throw ConfigError("agent entries must be objects");
    for (const char* required : {"delta", "mu"})
        if (!j.contains(required)) throw ConfigError(std::string("agent is missing '") + required + "'");
    AgentType a;
    a.x0 = get(j, "x0", 1.0);
    a.delta = get(j, "delta", a.delta);
    a.theta = get(j, "theta", 0.0);
    a.epsilon = get(j, "epsilon", 1.0);
    a.mu = get(j, "mu", a.mu);
    a.nu = get(j, "nu", 0.0);
    a.sigma = get(j, "sigma", 0.0);
    try {
        validate_agent(a);
    } catch (const DomainError& e) {
        throw ConfigError(std::string("invalid agent: ") + e.what());
    }
    return a;
}

Mode parse_mode(const std::string& m) {
    if (m == "nash") return Mode::nash;
    if (m == "mfg") return Mode::mfg;
    if (m == "best_response") return Mode::best_response;
    if (m == "simulate") return Mode::simulate;
    if (m == "classify") return Mode::classify;
    if (m == "convergence") return Mode::convergence;
    throw ConfigError("unknown mode '" + m + "'");
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
    const int version = get(j, "schema_version", -1);
    if (version != schema_version)
        throw ConfigError("unsupported schema_version " + std::to_string(version) + ", expected " +
                          std::to_string(schema_version));

    static const char* known[] = {"schema_version", "name",       "mode",       "kappa",   "agents",
                                  "distribution",   "grid",       "seed",       "mc_samples", "simulation",
                                  "player",         "paths",      "convergence"};
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError("unknown key '" + key + "'");
    }

    Scenario s;
    s.name = get<std::string>(j, "name", "scenario");
    if (!j.contains("mode")) throw ConfigError("missing 'mode'");
    s.mode = parse_mode(get<std::string>(j, "mode", ""));
    s.kappa = get(j, "kappa", 0.0);
    s.seed = get<std::uint64_t>(j, "seed", 1);
    s.mc_samples = get<std::size_t>(j, "mc_samples", s.mc_samples);
    s.player = get<std::size_t>(j, "player", 0);

    if (j.contains("agents")) {
        if (!j["agents"].is_array()) throw ConfigError("'agents' must be an array");
        for (const auto& a : j["agents"]) s.agents.push_back(parse_agent(a));
    }
    if (j.contains("distribution")) {
        const auto& d = j["distribution"];
        try {
            if (d.contains("discrete")) {
                std::vector<AgentType> types;
                std::vector<double> weights;
                for (const auto& t : d["discrete"]) {
                    types.push_back(parse_agent(t));
                    if (!t.contains("weight")) throw ConfigError("discrete type is missing 'weight'");
                    weights.push_back(t["weight"].get<double>());
                }
                s.distribution = TypeDistribution::discrete(std::move(types), std::move(weights));
            } else if (d.contains("sampler")) {
                s.distribution = type_distribution_from_json_string(d.dump());
            } else {
                throw ConfigError("'distribution' needs 'discrete' or 'sampler'");
            }
        } catch (const DomainError& e) {
            throw ConfigError(std::string("invalid distribution: ") + e.what());
        } catch (const json::exception& e) {
            throw ConfigError(std::string("invalid distribution: ") + e.what());
        }
    }
    if (j.contains("grid")) {
        s.horizon = get(j["grid"], "horizon", s.horizon);
        s.grid_points = get<std::size_t>(j["grid"], "points", s.grid_points);
    }
    if (!(s.horizon > 0.0) || s.grid_points < 2) throw ConfigError("grid needs horizon > 0 and points >= 2");

    if (j.contains("simulation")) {
        const auto& sim = j["simulation"];
        s.paths = get<std::size_t>(sim, "paths", s.paths);
        s.dt = get(sim, "dt", s.dt);
        s.antithetic = get(sim, "antithetic", s.antithetic);
        s.checkpoints = get<std::size_t>(sim, "checkpoints", s.checkpoints);
        s.n_common = get<std::size_t>(sim, "n_common", s.n_common);
        s.n_idio = get<std::size_t>(sim, "n_idio", s.n_idio);
        if (sim.contains("perturbations"))
            for (const auto& p : sim["perturbations"]) {
                Perturbation q;
                q.d_pi = get(p, "d_pi", 0.0);
                q.c_scale = get(p, "c_scale", 1.0);
                q.label = get<std::string>(p, "label", "perturbed");
                if (!(q.c_scale > 0.0)) throw ConfigError("c_scale must be positive");
                s.perturbations.push_back(q);
            }
    }
    if (j.contains("paths")) {
        for (const auto& p : j["paths"]) {
            PathSpec ps;
            ps.label = get<std::string>(p, "label", "");
            ps.lambda = get(p, "lambda", 1.0);
            ps.beta = get(p, "beta", 0.0);
            ps.kappa = get(p, "kappa", s.kappa);
            if (!(ps.lambda > 0.0)) throw ConfigError("path lambda must be positive");
            s.classify_paths.push_back(ps);
        }
    }
    if (j.contains("convergence")) {
        s.ns = get<std::vector<std::size_t>>(j["convergence"], "ns", {});
        s.replications = get<std::size_t>(j["convergence"], "replications", s.replications);
    }

    switch (s.mode) {
        case Mode::nash:
        case Mode::best_response:
            if (s.agents.size() < 2) throw ConfigError("mode needs at least two 'agents'");
            if (s.player >= s.agents.size()) throw ConfigError("'player' out of range");
            break;
        case Mode::mfg:
        case Mode::convergence:
            if (!s.distribution) throw ConfigError("mode needs a 'distribution'");
            if (s.mode == Mode::convergence && s.ns.size() < 2) throw ConfigError("'convergence.ns' needs two sizes");
            break;
        case Mode::simulate:
            if (s.agents.size() < 2 && !s.distribution)
                throw ConfigError("simulate needs 'agents' (n >= 2) or a discrete 'distribution'");
            break;
        case Mode::classify:
            if (s.classify_paths.empty()) throw ConfigError("classify needs 'paths'");
            break;
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("cannot open scenario " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

}  // namespace fpg::cli
