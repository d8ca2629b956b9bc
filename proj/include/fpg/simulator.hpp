#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fpg/core_types.hpp"
#include "fpg/forward_fields.hpp"
#include "fpg/mfg_solver.hpp"
#include "fpg/nash_solver.hpp"

namespace fpg {

struct SimConfig {
    double dt = 1.0 / 500.0;
    double horizon = 1.0;
    std::size_t n_paths = 100000;
    std::size_t n_common = 64;
    std::size_t n_idio = 4096;
    std::uint64_t seed = 1;
    // Paths 2j and 2j+1 share their normals with opposite signs.
    bool antithetic = false;
    // Store every k-th time step in a PathEnsemble; 0 keeps only t = 0 and the horizon.
    std::size_t record_every = 0;
};

// Number of steps and the step actually used: horizon / ceil(horizon / dt).
std::pair<std::size_t, double> time_steps(const SimConfig& cfg);

// Constant fraction pi; consumption rate scale * c(t).
struct Strategy {
    double pi = 0.0;
    ConsumptionPath consumption;
    double consumption_scale = 1.0;
};

struct PathEnsemble {
    std::vector<double> times;
    std::size_t n_paths = 0, n_agents = 0;
    // log X, indexed [path][time][agent]
    std::vector<double> log_wealth;
    // B and W at the recorded times, [path][time] and [path][time][agent]
    std::vector<double> common;
    std::vector<double> idio;

    double log_x(std::size_t path, std::size_t time, std::size_t agent) const {
        return log_wealth[(path * times.size() + time) * n_agents + agent];
    }
};

// Exact log-scheme: per step log X advances by (pi mu - pi^2 Sigma / 2) dt
// minus the exact integral of the consumption rate over the step, plus
// pi (nu dW + sigma dB). Throws BlowUpHorizon if a rate blows up before the horizon.
PathEnsemble simulate_wealth(std::span<const AgentType> agents, std::span<const Strategy> strategies,
                             const SimConfig& cfg, Execution exec = Execution::parallel);

// X_i / (geometric mean of the others)^theta, indexed [path][time].
std::vector<double> relative_wealth(const PathEnsemble& e, std::size_t agent, double theta);

// Everything the drift test needs about an equilibrium. Agents either play
// against each other (leave-one-out benchmark), or, in the mean-field case,
// are independent representatives measured against the deterministic-given-B
// population average log Xbar_t = mf_log_bar(t) + mf_sigma_pi_bar B_t.
struct DriftSetup {
    std::vector<AgentType> agents;
    std::vector<double> pi;
    std::vector<ConsumptionPath> consumption;
    std::vector<TimeFactor> f;
    double kappa = 0.0;

    bool mean_field = false;
    RateFn mf_log_bar;
    double mf_sigma_pi_bar = 0.0;
    RateFn mf_c_tilde;
};

DriftSetup drift_setup(std::span<const AgentType> agents, const NashEquilibrium& eq);
// Representatives are the support of a discrete law.
DriftSetup drift_setup(const MfgEquilibrium& eq);

struct Perturbation {
    double d_pi = 0.0;
    double c_scale = 1.0;
    std::string label = "optimal";
};

struct DriftCheckpoint {
    double t0 = 0.0, t1 = 0.0;
    double mean = 0.0, se = 0.0;
};

struct DriftResult {
    std::size_t agent = 0;
    Perturbation perturbation;
    std::vector<DriftCheckpoint> checkpoints;

    bool zero_in_ci(double z = 1.96) const;
    bool negative_beyond(double z = 4.0) const;
};

// Drift of Q = U(Xhat_t, t) + int_0^t V(chat Xhat, s) ds over [t_k, t_k + T/K].
// Each step's V integral is replaced by its conditional mean given the start
// of the step, and the first two Ito terms of U along the path are subtracted;
// both changes have zero mean, so the estimate stays unbiased. Each agent
// deviates alone; the others keep their equilibrium strategies and all
// deviations see the same noise.
std::vector<DriftResult> q_drift_test(const DriftSetup& setup, std::span<const Perturbation> perturbations,
                                      const SimConfig& cfg, std::size_t n_checkpoints = 4,
                                      Execution exec = Execution::parallel);

struct ConsistencyReport {
    std::vector<double> times;
    double max_abs = 0.0;
    // Largest |estimate - analytic| in units of the inner standard error.
    double max_z = 0.0;
    std::size_t n_common = 0, n_idio = 0;
};

using StrategyMap = std::function<EquilibriumStrategy(const AgentType&)>;

// For each common path, averages log X_t over n_idio draws of (type, W) and
// compares with the analytic population average driven by the same B.
// Population moments of the strategy map are exact for discrete laws.
ConsistencyReport mf_consistency_test(const TypeDistribution& d, const StrategyMap& strategy,
                                      const SimConfig& cfg, std::size_t n_checkpoints = 4,
                                      Execution exec = Execution::parallel);

}  // namespace fpg
