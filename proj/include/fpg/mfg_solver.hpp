#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fpg/core_types.hpp"

namespace fpg {

enum class Execution { serial, parallel };

struct MfgMoments {
    double psi_sigma = 0.0, phi_sigma = 0.0, psi_mu = 0.0, phi_mu = 0.0;
    double sigma_pi_bar = 0.0, mu_pi_bar = 0.0, Sigma_pi_sq_bar = 0.0;
    // exp E[delta log epsilon]
    double eps_tilde = 1.0;
    double rho_delta_bar = 0.0;
    double theta_one_minus_delta_bar = 0.0;
    double delta_bar = 0.0;
    // Monte Carlo standard errors of the four defining moments; zero for
    // discrete laws, which are summed exactly.
    double se_psi_sigma = 0.0, se_phi_sigma = 0.0, se_psi_mu = 0.0, se_phi_mu = 0.0;
    std::size_t samples = 0;
};

// Exact weighted sums for discrete laws, Monte Carlo over mc_samples draws
// otherwise. Throws DegenerateMarket when psi_sigma = 1.
MfgMoments mfg_moments(const TypeDistribution& d, std::size_t mc_samples = 100000, std::uint64_t seed = 0,
                       Execution exec = Execution::parallel);

// Throw DegenerateMarket for psi_sigma = 1.
double mfg_pi(const AgentType& a, const MfgMoments& m);
double mfg_rho(const AgentType& a, const MfgMoments& m);
// Throws DegenerateConsumption when E[theta(1-delta)] = 1.
std::pair<double, double> mfg_lambda_beta(const AgentType& a, const MfgMoments& m);
ConsumptionPath mfg_consumption(double lambda, double beta, double kappa);

class MfgEquilibrium {
public:
    MfgEquilibrium(TypeDistribution d, double kappa, std::size_t mc_samples = 100000, std::uint64_t seed = 0);

    const MfgMoments& moments() const { return moments_; }
    double kappa() const { return kappa_; }
    const TypeDistribution& law() const { return law_; }
    std::optional<double> theta_crit() const { return theta_crit_; }

    EquilibriumStrategy strategy(const AgentType& a) const;

    // Population averages of the equilibrium consumption rate at time t:
    // arithmetic mean, its time integral, and the geometric mean.
    double c_bar(double t) const;
    double int_c_bar(double t) const;
    double c_tilde(double t) const;
    // E[log x0]
    double log_x0_bar() const;

private:
    template <class F>
    double population_mean(F&& fn) const;

    TypeDistribution law_;
    double kappa_;
    MfgMoments moments_;
    std::optional<double> theta_crit_;
    // Types the population averages run over: the support for a discrete
    // law, a fixed sample otherwise.
    std::vector<AgentType> types_;
    std::vector<double> weights_;
    std::vector<EquilibriumStrategy> strategies_;
};

// Single stock: every supported type shares (mu, sigma) with nu = 0.
std::optional<double> mfg_theta_crit(const TypeDistribution& d);

struct ConvergenceRow {
    std::size_t n = 0;
    double err_pi = 0.0;
    double err_c = 0.0;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    double slope_pi = 0.0;
    double slope_c = 0.0;
};

// Errors between n-player equilibria on i.i.d. samples and the mean-field
// strategy of each sampled type, sup over agents (and grid times for c),
// averaged over replications. Nested n reuse the same draws.
ConvergenceTable convergence_study(const TypeDistribution& d, const std::vector<std::size_t>& ns, double kappa,
                                   std::uint64_t seed, std::size_t replications = 32,
                                   const std::vector<double>& times = {0.25, 0.5, 0.75, 1.0});

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace fpg

namespace fpg {

struct MfgResidualReport {
    double ode = 0.0;
    double pde = 0.0;
};

// Mean-field analogue of nash_residuals for the given representative types.
MfgResidualReport mfg_residuals(const MfgEquilibrium& eq, std::span<const AgentType> types,
                                std::span<const double> xs, std::span<const double> ts, double rho_shift = 0.0);

}  // namespace fpg
