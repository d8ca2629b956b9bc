#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "fpg/core_types.hpp"
#include "fpg/forward_fields.hpp"
#include "fpg/numerics.hpp"

namespace fpg {

struct NPlayerAggregates {
    std::size_t n = 0;
    double phi_sigma_n = 0.0, psi_sigma_n = 0.0;
    double phi_mu_n = 0.0, psi_mu_n = 0.0;
    double sigma_pi_bar = 0.0, mu_pi_bar = 0.0;
    double nu_pi_sq_bar = 0.0, Sigma_pi_sq_bar = 0.0;
    std::vector<double> pi;

    // Averages over everyone except agent i.
    double loo(double bar, double own) const {
        const double m = static_cast<double>(n);
        return m / (m - 1.0) * bar - own / (m - 1.0);
    }
};

struct NashEquilibrium {
    double kappa = 0.0;
    NPlayerAggregates aggregates;
    std::vector<double> pi, rho, lambda, beta;
    std::vector<EquilibriumStrategy> strategies;
    std::optional<double> theta_crit;
};

// rho = p * max_pi { ... } evaluated at the agent's own pi, given the others'
// averages. idio_weight is 1/(n-1), or 0 in the mean-field limit.
double rho_from_averages(const AgentType& a, double pi, double sigma_pi, double mu_pi, double Sigma_pi_sq,
                         double nu_pi_sq, double idio_weight);

NPlayerAggregates solve_aggregates(std::span<const AgentType> agents);
std::vector<double> nash_pi(std::span<const AgentType> agents);
std::vector<double> nash_rho(std::span<const AgentType> agents, const NPlayerAggregates& agg);
std::vector<std::pair<double, double>> nash_lambda_beta(std::span<const AgentType> agents,
                                                        std::span<const double> rhos);
ConsumptionPath nash_consumption(double lambda, double beta, double kappa);
NashEquilibrium solve_nash(std::span<const AgentType> agents, double kappa);

// Throws DomainError unless all agents share (mu, sigma) and have nu = 0.
double theta_crit_single_stock(std::span<const AgentType> agents);

// Consumption rate known only on a grid; natural cubic spline in between.
class TabulatedCurve {
public:
    TabulatedCurve(std::vector<double> t, std::vector<double> c);
    double rate(double t) const { return spline_(t); }
    double integral(double t) const;

private:
    std::vector<double> t_;
    CubicSpline spline_;
    std::vector<double> cumulative_;
};

using RateCurve = std::variant<ConsumptionPath, TabulatedCurve>;
double rate_of(const RateCurve& c, double t);
double integral_of(const RateCurve& c, double t);

struct Opponent {
    AgentType type;
    double pi = 0.0;
    RateCurve consumption;
};

// What a best response needs to know about everybody else.
struct OthersView {
    double sigma_pi = 0.0, mu_pi = 0.0, Sigma_pi_sq = 0.0, nu_pi_sq = 0.0;
    double idio_weight = 0.0;
    RateFn c_bar;
    RateFn int_c_bar;
    RateFn c_tilde;
};

OthersView view_of(std::span<const Opponent> others);

struct BestResponse {
    double pi = 0.0;
    double rho = 0.0;
    std::vector<double> times, c, f, g;
};

// Optimal constant pi from the first-order condition; consumption from the
// Bernoulli substitution k = f^{(1-kappa) delta}, integrating numerically
// over the sorted times. Throws QuadratureError or BlowUpHorizon.
BestResponse best_response(const AgentType& agent, double kappa_i, std::span<const Opponent> others,
                           std::span<const double> times);
BestResponse best_response(const AgentType& agent, double kappa_i, const OthersView& others,
                           std::span<const double> times);

struct FixedPointOptions {
    double tol = 1e-13;
    int max_iter = 500;
    double damping = 0.5;
    int anderson_depth = 8;
    // Consumption is iterated only when grid_points > 0.
    std::size_t grid_points = 0;
    double horizon = 1.0;
    double consumption_tol = 1e-11;
};

struct FixedPointNash {
    std::vector<double> pi;
    std::vector<double> rho;
    int pi_iterations = 0;
    std::vector<double> grid;
    std::vector<std::vector<double>> consumption;
    int consumption_iterations = 0;
};

// Iterated best responses: pi first, then consumption on a time grid with the
// other agents' rates interpolated. Throws NoConvergence.
FixedPointNash fixed_point_nash(std::span<const AgentType> agents, double kappa, const FixedPointOptions& opt = {});

}  // namespace fpg

namespace fpg {

struct ResidualReport {
    double ode = 0.0;
    double pde = 0.0;
};

// Max ODE residual over ts and PDE residual over xs x ts for every agent,
// with the others' averages re-summed directly. A nonzero rho_shift moves
// each rho and builds f from the integral form with the shifted value.
ResidualReport nash_residuals(std::span<const AgentType> agents, const NashEquilibrium& eq,
                              std::span<const double> xs, std::span<const double> ts, double rho_shift = 0.0);

}  // namespace fpg
