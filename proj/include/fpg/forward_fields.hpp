#pragma once

#include <functional>

#include "fpg/core_types.hpp"

namespace fpg {

using TimeFactor = std::function<double(double)>;
using RateFn = std::function<double(double)>;

// scale * x^p / p * time_factor(t) with p = 1 - 1/delta.
struct PowerField {
    double delta = 2.0;
    double scale = 1.0;
    TimeFactor time_factor = [](double) { return 1.0; };

    double power() const { return 1.0 - 1.0 / delta; }
    double d_x(double x, double t) const;
    double d_xx(double x, double t) const;
};

PowerField make_U(const AgentType& a, TimeFactor f);
// Consumption field carries the 1/epsilon weight and g = f^kappa.
PowerField make_V(const AgentType& a, TimeFactor g);

double eval_U(const PowerField& field, double x, double t);
// sup_{x>0} { V(x,t) - y x } in closed form.
double fenchel_legendre_V(const PowerField& field, double y, double t);
double local_risk_tolerance(const PowerField& field, double x, double t);

// f(t) from the equilibrium consumption rate c_t and the geometric average of
// the others' rates at t. Throws KappaOneError for kappa == 1.
double f_from_consumption(const ConsumptionPath& c, const AgentType& a, double kappa, const RateFn& tilde_c,
                          double t);

// f(t) = exp(-(rho t + theta p int c_bar + (1/delta) int c)) given the two
// integrals over [0, t]. Valid for every kappa.
double f_integral_form(const AgentType& a, double rho, double int_c_bar, double int_c, double t);

// Time derivatives use a five-point central difference with step
// 1e-3 max(1, t) by default.
double default_fd_step(double t);
// Same, shrunk to stay well inside a window that ends at t_end (a blow-up time).
double fd_step_before(double t, double t_end);

// |f' + (rho + theta p c_bar) f + (eps^-delta / delta) c_tilde^{theta(1-delta)} f^{(kappa-1)delta+1}|
double ode_residual(const TimeFactor& f, const AgentType& a, double kappa, double rho, const RateFn& c_bar,
                    const RateFn& c_tilde, double t, double h = 0.0);

// Averages over the other agents (leave-one-out) or over the population in
// the mean-field case. idio_weight is 1/(n-1) for n players and 0 for the
// mean field, where idiosyncratic noise averages out.
struct PdeAggregates {
    double sigma_pi = 0.0;
    double mu_pi = 0.0;
    double Sigma_pi_sq = 0.0;
    double nu_pi_sq = 0.0;
    double idio_weight = 0.0;
    RateFn c_bar;
    RateFn c_tilde;
};

// Residual of the consistency PDE for U = x^p f / p, V = (1/eps) x^p g / p,
// analytic in x and finite-difference in t.
double pde_residual(const AgentType& a, const TimeFactor& f, const TimeFactor& g, const PdeAggregates& agg,
                    double x, double t, double h = 0.0);

}  // namespace fpg
