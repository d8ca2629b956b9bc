#include "fpg/forward_fields.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>

#include <gsl/gsl_deriv.h>

#include "fpg/errors.hpp"

namespace fpg {

double PowerField::d_x(double x, double t) const {
    return scale * std::pow(x, power() - 1.0) * time_factor(t);
}

double PowerField::d_xx(double x, double t) const {
    const double p = power();
    return scale * (p - 1.0) * std::pow(x, p - 2.0) * time_factor(t);
}

PowerField make_U(const AgentType& a, TimeFactor f) { return {a.delta, 1.0, std::move(f)}; }

PowerField make_V(const AgentType& a, TimeFactor g) { return {a.delta, 1.0 / a.epsilon, std::move(g)}; }

double eval_U(const PowerField& field, double x, double t) {
    if (!(x > 0.0)) throw DomainError("wealth argument must be positive");
    const double p = field.power();
    return field.scale * std::pow(x, p) / p * field.time_factor(t);
}

double fenchel_legendre_V(const PowerField& field, double y, double t) {
    if (!(y > 0.0)) throw DomainError("dual argument must be positive");
    // Maximiser x = (y / k)^{-delta} with k = scale * time_factor.
    const double k = field.scale * field.time_factor(t);
    const double d = field.delta;
    return std::pow(y, 1.0 - d) * std::pow(k, d) / (d - 1.0);
}

double local_risk_tolerance(const PowerField& field, double x, double t) {
    return -field.d_x(x, t) / field.d_xx(x, t);
}

double f_from_consumption(const ConsumptionPath& c, const AgentType& a, double kappa, const RateFn& tilde_c,
                          double t) {
    if (kappa == 1.0) throw KappaOneError("f is not determined by c when kappa = 1");
    const double log_base = c.log_rate(t) / a.delta + a.theta * (1.0 - 1.0 / a.delta) * std::log(tilde_c(t)) +
                            std::log(a.epsilon);
    return std::exp(log_base / (kappa - 1.0));
}

double f_integral_form(const AgentType& a, double rho, double int_c_bar, double int_c, double t) {
    return std::exp(-(rho * t + a.theta * a.power() * int_c_bar + int_c / a.delta));
}

double default_fd_step(double t) { return 1e-3 * std::max(1.0, std::abs(t)); }

double fd_step_before(double t, double t_end) {
    const double h = default_fd_step(t);
    return std::isfinite(t_end) ? std::min(h, 1e-3 * (t_end - t)) : h;
}

namespace {

// GSL's five-point central difference, which rescales h when its round-off
// and truncation estimates disagree.
template <class F>
double d_dt(F&& fn, double t, double h) {
    gsl_function g;
    g.function = [](double s, void* p) { return (*static_cast<std::remove_reference_t<F>*>(p))(s); };
    g.params = &fn;
    double result = 0.0, abserr = 0.0;
    gsl_deriv_central(&g, t, h, &result, &abserr);
    return result;
}

}  // namespace

double ode_residual(const TimeFactor& f, const AgentType& a, double kappa, double rho, const RateFn& c_bar,
                    const RateFn& c_tilde, double t, double h) {
    if (h <= 0.0) h = default_fd_step(t);
    const double ft = f(t);
    const double df = d_dt([&](double s) { return f(s); }, t, h);
    const double drift = (rho + a.theta * a.power() * c_bar(t)) * ft;
    const double cons = std::pow(a.epsilon, -a.delta) / a.delta * std::pow(c_tilde(t), a.coupling()) *
                        std::pow(ft, (kappa - 1.0) * a.delta + 1.0);
    return std::abs(df + drift + cons);
}

double pde_residual(const AgentType& a, const TimeFactor& f, const TimeFactor& g, const PdeAggregates& agg,
                    double x, double t, double h) {
    if (h <= 0.0) h = default_fd_step(t);
    const PowerField U = make_U(a, f);
    const PowerField V = make_V(a, g);

    const double th = a.theta;
    const double Sigma = a.total_variance();
    const double K = a.mu - th * a.sigma * agg.sigma_pi;

    const double B1 = th * agg.mu_pi - th * a.sigma * agg.sigma_pi * K / Sigma -
                      0.5 * th * agg.Sigma_pi_sq -
                      0.5 * th * th * (agg.sigma_pi * agg.sigma_pi + agg.idio_weight * agg.nu_pi_sq);
    const double tsp = th * agg.sigma_pi;
    const double B3 = tsp * tsp * (a.sigma * a.sigma / Sigma - 1.0) - th * th * agg.idio_weight * agg.nu_pi_sq;

    const double Ux = U.d_x(x, t);
    const double Uxx = U.d_xx(x, t);
    const double Ut = d_dt([&](double s) { return eval_U(U, x, s); }, t, h);

    const double rhs = B1 * x * Ux + K * K / (2.0 * Sigma) * Ux * Ux / Uxx + 0.5 * B3 * x * x * Uxx -
                       th * agg.c_bar(t) * x * Ux - fenchel_legendre_V(V, Ux * std::pow(agg.c_tilde(t), th), t);
    return std::abs(Ut - rhs);
}

}  // namespace fpg
