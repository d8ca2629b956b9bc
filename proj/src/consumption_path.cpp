#include "fpg/consumption_path.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fpg/errors.hpp"

namespace fpg {

namespace {

// expm1(z)/z, continuous at 0.
double exprel(double z) {
    if (std::abs(z) < 1e-300) return 1.0;
    return std::expm1(z) / z;
}

}  // namespace

ConsumptionPath::ConsumptionPath(double lambda, double beta, double kappa)
    : lambda_(lambda), beta_(beta), kappa_(kappa), t_star_(std::numeric_limits<double>::infinity()) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be positive and finite");
    if (!std::isfinite(beta)) throw DomainError("beta must be finite");
    if (!std::isfinite(kappa)) throw DomainError("kappa must be finite");
    if (kappa < 1.0) {
        const double s = 1.0 - kappa;
        if (beta == 0.0) {
            t_star_ = 1.0 / (lambda * s);
        } else if (lambda > beta) {
            // beta > 0 and lambda > beta, or beta < 0 (then lambda > beta always).
            t_star_ = std::log(lambda / (lambda - beta)) / (s * beta);
        }
    }
}

double ConsumptionPath::denominator(double t) const {
    // lambda = beta is the constant path; keep it exactly constant.
    if (lambda_ == beta_) return 1.0;
    const double u = (kappa_ - 1.0) * t;
    return std::exp(-u * beta_) + lambda_ * u * exprel(-u * beta_);
}

void ConsumptionPath::check_horizon(double t) const {
    if (t >= t_star_)
        throw BlowUpHorizon("consumption rate blows up at t* = " + std::to_string(t_star_));
}

double ConsumptionPath::operator()(double t) const {
    check_horizon(t);
    return lambda_ / denominator(t);
}

double ConsumptionPath::log_rate(double t) const {
    check_horizon(t);
    return std::log(lambda_) - std::log(denominator(t));
}

double ConsumptionPath::integral(double t) const {
    check_horizon(t);
    if (kappa_ == 1.0) return lambda_ * t;
    const double u = (kappa_ - 1.0) * t;
    return std::log1p(lambda_ * u * exprel(u * beta_)) / (kappa_ - 1.0);
}

}  // namespace fpg
