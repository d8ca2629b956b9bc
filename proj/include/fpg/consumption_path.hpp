#pragma once

namespace fpg {

// c_t = (1/beta + (1/lambda - 1/beta) exp(-(kappa-1) beta t))^{-1}, with the
// beta = 0 and kappa = 1 limits handled by the same expressions.
class ConsumptionPath {
public:
    ConsumptionPath() : ConsumptionPath(1.0, 0.0, 1.0) {}
    ConsumptionPath(double lambda, double beta, double kappa);

    double lambda() const { return lambda_; }
    double beta() const { return beta_; }
    double kappa() const { return kappa_; }

    // lambda times the bracket above; equals 1 at t = 0 and vanishes at t*.
    double denominator(double t) const;
    // +inf when the rate never blows up.
    double blow_up_time() const { return t_star_; }

    // Throws BlowUpHorizon for t >= blow_up_time().
    double operator()(double t) const;
    double log_rate(double t) const;
    // Integral of the rate over [0, t].
    double integral(double t) const;
    double integral(double t0, double t1) const { return integral(t1) - integral(t0); }

    bool operator==(const ConsumptionPath&) const = default;

private:
    void check_horizon(double t) const;

    double lambda_;
    double beta_;
    double kappa_;
    double t_star_;
};

}  // namespace fpg
