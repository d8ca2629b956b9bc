#pragma once

#include <span>
#include <string>

#include "fpg/consumption_path.hpp"
#include "fpg/forward_fields.hpp"

namespace fpg {

enum class Asymptote { converges, constant, blow_up };
enum class Monotonicity { increasing, decreasing, constant };

struct RegimeReport {
    bool admissible = true;
    bool strong_equilibrium = true;
    Asymptote asymptote = Asymptote::constant;
    // Limit for converges, level for constant.
    double limit = 0.0;
    double t_star = 0.0;
    Monotonicity monotonicity = Monotonicity::constant;

    // e.g. "decreasing to 0.5", "finite-time blow-up at 0.693"
    std::string describe() const;
    // Short cell tag: "kappa>1,beta>0,lambda>beta" etc.
    std::string cell;
};

RegimeReport classify(const ConsumptionPath& c);

// Root of the closed-form denominator by bisection; +inf when there is none.
double blow_up_time_bisection(const ConsumptionPath& c);

// Throws MismatchError when the sampled path disagrees with classify().
void monotonicity_check(const ConsumptionPath& c, std::span<const double> grid);

// Default step 1e-4 max(1, t).
double conformity_step(double t);

// Ratio of the increments over [t, t+h] of the central-difference log-growth
// rates of c and c_tilde. Throws DegenerateElasticity when the c_tilde
// increment is below 1e-12 in magnitude.
double elasticity_of_conformity(const RateFn& c, const RateFn& c_tilde, double t, double h = 0.0);

// (1-kappa) delta / (1 + kappa theta (1-delta) / gamma_t).
double eis(const RateFn& c, const RateFn& c_tilde, double kappa, double theta, double delta, double t,
           double h = 0.0);

const char* to_string(Asymptote a);
const char* to_string(Monotonicity m);

}  // namespace fpg
