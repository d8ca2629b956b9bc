#include "fpg/consumption_analysis.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "fpg/errors.hpp"

namespace fpg {

const char* to_string(Asymptote a) {
    switch (a) {
        case Asymptote::converges: return "converges";
        case Asymptote::constant: return "constant";
        case Asymptote::blow_up: return "blow_up";
    }
    return "?";
}

const char* to_string(Monotonicity m) {
    switch (m) {
        case Monotonicity::increasing: return "increasing";
        case Monotonicity::decreasing: return "decreasing";
        case Monotonicity::constant: return "constant";
    }
    return "?";
}

std::string RegimeReport::describe() const {
    std::ostringstream os;
    switch (asymptote) {
        case Asymptote::converges:
            os << to_string(monotonicity) << " to " << limit;
            break;
        case Asymptote::constant:
            os << "constant " << limit;
            break;
        case Asymptote::blow_up:
            os << "finite-time blow-up at " << t_star;
            break;
    }
    return os.str();
}

RegimeReport classify(const ConsumptionPath& c) {
    const double k = c.kappa(), b = c.beta(), l = c.lambda();
    RegimeReport r;
    r.t_star = c.blow_up_time();

    auto blow_up = [&](bool admissible, bool strong) {
        r.admissible = admissible;
        r.strong_equilibrium = strong;
        r.asymptote = Asymptote::blow_up;
        r.monotonicity = Monotonicity::increasing;
    };
    auto towards = [&](double limit, bool strong) {
        r.strong_equilibrium = strong;
        r.asymptote = Asymptote::converges;
        r.limit = limit;
        r.monotonicity = l > limit ? Monotonicity::decreasing : Monotonicity::increasing;
    };
    auto constant = [&](bool strong) {
        r.strong_equilibrium = strong;
        r.asymptote = Asymptote::constant;
        r.limit = l;
        r.monotonicity = Monotonicity::constant;
    };

    const std::string lb = l > b ? "lambda>beta" : (l < b ? "lambda<beta" : "lambda=beta");
    if (k == 1.0) {
        r.cell = "kappa=1";
        constant(true);
    } else if (k > 1.0) {
        if (b > 0.0) {
            r.cell = "kappa>1,beta>0," + lb;
            if (l == b)
                constant(true);
            else
                towards(b, true);
        } else {
            r.cell = b == 0.0 ? "kappa>1,beta=0" : "kappa>1,beta<0";
            towards(0.0, true);
        }
    } else {
        if (b > 0.0) {
            r.cell = "kappa<1,beta>0," + lb;
            if (l > b)
                blow_up(true, false);
            else if (l < b)
                towards(0.0, true);
            else
                constant(false);
        } else if (b == 0.0) {
            r.cell = "kappa<1,beta=0";
            blow_up(false, false);
        } else {
            r.cell = "kappa<1,beta<0";
            blow_up(true, true);
        }
    }
    return r;
}

double blow_up_time_bisection(const ConsumptionPath& c) {
    auto den = [&c](double t) { return c.denominator(t); };
    double hi = 1.0;
    for (int k = 0; den(hi) > 0.0; ++k) {
        if (k > 200) return std::numeric_limits<double>::infinity();
        hi *= 2.0;
    }
    const auto [a, b] = boost::math::tools::bisect(den, 0.0, hi, boost::math::tools::eps_tolerance<double>(52));
    return 0.5 * (a + b);
}

void monotonicity_check(const ConsumptionPath& c, std::span<const double> grid) {
    const RegimeReport r = classify(c);
    if (grid.size() < 2) throw DomainError("monotonicity check needs at least two grid points");
    bool up = true, down = true, flat = true;
    double prev = c(grid[0]);
    for (std::size_t j = 1; j < grid.size(); ++j) {
        const double v = c(grid[j]);
        const double tol = 1e-12 * std::max(std::abs(v), std::abs(prev));
        if (!(v > prev)) up = false;
        if (!(v < prev)) down = false;
        if (std::abs(v - prev) > tol) flat = false;
        prev = v;
    }
    const bool ok = (r.monotonicity == Monotonicity::increasing && up) ||
                    (r.monotonicity == Monotonicity::decreasing && down) ||
                    (r.monotonicity == Monotonicity::constant && flat);
    if (!ok)
        throw MismatchError(std::string("path is not ") + to_string(r.monotonicity) + " on the grid (" + r.cell + ")");
}

double conformity_step(double t) { return 1e-4 * std::max(1.0, std::abs(t)); }

namespace {

double growth(const RateFn& c, double t, double h) {
    return (std::log(c(t + h)) - std::log(c(t - h))) / (2.0 * h);
}

}  // namespace

double elasticity_of_conformity(const RateFn& c, const RateFn& c_tilde, double t, double h) {
    if (h <= 0.0) h = conformity_step(t);
    const double num = growth(c, t + h, h) - growth(c, t, h);
    const double den = growth(c_tilde, t + h, h) - growth(c_tilde, t, h);
    if (std::abs(den) < 1e-12) throw DegenerateElasticity("population consumption growth does not change near t");
    return num / den;
}

double eis(const RateFn& c, const RateFn& c_tilde, double kappa, double theta, double delta, double t, double h) {
    const double base = (1.0 - kappa) * delta;
    const double coupling = kappa * theta * (1.0 - delta);
    if (base == 0.0 || coupling == 0.0) return base;
    return base / (1.0 + coupling / elasticity_of_conformity(c, c_tilde, t, h));
}

}  // namespace fpg
