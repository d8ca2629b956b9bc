#pragma once

#include <stdexcept>
#include <string>

namespace fpg {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parameter outside its admissible range.
struct DomainError : Error {
    using Error::Error;
};

// psi^sigma == 1: the aggregate sigma*pi equation has no solution.
struct DegenerateMarket : Error {
    using Error::Error;
};

// Average of theta(1-delta) equals 1: the consumption fixed point is singular.
struct DegenerateConsumption : Error {
    using Error::Error;
};

struct KappaOneError : Error {
    using Error::Error;
};

struct QuadratureError : Error {
    using Error::Error;
};

struct NoConvergence : Error {
    explicit NoConvergence(int iterations, double residual)
        : Error("no convergence after " + std::to_string(iterations) +
                " iterations (last change " + std::to_string(residual) + ")"),
          iterations(iterations), residual(residual) {}
    int iterations;
    double residual;
};

// Consumption rate evaluated at or past its finite blow-up time.
struct BlowUpHorizon : Error {
    using Error::Error;
};

struct DegenerateElasticity : Error {
    using Error::Error;
};

// Numeric path behaviour disagrees with the analytic regime.
struct MismatchError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace fpg
