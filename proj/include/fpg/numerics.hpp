#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "fpg/errors.hpp"

namespace fpg {

// Adaptive Simpson with Richardson correction. Throws QuadratureError when
// the recursion depth runs out before the absolute tolerance is met.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double abs_tol = 1e-11,
                        int max_depth = 40);

// Fixed-order pairwise summation: identical result for identical input
// regardless of how the values were produced.
double pairwise_sum(std::span<const double> v);

// Natural cubic spline through (x_k, y_k) with exact integrals.
class CubicSpline {
public:
    CubicSpline(std::vector<double> x, std::vector<double> y);
    ~CubicSpline();
    CubicSpline(const CubicSpline& o) : CubicSpline(o.x_, o.y_) {}
    CubicSpline& operator=(const CubicSpline& o);
    CubicSpline(CubicSpline&&) noexcept;
    CubicSpline& operator=(CubicSpline&&) noexcept;

    double operator()(double t) const;
    double integral(double a, double b) const;
    double front() const { return x_.front(); }
    double back() const { return x_.back(); }

private:
    struct Impl;
    std::vector<double> x_, y_;
    std::unique_ptr<Impl> impl_;
};

// Anderson mixing on top of damped Picard for x = G(x). depth 0 is plain
// damped Picard: x <- x + damping (G(x) - x).
class AndersonMixer {
public:
    AndersonMixer(std::size_t dim, int depth, double damping);
    // Given the current iterate x and g = G(x), returns the next iterate.
    std::vector<double> next(const std::vector<double>& x, const std::vector<double>& g);

private:
    std::size_t dim_;
    int depth_;
    double damping_;
    std::vector<double> prev_x_, prev_f_;
    std::deque<std::vector<double>> dx_, df_;
};

struct FixedPointReport {
    std::vector<double> x;
    int iterations = 0;
    double last_change = 0.0;
};

// Iterates until max |G(x) - x| <= tol * max(1, max |x|). Throws NoConvergence.
FixedPointReport solve_fixed_point(const std::function<std::vector<double>(const std::vector<double>&)>& G,
                                   std::vector<double> x0, double tol, int max_iter, int depth, double damping);

}  // namespace fpg
