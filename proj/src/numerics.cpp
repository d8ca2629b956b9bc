#include "fpg/numerics.hpp"

#include <algorithm>
#include <mutex>
#include <utility>

#include <Eigen/Dense>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_spline.h>

namespace fpg {

namespace {

struct SimpsonFrame {
    double a, fa, m, fm, b, fb, whole;
};

double simpson_recurse(const std::function<double(double)>& f, const SimpsonFrame& s, double tol, int depth) {
    const double lm = 0.5 * (s.a + s.m), rm = 0.5 * (s.m + s.b);
    const double flm = f(lm), frm = f(rm);
    const double left = (s.m - s.a) / 6.0 * (s.fa + 4.0 * flm + s.fm);
    const double right = (s.b - s.m) / 6.0 * (s.fm + 4.0 * frm + s.fb);
    const double diff = left + right - s.whole;
    if (std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
    if (depth <= 0) throw QuadratureError("adaptive Simpson: tolerance not reached");
    return simpson_recurse(f, {s.a, s.fa, lm, flm, s.m, s.fm, left}, 0.5 * tol, depth - 1) +
           simpson_recurse(f, {s.m, s.fm, rm, frm, s.b, s.fb, right}, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double abs_tol,
                        int max_depth) {
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double r = simpson_recurse(f, {a, fa, m, fm, b, fb, whole}, abs_tol, max_depth);
    if (!std::isfinite(r)) throw QuadratureError("adaptive Simpson: non-finite integrand");
    return r;
}

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 16) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t h = v.size() / 2;
    return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

struct CubicSpline::Impl {
    gsl_spline* spline = nullptr;
    ~Impl() { gsl_spline_free(spline); }
};

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)), impl_(std::make_unique<Impl>()) {
    if (x_.size() != y_.size() || x_.size() < 3) throw DomainError("spline needs at least 3 matching nodes");
    static std::once_flag gsl_quiet;
    std::call_once(gsl_quiet, [] { gsl_set_error_handler_off(); });
    impl_->spline = gsl_spline_alloc(gsl_interp_cspline, x_.size());
    if (gsl_spline_init(impl_->spline, x_.data(), y_.data(), x_.size()) != GSL_SUCCESS)
        throw DomainError("spline nodes must be strictly increasing");
}

CubicSpline::~CubicSpline() = default;
CubicSpline::CubicSpline(CubicSpline&&) noexcept = default;
CubicSpline& CubicSpline::operator=(const CubicSpline& o) {
    if (this != &o) *this = CubicSpline(o.x_, o.y_);
    return *this;
}
CubicSpline& CubicSpline::operator=(CubicSpline&&) noexcept = default;

double CubicSpline::operator()(double t) const {
    t = std::clamp(t, x_.front(), x_.back());
    // A null accelerator makes evaluation re-entrant.
    return gsl_spline_eval(impl_->spline, t, nullptr);
}

double CubicSpline::integral(double a, double b) const {
    a = std::clamp(a, x_.front(), x_.back());
    b = std::clamp(b, x_.front(), x_.back());
    if (a == b) return 0.0;
    if (a > b) return -integral(b, a);
    return gsl_spline_eval_integ(impl_->spline, a, b, nullptr);
}

AndersonMixer::AndersonMixer(std::size_t dim, int depth, double damping)
    : dim_(dim), depth_(depth), damping_(damping) {}

std::vector<double> AndersonMixer::next(const std::vector<double>& x, const std::vector<double>& g) {
    std::vector<double> f(dim_);
    for (std::size_t k = 0; k < dim_; ++k) f[k] = g[k] - x[k];

    if (depth_ > 0 && !prev_x_.empty()) {
        std::vector<double> dx(dim_), df(dim_);
        for (std::size_t k = 0; k < dim_; ++k) {
            dx[k] = x[k] - prev_x_[k];
            df[k] = f[k] - prev_f_[k];
        }
        dx_.push_back(std::move(dx));
        df_.push_back(std::move(df));
        if (static_cast<int>(dx_.size()) > depth_) {
            dx_.pop_front();
            df_.pop_front();
        }
    }
    prev_x_ = x;
    prev_f_ = f;

    std::vector<double> out(dim_);
    if (dx_.empty()) {
        for (std::size_t k = 0; k < dim_; ++k) out[k] = x[k] + damping_ * f[k];
        return out;
    }

    const auto m = static_cast<Eigen::Index>(dx_.size());
    const auto d = static_cast<Eigen::Index>(dim_);
    Eigen::MatrixXd F(d, m);
    Eigen::VectorXd fv(d);
    for (Eigen::Index k = 0; k < d; ++k) fv(k) = f[k];
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index k = 0; k < d; ++k) F(k, j) = df_[j][k];
    const Eigen::VectorXd gamma = F.completeOrthogonalDecomposition().solve(fv);

    for (Eigen::Index k = 0; k < d; ++k) {
        double xk = x[k] + damping_ * f[k];
        for (Eigen::Index j = 0; j < m; ++j) xk -= gamma(j) * (dx_[j][k] + damping_ * df_[j][k]);
        out[k] = xk;
    }
    return out;
}

FixedPointReport solve_fixed_point(const std::function<std::vector<double>(const std::vector<double>&)>& G,
                                   std::vector<double> x0, double tol, int max_iter, int depth, double damping) {
    AndersonMixer mixer(x0.size(), depth, damping);
    std::vector<double> x = std::move(x0);
    double change = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        const std::vector<double> g = G(x);
        change = 0.0;
        double scale = 1.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            change = std::max(change, std::abs(g[k] - x[k]));
            scale = std::max(scale, std::abs(x[k]));
        }
        if (!std::isfinite(change)) throw NoConvergence(it, change);
        if (change <= tol * scale) return {g, it, change};
        x = mixer.next(x, g);
    }
    throw NoConvergence(max_iter, change);
}

}  // namespace fpg
