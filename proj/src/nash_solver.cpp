#include "fpg/nash_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "fpg/errors.hpp"

namespace fpg {

namespace {

// |x| <= this counts as exactly singular; the constructed degenerate
// instances hit zero exactly, random ones stay many orders away.
constexpr double singular_tol = 1e-14;

void require_players(std::span<const AgentType> agents) {
    if (agents.size() < 2) throw DomainError("an n-player game needs n >= 2");
    for (const auto& a : agents) validate_agent(a);
}

}  // namespace

double rho_from_averages(const AgentType& a, double pi, double sigma_pi, double mu_pi, double Sigma_pi_sq,
                         double nu_pi_sq, double idio_weight) {
    const double p = a.power();
    const double th = a.theta;
    const double Sigma = a.total_variance();
    const double common = pi * a.sigma - th * sigma_pi;
    const double var = pi * pi * a.nu * a.nu + th * th * idio_weight * nu_pi_sq + common * common;
    const double value =
        pi * a.mu - 0.5 * pi * pi * Sigma - th * mu_pi + 0.5 * th * Sigma_pi_sq + 0.5 * p * var;
    return p * value;
}

NPlayerAggregates solve_aggregates(std::span<const AgentType> agents) {
    require_players(agents);
    const std::size_t n = agents.size();
    const double nd = static_cast<double>(n);
    const double w = 1.0 / (nd - 1.0);

    NPlayerAggregates g;
    g.n = n;
    std::vector<double> D(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = agents[i];
        D[i] = a.nu * a.nu + a.sigma * a.sigma * (1.0 + a.coupling() * w);
        if (std::abs(D[i]) <= singular_tol * a.total_variance())
            throw DegenerateMarket("agent " + std::to_string(i) + " has a singular first-order condition");
        g.phi_sigma_n += a.delta * a.sigma * a.mu / D[i];
        g.psi_sigma_n += a.coupling() * a.sigma * a.sigma / D[i];
        g.phi_mu_n += a.delta * a.mu * a.mu / D[i];
        g.psi_mu_n += a.coupling() * a.sigma * a.mu / D[i];
    }
    g.phi_sigma_n /= nd;
    g.phi_mu_n /= nd;
    g.psi_sigma_n *= w;
    g.psi_mu_n *= w;
    if (std::abs(1.0 - g.psi_sigma_n) <= singular_tol) throw DegenerateMarket("psi_sigma_n = 1");

    g.sigma_pi_bar = g.phi_sigma_n / (1.0 - g.psi_sigma_n);
    g.mu_pi_bar = g.sigma_pi_bar * g.psi_mu_n + g.phi_mu_n;

    g.pi.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = agents[i];
        g.pi[i] = (a.coupling() * a.sigma * nd * w * g.sigma_pi_bar + a.mu * a.delta) / D[i];
        g.nu_pi_sq_bar += a.nu * a.nu * g.pi[i] * g.pi[i];
        g.Sigma_pi_sq_bar += a.total_variance() * g.pi[i] * g.pi[i];
    }
    g.nu_pi_sq_bar /= nd;
    g.Sigma_pi_sq_bar /= nd;
    return g;
}

std::vector<double> nash_pi(std::span<const AgentType> agents) { return solve_aggregates(agents).pi; }

std::vector<double> nash_rho(std::span<const AgentType> agents, const NPlayerAggregates& g) {
    const std::size_t n = agents.size();
    const double w = 1.0 / (static_cast<double>(n) - 1.0);
    std::vector<double> rho(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = agents[i];
        const double pi = g.pi[i];
        rho[i] = rho_from_averages(a, pi, g.loo(g.sigma_pi_bar, a.sigma * pi), g.loo(g.mu_pi_bar, a.mu * pi),
                                   g.loo(g.Sigma_pi_sq_bar, a.total_variance() * pi * pi),
                                   g.loo(g.nu_pi_sq_bar, a.nu * a.nu * pi * pi), w);
    }
    return rho;
}

std::vector<std::pair<double, double>> nash_lambda_beta(std::span<const AgentType> agents,
                                                        std::span<const double> rhos) {
    require_players(agents);
    const std::size_t n = agents.size();
    const double nd = static_cast<double>(n);
    const double w = 1.0 / (nd - 1.0);

    std::vector<double> wk(n);
    double Theta = 0.0, log_eps_tilde = 0.0, rho_delta_bar = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& a = agents[k];
        const double s = 1.0 + a.coupling() * w;
        if (std::abs(s) <= singular_tol)
            throw DegenerateConsumption("agent " + std::to_string(k) + " has a singular consumption condition");
        wk[k] = 1.0 / s;
        Theta += a.coupling() * wk[k];
        log_eps_tilde += a.delta * wk[k] * std::log(a.epsilon);
        rho_delta_bar += rhos[k] * a.delta * wk[k];
    }
    Theta *= w;
    log_eps_tilde /= nd;
    rho_delta_bar /= nd;
    if (std::abs(Theta - 1.0) <= singular_tol) throw DegenerateConsumption("average theta(1-delta) = 1");

    std::vector<std::pair<double, double>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = agents[i];
        const double share = nd * w * a.coupling() * wk[i] / (Theta - 1.0);
        const double lambda = std::exp(-a.delta * wk[i] * std::log(a.epsilon) + share * log_eps_tilde);
        const double beta = share * rho_delta_bar - wk[i] * rhos[i] * a.delta;
        out[i] = {lambda, beta};
    }
    return out;
}

ConsumptionPath nash_consumption(double lambda, double beta, double kappa) { return {lambda, beta, kappa}; }

NashEquilibrium solve_nash(std::span<const AgentType> agents, double kappa) {
    NashEquilibrium eq;
    eq.kappa = kappa;
    eq.aggregates = solve_aggregates(agents);
    eq.pi = eq.aggregates.pi;
    eq.rho = nash_rho(agents, eq.aggregates);
    const auto lb = nash_lambda_beta(agents, eq.rho);
    for (std::size_t i = 0; i < agents.size(); ++i) {
        eq.lambda.push_back(lb[i].first);
        eq.beta.push_back(lb[i].second);
        eq.strategies.push_back({eq.pi[i], nash_consumption(lb[i].first, lb[i].second, kappa)});
    }
    try {
        eq.theta_crit = theta_crit_single_stock(agents);
    } catch (const DomainError&) {
    }
    return eq;
}

double theta_crit_single_stock(std::span<const AgentType> agents) {
    require_players(agents);
    for (const auto& a : agents)
        if (a.nu != 0.0 || a.mu != agents[0].mu || a.sigma != agents[0].sigma)
            throw DomainError("theta_crit needs a single stock: common (mu, sigma) and nu = 0");
    const double w = 1.0 / (static_cast<double>(agents.size()) - 1.0);
    double Theta = 0.0, den = 0.0;
    for (const auto& a : agents) {
        const double wk = 1.0 / (1.0 + a.coupling() * w);
        Theta += a.coupling() * wk;
        den += a.delta * wk;
    }
    return (1.0 - w * Theta) / (w * den);
}

TabulatedCurve::TabulatedCurve(std::vector<double> t, std::vector<double> c)
    : t_(t), spline_(std::move(t), std::move(c)), cumulative_(t_.size(), 0.0) {
    for (std::size_t j = 1; j < t_.size(); ++j)
        cumulative_[j] = cumulative_[j - 1] + spline_.integral(t_[j - 1], t_[j]);
}

double TabulatedCurve::integral(double t) const {
    if (t <= t_.front()) return -spline_(t_.front()) * (t_.front() - t);
    if (t >= t_.back()) return cumulative_.back() + spline_(t_.back()) * (t - t_.back());
    const auto j = static_cast<std::size_t>(std::upper_bound(t_.begin(), t_.end(), t) - t_.begin()) - 1;
    return cumulative_[j] + spline_.integral(t_[j], t);
}

double rate_of(const RateCurve& c, double t) {
    return std::visit(
        [t](const auto& v) {
            if constexpr (std::is_same_v<std::decay_t<decltype(v)>, ConsumptionPath>)
                return v(t);
            else
                return v.rate(t);
        },
        c);
}

double integral_of(const RateCurve& c, double t) {
    return std::visit([t](const auto& v) { return v.integral(t); }, c);
}

OthersView view_of(std::span<const Opponent> others) {
    if (others.empty()) throw DomainError("best response needs at least one opponent");
    auto opp = std::make_shared<const std::vector<Opponent>>(others.begin(), others.end());
    const double m = static_cast<double>(opp->size());
    OthersView v;
    for (const auto& o : *opp) {
        v.sigma_pi += o.type.sigma * o.pi;
        v.mu_pi += o.type.mu * o.pi;
        v.Sigma_pi_sq += o.type.total_variance() * o.pi * o.pi;
        v.nu_pi_sq += o.type.nu * o.type.nu * o.pi * o.pi;
    }
    v.sigma_pi /= m;
    v.mu_pi /= m;
    v.Sigma_pi_sq /= m;
    v.nu_pi_sq /= m;
    v.idio_weight = 1.0 / m;
    v.c_bar = [opp, m](double t) {
        double s = 0.0;
        for (const auto& o : *opp) s += rate_of(o.consumption, t);
        return s / m;
    };
    v.int_c_bar = [opp, m](double t) {
        double s = 0.0;
        for (const auto& o : *opp) s += integral_of(o.consumption, t);
        return s / m;
    };
    v.c_tilde = [opp, m](double t) {
        double s = 0.0;
        for (const auto& o : *opp) s += std::log(rate_of(o.consumption, t));
        return std::exp(s / m);
    };
    return v;
}

BestResponse best_response(const AgentType& agent, double kappa_i, std::span<const Opponent> others,
                           std::span<const double> times) {
    return best_response(agent, kappa_i, view_of(others), times);
}

BestResponse best_response(const AgentType& a, double kappa, const OthersView& o, std::span<const double> times) {
    validate_agent(a);
    for (std::size_t j = 0; j < times.size(); ++j)
        if (times[j] < 0.0 || (j > 0 && times[j] < times[j - 1]))
            throw DomainError("best response times must be sorted and nonnegative");

    BestResponse br;
    const double Sigma = a.total_variance();
    br.pi = (a.delta * a.mu + a.coupling() * a.sigma * o.sigma_pi) / Sigma;
    br.rho = rho_from_averages(a, br.pi, o.sigma_pi, o.mu_pi, o.Sigma_pi_sq, o.nu_pi_sq, o.idio_weight);
    br.times.assign(times.begin(), times.end());

    const double tp = a.theta * a.power();
    const double b0 = std::pow(a.epsilon, -a.delta) / a.delta;
    auto A = [&](double t) { return br.rho * t + tp * o.int_c_bar(t); };
    auto b = [&](double t) { return b0 * std::pow(o.c_tilde(t), a.coupling()); };

    const double gamma = (1.0 - kappa) * a.delta;
    double J = 0.0, prev = 0.0;
    for (double t : times) {
        if (kappa != 1.0) {
            J += adaptive_simpson([&](double s) { return std::exp(gamma * A(s)) * b(s); }, prev, t);
            const double k = std::exp(-gamma * A(t)) * (1.0 - gamma * J);
            if (!(k > 0.0)) throw BlowUpHorizon("best-response consumption blows up before t = " + std::to_string(t));
            const double f = std::pow(k, 1.0 / gamma);
            br.c.push_back(a.delta * b(t) / k);
            br.f.push_back(f);
            br.g.push_back(std::pow(f, kappa));
        } else {
            J += adaptive_simpson(b, prev, t);
            const double f = std::exp(-A(t) - J);
            br.c.push_back(a.delta * b(t));
            br.f.push_back(f);
            br.g.push_back(f);
        }
        prev = t;
    }
    return br;
}

FixedPointNash fixed_point_nash(std::span<const AgentType> agents, double kappa, const FixedPointOptions& opt) {
    require_players(agents);
    const std::size_t n = agents.size();
    const double w = 1.0 / (static_cast<double>(n) - 1.0);

    auto respond_pi = [&](const std::vector<double>& pi) {
        double total = 0.0;
        for (std::size_t k = 0; k < n; ++k) total += agents[k].sigma * pi[k];
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& a = agents[i];
            const double sp = (total - a.sigma * pi[i]) * w;
            out[i] = (a.delta * a.mu + a.coupling() * a.sigma * sp) / a.total_variance();
        }
        return out;
    };

    FixedPointNash res;
    const auto pi_fp =
        solve_fixed_point(respond_pi, respond_pi(std::vector<double>(n, 0.0)), opt.tol, opt.max_iter,
                          opt.anderson_depth, opt.damping);
    res.pi = pi_fp.x;
    res.pi_iterations = pi_fp.iterations;

    // Leave-one-out market averages at the fixed point, by direct summation.
    std::vector<OthersView> views(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& v = views[i];
        for (std::size_t k = 0; k < n; ++k) {
            if (k == i) continue;
            const auto& o = agents[k];
            const double p = res.pi[k];
            v.sigma_pi += o.sigma * p * w;
            v.mu_pi += o.mu * p * w;
            v.Sigma_pi_sq += o.total_variance() * p * p * w;
            v.nu_pi_sq += o.nu * o.nu * p * p * w;
        }
        v.idio_weight = w;
        const auto& a = agents[i];
        res.rho.push_back(rho_from_averages(a, res.pi[i], v.sigma_pi, v.mu_pi, v.Sigma_pi_sq, v.nu_pi_sq, w));
    }
    if (opt.grid_points == 0) return res;

    const std::size_t G = opt.grid_points;
    if (G < 3) throw DomainError("consumption grid needs at least 3 points");
    res.grid.resize(G);
    for (std::size_t j = 0; j < G; ++j) res.grid[j] = opt.horizon * static_cast<double>(j) / static_cast<double>(G - 1);

    // x holds log c_k on the grid, agent-major.
    auto respond_c = [&](const std::vector<double>& x) {
        std::vector<double> total_c(G, 0.0), total_log(G, 0.0);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j = 0; j < G; ++j) {
                total_c[j] += std::exp(x[k * G + j]);
                total_log[j] += x[k * G + j];
            }
        std::vector<double> out(n * G);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> cb(G), lt(G);
            for (std::size_t j = 0; j < G; ++j) {
                cb[j] = (total_c[j] - std::exp(x[i * G + j])) * w;
                lt[j] = (total_log[j] - x[i * G + j]) * w;
            }
            auto cbar = std::make_shared<TabulatedCurve>(res.grid, cb);
            auto ltilde = std::make_shared<CubicSpline>(res.grid, lt);
            OthersView v = views[i];
            v.c_bar = [cbar](double t) { return cbar->rate(t); };
            v.int_c_bar = [cbar](double t) { return cbar->integral(t); };
            v.c_tilde = [ltilde](double t) { return std::exp((*ltilde)(t)); };
            const auto br = best_response(agents[i], kappa, v, res.grid);
            for (std::size_t j = 0; j < G; ++j) out[i * G + j] = std::log(br.c[j]);
        }
        return out;
    };

    std::vector<double> seed(n * G);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < G; ++j) seed[k * G + j] = -agents[k].delta * std::log(agents[k].epsilon);
    const auto c_fp = solve_fixed_point(respond_c, respond_c(seed), opt.consumption_tol, opt.max_iter,
                                        opt.anderson_depth, opt.damping);
    res.consumption_iterations = c_fp.iterations;
    res.consumption.assign(n, std::vector<double>(G));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < G; ++j) res.consumption[i][j] = std::exp(c_fp.x[i * G + j]);
    return res;
}

}  // namespace fpg

namespace fpg {

ResidualReport nash_residuals(std::span<const AgentType> agents, const NashEquilibrium& eq,
                              std::span<const double> xs, std::span<const double> ts, double rho_shift) {
    const std::size_t n = agents.size();
    const double w = 1.0 / (static_cast<double>(n) - 1.0);
    auto paths = std::make_shared<std::vector<ConsumptionPath>>();
    for (const auto& s : eq.strategies) paths->push_back(s.consumption);
    double t_end = std::numeric_limits<double>::infinity();
    for (const auto& c : *paths) t_end = std::min(t_end, c.blow_up_time());

    ResidualReport rep;
    for (std::size_t i = 0; i < n; ++i) {
        const AgentType a = agents[i];
        PdeAggregates agg;
        for (std::size_t k = 0; k < n; ++k) {
            if (k == i) continue;
            const auto& o = agents[k];
            const double p = eq.pi[k];
            agg.sigma_pi += o.sigma * p * w;
            agg.mu_pi += o.mu * p * w;
            agg.Sigma_pi_sq += o.total_variance() * p * p * w;
            agg.nu_pi_sq += o.nu * o.nu * p * p * w;
        }
        agg.idio_weight = w;
        agg.c_bar = [paths, i, w](double t) {
            double s = 0.0;
            for (std::size_t k = 0; k < paths->size(); ++k)
                if (k != i) s += (*paths)[k](t);
            return s * w;
        };
        agg.c_tilde = [paths, i, w](double t) {
            double s = 0.0;
            for (std::size_t k = 0; k < paths->size(); ++k)
                if (k != i) s += (*paths)[k].log_rate(t);
            return std::exp(s * w);
        };
        const double rho = eq.rho[i] + rho_shift;
        const double kappa = eq.kappa;
        TimeFactor f;
        if (kappa != 1.0 && rho_shift == 0.0) {
            f = [paths, i, a, kappa, ct = agg.c_tilde](double t) {
                return f_from_consumption((*paths)[i], a, kappa, ct, t);
            };
        } else {
            f = [paths, i, a, rho, w](double t) {
                double s = 0.0;
                for (std::size_t k = 0; k < paths->size(); ++k)
                    if (k != i) s += (*paths)[k].integral(t);
                return f_integral_form(a, rho, s * w, (*paths)[i].integral(t), t);
            };
        }
        TimeFactor g = [f, kappa](double t) { return std::pow(f(t), kappa); };
        for (double t : ts) {
            const double h = fd_step_before(t, t_end);
            rep.ode = std::max(rep.ode, ode_residual(f, a, kappa, rho, agg.c_bar, agg.c_tilde, t, h));
            for (double x : xs) rep.pde = std::max(rep.pde, pde_residual(a, f, g, agg, x, t, h));
        }
    }
    return rep;
}

}  // namespace fpg
