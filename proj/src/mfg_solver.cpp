#include "fpg/mfg_solver.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "fpg/errors.hpp"
#include "fpg/nash_solver.hpp"
#include "fpg/numerics.hpp"
#include "fpg/rng.hpp"

namespace fpg {

namespace {

constexpr double singular_tol = 1e-14;

// Weighted population: discrete support or an equally weighted sample.
struct Population {
    std::vector<AgentType> types;
    std::vector<double> weights;
    bool sampled = false;
};

Population population_of(const TypeDistribution& d, std::size_t mc_samples, std::uint64_t seed, Execution exec) {
    Population pop;
    if (d.is_discrete()) {
        pop.types = d.discrete_law().types;
        pop.weights = d.discrete_law().weights;
        return pop;
    }
    if (mc_samples < 2) throw DomainError("Monte Carlo moments need at least 2 samples");
    pop.sampled = true;
    pop.types.resize(mc_samples);
    const auto N = static_cast<std::ptrdiff_t>(mc_samples);
    if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < N; ++i) {
            auto rng = make_stream(seed, static_cast<std::uint64_t>(i), 0x6d6f6d656e7473ULL);
            pop.types[static_cast<std::size_t>(i)] = d.draw(rng);
        }
    } else {
        for (std::ptrdiff_t i = 0; i < N; ++i) {
            auto rng = make_stream(seed, static_cast<std::uint64_t>(i), 0x6d6f6d656e7473ULL);
            pop.types[static_cast<std::size_t>(i)] = d.draw(rng);
        }
    }
    pop.weights.assign(mc_samples, 1.0 / static_cast<double>(mc_samples));
    return pop;
}

template <class F>
double weighted_mean(const Population& pop, F&& term, double* se = nullptr) {
    const std::size_t n = pop.types.size();
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = pop.weights[k] * term(pop.types[k]);
    const double mean = pairwise_sum(v);
    if (se) {
        *se = 0.0;
        if (pop.sampled) {
            for (std::size_t k = 0; k < n; ++k) {
                const double d = term(pop.types[k]) - mean;
                v[k] = d * d;
            }
            const double var = pairwise_sum(v) / static_cast<double>(n - 1);
            *se = std::sqrt(var / static_cast<double>(n));
        }
    }
    return mean;
}

MfgMoments moments_of(const Population& pop) {
    MfgMoments m;
    m.samples = pop.types.size();
    m.psi_sigma = weighted_mean(
        pop, [](const AgentType& a) { return a.coupling() * a.sigma * a.sigma / a.total_variance(); },
        &m.se_psi_sigma);
    m.phi_sigma = weighted_mean(
        pop, [](const AgentType& a) { return a.delta * a.mu * a.sigma / a.total_variance(); }, &m.se_phi_sigma);
    m.psi_mu = weighted_mean(
        pop, [](const AgentType& a) { return a.coupling() * a.mu * a.sigma / a.total_variance(); }, &m.se_psi_mu);
    m.phi_mu = weighted_mean(
        pop, [](const AgentType& a) { return a.delta * a.mu * a.mu / a.total_variance(); }, &m.se_phi_mu);
    m.theta_one_minus_delta_bar = weighted_mean(pop, [](const AgentType& a) { return a.coupling(); });
    m.delta_bar = weighted_mean(pop, [](const AgentType& a) { return a.delta; });
    m.eps_tilde = std::exp(weighted_mean(pop, [](const AgentType& a) { return a.delta * std::log(a.epsilon); }));

    if (std::abs(1.0 - m.psi_sigma) <= singular_tol) throw DegenerateMarket("psi_sigma = 1");
    m.sigma_pi_bar = m.phi_sigma / (1.0 - m.psi_sigma);
    m.mu_pi_bar = m.sigma_pi_bar * m.psi_mu + m.phi_mu;
    const double S = m.sigma_pi_bar;
    m.Sigma_pi_sq_bar = weighted_mean(pop, [S](const AgentType& a) {
        const double num = a.coupling() * a.sigma * S + a.mu * a.delta;
        return num * num / a.total_variance();
    });
    m.rho_delta_bar = weighted_mean(pop, [&m](const AgentType& a) { return mfg_rho(a, m) * a.delta; });
    return m;
}

}  // namespace

MfgMoments mfg_moments(const TypeDistribution& d, std::size_t mc_samples, std::uint64_t seed, Execution exec) {
    return moments_of(population_of(d, mc_samples, seed, exec));
}

double mfg_pi(const AgentType& a, const MfgMoments& m) {
    if (std::abs(1.0 - m.psi_sigma) <= singular_tol) throw DegenerateMarket("psi_sigma = 1");
    const double S = m.phi_sigma / (1.0 - m.psi_sigma);
    return (a.coupling() * a.sigma * S + a.mu * a.delta) / a.total_variance();
}

double mfg_rho(const AgentType& a, const MfgMoments& m) {
    return rho_from_averages(a, mfg_pi(a, m), m.sigma_pi_bar, m.mu_pi_bar, m.Sigma_pi_sq_bar, 0.0, 0.0);
}

std::pair<double, double> mfg_lambda_beta(const AgentType& a, const MfgMoments& m) {
    const double Theta = m.theta_one_minus_delta_bar;
    if (std::abs(Theta - 1.0) <= singular_tol) throw DegenerateConsumption("E[theta(1-delta)] = 1");
    const double share = a.coupling() / (Theta - 1.0);
    const double lambda = std::exp(-a.delta * std::log(a.epsilon) + share * std::log(m.eps_tilde));
    const double beta = share * m.rho_delta_bar - mfg_rho(a, m) * a.delta;
    return {lambda, beta};
}

ConsumptionPath mfg_consumption(double lambda, double beta, double kappa) { return {lambda, beta, kappa}; }

std::optional<double> mfg_theta_crit(const TypeDistribution& d) {
    // Sampler laws need the Monte Carlo moments; MfgEquilibrium handles them.
    if (!d.is_discrete()) return std::nullopt;
    const auto& law = d.discrete_law();
    for (const auto& a : law.types)
        if (a.nu != 0.0 || a.mu != law.types[0].mu || a.sigma != law.types[0].sigma) return std::nullopt;
    double Ea = 0.0, Ed = 0.0;
    for (std::size_t k = 0; k < law.types.size(); ++k) {
        Ea += law.weights[k] * law.types[k].coupling();
        Ed += law.weights[k] * law.types[k].delta;
    }
    return (1.0 - Ea) / Ed;
}

MfgEquilibrium::MfgEquilibrium(TypeDistribution d, double kappa, std::size_t mc_samples, std::uint64_t seed)
    : law_(std::move(d)), kappa_(kappa) {
    Population pop = population_of(law_, mc_samples, seed, Execution::parallel);
    moments_ = moments_of(pop);
    // Both guards fire here, before any strategy can be handed out.
    mfg_lambda_beta(pop.types.front(), moments_);
    types_ = std::move(pop.types);
    weights_ = std::move(pop.weights);
    strategies_.reserve(types_.size());
    for (const auto& a : types_) strategies_.push_back(strategy(a));
    theta_crit_ = mfg_theta_crit(law_);
    if (!theta_crit_ && !law_.is_discrete()) {
        const auto& r = law_.box().ranges;
        if (r[4].first == r[4].second && r[6].first == r[6].second && r[5].second == 0.0)
            theta_crit_ = (1.0 - moments_.theta_one_minus_delta_bar) / moments_.delta_bar;
    }
}

EquilibriumStrategy MfgEquilibrium::strategy(const AgentType& a) const {
    validate_agent(a);
    const auto [lambda, beta] = mfg_lambda_beta(a, moments_);
    return {mfg_pi(a, moments_), mfg_consumption(lambda, beta, kappa_)};
}

template <class F>
double MfgEquilibrium::population_mean(F&& fn) const {
    std::vector<double> v(types_.size());
    for (std::size_t k = 0; k < types_.size(); ++k) v[k] = weights_[k] * fn(k);
    return pairwise_sum(v);
}

double MfgEquilibrium::c_bar(double t) const {
    return population_mean([&](std::size_t k) { return strategies_[k].consumption(t); });
}

double MfgEquilibrium::int_c_bar(double t) const {
    return population_mean([&](std::size_t k) { return strategies_[k].consumption.integral(t); });
}

double MfgEquilibrium::c_tilde(double t) const {
    return std::exp(population_mean([&](std::size_t k) { return strategies_[k].consumption.log_rate(t); }));
}

double MfgEquilibrium::log_x0_bar() const {
    return population_mean([&](std::size_t k) { return std::log(types_[k].x0); });
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw DomainError("slope needs at least two matching points");
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        mx += std::log(x[k]);
        my += std::log(y[k]);
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double dx = std::log(x[k]) - mx;
        sxy += dx * (std::log(y[k]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

ConvergenceTable convergence_study(const TypeDistribution& d, const std::vector<std::size_t>& ns, double kappa,
                                   std::uint64_t seed, std::size_t replications,
                                   const std::vector<double>& times) {
    if (ns.empty() || replications == 0) throw DomainError("convergence study needs sizes and replications");
    for (std::size_t k = 0; k < ns.size(); ++k)
        if (ns[k] < 2 || (k > 0 && ns[k] <= ns[k - 1])) throw DomainError("sizes must be increasing and >= 2");

    const MfgEquilibrium mfg(d, kappa, 200000, seed);
    ConvergenceTable table;
    table.rows.resize(ns.size());
    for (std::size_t k = 0; k < ns.size(); ++k) table.rows[k].n = ns[k];

    for (std::size_t r = 0; r < replications; ++r) {
        const std::uint64_t rep_seed = seed + 0x9E3779B97F4A7C15ULL * (r + 1);
        const auto pool = sample_types(d, ns.back(), rep_seed);
        std::vector<EquilibriumStrategy> limit;
        limit.reserve(pool.size());
        for (const auto& a : pool) limit.push_back(mfg.strategy(a));

        for (std::size_t k = 0; k < ns.size(); ++k) {
            const std::span<const AgentType> agents(pool.data(), ns[k]);
            const auto eq = solve_nash(agents, kappa);
            double ep = 0.0, ec = 0.0;
            for (std::size_t i = 0; i < agents.size(); ++i) {
                ep = std::max(ep, std::abs(eq.pi[i] - limit[i].pi));
                for (double t : times)
                    ec = std::max(ec, std::abs(eq.strategies[i].consumption(t) - limit[i].consumption(t)));
            }
            table.rows[k].err_pi += ep / static_cast<double>(replications);
            table.rows[k].err_c += ec / static_cast<double>(replications);
        }
    }
    std::vector<double> x, yp, yc;
    for (const auto& row : table.rows) {
        x.push_back(static_cast<double>(row.n));
        yp.push_back(row.err_pi);
        yc.push_back(row.err_c);
    }
    if (ns.size() >= 2) {
        table.slope_pi = loglog_slope(x, yp);
        table.slope_c = loglog_slope(x, yc);
    }
    return table;
}

}  // namespace fpg

namespace fpg {

MfgResidualReport mfg_residuals(const MfgEquilibrium& eq, std::span<const AgentType> types,
                                std::span<const double> xs, std::span<const double> ts, double rho_shift) {
    const auto& m = eq.moments();
    auto shared = std::make_shared<MfgEquilibrium>(eq);
    PdeAggregates agg;
    agg.sigma_pi = m.sigma_pi_bar;
    agg.mu_pi = m.mu_pi_bar;
    agg.Sigma_pi_sq = m.Sigma_pi_sq_bar;
    agg.idio_weight = 0.0;
    agg.c_bar = [shared](double t) { return shared->c_bar(t); };
    agg.c_tilde = [shared](double t) { return shared->c_tilde(t); };

    MfgResidualReport rep;
    const double kappa = eq.kappa();
    double t_end = std::numeric_limits<double>::infinity();
    for (const auto& a : types) t_end = std::min(t_end, eq.strategy(a).consumption.blow_up_time());
    if (eq.law().is_discrete())
        for (const auto& a : eq.law().discrete_law().types)
            t_end = std::min(t_end, eq.strategy(a).consumption.blow_up_time());
    for (const auto& a : types) {
        const ConsumptionPath c = eq.strategy(a).consumption;
        const double rho = mfg_rho(a, m) + rho_shift;
        TimeFactor f;
        if (kappa != 1.0 && rho_shift == 0.0) {
            f = [c, a, kappa, ct = agg.c_tilde](double t) { return f_from_consumption(c, a, kappa, ct, t); };
        } else {
            f = [shared, c, a, rho](double t) {
                return f_integral_form(a, rho, shared->int_c_bar(t), c.integral(t), t);
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
