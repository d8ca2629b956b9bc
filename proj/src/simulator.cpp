#include "fpg/simulator.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <random>

#include "fpg/errors.hpp"
#include "fpg/numerics.hpp"
#include "fpg/rng.hpp"

namespace fpg {

namespace {

constexpr std::uint64_t wealth_tag = 0x7765616c7468ULL;
constexpr std::uint64_t drift_tag = 0x6472696674ULL;

// Five-point Gauss-Legendre on [0, 1].
constexpr std::array<double, 5> gauss_nodes{0.046910077030668, 0.230765344947158, 0.5, 0.769234655052842,
                                            0.953089922969332};
constexpr std::array<double, 5> gauss_weights{0.118463442528095, 0.239314335249683, 0.284444444444444,
                                              0.239314335249683, 0.118463442528095};

void check_config(const SimConfig& cfg) {
    if (!(cfg.dt > 0.0) || !(cfg.horizon > 0.0)) throw DomainError("dt and horizon must be positive");
    if (cfg.n_paths < 1 || cfg.n_common < 1 || cfg.n_idio < 1) throw DomainError("path counts must be positive");
    if (cfg.antithetic && cfg.n_paths % 2 != 0) throw DomainError("antithetic sampling needs an even path count");
}

// Serial and OpenMP loops over the same body; the body writes only to slots
// owned by its index, so both give identical results.
template <class Body>
void for_each_index(std::size_t n, Execution exec, Body&& body) {
    const auto N = static_cast<std::ptrdiff_t>(n);
    if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < N; ++i) body(static_cast<std::size_t>(i));
    } else {
        for (std::ptrdiff_t i = 0; i < N; ++i) body(static_cast<std::size_t>(i));
    }
}

// Normal source for one path; antithetic partners share the engine seed.
struct PathNormals {
    PathNormals(std::uint64_t seed, std::size_t path, bool antithetic, std::uint64_t tag)
        : rng(make_stream(seed, antithetic ? path / 2 : path, tag)),
          sign(antithetic && path % 2 == 1 ? -1.0 : 1.0) {}
    double operator()() { return sign * z(rng); }

    std::mt19937_64 rng;
    std::normal_distribution<double> z;
    double sign;
};

double mean_of(std::vector<double>& v) { return pairwise_sum(v) / static_cast<double>(v.size()); }

// Standard error of the mean; v is overwritten.
double se_of(std::vector<double>& v, double mean) {
    for (double& x : v) x = (x - mean) * (x - mean);
    const double var = pairwise_sum(v) / static_cast<double>(v.size() - 1);
    return std::sqrt(var / static_cast<double>(v.size()));
}

}  // namespace

std::pair<std::size_t, double> time_steps(const SimConfig& cfg) {
    check_config(cfg);
    const auto S = static_cast<std::size_t>(std::max(1.0, std::ceil(cfg.horizon / cfg.dt - 1e-9)));
    return {S, cfg.horizon / static_cast<double>(S)};
}

PathEnsemble simulate_wealth(std::span<const AgentType> agents, std::span<const Strategy> strategies,
                             const SimConfig& cfg, Execution exec) {
    if (agents.size() != strategies.size() || agents.empty())
        throw DomainError("need one strategy per agent");
    for (const auto& a : agents) validate_agent(a);
    for (const auto& s : strategies)
        if (!(s.consumption.blow_up_time() > cfg.horizon))
            throw BlowUpHorizon("consumption blows up before the simulation horizon");
    const auto [S, dt] = time_steps(cfg);
    const std::size_t n = agents.size();

    std::vector<std::size_t> rec;
    const std::size_t every = cfg.record_every == 0 ? S : cfg.record_every;
    for (std::size_t j = 0; j < S; j += every) rec.push_back(j);
    rec.push_back(S);

    PathEnsemble e;
    e.n_paths = cfg.n_paths;
    e.n_agents = n;
    for (std::size_t j : rec) e.times.push_back(static_cast<double>(j) * dt);
    const std::size_t R = rec.size();
    e.log_wealth.resize(cfg.n_paths * R * n);
    e.common.resize(cfg.n_paths * R);
    e.idio.resize(cfg.n_paths * R * n);

    std::vector<std::vector<double>> drift(n, std::vector<double>(S));
    for (std::size_t k = 0; k < n; ++k) {
        const auto& a = agents[k];
        const auto& s = strategies[k];
        for (std::size_t j = 0; j < S; ++j) {
            const double t0 = static_cast<double>(j) * dt, t1 = static_cast<double>(j + 1) * dt;
            drift[k][j] = (s.pi * a.mu - 0.5 * s.pi * s.pi * a.total_variance()) * dt -
                          s.consumption_scale * s.consumption.integral(t0, t1);
        }
    }

    const double sq = std::sqrt(dt);
    for_each_index(cfg.n_paths, exec, [&](std::size_t path) {
        PathNormals z(cfg.seed, path, cfg.antithetic, wealth_tag);
        std::vector<double> lx(n), W(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) lx[k] = std::log(agents[k].x0);
        double B = 0.0;
        std::size_t r = 0;
        auto record = [&] {
            const std::size_t base = path * R + r;
            e.common[base] = B;
            for (std::size_t k = 0; k < n; ++k) {
                e.log_wealth[base * n + k] = lx[k];
                e.idio[base * n + k] = W[k];
            }
            ++r;
        };
        for (std::size_t j = 0; j <= S; ++j) {
            if (r < R && rec[r] == j) record();
            if (j == S) break;
            const double dB = sq * z();
            B += dB;
            for (std::size_t k = 0; k < n; ++k) {
                const double dW = sq * z();
                W[k] += dW;
                const auto& a = agents[k];
                lx[k] += drift[k][j] + strategies[k].pi * (a.nu * dW + a.sigma * dB);
            }
        }
    });
    return e;
}

std::vector<double> relative_wealth(const PathEnsemble& e, std::size_t agent, double theta) {
    const std::size_t n = e.n_agents, R = e.times.size();
    if (n < 2 && theta != 0.0) throw DomainError("relative wealth needs at least two agents");
    std::vector<double> out(e.n_paths * R);
    for (std::size_t p = 0; p < e.n_paths; ++p)
        for (std::size_t j = 0; j < R; ++j) {
            double others = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                if (k != agent) others += e.log_x(p, j, k);
            const double bench = n > 1 ? others / static_cast<double>(n - 1) : 0.0;
            out[p * R + j] = std::exp(e.log_x(p, j, agent) - theta * bench);
        }
    return out;
}

DriftSetup drift_setup(std::span<const AgentType> agents, const NashEquilibrium& eq) {
    DriftSetup s;
    s.agents.assign(agents.begin(), agents.end());
    s.pi = eq.pi;
    s.kappa = eq.kappa;
    const std::size_t n = agents.size();
    auto paths = std::make_shared<std::vector<ConsumptionPath>>();
    for (const auto& st : eq.strategies) paths->push_back(st.consumption);
    s.consumption = *paths;
    const double w = 1.0 / (static_cast<double>(n) - 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const AgentType a = agents[i];
        const double kappa = eq.kappa, rho = eq.rho[i];
        auto c_tilde = [paths, i, w](double t) {
            double sum = 0.0;
            for (std::size_t k = 0; k < paths->size(); ++k)
                if (k != i) sum += (*paths)[k].log_rate(t);
            return std::exp(sum * w);
        };
        if (kappa != 1.0) {
            s.f.push_back([paths, i, a, kappa, c_tilde](double t) {
                return f_from_consumption((*paths)[i], a, kappa, c_tilde, t);
            });
        } else {
            s.f.push_back([paths, i, a, rho, w](double t) {
                double int_bar = 0.0;
                for (std::size_t k = 0; k < paths->size(); ++k)
                    if (k != i) int_bar += (*paths)[k].integral(t);
                return f_integral_form(a, rho, int_bar * w, (*paths)[i].integral(t), t);
            });
        }
    }
    return s;
}

DriftSetup drift_setup(const MfgEquilibrium& eq) {
    if (!eq.law().is_discrete()) throw DomainError("mean-field drift test needs a discrete type law");
    DriftSetup s;
    s.mean_field = true;
    s.kappa = eq.kappa();
    const auto& m = eq.moments();
    auto shared = std::make_shared<MfgEquilibrium>(eq);
    s.mf_sigma_pi_bar = m.sigma_pi_bar;
    const double log_x0 = eq.log_x0_bar();
    const double eta = m.mu_pi_bar - 0.5 * m.Sigma_pi_sq_bar;
    s.mf_log_bar = [shared, log_x0, eta](double t) { return log_x0 + eta * t - shared->int_c_bar(t); };
    s.mf_c_tilde = [shared](double t) { return shared->c_tilde(t); };
    for (const auto& a : eq.law().discrete_law().types) {
        const auto st = eq.strategy(a);
        s.agents.push_back(a);
        s.pi.push_back(st.pi);
        s.consumption.push_back(st.consumption);
        const double kappa = eq.kappa();
        const ConsumptionPath c = st.consumption;
        if (kappa != 1.0) {
            s.f.push_back([shared, c, a, kappa](double t) {
                return f_from_consumption(c, a, kappa, [&](double u) { return shared->c_tilde(u); }, t);
            });
        } else {
            const double rho = mfg_rho(a, m);
            s.f.push_back([shared, c, a, rho](double t) {
                return f_integral_form(a, rho, shared->int_c_bar(t), c.integral(t), t);
            });
        }
    }
    return s;
}

bool DriftResult::zero_in_ci(double z) const {
    for (const auto& c : checkpoints)
        if (std::abs(c.mean) > z * c.se) return false;
    return true;
}

bool DriftResult::negative_beyond(double z) const {
    for (const auto& c : checkpoints)
        if (!(c.mean < -z * c.se)) return false;
    return true;
}

std::vector<DriftResult> q_drift_test(const DriftSetup& setup, std::span<const Perturbation> perturbations,
                                      const SimConfig& cfg, std::size_t n_checkpoints, Execution exec) {
    const std::size_t n = setup.agents.size();
    if (n == 0 || perturbations.empty()) throw DomainError("drift test needs agents and perturbations");
    if (!setup.mean_field && n < 2) throw DomainError("n-player drift test needs at least two agents");
    for (const auto& c : setup.consumption)
        if (!(c.blow_up_time() > cfg.horizon)) throw BlowUpHorizon("consumption blows up before the horizon");
    const auto [S, dt] = time_steps(cfg);
    if (n_checkpoints < 1 || S % n_checkpoints != 0)
        throw DomainError("number of steps must be a multiple of the number of checkpoints");
    const std::size_t stride = S / n_checkpoints;
    const double Delta = dt * static_cast<double>(stride);
    const std::size_t P = perturbations.size();
    const std::size_t pairs = n * P;
    const double w = setup.mean_field ? 0.0 : 1.0 / (static_cast<double>(n) - 1.0);

    auto time = [dt](std::size_t j) { return static_cast<double>(j) * dt; };

    // Deterministic per-step ingredients.
    std::vector<std::vector<double>> eq_drift(n, std::vector<double>(S));
    for (std::size_t k = 0; k < n; ++k) {
        const auto& a = setup.agents[k];
        const double pi = setup.pi[k];
        for (std::size_t j = 0; j < S; ++j)
            eq_drift[k][j] = (pi * a.mu - 0.5 * pi * pi * a.total_variance()) * dt -
                             setup.consumption[k].integral(time(j), time(j + 1));
    }
    std::vector<double> mf_bar(setup.mean_field ? S + 1 : 0);
    for (std::size_t j = 0; j < mf_bar.size(); ++j) mf_bar[j] = setup.mf_log_bar(time(j));

    struct PairData {
        std::size_t agent;
        double pi, p, theta;
        // Per-step variance of the noise in log Xhat.
        double eta_var;
        std::vector<double> f, drift;
        // E[int_{t_j}^{t_j+1} V ds | F_{t_j}] = Xhat_{t_j}^p * v_step[j]
        std::vector<double> v_step;
    };
    std::vector<PairData> pd(pairs);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = setup.agents[i];
        std::vector<double> f(S + 1);
        for (std::size_t j = 0; j <= S; ++j) f[j] = setup.f[i](time(j));
        const double p = a.power();
        for (std::size_t v = 0; v < P; ++v) {
            const auto& pert = perturbations[v];
            auto& d = pd[i * P + v];
            d.agent = i;
            d.pi = setup.pi[i] + pert.d_pi;
            d.p = p;
            d.theta = a.theta;
            {
                double common = d.pi * a.sigma, idio = d.pi * d.pi * a.nu * a.nu;
                if (setup.mean_field) {
                    common -= a.theta * setup.mf_sigma_pi_bar;
                } else {
                    for (std::size_t k = 0; k < n; ++k) {
                        if (k == i) continue;
                        const auto& b = setup.agents[k];
                        common -= a.theta * w * setup.pi[k] * b.sigma;
                        idio += a.theta * a.theta * w * w * setup.pi[k] * setup.pi[k] * b.nu * b.nu;
                    }
                }
                d.eta_var = (common * common + idio) * dt;
            }
            d.f = f;
            d.drift.resize(S);
            d.v_step.resize(S);
            const double own_rate = d.pi * a.mu - 0.5 * d.pi * d.pi * a.total_variance();
            // Deterministic part of log Xhat_s - log Xhat_{t_j} for s in the step.
            auto mean_move = [&](std::size_t j, double s) {
                const double t0 = time(j);
                double m = own_rate * (s - t0) - pert.c_scale * setup.consumption[i].integral(t0, s);
                if (setup.mean_field) {
                    m -= a.theta * (setup.mf_log_bar(s) - mf_bar[j]);
                } else {
                    double b = 0.0;
                    for (std::size_t k = 0; k < n; ++k) {
                        if (k == i) continue;
                        const auto& o = setup.agents[k];
                        b += (setup.pi[k] * o.mu - 0.5 * setup.pi[k] * setup.pi[k] * o.total_variance()) * (s - t0) -
                             setup.consumption[k].integral(t0, s);
                    }
                    m -= a.theta * w * b;
                }
                return m;
            };
            auto log_c_tilde_at = [&](double s) {
                if (setup.mean_field) return std::log(setup.mf_c_tilde(s));
                double z = 0.0;
                for (std::size_t k = 0; k < n; ++k)
                    if (k != i) z += setup.consumption[k].log_rate(s);
                return z * w;
            };
            auto v_coef = [&](double s) {
                const double log_chat =
                    std::log(pert.c_scale) + setup.consumption[i].log_rate(s) - a.theta * log_c_tilde_at(s);
                return std::pow(setup.f[i](s), setup.kappa) / a.epsilon * std::exp(p * log_chat) / p;
            };
            const double var_rate = d.eta_var / dt;
            for (std::size_t j = 0; j < S; ++j) {
                double acc = 0.0;
                for (std::size_t g = 0; g < gauss_nodes.size(); ++g) {
                    const double s = time(j) + dt * gauss_nodes[g];
                    const double u = s - time(j);
                    acc += gauss_weights[g] * v_coef(s) * std::exp(p * mean_move(j, s) + 0.5 * p * p * var_rate * u);
                }
                d.v_step[j] = acc * dt;
                d.drift[j] = own_rate * dt - pert.c_scale * setup.consumption[i].integral(time(j), time(j + 1));
            }
        }
    }

    // Per path and pair, the control-variate-adjusted drift at each checkpoint.
    const std::size_t samples = cfg.antithetic ? cfg.n_paths / 2 : cfg.n_paths;
    std::vector<double> out(cfg.n_paths * pairs * n_checkpoints);
    const double sq = std::sqrt(dt);

    for_each_index(cfg.n_paths, exec, [&](std::size_t path) {
        PathNormals z(cfg.seed, path, cfg.antithetic, drift_tag);
        std::vector<double> lx(n), dW(n, 0.0), incr(n, 0.0), lxp(pairs), M(pairs, 0.0), Vsum(pairs, 0.0), bench(n);
        std::vector<double> qm_prev(pairs);
        for (std::size_t k = 0; k < n; ++k) lx[k] = std::log(setup.agents[k].x0);
        for (std::size_t q = 0; q < pairs; ++q) lxp[q] = lx[pd[q].agent];
        double B = 0.0;
        double* slot = out.data() + path * pairs * n_checkpoints;

        for (std::size_t j = 0; j <= S; ++j) {
            // Benchmarks at t_j.
            if (setup.mean_field) {
                for (std::size_t i = 0; i < n; ++i) bench[i] = mf_bar[j] + setup.mf_sigma_pi_bar * B;
            } else {
                double total = 0.0;
                for (std::size_t k = 0; k < n; ++k) total += lx[k];
                for (std::size_t i = 0; i < n; ++i) bench[i] = (total - lx[i]) * w;
            }
            double dB = 0.0;
            if (j < S) {
                dB = sq * z();
                for (std::size_t k = 0; k < n; ++k) {
                    const auto& a = setup.agents[k];
                    dW[k] = sq * z();
                    incr[k] = setup.pi[k] * (a.nu * dW[k] + a.sigma * dB);
                }
            }
            double incr_total = 0.0;
            for (std::size_t k = 0; k < n; ++k) incr_total += incr[k];

            for (std::size_t q = 0; q < pairs; ++q) {
                const auto& d = pd[q];
                const std::size_t i = d.agent;
                const double zp = std::exp(d.p * (lxp[q] - d.theta * bench[i]));
                if (j % stride == 0) {
                    const double Q = zp * d.f[j] / d.p + Vsum[q];
                    const double qm = Q - M[q];
                    const std::size_t k = j / stride;
                    if (k > 0) slot[q * n_checkpoints + k - 1] = (qm - qm_prev[q]) / Delta;
                    qm_prev[q] = qm;
                }
                if (j == S) continue;
                Vsum[q] += zp * d.v_step[j];
                const auto& a = setup.agents[i];
                const double own_noise = d.pi * (a.nu * dW[i] + a.sigma * dB);
                const double bench_noise = setup.mean_field ? setup.mf_sigma_pi_bar * dB : (incr_total - incr[i]) * w;
                const double eta = own_noise - d.theta * bench_noise;
                // First- and second-order Ito terms of U along the path; both have zero conditional mean.
                M[q] += zp * d.f[j] * (eta + 0.5 * d.p * (eta * eta - d.eta_var));
                lxp[q] += d.drift[j] + own_noise;
            }
            if (j == S) break;
            B += dB;
            for (std::size_t k = 0; k < n; ++k) lx[k] += eq_drift[k][j] + incr[k];
        }
    });

    std::vector<DriftResult> results(pairs);
    std::vector<double> col(samples);
    for (std::size_t q = 0; q < pairs; ++q) {
        results[q].agent = pd[q].agent;
        results[q].perturbation = perturbations[q % P];
        for (std::size_t k = 0; k < n_checkpoints; ++k) {
            for (std::size_t s = 0; s < samples; ++s) {
                if (cfg.antithetic) {
                    const double a = out[((2 * s) * pairs + q) * n_checkpoints + k];
                    const double b = out[((2 * s + 1) * pairs + q) * n_checkpoints + k];
                    col[s] = 0.5 * (a + b);
                } else {
                    col[s] = out[(s * pairs + q) * n_checkpoints + k];
                }
            }
            DriftCheckpoint c;
            c.t0 = Delta * static_cast<double>(k);
            c.t1 = Delta * static_cast<double>(k + 1);
            c.mean = mean_of(col);
            c.se = se_of(col, c.mean);
            results[q].checkpoints.push_back(c);
        }
    }
    return results;
}

ConsistencyReport mf_consistency_test(const TypeDistribution& d, const StrategyMap& strategy,
                                      const SimConfig& cfg, std::size_t n_checkpoints, Execution exec) {
    check_config(cfg);
    if (n_checkpoints < 1) throw DomainError("need at least one checkpoint");
    if (cfg.n_idio < 2) throw DomainError("need at least two idiosyncratic draws");
    const std::size_t K = n_checkpoints;
    std::vector<double> times(K);
    for (std::size_t k = 0; k < K; ++k) times[k] = cfg.horizon * static_cast<double>(k + 1) / static_cast<double>(K);

    // Population averages of the strategy map: exact for discrete laws,
    // a large fixed sample otherwise.
    std::vector<AgentType> types;
    std::vector<double> weights;
    if (d.is_discrete()) {
        types = d.discrete_law().types;
        weights = d.discrete_law().weights;
    } else {
        types = sample_types(d, 100000, cfg.seed ^ 0x706f70ULL);
        weights.assign(types.size(), 1.0 / static_cast<double>(types.size()));
    }
    double log_x0 = 0.0, eta = 0.0, sig = 0.0;
    std::vector<double> int_c(K, 0.0);
    for (std::size_t k = 0; k < types.size(); ++k) {
        const auto& a = types[k];
        const auto st = strategy(a);
        if (!(st.consumption.blow_up_time() > cfg.horizon))
            throw BlowUpHorizon("consumption blows up before the horizon");
        log_x0 += weights[k] * std::log(a.x0);
        eta += weights[k] * (st.pi * a.mu - 0.5 * st.pi * st.pi * a.total_variance());
        sig += weights[k] * st.pi * a.sigma;
        for (std::size_t c = 0; c < K; ++c) int_c[c] += weights[k] * st.consumption.integral(times[c]);
    }

    ConsistencyReport rep;
    rep.times = times;
    rep.n_common = cfg.n_common;
    rep.n_idio = cfg.n_idio;
    std::vector<double> abs_err(cfg.n_common * K), z_err(cfg.n_common * K);

    for_each_index(cfg.n_common, exec, [&](std::size_t b) {
        auto rng = make_stream(cfg.seed, b, 0);
        std::normal_distribution<double> z;
        std::vector<double> B(K);
        double prev_t = 0.0, acc = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            acc += std::sqrt(times[k] - prev_t) * z(rng);
            B[k] = acc;
            prev_t = times[k];
        }
        std::vector<double> vals(cfg.n_idio * K);
        for (std::size_t m = 0; m < cfg.n_idio; ++m) {
            auto r = make_stream(cfg.seed, b, m + 1);
            std::normal_distribution<double> zi;
            const AgentType a = d.draw(r);
            const auto st = strategy(a);
            const double drift = st.pi * a.mu - 0.5 * st.pi * st.pi * a.total_variance();
            double W = 0.0, tp = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                W += std::sqrt(times[k] - tp) * zi(r);
                tp = times[k];
                vals[k * cfg.n_idio + m] = std::log(a.x0) + drift * times[k] - st.consumption.integral(times[k]) +
                                           st.pi * a.nu * W + st.pi * a.sigma * B[k];
            }
        }
        for (std::size_t k = 0; k < K; ++k) {
            std::vector<double> col(vals.begin() + static_cast<std::ptrdiff_t>(k * cfg.n_idio),
                                    vals.begin() + static_cast<std::ptrdiff_t>((k + 1) * cfg.n_idio));
            const double est = mean_of(col);
            const double se = se_of(col, est);
            const double analytic = log_x0 + eta * times[k] - int_c[k] + sig * B[k];
            const double err = std::abs(est - analytic);
            abs_err[b * K + k] = err;
            z_err[b * K + k] = se > 0.0 ? err / se : (err == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        }
    });
    for (std::size_t q = 0; q < abs_err.size(); ++q) {
        rep.max_abs = std::max(rep.max_abs, abs_err[q]);
        rep.max_z = std::max(rep.max_z, z_err[q]);
    }
    return rep;
}

}  // namespace fpg
