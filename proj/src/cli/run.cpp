#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include <json.hpp>
#include <omp.h>

#include "fpg/cli.hpp"
#include "fpg/consumption_analysis.hpp"
#include "fpg/errors.hpp"
#include "fpg/mfg_solver.hpp"
#include "fpg/nash_solver.hpp"
#include "fpg/simulator.hpp"

namespace fpg::cli {

namespace {

using nlohmann::ordered_json;

struct Artifacts {
    std::vector<std::pair<std::string, std::string>> csv;
    ordered_json diagnostics = ordered_json::object();
};

std::vector<double> grid_of(const Scenario& s) {
    std::vector<double> t(s.grid_points);
    for (std::size_t j = 0; j < s.grid_points; ++j)
        t[j] = s.horizon * static_cast<double>(j) / static_cast<double>(s.grid_points - 1);
    return t;
}

// Times on the grid where the path is still finite.
std::vector<double> admissible_times(const std::vector<double>& grid, const ConsumptionPath& c) {
    std::vector<double> out;
    for (double t : grid)
        if (t < c.blow_up_time()) out.push_back(t);
    return out;
}

ordered_json regime_json(const RegimeReport& r) {
    return {{"cell", r.cell},
            {"admissible", r.admissible},
            {"strong", r.strong_equilibrium},
            {"asymptote", to_string(r.asymptote)},
            {"limit", r.limit},
            {"t_star", std::isinf(r.t_star) ? ordered_json(nullptr) : ordered_json(r.t_star)},
            {"monotonicity", to_string(r.monotonicity)}};
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

void add_curves(Artifacts& art, const std::vector<std::string>& labels, const std::vector<ConsumptionPath>& paths,
                const std::vector<double>& grid) {
    CsvWriter w({"curve", "t", "c"});
    for (std::size_t k = 0; k < paths.size(); ++k)
        for (double t : admissible_times(grid, paths[k])) w.row().cell(labels[k]).cell(t).cell(paths[k](t));
    art.csv.emplace_back("consumption_curves.csv", w.str());
}

// Residual check on a small (x, t) grid inside the admissible window.
std::vector<double> residual_times(const Scenario& s, const std::vector<ConsumptionPath>& paths) {
    double end = s.horizon;
    for (const auto& c : paths) end = std::min(end, 0.5 * c.blow_up_time());
    return {0.0, 0.5 * end, end};
}

Artifacts run_nash(const Scenario& s) {
    Artifacts art;
    const auto eq = solve_nash(s.agents, s.kappa);
    const auto grid = grid_of(s);

    CsvWriter w({"agent", "pi", "rho", "lambda", "beta", "regime", "admissible", "strong", "t_star"});
    std::vector<std::string> labels;
    std::vector<ConsumptionPath> paths;
    ordered_json regimes = ordered_json::array();
    for (std::size_t i = 0; i < s.agents.size(); ++i) {
        const auto& c = eq.strategies[i].consumption;
        const auto r = classify(c);
        w.row().cell(i).cell(eq.pi[i]).cell(eq.rho[i]).cell(eq.lambda[i]).cell(eq.beta[i]).cell(r.describe());
        w.cell(yes_no(r.admissible)).cell(yes_no(r.strong_equilibrium)).cell(r.t_star);
        labels.push_back("agent_" + std::to_string(i));
        paths.push_back(c);
        regimes.push_back(regime_json(r));
    }
    art.csv.emplace_back("equilibrium.csv", w.str());
    add_curves(art, labels, paths, grid);

    const auto& g = eq.aggregates;
    auto& d = art.diagnostics;
    d["aggregates"] = {{"phi_sigma_n", g.phi_sigma_n},   {"psi_sigma_n", g.psi_sigma_n},
                       {"phi_mu_n", g.phi_mu_n},         {"psi_mu_n", g.psi_mu_n},
                       {"sigma_pi_bar", g.sigma_pi_bar}, {"mu_pi_bar", g.mu_pi_bar},
                       {"nu_pi_sq_bar", g.nu_pi_sq_bar}, {"Sigma_pi_sq_bar", g.Sigma_pi_sq_bar}};
    d["theta_crit"] = eq.theta_crit ? ordered_json(*eq.theta_crit) : ordered_json(nullptr);
    d["regimes"] = regimes;

    const std::vector<double> xs{0.5, 1.0, 2.0};
    const auto ts = residual_times(s, paths);
    const auto res = nash_residuals(s.agents, eq, xs, ts);
    d["residuals"] = {{"x", xs}, {"t", ts}, {"ode_max", res.ode}, {"pde_max", res.pde}};

    const auto fp = fixed_point_nash(s.agents, s.kappa);
    double gap = 0.0;
    for (std::size_t i = 0; i < s.agents.size(); ++i) gap = std::max(gap, std::abs(fp.pi[i] - eq.pi[i]));
    d["fixed_point"] = {{"iterations", fp.pi_iterations}, {"max_pi_gap", gap}};
    return art;
}

std::vector<AgentType> representatives(const Scenario& s) {
    if (!s.agents.empty()) return s.agents;
    if (s.distribution->is_discrete()) return s.distribution->discrete_law().types;
    return sample_types(*s.distribution, 8, s.seed);
}

Artifacts run_mfg(const Scenario& s) {
    Artifacts art;
    const MfgEquilibrium eq(*s.distribution, s.kappa, s.mc_samples, s.seed);
    const auto& m = eq.moments();
    const auto grid = grid_of(s);
    const auto types = representatives(s);

    CsvWriter w({"type", "delta", "theta", "epsilon", "mu", "nu", "sigma", "pi", "rho", "lambda", "beta", "regime",
                 "admissible", "strong", "t_star"});
    std::vector<std::string> labels;
    std::vector<ConsumptionPath> paths;
    for (std::size_t k = 0; k < types.size(); ++k) {
        const auto& a = types[k];
        const auto st = eq.strategy(a);
        const auto [lambda, beta] = mfg_lambda_beta(a, m);
        const auto r = classify(st.consumption);
        w.row().cell(k).cell(a.delta).cell(a.theta).cell(a.epsilon).cell(a.mu).cell(a.nu).cell(a.sigma);
        w.cell(st.pi).cell(mfg_rho(a, m)).cell(lambda).cell(beta).cell(r.describe());
        w.cell(yes_no(r.admissible)).cell(yes_no(r.strong_equilibrium)).cell(r.t_star);
        labels.push_back("type_" + std::to_string(k));
        paths.push_back(st.consumption);
    }
    art.csv.emplace_back("equilibrium.csv", w.str());
    add_curves(art, labels, paths, grid);

    auto& d = art.diagnostics;
    d["moments"] = {{"psi_sigma", m.psi_sigma},
                    {"phi_sigma", m.phi_sigma},
                    {"psi_mu", m.psi_mu},
                    {"phi_mu", m.phi_mu},
                    {"sigma_pi_bar", m.sigma_pi_bar},
                    {"mu_pi_bar", m.mu_pi_bar},
                    {"Sigma_pi_sq_bar", m.Sigma_pi_sq_bar},
                    {"eps_tilde", m.eps_tilde},
                    {"rho_delta_bar", m.rho_delta_bar},
                    {"theta_one_minus_delta_bar", m.theta_one_minus_delta_bar},
                    {"samples", m.samples}};
    d["standard_errors"] = {{"psi_sigma", m.se_psi_sigma},
                            {"phi_sigma", m.se_phi_sigma},
                            {"psi_mu", m.se_psi_mu},
                            {"phi_mu", m.se_phi_mu}};
    d["theta_crit"] = eq.theta_crit() ? ordered_json(*eq.theta_crit()) : ordered_json(nullptr);
    if (s.distribution->is_discrete()) {
        const auto& law = s.distribution->discrete_law();
        double sp = 0.0, mp = 0.0, Sp = 0.0;
        for (std::size_t k = 0; k < law.types.size(); ++k) {
            const auto& a = law.types[k];
            const double pi = mfg_pi(a, m);
            sp += law.weights[k] * a.sigma * pi;
            mp += law.weights[k] * a.mu * pi;
            Sp += law.weights[k] * a.total_variance() * pi * pi;
        }
        d["fixed_point_identities"] = {{"sigma_pi_gap", std::abs(sp - m.sigma_pi_bar)},
                                       {"mu_pi_gap", std::abs(mp - m.mu_pi_bar)},
                                       {"Sigma_pi_sq_gap", std::abs(Sp - m.Sigma_pi_sq_bar)}};
    }
    const std::vector<double> xs{0.5, 1.0, 2.0};
    const auto ts = residual_times(s, paths);
    const auto res = mfg_residuals(eq, types, xs, ts);
    d["residuals"] = {{"x", xs}, {"t", ts}, {"ode_max", res.ode}, {"pde_max", res.pde}};
    return art;
}

Artifacts run_best_response(const Scenario& s) {
    Artifacts art;
    const auto eq = solve_nash(s.agents, s.kappa);
    const std::size_t i = s.player;
    std::vector<Opponent> others;
    for (std::size_t k = 0; k < s.agents.size(); ++k)
        if (k != i) others.push_back({s.agents[k], eq.pi[k], eq.strategies[k].consumption});
    const auto& own = eq.strategies[i].consumption;
    const auto grid = admissible_times(grid_of(s), own);
    const auto br = best_response(s.agents[i], s.kappa, others, grid);

    CsvWriter w({"player", "pi_best_response", "pi_nash", "rho_best_response", "rho_nash"});
    w.row().cell(i).cell(br.pi).cell(eq.pi[i]).cell(br.rho).cell(eq.rho[i]);
    art.csv.emplace_back("equilibrium.csv", w.str());

    CsvWriter c({"t", "c_best_response", "c_nash", "f_best_response"});
    double gap = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        c.row().cell(grid[j]).cell(br.c[j]).cell(own(grid[j])).cell(br.f[j]);
        gap = std::max(gap, std::abs(br.c[j] - own(grid[j])) / own(grid[j]));
    }
    art.csv.emplace_back("consumption_curves.csv", c.str());
    art.diagnostics["pi_gap"] = std::abs(br.pi - eq.pi[i]);
    art.diagnostics["rho_gap"] = std::abs(br.rho - eq.rho[i]);
    art.diagnostics["max_relative_c_gap"] = gap;
    return art;
}

std::vector<Perturbation> perturbations_of(const Scenario& s) {
    std::vector<Perturbation> p{Perturbation{}};
    if (s.perturbations.empty()) {
        p.push_back({0.2, 1.0, "pi+0.2"});
        p.push_back({-0.2, 1.0, "pi-0.2"});
        p.push_back({0.0, 1.3, "c*1.3"});
    } else {
        p.insert(p.end(), s.perturbations.begin(), s.perturbations.end());
    }
    return p;
}

Artifacts run_simulate(const Scenario& s, const RunOptions& opt) {
    Artifacts art;
    SimConfig cfg;
    cfg.horizon = s.horizon;
    cfg.dt = opt.dt.value_or(s.dt);
    cfg.n_paths = opt.paths.value_or(s.paths);
    cfg.seed = s.seed;
    cfg.antithetic = s.antithetic;
    cfg.n_common = s.n_common;
    cfg.n_idio = s.n_idio;
    const auto pert = perturbations_of(s);

    std::vector<DriftResult> results;
    auto& d = art.diagnostics;
    if (s.agents.size() >= 2) {
        const auto eq = solve_nash(s.agents, s.kappa);
        results = q_drift_test(drift_setup(s.agents, eq), pert, cfg, s.checkpoints);
    } else {
        const MfgEquilibrium eq(*s.distribution, s.kappa, s.mc_samples, s.seed);
        results = q_drift_test(drift_setup(eq), pert, cfg, s.checkpoints);
        const auto rep = mf_consistency_test(
            *s.distribution, [&eq](const AgentType& a) { return eq.strategy(a); }, cfg, s.checkpoints);
        d["mf_consistency"] = {{"n_common", rep.n_common},
                               {"n_idio", rep.n_idio},
                               {"max_abs", rep.max_abs},
                               {"max_z", rep.max_z}};
    }

    CsvWriter w({"agent", "perturbation", "d_pi", "c_scale", "t0", "t1", "drift", "se"});
    ordered_json verdicts = ordered_json::array();
    for (const auto& r : results) {
        for (const auto& c : r.checkpoints)
            w.row()
                .cell(r.agent)
                .cell(r.perturbation.label)
                .cell(r.perturbation.d_pi)
                .cell(r.perturbation.c_scale)
                .cell(c.t0)
                .cell(c.t1)
                .cell(c.mean)
                .cell(c.se);
        const bool optimal = r.perturbation.d_pi == 0.0 && r.perturbation.c_scale == 1.0;
        verdicts.push_back({{"agent", r.agent},
                            {"perturbation", r.perturbation.label},
                            {"expect", optimal ? "martingale" : "supermartingale"},
                            {"pass", optimal ? r.zero_in_ci() : r.negative_beyond()}});
    }
    art.csv.emplace_back("drift.csv", w.str());
    d["paths"] = cfg.n_paths;
    d["dt"] = time_steps(cfg).second;
    d["drift_tests"] = verdicts;
    return art;
}

Artifacts run_classify(const Scenario& s) {
    Artifacts art;
    const auto grid = grid_of(s);
    CsvWriter w({"label", "kappa", "lambda", "beta", "cell", "admissible", "strong", "behaviour", "t_star",
                 "t_star_bisection"});
    std::vector<std::string> labels;
    std::vector<ConsumptionPath> paths;
    ordered_json checks = ordered_json::array();
    for (const auto& p : s.classify_paths) {
        const ConsumptionPath c(p.lambda, p.beta, p.kappa);
        const auto r = classify(c);
        w.row().cell(p.label).cell(p.kappa).cell(p.lambda).cell(p.beta).cell(r.cell);
        w.cell(yes_no(r.admissible)).cell(yes_no(r.strong_equilibrium)).cell(r.describe());
        w.cell(r.t_star).cell(blow_up_time_bisection(c));
        labels.push_back(p.label);
        paths.push_back(c);

        std::vector<double> window;
        const double end = std::min(s.horizon, 0.9 * c.blow_up_time());
        for (std::size_t j = 0; j < s.grid_points; ++j)
            window.push_back(end * static_cast<double>(j) / static_cast<double>(s.grid_points - 1));
        bool ok = true;
        try {
            monotonicity_check(c, window);
        } catch (const MismatchError&) {
            ok = false;
        }
        checks.push_back({{"label", p.label}, {"monotonicity_consistent", ok}});
    }
    art.csv.emplace_back("equilibrium.csv", w.str());
    add_curves(art, labels, paths, grid);
    art.diagnostics["monotonicity_checks"] = checks;
    return art;
}

Artifacts run_convergence(const Scenario& s) {
    Artifacts art;
    const auto t = convergence_study(*s.distribution, s.ns, s.kappa, s.seed, s.replications);
    CsvWriter w({"n", "err_pi", "err_c"});
    for (const auto& r : t.rows) w.row().cell(r.n).cell(r.err_pi).cell(r.err_c);
    art.csv.emplace_back("convergence.csv", w.str());
    art.diagnostics["replications"] = s.replications;
    art.diagnostics["slope_pi"] = t.slope_pi;
    art.diagnostics["slope_c"] = t.slope_c;
    return art;
}

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::nash: return "nash";
        case Mode::mfg: return "mfg";
        case Mode::best_response: return "best_response";
        case Mode::simulate: return "simulate";
        case Mode::classify: return "classify";
        case Mode::convergence: return "convergence";
    }
    return "?";
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw ConfigError("cannot write " + p.string());
}

}  // namespace

int run(const Scenario& scenario, const RunOptions& opt, std::ostream& err) {
    Scenario s = scenario;
    if (opt.seed) s.seed = *opt.seed;
    if (opt.threads > 0) omp_set_num_threads(opt.threads);
    try {
        Artifacts art;
        switch (s.mode) {
            case Mode::nash: art = run_nash(s); break;
            case Mode::mfg: art = run_mfg(s); break;
            case Mode::best_response: art = run_best_response(s); break;
            case Mode::simulate: art = run_simulate(s, opt); break;
            case Mode::classify: art = run_classify(s); break;
            case Mode::convergence: art = run_convergence(s); break;
        }

        std::filesystem::create_directories(opt.out);
        ordered_json files = ordered_json::array();
        if (opt.emit != Emit::json)
            for (const auto& [name, text] : art.csv) {
                write_file(opt.out / name, text);
                files.push_back(name);
            }
        if (opt.emit != Emit::csv) {
            ordered_json diag = {{"schema_version", schema_version}, {"scenario", s.name}, {"mode", mode_name(s.mode)}};
            diag.update(art.diagnostics);
            write_file(opt.out / "diagnostics.json", diag.dump(2) + "\n");
            files.push_back("diagnostics.json");
        }
        ordered_json manifest = {{"schema_version", schema_version},
                                 {"tool", "fpgame"},
                                 {"version", tool_version},
                                 {"compiler", __VERSION__},
                                 {"scenario", s.name},
                                 {"mode", mode_name(s.mode)},
                                 {"seed", s.seed},
                                 {"files", files}};
        if (s.mode == Mode::simulate) {
            manifest["paths"] = opt.paths.value_or(s.paths);
            manifest["dt"] = opt.dt.value_or(s.dt);
        }
        write_file(opt.out / "manifest.json", manifest.dump(2) + "\n");
        return 0;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 1;
    } catch (const DomainError& e) {
        err << "invalid input: " << e.what() << '\n';
        return 1;
    } catch (const DegenerateMarket& e) {
        err << "degenerate market: " << e.what() << '\n';
        return 2;
    } catch (const DegenerateConsumption& e) {
        err << "degenerate consumption: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 3;
    }
}

int run(const std::filesystem::path& scenario_file, const RunOptions& opt, std::ostream& err) {
    Scenario s;
    try {
        s = load_scenario(scenario_file);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 1;
    }
    return run(s, opt, err);
}

}  // namespace fpg::cli
