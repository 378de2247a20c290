// Command-line front end: solve, sweep, continua, thresholds, verify, conjecture.

#include "indefshoot/io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace indefshoot;

namespace {

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

struct Common {
    std::string problem;
    std::string out = ".";
    unsigned threads = 0;
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double refine_bound = std::numeric_limits<double>::quiet_NaN();
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--problem", c.problem, "problem definition JSON (default: sin(pi t) on [0,3], g = s^2(1-s))");
    app->add_option("--out", c.out, "output directory")->capture_default_str();
    app->add_option("--threads", c.threads, "worker cap (default INDEFSHOOT_THREADS or all cores)");
    app->add_option("--rtol", c.rel_tol, "integrator relative tolerance")->capture_default_str();
    app->add_option("--atol", c.abs_tol, "integrator absolute tolerance")->capture_default_str();
    app->add_option("--refine-bound", c.refine_bound, "continuum refinement bound");
}

Problem load(const Common& c) { return c.problem.empty() ? parse_problem(builtin_problem_json()) : load_problem(c.problem); }

void apply(const Common& c, SolverConfig& s) {
    s.shoot.integrator.rel_tol = c.rel_tol;
    s.shoot.integrator.abs_tol = c.abs_tol;
    if (!std::isnan(c.refine_bound)) s.shoot.refine_bound = c.refine_bound;
}

json base_config(const std::string& command, const Common& c, const Problem& pr, const SolverConfig& s) {
    // threads and the output directory do not change results and stay out of the hash
    return json{{"command", command}, {"problem", pr.source}, {"tolerances", tolerances_json(s)}};
}

std::ofstream open_out(const Common& c, const std::string& name) {
    fs::create_directories(c.out);
    const fs::path path = fs::path(c.out) / name;
    std::ofstream os(path);
    if (!os) throw AdmissibilityError("cannot write '" + path.string() + "'");
    return os;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ParameterError("not a number in list: '" + item + "'");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

struct SolveArgs {
    Common c;
    std::string bc = "neumann";
    double lambda = nan_v, mu = nan_v, kappa = nan_v;
};

int run_solve(const SolveArgs& a) {
    const Problem pr = load(a.c);
    const auto bc = BoundaryConditionType::parse(a.bc);
    SolverConfig cfg;
    apply(a.c, cfg);
    json config = base_config("solve", a.c, pr, cfg);
    config["bc"] = bc.name();
    config["lambda"] = a.lambda;
    config["mu"] = a.mu;
    if (!std::isnan(a.kappa)) config["kappa"] = a.kappa;
    const json prov = make_provenance(config);

    SolveDiagnostics dg;
    const auto sols = solve_multiplicity(pr.weight, pr.g, {a.lambda, a.mu}, bc, a.kappa, cfg, &dg);

    open_out(a.c, "solutions.json") << solutions_json(sols, prov).dump(2) << '\n';
    for (std::size_t i = 0; i < sols.size(); ++i) {
        auto os = open_out(a.c, "sol_" + std::to_string(i) + ".csv");
        write_trajectory_csv(os, sols[i].trajectory, provenance_line(prov));
    }
    std::printf("%zu solution(s), %s, lambda=%g mu=%g\n", sols.size(), bc.name().c_str(), a.lambda, a.mu);
    for (std::size_t i = 0; i < sols.size(); ++i) {
        const auto& s = sols[i];
        std::printf("  [%zu] u(0)=%.12f u'(0)=%.6g u(T)=%.12f u'(T)=%.6g bands=(%d,%d) eq=%.2e bc=%.2e/%.2e\n", i,
                    s.u0(), s.du0(), s.uT(), s.duT(), s.band_index_left, s.band_index_right, s.residuals.equation,
                    s.residuals.bc_left, s.residuals.bc_right);
    }
    for (std::size_t i = 0; i < dg.kappas.size(); ++i)
        std::printf("  section %.6g: %zu\n", dg.kappas[i], dg.counts_per_kappa[i]);
    for (const auto& w : dg.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    return 0;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
    Common c;
    std::string bc = "neumann";
    std::string param = "mu";
    double lambda = nan_v, mu = nan_v;
    double min = nan_v, max = nan_v;
    std::size_t steps = 121;
    double kappa = nan_v;
    int refine_rounds = 6;
    std::string scan_lambdas;
};

int run_sweep(const SweepArgs& a) {
    const Problem pr = load(a.c);
    SweepConfig sc;
    sc.bc = BoundaryConditionType::parse(a.bc);
    if (a.param == "mu") {
        sc.parameter = SweepParameter::mu;
        if (std::isnan(a.lambda) && a.scan_lambdas.empty()) throw ParameterError("sweep over mu requires --lambda");
        sc.fixed = a.lambda;
    } else if (a.param == "lambda") {
        sc.parameter = SweepParameter::lambda;
        if (std::isnan(a.mu)) throw ParameterError("sweep over lambda requires --mu");
        if (!a.scan_lambdas.empty()) throw ParameterError("--scan-lambdas applies to mu sweeps");
        sc.fixed = a.mu;
    } else {
        throw ParameterError("--param must be mu or lambda");
    }
    if (std::isnan(a.min) || std::isnan(a.max)) throw ParameterError("sweep requires --min and --max");
    sc.min = a.min;
    sc.max = a.max;
    sc.n_steps = a.steps;
    sc.kappa = a.kappa;
    sc.refine_rounds = a.refine_rounds;
    apply(a.c, sc.solver);
    if (std::isnan(a.c.refine_bound)) sc.solver.shoot.refine_bound = SweepConfig::default_solver().shoot.refine_bound;
    sc.validate();

    json config = base_config("sweep", a.c, pr, sc.solver);
    config["bc"] = sc.bc.name();
    config["parameter"] = a.param;
    config["fixed"] = sc.fixed;
    config["range"] = {sc.min, sc.max};
    config["n_steps"] = sc.n_steps;
    config["refine_rounds"] = sc.refine_rounds;
    if (!std::isnan(a.kappa)) config["kappa"] = a.kappa;

    if (!a.scan_lambdas.empty()) {
        // lambda grid x mu grid: existence window and closed branches per lambda
        const auto lambdas = parse_list(a.scan_lambdas);
        config["scan_lambdas"] = lambdas;
        const json prov = make_provenance(config);
        auto os = open_out(a.c, "scan.csv");
        os << "# " << provenance_line(prov) << '\n';
        os << "lambda,m0,m1,truncated_low,truncated_high,nontrivial_branches,closed_branches\n";
        std::vector<IsolaScanRow> rows;
        for (double lam : lambdas) {
            SweepConfig s = sc;
            s.fixed = lam;
            const auto r = sweep(pr.weight, pr.g, s);
            const auto win = detect_existence_window(r);
            IsolaScanRow row{lam, 0, 0};
            for (const auto* b : r.nontrivial()) {
                ++row.nontrivial;
                row.closed += b->closed ? 1 : 0;
            }
            rows.push_back(row);
            char buf[256];
            if (win)
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d,%d,%zu,%zu\n", lam, win->m0, win->m1,
                              win->truncated_low, win->truncated_high, row.nontrivial, row.closed);
            else
                std::snprintf(buf, sizeof buf, "%.17g,,,,,%zu,%zu\n", lam, row.nontrivial, row.closed);
            os << buf;
            if (win)
                std::printf("lambda=%g window [%g, %g]%s%s, %zu closed branch(es)\n", lam, win->m0, win->m1,
                            win->truncated_low ? " (truncated low)" : "", win->truncated_high ? " (truncated high)" : "",
                            row.closed);
            else
                std::printf("lambda=%g no nontrivial solution in range\n", lam);
        }
        if (const auto lb = isola_break_lambda(rows)) std::printf("closed branch lost at lambda=%g\n", *lb);
        return 0;
    }

    const json prov = make_provenance(config);
    const auto r = sweep(pr.weight, pr.g, sc);
    {
        auto os = open_out(a.c, "branches.csv");
        write_branches_csv(os, r, provenance_line(prov));
    }
    open_out(a.c, "summary.json") << sweep_summary_json(r, prov).dump(2) << '\n';
    std::size_t closed = 0;
    for (const auto* b : r.nontrivial()) {
        closed += b->closed ? 1 : 0;
        std::printf("branch %zu: %zu points%s%s", b->id, b->points.size(), b->closed ? ", closed" : "",
                    b->fragile ? ", fragile" : "");
        for (const auto& t : b->tags) std::printf(" | %s at %.6g", to_string(t.kind), t.mu);
        std::printf("\n");
    }
    if (const auto w = detect_existence_window(r))
        std::printf("existence window [%g, %g]%s%s\n", w->m0, w->m1, w->truncated_low ? " (truncated low)" : "",
                    w->truncated_high ? " (truncated high)" : "");
    else
        std::printf("no nontrivial solution in range\n");
    std::printf("%zu closed branch(es)\n", closed);
    for (const auto& l : r.log) std::fprintf(stderr, "%s\n", l.c_str());
    return 0;
}

// ---------------------------------------------------------------------------

struct ContinuaArgs {
    Common c;
    double lambda = nan_v, mu = nan_v, kappa = nan_v;
};

int run_continua(const ContinuaArgs& a) {
    const Problem pr = load(a.c);
    const auto& w = pr.weight;
    SolverConfig cfg;
    apply(a.c, cfg);
    const ParameterPair p{a.lambda, a.mu};
    p.validate();
    const double kappa = std::isnan(a.kappa) ? detail::default_kappa(w) : a.kappa;
    json config = base_config("continua", a.c, pr, cfg);
    config["lambda"] = a.lambda;
    config["mu"] = a.mu;
    config["kappa"] = kappa;
    const json prov = make_provenance(config);

    struct Item {
        const char* file;
        InitialSet set;
    };
    const Item items[] = {
        {"continuum_X01_forward.csv", InitialSet::x01(0.0)},
        {"continuum_X01_backward.csv", InitialSet::x01(w.T())},
        {"continuum_Y_GE0.csv", InitialSet::y_ge0(default_y_cap(w, pr.g, a.lambda, true))},
        {"continuum_Y_LE0.csv", InitialSet::y_le0(w.T(), default_y_cap(w, pr.g, a.lambda, false))},
    };
    for (const auto& it : items) {
        const Continuum c = shoot_set(w, pr.g, p, it.set, kappa, cfg.shoot);
        const CrossingStructure cs = detect_crossings(c);
        auto os = open_out(a.c, it.file);
        write_continuum_csv(os, c, provenance_line(prov));
        std::printf("%-28s %zu samples, %zu interior band(s)", it.file, c.samples.size(), cs.interior_bands.size());
        for (const auto& b : cs.interior_bands) std::printf(" [%.6g, %.6g]", b.s_lo, b.s_hi);
        std::printf("\n");
        for (const auto& msg : c.warnings) std::fprintf(stderr, "warning: %s\n", msg.c_str());
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct ThresholdArgs {
    Common c;
    std::optional<double> nu0, nu1, t1, nuT, tT, nu2, nu_sigma, t2, omega, kappa, lambda;
};

int run_thresholds(const ThresholdArgs& a) {
    const Problem pr = load(a.c);
    const auto& w = pr.weight;
    const auto& g = pr.g;
    int printed = 0;
    auto report = [&](const char* name, auto&& f) {
        try {
            std::printf("%-22s %.12g\n", name, f());
        } catch (const ParameterError& e) {
            std::printf("%-22s n/a (%s)\n", name, e.what());
        }
        ++printed;
    };
    if (a.nu0 && a.nu1 && a.t1) report("lambda_star", [&] { return threshold_lambda_star(w, g, *a.nu0, *a.nu1, *a.t1); });
    if (a.nu1 && a.nuT && a.tT)
        report("lambda_star_star", [&] { return threshold_lambda_star_star(w, g, *a.nu1, *a.nuT, *a.tT); });
    if (a.nu2 && a.nu_sigma && a.t2) {
        report("mu_star", [&] {
            double omega;
            if (a.omega) omega = *a.omega;
            else if (a.lambda) omega = default_omega_sigma(w, g, *a.lambda);
            else throw ParameterError("needs --omega or --lambda");
            const double kappa = a.kappa ? *a.kappa : w.tau();
            return threshold_mu_star(w, g, *a.nu2, *a.nu_sigma, *a.t2, omega, kappa);
        });
    }
    if (a.lambda) {
        report("delta_tilde", [&] { return delta_tilde(w, g, *a.lambda); });
        report("delta_tilde_right", [&] { return delta_tilde_right(w, g, *a.lambda); });
        report("neumann_necessary_mu", [&] { return neumann_necessary_mu(w, *a.lambda); });
    }
    if (printed == 0)
        throw ParameterError("nothing to compute: give --nu0 --nu1 --t1, --nu1 --nuT --tT, --nu2 --nu-sigma --t2 or --lambda");
    return 0;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
    Common c;
    double lambda = nan_v, mu = nan_v;
    std::size_t samples = 1000;
    std::uint64_t seed = 1;
};

int run_verify(const VerifyArgs& a) {
    const Problem pr = load(a.c);
    SolverConfig cfg;
    apply(a.c, cfg);
    const ParameterPair p{a.lambda, a.mu};
    p.validate();
    json config = base_config("verify", a.c, pr, cfg);
    config["lambda"] = a.lambda;
    config["mu"] = a.mu;
    config["samples"] = a.samples;
    config["seed"] = a.seed;
    const json prov = make_provenance(config);
    const auto trap = check_trapping(pr.weight, pr.g, p, a.samples, a.seed, cfg.shoot.integrator);
    const auto proh = check_prohibited(pr.weight, pr.g, p, a.samples, a.seed, cfg.shoot.integrator);
    json regions = json::array();
    bool ok = true;
    for (const auto* rep : {&trap, &proh})
        for (const auto& r : rep->regions) {
            std::printf("%-36s %zu/%zu %s\n", r.region.c_str(), r.passed, r.total, r.ok() ? "ok" : "FAIL");
            regions.push_back(json{{"region", r.region}, {"passed", r.passed}, {"total", r.total}});
            ok = ok && r.ok();
        }
    open_out(a.c, "verify.json") << json{{"provenance", prov}, {"regions", regions}, {"ok", ok}}.dump(2) << '\n';
    return ok ? 0 : 2;
}

// ---------------------------------------------------------------------------

struct ConjectureArgs {
    Common c;
    std::string bc = "neumann";
    double lambda = nan_v, mu = nan_v;
    std::string kappas;
};

int run_conjecture(const ConjectureArgs& a) {
    const Problem pr = load(a.c);
    const auto bc = BoundaryConditionType::parse(a.bc);
    SolverConfig cfg;
    apply(a.c, cfg);
    const auto kappas = parse_list(a.kappas);
    json config = base_config("conjecture", a.c, pr, cfg);
    config["bc"] = bc.name();
    config["lambda"] = a.lambda;
    config["mu"] = a.mu;
    config["kappas"] = kappas;
    const json prov = make_provenance(config);

    const auto rep = conjecture_scan(pr.weight, pr.g, {a.lambda, a.mu}, bc, kappas, cfg);
    json fps = json::array();
    for (const auto& [l, r] : rep.fingerprints) fps.push_back({l, r});
    json out{{"provenance", prov},      {"humps", rep.humps},   {"expected_lower_bound", rep.expected},
             {"kappas", rep.kappas},    {"counts", rep.counts}, {"fingerprints", fps},
             {"solutions", solutions_json(rep.solutions, prov).at("solutions")}};
    open_out(a.c, "conjecture.json") << out.dump(2) << '\n';
    std::printf("%zu positive hump(s); 3^m - 1 = %zu\n", rep.humps, rep.expected);
    for (std::size_t i = 0; i < rep.kappas.size(); ++i)
        std::printf("  section %.6g: %zu solution(s)\n", rep.kappas[i], rep.counts[i]);
    std::printf("  fingerprints:");
    for (const auto& [l, r] : rep.fingerprints) std::printf(" (%d,%d)", l, r);
    std::printf("\n");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Positive solutions of u'' + (lambda a+ - mu a-) g(u) = 0 by phase-plane shooting"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version);

    SolveArgs solve;
    auto* s = app.add_subcommand("solve", "all positive solutions at one (lambda, mu)");
    add_common(s, solve.c);
    s->add_option("--bc", solve.bc, "dirichlet | neumann | dirichlet_neumann | neumann_dirichlet")->capture_default_str();
    s->add_option("--lambda", solve.lambda)->required();
    s->add_option("--mu", solve.mu)->required();
    s->add_option("--kappa", solve.kappa, "section time (default: middle of the first negativity interval)");

    SweepArgs sw;
    auto* w = app.add_subcommand("sweep", "bifurcation diagram in mu (or lambda)");
    add_common(w, sw.c);
    w->add_option("--bc", sw.bc)->capture_default_str();
    w->add_option("--param", sw.param, "mu | lambda")->capture_default_str();
    w->add_option("--lambda", sw.lambda, "fixed lambda (mu sweeps)");
    w->add_option("--mu", sw.mu, "fixed mu (lambda sweeps)");
    w->add_option("--min", sw.min)->required();
    w->add_option("--max", sw.max)->required();
    w->add_option("--steps", sw.steps)->capture_default_str();
    w->add_option("--kappa", sw.kappa);
    w->add_option("--refine-rounds", sw.refine_rounds, "bisection rounds at dangling branch ends")->capture_default_str();
    w->add_option("--scan-lambdas", sw.scan_lambdas, "comma-separated lambdas: existence window per lambda");

    ContinuaArgs ct;
    auto* c = app.add_subcommand("continua", "images of the four initial sets at the section");
    add_common(c, ct.c);
    c->add_option("--lambda", ct.lambda)->required();
    c->add_option("--mu", ct.mu)->required();
    c->add_option("--kappa", ct.kappa);

    ThresholdArgs th;
    auto* t = app.add_subcommand("thresholds", "explicit parameter thresholds");
    add_common(t, th.c);
    t->add_option("--nu0", th.nu0);
    t->add_option("--nu1", th.nu1);
    t->add_option("--t1", th.t1);
    t->add_option("--nuT", th.nuT);
    t->add_option("--tT", th.tT);
    t->add_option("--nu2", th.nu2);
    t->add_option("--nu-sigma", th.nu_sigma);
    t->add_option("--t2", th.t2);
    t->add_option("--omega", th.omega);
    t->add_option("--kappa", th.kappa);
    t->add_option("--lambda", th.lambda);

    VerifyArgs vf;
    auto* v = app.add_subcommand("verify", "trapping and prohibited region checks");
    add_common(v, vf.c);
    v->add_option("--lambda", vf.lambda)->required();
    v->add_option("--mu", vf.mu)->required();
    v->add_option("--samples", vf.samples)->capture_default_str();
    v->add_option("--seed", vf.seed)->capture_default_str();

    ConjectureArgs cj;
    auto* q = app.add_subcommand("conjecture", "solution count for a multi-hump weight");
    add_common(q, cj.c);
    q->add_option("--bc", cj.bc)->capture_default_str();
    q->add_option("--lambda", cj.lambda)->required();
    q->add_option("--mu", cj.mu)->required();
    q->add_option("--kappas", cj.kappas, "comma-separated section times (default: middle of the last negativity interval)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    auto common_of = [&]() -> const Common& {
        if (s->parsed()) return solve.c;
        if (w->parsed()) return sw.c;
        if (c->parsed()) return ct.c;
        if (t->parsed()) return th.c;
        if (v->parsed()) return vf.c;
        return cj.c;
    };
    try {
        if (common_of().threads > 0) set_thread_cap(common_of().threads);
        if (s->parsed()) return run_solve(solve);
        if (w->parsed()) return run_sweep(sw);
        if (c->parsed()) return run_continua(ct);
        if (t->parsed()) return run_thresholds(th);
        if (v->parsed()) return run_verify(vf);
        return run_conjecture(cj);
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 2;
    }
}
