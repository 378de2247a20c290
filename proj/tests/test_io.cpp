#include "indefshoot/io.hpp"

#include <gtest/gtest.h>

#include <string>

using namespace indefshoot;

namespace {

std::string problem_path(const char* name) { return std::string(INDEFSHOOT_PROBLEMS_DIR) + "/" + name; }

void expect_admissibility(const std::string& text, const std::string& fragment) {
    try {
        (void)parse_problem_text(text);
        ADD_FAILURE() << "accepted: " << text;
    } catch (const AdmissibilityError& e) {
        EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
        EXPECT_EQ(std::string(e.what()).find('\n'), std::string::npos);
    }
}

} // namespace

TEST(Problem, FileMatchesBuiltin) {
    const auto a = load_problem(problem_path("sin_two_humps.json"));
    const auto b = parse_problem(builtin_problem_json());
    EXPECT_EQ(a.weight.T(), 3.0);
    EXPECT_EQ(a.weight.humps(), 2u);
    EXPECT_EQ(a.weight.nodes(), b.weight.nodes());
    for (double t : {0.1, 0.5, 1.3, 2.7}) EXPECT_EQ(a.weight(t), b.weight(t));
    EXPECT_EQ(a.g(0.3), b.g(0.3));
    EXPECT_EQ(a.name, "sin_two_humps");
}

TEST(Problem, OtherShippedFiles) {
    EXPECT_EQ(load_problem(problem_path("sin_one_hump.json")).weight.humps(), 1u);
    const auto three = load_problem(problem_path("sin_three_humps.json"));
    EXPECT_EQ(three.weight.humps(), 3u);
    EXPECT_EQ(three.weight.T(), 5.0);
    const auto step = load_problem(problem_path("step_two_humps.json"));
    EXPECT_EQ(step.weight(0.5), 1.0);
    EXPECT_EQ(step.weight(1.5), -1.0);
    EXPECT_NEAR(step.weight.integral_plus(0.0, 3.0), 2.0, 1e-10);
    EXPECT_NEAR(step.weight.integral_minus(0.0, 3.0), 1.0, 1e-10);
}

TEST(Problem, PiecewiseKinds) {
    const auto p = parse_problem_text(R"({"T": 3, "sigma": 1, "tau": 2, "g": {"kind": "s2_1ms"},
        "weight": {"kind": "piecewise", "segments": [
            {"kind": "sin_pi", "amplitude": 2},
            {"kind": "poly", "coeffs": [2, -3, 1]},
            {"kind": "constant", "value": 0.5}]}})");
    EXPECT_NEAR(p.weight(0.5), 2.0, 1e-12);
    // (t - 1)(t - 2), ascending coefficients in global t
    EXPECT_NEAR(p.weight(1.5), -0.25, 1e-12);
    EXPECT_EQ(p.weight(2.5), 0.5);
}

TEST(Problem, TableNonlinearity) {
    const auto p = parse_problem_text(R"({"T": 3, "sigma": 1, "tau": 2, "weight": {"kind": "sin_pi"},
        "g": {"kind": "table", "s": [0, 0.01, 0.5, 1], "g": [0, 1e-6, 0.1, 0]}})");
    EXPECT_NEAR(p.g(0.75), 0.05, 1e-12);
    EXPECT_NEAR(p.g(0.005), 5e-7, 1e-15);
    // a linear first cell is not superlinear at zero
    EXPECT_THROW((void)parse_problem_text(R"({"T": 3, "sigma": 1, "tau": 2, "weight": {"kind": "sin_pi"},
        "g": {"kind": "table", "s": [0, 0.5, 1], "g": [0, 0.1, 0]}})"),
                 AdmissibilityError);
}

TEST(Problem, Errors) {
    expect_admissibility("{\"T\": 3,", "malformed JSON");
    expect_admissibility("[1, 2]", "top level");
    expect_admissibility(R"({"weight": {"kind": "sin_pi"}, "g": {"kind": "s2_1ms"}})", "T");
    expect_admissibility(R"({"T": 3, "sigma": 1, "tau": 2, "weight": {"kind": "cosine"}, "g": {"kind": "s2_1ms"}})",
                         "cosine");
    expect_admissibility(R"({"T": 3, "sigma": 1, "tau": 2, "weight": {"kind": "sin_pi"}, "g": {"kind": "cubic"}})",
                         "cubic");
    expect_admissibility(R"({"T": -1, "weight": {"kind": "sin_pi"}, "g": {"kind": "s2_1ms"}})", "T must be positive");
    // nodes that do not match the sign changes
    EXPECT_THROW((void)parse_problem_text(
                     R"({"T": 3, "sigma": 0.5, "tau": 2, "weight": {"kind": "sin_pi"}, "g": {"kind": "s2_1ms"}})"),
                 AdmissibilityError);
    // g(s)/s increasing
    EXPECT_THROW((void)parse_problem_text(R"({"T": 3, "sigma": 1, "tau": 2, "weight": {"kind": "sin_pi"},
        "g": {"kind": "table", "s": [0, 0.5, 1], "g": [0, 0.1, 0.5]}})"),
                 AdmissibilityError);
    EXPECT_THROW((void)load_problem(problem_path("missing.json")), AdmissibilityError);
}

TEST(Provenance, HashIsDeterministic) {
    const json cfg{{"command", "solve"}, {"lambda", 20.0}, {"mu", 500.0}};
    const auto a = make_provenance(cfg), b = make_provenance(cfg);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.at("config_hash").get<std::string>().size(), 16u);
    EXPECT_EQ(a.at("tool"), tool_version);
    json other = cfg;
    other["mu"] = 501.0;
    EXPECT_NE(make_provenance(other).at("config_hash"), a.at("config_hash"));
    const auto line = provenance_line(a);
    EXPECT_NE(line.find(a.at("config_hash").get<std::string>()), std::string::npos);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
}

TEST(Provenance, Tolerances) {
    SolverConfig c;
    const auto t = tolerances_json(c);
    EXPECT_EQ(t.at("rtol"), c.shoot.integrator.rel_tol);
    EXPECT_EQ(t.at("atol"), c.shoot.integrator.abs_tol);
    EXPECT_EQ(t.at("refine_bound"), c.shoot.refine_bound);
}

TEST(Output, SolutionFields) {
    BvpSolution s;
    s.bc = BoundaryConditionType::neumann();
    s.p = {20.0, 500.0};
    s.kappa = 1.5;
    s.trajectory = integrate(WeightSpec::sin_pi(3.0, {1.0, 2.0}), Nonlinearity::s2_1ms(), s.p, 0.0, 3.0, {0.1, 0.0});
    s.band_index_left = 2;
    s.band_index_right = 1;
    const auto j = solutions_json({s}, make_provenance(json{{"x", 1}}));
    ASSERT_EQ(j.at("solutions").size(), 1u);
    const auto& r = j.at("solutions")[0];
    for (const char* k : {"bc", "lambda", "mu", "kappa", "u0", "du0", "uT", "duT", "bands", "residuals", "u_min", "u_max"})
        EXPECT_TRUE(r.contains(k)) << k;
    EXPECT_EQ(r.at("bc"), "neumann");
    EXPECT_EQ(r.at("bands"), json::array({2, 1}));
    EXPECT_EQ(r.at("u0").get<double>(), 0.1);
    EXPECT_TRUE(j.at("provenance").contains("config_hash"));
    // shortest round-trip number formatting
    EXPECT_EQ(json(0.1).dump(), "0.1");
    EXPECT_EQ(solutions_json({}, json::object()).at("solutions"), json::array());
}

TEST(Output, EmptySweepSummary) {
    SweepResult r;
    r.config.min = 0.0;
    r.config.max = 10.0;
    const auto j = sweep_summary_json(r, json::object());
    EXPECT_TRUE(j.at("existence_window").is_null());
    EXPECT_EQ(j.at("closed_branches"), 0);
    EXPECT_EQ(j.at("parameter"), "mu");
    EXPECT_EQ(j.at("range"), json::array({0.0, 10.0}));
}
