#include "indefshoot/bifurcation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace indefshoot;

namespace {

const WeightSpec w3 = WeightSpec::sin_pi(3.0, {1.0, 2.0});
const Nonlinearity g3 = Nonlinearity::s2_1ms();

SweepConfig lambda4(std::size_t n) {
    SweepConfig sc;
    sc.fixed = 4.0;
    sc.min = 0.0;
    sc.max = 20.0;
    sc.n_steps = n;
    return sc;
}

const SweepResult& sweep4() {
    static const SweepResult r = sweep(w3, g3, lambda4(81));
    return r;
}

std::size_t total(const SweepResult& r, SingularKind k) {
    std::size_t n = 0;
    for (const auto* b : r.nontrivial()) n += b->count(k);
    return n;
}

std::vector<double> tag_mus(const SweepResult& r, SingularKind k) {
    std::vector<double> out;
    for (const auto* b : r.nontrivial())
        for (const auto& t : b->tags)
            if (t.kind == k) out.push_back(t.mu);
    std::sort(out.begin(), out.end());
    return out;
}

Branch synthetic(const std::vector<std::pair<double, double>>& mu_u0) {
    Branch b;
    for (auto [mu, u] : mu_u0) {
        BranchPoint p;
        p.mu = mu;
        p.u0 = p.uT = u;
        p.u_min = u - 0.1;
        p.u_max = u;
        b.points.push_back(p);
    }
    return b;
}

} // namespace

TEST(Sweep, Lambda4Structure) {
    const auto& r = sweep4();
    const auto nt = r.nontrivial();
    ASSERT_EQ(nt.size(), 1u);
    EXPECT_FALSE(nt[0]->closed);
    EXPECT_EQ(total(r, SingularKind::turning), 1u);
    EXPECT_EQ(total(r, SingularKind::transcritical), 2u);
    // turning near 16.71, transcritical near 3.16 (from u = 1) and 7.96 (from u = 0)
    const auto tc = tag_mus(r, SingularKind::transcritical);
    ASSERT_EQ(tc.size(), 2u);
    EXPECT_NEAR(tc[0], 3.16, 0.1);
    EXPECT_NEAR(tc[1], 7.96, 0.1);
    EXPECT_NEAR(tag_mus(r, SingularKind::turning).at(0), 16.71, 0.1);
    const auto win = detect_existence_window(r);
    ASSERT_TRUE(win);
    EXPECT_NEAR(win->m1, 16.71, 0.1);
    EXPECT_FALSE(win->truncated_low);
    EXPECT_FALSE(win->truncated_high);
}

TEST(Sweep, BranchPointsArePositiveSolutions) {
    for (const auto* b : sweep4().nontrivial()) {
        EXPECT_GE(b->points.size(), 2u);
        for (const auto& p : b->points) {
            EXPECT_GT(p.u_min, 0.0);
            EXPECT_LT(p.u_max, 1.0);
            EXPECT_GE(p.mu, 0.0);
            EXPECT_LE(p.mu, 20.0);
        }
        for (const auto& t : b->tags) EXPECT_LT(t.index, b->points.size());
    }
}

TEST(Sweep, NeumannBranchesAboveNecessaryBound) {
    // stated invariant: every nontrivial Neumann point has mu > neumann_necessary_mu; see the README notes
    const double bound = neumann_necessary_mu(w3, 4.0);
    for (const auto* b : sweep4().nontrivial())
        for (const auto& p : b->points) EXPECT_GT(p.mu, bound) << "u0=" << p.u0;
    const auto win = detect_existence_window(sweep4());
    ASSERT_TRUE(win);
    EXPECT_GE(win->m0, 8.0);
}

TEST(Sweep, StableUnderGridDoubling) {
    const auto& a = sweep4();
    const auto b = sweep(w3, g3, lambda4(161));
    ASSERT_EQ(a.nontrivial().size(), b.nontrivial().size());
    for (auto k : {SingularKind::turning, SingularKind::transcritical, SingularKind::pitchfork_candidate}) {
        const auto ma = tag_mus(a, k), mb = tag_mus(b, k);
        ASSERT_EQ(ma.size(), mb.size()) << to_string(k);
        for (std::size_t i = 0; i < ma.size(); ++i) EXPECT_NEAR(ma[i], mb[i], 0.25) << to_string(k);
    }
    EXPECT_EQ(a.levels.size() < b.levels.size(), true);
}

TEST(Sweep, Deterministic) {
    const auto b = sweep(w3, g3, lambda4(81));
    std::ostringstream x, y;
    write_branches_csv(x, sweep4());
    write_branches_csv(y, b);
    EXPECT_EQ(x.str(), y.str());
}

TEST(Sweep, CsvLayout) {
    std::ostringstream os;
    write_branches_csv(os, sweep4(), "cfg");
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "# cfg");
    std::getline(in, line);
    EXPECT_EQ(line, "branch_id,mu,u0,du0,band_l,band_r,tag");
    std::size_t turning = 0, rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6) << line;
        if (line.find("turning") != std::string::npos) ++turning;
    }
    EXPECT_EQ(turning, 1u);
    std::size_t pts = 0;
    for (const auto& b : sweep4().branches) pts += b.points.size();
    EXPECT_EQ(rows, pts);
}

TEST(Sweep, ConfigValidation) {
    auto sc = lambda4(81);
    sc.min = 30.0;
    EXPECT_THROW(sc.validate(), ParameterError);
    sc = lambda4(1);
    EXPECT_THROW(sc.validate(), ParameterError);
    sc = lambda4(81);
    sc.min = -1.0;
    EXPECT_THROW(sc.validate(), ParameterError);
    EXPECT_THROW((void)sweep(w3, g3, sc), ParameterError);
}

TEST(Classify, MonotoneBranchHasNoTurningPoint) {
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i <= 10; ++i) pts.emplace_back(10.0 + i, 0.4 + 0.01 * i);
    const auto b = classify_singular(synthetic(pts));
    EXPECT_EQ(b.count(SingularKind::turning), 0u);
    EXPECT_EQ(b.count(SingularKind::transcritical), 0u);
    EXPECT_EQ(b.count(SingularKind::endpoint), 2u);
}

TEST(Classify, FoldGivesOneTurningPoint) {
    // mu = 20 - 100 (u0 - 0.5)^2 sampled on an irregular grid
    std::vector<std::pair<double, double>> pts;
    for (double u : {0.30, 0.36, 0.41, 0.47, 0.52, 0.58, 0.63, 0.70}) pts.emplace_back(20.0 - 100.0 * (u - 0.5) * (u - 0.5), u);
    const auto b = classify_singular(synthetic(pts));
    ASSERT_EQ(b.count(SingularKind::turning), 1u);
    for (const auto& t : b.tags)
        if (t.kind == SingularKind::turning) EXPECT_NEAR(t.mu, 20.0, 0.05);
}

TEST(Classify, EndAtTrivialStateIsTranscritical) {
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i <= 4; ++i) pts.emplace_back(10.0 + i, 0.2 * i);
    pts.front().second = 1e-5;
    const auto b = classify_singular(synthetic(pts));
    EXPECT_EQ(b.count(SingularKind::transcritical), 1u);
}

TEST(Window, EmptyAndTrivialOnly) {
    EXPECT_FALSE(detect_existence_window(std::vector<Branch>{}, {0.0, 1.0}));
    Branch t;
    t.trivial = true;
    t.points.resize(3);
    EXPECT_FALSE(detect_existence_window(std::vector<Branch>{t}, {0.0, 1.0}));
    auto b = synthetic({{0.0, 0.5}, {0.4, 0.6}});
    const auto w = detect_existence_window(std::vector<Branch>{b}, {0.0, 1.0});
    ASSERT_TRUE(w);
    EXPECT_EQ(w->m0, 0.0);
    EXPECT_EQ(w->m1, 0.4);
    EXPECT_TRUE(w->truncated_low);
    EXPECT_FALSE(w->truncated_high);
}

TEST(Isola, BreakLambda) {
    auto row = [](double l, std::size_t c) {
        IsolaScanRow r;
        r.lambda = l;
        r.closed = c;
        return r;
    };
    EXPECT_EQ(isola_break_lambda({row(6, 0), row(8, 1), row(10, 1), row(12, 0), row(14, 0)}), 12.0);
    EXPECT_FALSE(isola_break_lambda({row(6, 0), row(8, 0)}));
    EXPECT_FALSE(isola_break_lambda({row(8, 1), row(10, 1)}));
}
