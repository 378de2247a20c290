#include "indefshoot/model.hpp"
#include "oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace indefshoot;

namespace {

const double pi = std::numbers::pi;

WeightSpec sin3() { return WeightSpec::sin_pi(3.0, {1.0, 2.0}); }

} // namespace

TEST(Weight, IntegralsClosedForm) {
    const auto w = sin3();
    EXPECT_NEAR(w.integral_plus(0.0, 1.0), 2.0 / pi, 1e-10);
    EXPECT_NEAR(w.integral_minus(0.0, 3.0), 2.0 / pi, 1e-10);
    EXPECT_NEAR(w.integral_plus(0.0, 3.0), 4.0 / pi, 1e-10);
    EXPECT_EQ(w.integral_plus(0.7, 0.7), 0.0);
    EXPECT_THROW((void)w.integral_plus(2.0, 1.0), DomainError);
}

TEST(Weight, IntegralsAdditive) {
    const auto w = sin3();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int k = 0; k < 50; ++k) {
        double a = u(rng), b = u(rng), c = u(rng);
        if (a > b) std::swap(a, b);
        if (b > c) std::swap(b, c);
        if (a > b) std::swap(a, b);
        const double whole = w.integral_plus(a, c), parts = w.integral_plus(a, b) + w.integral_plus(b, c);
        EXPECT_NEAR(whole, parts, 1e-9 * std::max(1.0, std::abs(whole)));
        const double wm = w.integral_minus(a, c), pm = w.integral_minus(a, b) + w.integral_minus(b, c);
        EXPECT_NEAR(wm, pm, 1e-9 * std::max(1.0, std::abs(wm)));
    }
}

TEST(Weight, EffectiveWeightParts) {
    const auto w = sin3();
    const ParameterPair p{20.0, 500.0};
    for (int i = 0; i <= 300; ++i) {
        const double t = 0.01 * i;
        const double a = std::sin(pi * t);
        EXPECT_NEAR(eval_weight(w, p, t), 20.0 * std::max(a, 0.0) - 500.0 * std::max(-a, 0.0), 1e-12);
        EXPECT_FALSE(w.plus(t) > 0.0 && w.minus(t) > 0.0);
    }
}

TEST(Weight, SymmetryAndHumps) {
    EXPECT_TRUE(sin3().is_even());
    EXPECT_EQ(sin3().humps(), 2u);
    EXPECT_EQ(WeightSpec::sin_pi(5.0, {1, 2, 3, 4}).humps(), 3u);
    const auto neg = sin3().negativity_intervals();
    ASSERT_EQ(neg.size(), 1u);
    EXPECT_DOUBLE_EQ(neg[0].first, 1.0);
    EXPECT_DOUBLE_EQ(neg[0].second, 2.0);
}

TEST(Weight, TableTrapezoid) {
    const auto w = WeightSpec::table(3.0, {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0}, {0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0},
                                     {1.0, 2.0});
    EXPECT_NEAR(w.integral_plus(0.0, 3.0), 1.0, 1e-12);
    EXPECT_NEAR(w.integral_minus(0.0, 3.0), 0.5, 1e-12);
    EXPECT_NEAR(w.integral_plus(0.0, 0.5), 0.25, 1e-12);
    EXPECT_NEAR(w(0.25), 0.5, 1e-12);
}

TEST(Weight, ValidatorsReject) {
    EXPECT_THROW(WeightSpec::sin_pi(3.0, {2.0, 1.0}), AdmissibilityError);
    auto one = [](double) { return 1.0; };
    EXPECT_THROW(WeightSpec::piecewise(3.0, {1.0, 2.0}, {one, one, one}), AdmissibilityError);
    EXPECT_THROW(WeightSpec::piecewise(2.0, {1.0}, {one, [](double) { return -1.0; }}), AdmissibilityError);
    EXPECT_THROW(Nonlinearity::from_function([](double s) { return s * s; }).validate(), AdmissibilityError);
}

TEST(Nonlinearity, MinAndMax) {
    const auto g = Nonlinearity::s2_1ms();
    EXPECT_NEAR(g.min_on(0.45, 0.9), 0.081, 1e-10);
    EXPECT_NEAR(g.min_on(0.1, 0.6), 0.009, 1e-10);
    EXPECT_NEAR(g.min_on(0.3, 1.0), 0.0, 1e-10);
    EXPECT_NEAR(g.gmax(), 4.0 / 27.0, 1e-10);
    EXPECT_NEAR(g.argmax(), 2.0 / 3.0, 1e-6);
    EXPECT_THROW((void)g.min_on(0.6, 0.1), DomainError);
    EXPECT_EQ(g(-0.5), 0.0);
    EXPECT_EQ(g(1.5), 0.0);
}

TEST(Thresholds, LambdaStarVsOracle) {
    const auto w = sin3();
    const auto g = Nonlinearity::s2_1ms();
    const double got = threshold_lambda_star(w, g, 0.9, 0.45, 0.5);
    EXPECT_NEAR(got, 96.06077157064456, 1e-8 * 96.06);
    EXPECT_NEAR(got / oracle::lambda_star(0.9, 0.45, 0.5), 1.0, 1e-6);
}

TEST(Thresholds, LambdaStarStarMirrors) {
    const auto w = sin3();
    const auto g = Nonlinearity::s2_1ms();
    EXPECT_NEAR(threshold_lambda_star_star(w, g, 0.45, 0.9, 2.5), threshold_lambda_star(w, g, 0.9, 0.45, 0.5), 1e-8);
    EXPECT_NEAR(threshold_lambda_star_star(w, g, 0.45, 0.45 + 1e-9, 2.5), 0.0, 1e-5);
}

TEST(Thresholds, MuStarVsOracle) {
    const auto w = sin3();
    const auto g = Nonlinearity::s2_1ms();
    const double got = threshold_mu_star(w, g, 0.6, 0.2, 1.5, 0.0, 1.5);
    EXPECT_NEAR(got, 768.4861725651565, 1e-8 * 768.5);
    EXPECT_NEAR(got / oracle::mu_star(0.6, 0.2, 1.5, 0.0), 1.0, 1e-6);
    // numerator affine increasing in omega
    const double w1 = threshold_mu_star(w, g, 0.6, 0.2, 1.2, 0.1, 1.5);
    const double w2 = threshold_mu_star(w, g, 0.6, 0.2, 1.2, 0.2, 1.5);
    EXPECT_GT(w2, w1);
    EXPECT_NEAR(w1 / oracle::mu_star(0.6, 0.2, 1.2, 0.1), 1.0, 1e-6);
}

TEST(Thresholds, MuStarPreconditions) {
    const auto w = sin3();
    const auto g = Nonlinearity::s2_1ms();
    EXPECT_THROW((void)threshold_mu_star(w, g, 0.6, 0.2, 1.6, 0.0, 1.5), ParameterError);   // t2 > kappa
    EXPECT_THROW((void)threshold_mu_star(w, g, 0.6, 0.2, 1.5, 1.0, 1.9), ParameterError);   // sigma + nu/(2 omega)
    EXPECT_THROW((void)threshold_mu_star(w, g, 0.2, 0.6, 1.5, 0.0, 1.5), ParameterError);   // nu order
}

TEST(Thresholds, LambdaStarPreconditions) {
    const auto w = sin3();
    const auto g = Nonlinearity::s2_1ms();
    EXPECT_THROW((void)threshold_lambda_star(w, g, 0.45, 0.9, 0.5), ParameterError);
    EXPECT_THROW((void)threshold_lambda_star(w, g, 0.9, 0.45, 1.5), ParameterError);
}

TEST(Thresholds, Homogeneity) {
    const auto w = sin3();
    const auto g = Nonlinearity::s2_1ms();
    // scaling g by 2 halves both thresholds
    const double a = threshold_lambda_star(w, g, 0.5, 0.3, 0.5);
    const auto g2 = Nonlinearity::from_function([](double s) { return 2.0 * s * s * (1.0 - s); }, "2g");
    EXPECT_NEAR(threshold_lambda_star(w, g2, 0.5, 0.3, 0.5), 0.5 * a, 1e-9 * a);
    // g_m(0.3, 0.5) = g_m(0.3, 0.7) = g(0.3): doubling nu0 - nu1 doubles the threshold
    EXPECT_NEAR(threshold_lambda_star(w, g, 0.7, 0.3, 0.5), 2.0 * a, 1e-9 * a);
    EXPECT_NEAR(threshold_lambda_star_star(w, g2, 0.3, 0.5, 2.5), 0.5 * threshold_lambda_star_star(w, g, 0.3, 0.5, 2.5),
                1e-9 * a);
    // smaller t1 gives a larger threshold
    double prev = std::numeric_limits<double>::infinity();
    for (double t1 : {0.2, 0.4, 0.6, 0.8, 0.99}) {
        const double v = threshold_lambda_star(w, g, 0.9, 0.45, t1);
        EXPECT_LT(v, prev);
        prev = v;
    }
}

TEST(Thresholds, DeltaTilde) {
    const auto w = sin3();
    const auto g = Nonlinearity::s2_1ms();
    EXPECT_NEAR(delta_tilde(w, g, 20.0), 2.915143615085206, 1e-9);
    EXPECT_NEAR(delta_tilde(w, g, 20.0) / oracle::delta_tilde(20.0), 1.0, 1e-6);
    EXPECT_NEAR(delta_tilde(w, g, 1e-12), 1.01, 1e-9);
    EXPECT_NEAR(delta_tilde_right(w, g, 20.0), delta_tilde(w, g, 20.0), 1e-9);
}

TEST(Thresholds, NeumannNecessaryMu) {
    const auto w = sin3();
    EXPECT_NEAR(neumann_necessary_mu(w, 20.0), 40.0, 1e-9);
    EXPECT_NEAR(neumann_necessary_mu(w, 4.0), 8.0, 1e-9);
    // one unit of positive and one of negative weight
    const auto equal = WeightSpec::piecewise(
        3.0, {0.5, 2.5}, {[](double) { return 1.0; }, [](double) { return -0.5; }, [](double) { return 1.0; }});
    EXPECT_NEAR(neumann_necessary_mu(equal, 3.0), 3.0, 1e-9);
}

TEST(Parameters, Validation) {
    EXPECT_THROW((ParameterPair{-1.0, 1.0}.validate()), ParameterError);
    EXPECT_THROW((ParameterPair{1.0, 0.0}.validate()), ParameterError);
    EXPECT_NO_THROW((ParameterPair{1.0, 0.0}.validate(true)));
    EXPECT_THROW((ParameterPair{1.0, std::nan("")}.validate()), ParameterError);
}
