#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "rsma_sqp/quadrature.hpp"

using namespace rsma_sqp;

TEST(Quadrature, SineOverHalfPeriod) {
    const auto r = quad::integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi);
    EXPECT_NEAR(r.value, 2.0, 1e-12);
}

TEST(Quadrature, GaussianMassMatchesErf) {
    auto phi = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi); };
    for (double b : {0.5, 1.0, 3.0, 8.0}) {
        const auto r = quad::integrate(phi, -b, b);
        EXPECT_NEAR(r.value, std::erf(b / std::numbers::sqrt2), 1e-12) << b;
    }
}

TEST(Quadrature, NarrowPeakFoundAdaptively) {
    // Width 1e-4 spike inside a unit interval.
    const double s = 1e-4;
    auto f = [s](double x) { return std::exp(-0.5 * (x - 0.3) * (x - 0.3) / (s * s)) / (s * std::sqrt(2 * std::numbers::pi)); };
    const auto r = quad::integrate(f, 0.3 - 8 * s, 0.3 + 8 * s);
    EXPECT_NEAR(r.value, 1.0, 1e-10);
}

TEST(Quadrature, EmptyIntervalIsZero) {
    EXPECT_EQ(quad::integrate([](double) { return 1.0; }, 1.0, 1.0).value, 0.0);
    EXPECT_EQ(quad::integrate([](double) { return 1.0; }, 2.0, 1.0).value, 0.0);
}

TEST(Quadrature, BudgetExhaustionThrowsWithResidual) {
    quad::Options opt;
    opt.max_panels = 4;
    opt.abs_tol = 1e-14;
    opt.rel_tol = 1e-14;
    try {
        quad::integrate([](double x) { return std::sin(1.0 / (x + 1e-3)); }, 0.0, 1.0, opt);
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_GT(e.residual(), 0.0);
    }
}

// Property: a single 15-point Kronrod panel integrates polynomials up to
// degree 22 exactly; check random ones against the antiderivative.
TEST(Quadrature, RandomPolynomialsExact) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::uniform_int_distribution<int> deg(0, 20);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = deg(rng);
        std::vector<double> c(d + 1);
        for (auto& x : c) x = coef(rng);
        const double a = coef(rng);
        const double b = a + 0.1 + std::abs(coef(rng));
        auto p = [&](double x) {
            double acc = 0;
            for (int k = d; k >= 0; --k) acc = acc * x + c[k];
            return acc;
        };
        auto prim = [&](double x) {
            double acc = 0;
            for (int k = d; k >= 0; --k) acc += c[k] * std::pow(x, k + 1) / (k + 1);
            return acc;
        };
        EXPECT_NEAR(quad::kronrod_15(p, a, b), prim(b) - prim(a), 1e-12 * (1 + std::abs(prim(b) - prim(a))));
    }
}
