#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "wmsim/quadrature.hpp"

using namespace wmsim;
using cd = std::complex<double>;

TEST(RealLine, Gaussian) {
    const auto r = integrate_real_line({pointwise([](double x) { return cd(std::exp(-x * x)); }), 1e-12});
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value.real(), std::sqrt(std::numbers::pi), 1e-10);
    EXPECT_EQ(r.value.imag(), 0.0);
    EXPECT_LE(r.abs_error_estimate, 1e-12);
}

TEST(RealLine, Lorentzian) {
    const auto r = integrate_real_line({pointwise([](double x) { return cd(1.0 / (1.0 + x * x)); }), 1e-12});
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value.real(), std::numbers::pi, 1e-10);
}

TEST(RealLine, ComplexIntegrandWithKink) {
    // int exp(-|x|) (1 + i x) dx = 2
    const auto f = pointwise([](double x) { return std::exp(-std::abs(x - 1.0)) * cd(1.0, x - 1.0); });
    const auto r = integrate_real_line({f, 1e-11, {1.0}});
    EXPECT_NEAR(r.value.real(), 2.0, 1e-10);
    EXPECT_NEAR(r.value.imag(), 0.0, 1e-10);
}

namespace {
cd retarded(double x) { return cd(0.0, 1.0) / cd(x, 0.5); } // Gamma = 1, eps = 0
double green_product(double a) { return std::norm(retarded(a)) * retarded(a + 1.0).real(); }
} // namespace

TEST(RealLine, GreenProductMatchesTrapezoidOracle) {
    // Brute-force trapezoid, 1e7 panels over [-1e4, 1e4].
    const long n = 10'000'000;
    const double lo = -1e4, hi = 1e4, h = (hi - lo) / static_cast<double>(n);
    double oracle = 0.5 * (green_product(lo) + green_product(hi));
    for (long i = 1; i < n; ++i) {
        oracle += green_product(lo + h * static_cast<double>(i));
    }
    oracle *= h;
    const auto r = integrate_real_line({pointwise([](double a) { return cd(green_product(a)); }), 1e-10});
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value.real(), oracle, 1e-6);
}

TEST(RealLine, BudgetExhaustionReturnsPartialResult) {
    const auto f = pointwise([](double x) { return cd(std::sin(50.0 * x) / (1.0 + x * x)); });
    const auto r = integrate_real_line({f, 1e-14, {}, 60});
    EXPECT_FALSE(r.converged);
    EXPECT_LE(r.evaluations, 60);
    EXPECT_GT(r.abs_error_estimate, 1e-14);
}

TEST(RealLine, NonFiniteSampleThrows) {
    const auto f = pointwise([](double x) { return cd(x > 0.3 && x < 0.4 ? NAN : 1.0 / (1.0 + x * x)); });
    EXPECT_THROW(integrate_real_line({f, 1e-10}), std::domain_error);
}

TEST(RealLine, RejectsBadRequests) {
    const auto f = pointwise([](double x) { return cd(std::exp(-x * x)); });
    EXPECT_THROW(integrate_real_line({f, 0.0}), std::invalid_argument);
    EXPECT_THROW(integrate_real_line({f, 1e-8, {INFINITY}}), std::invalid_argument);
    EXPECT_THROW(integrate_real_line({BatchIntegrand{}, 1e-8}), std::invalid_argument);
    EXPECT_THROW(integrate_interval(f, 1.0, 0.0, 1e-8), std::invalid_argument);
}

TEST(RealLine, Linearity) {
    auto f = [](double x) { return cd(std::exp(-x * x), 0.0); };
    auto g = [](double x) { return cd(0.0, 1.0 / (1.0 + x * x * x * x)); };
    const double tol = 1e-11;
    const auto rf = integrate_real_line({pointwise(f), tol});
    const auto rg = integrate_real_line({pointwise(g), tol});
    const auto rc = integrate_real_line({pointwise([&](double x) { return 2.0 * f(x) - 3.0 * g(x); }), tol});
    EXPECT_LE(std::abs(rc.value - (2.0 * rf.value - 3.0 * rg.value)), 6.0 * tol);
}

TEST(RealLine, RedundantBreakpointsChangeLittle) {
    const auto f = pointwise([](double x) { return cd(1.0 / (1.0 + (x - 0.3) * (x - 0.3)), std::exp(-std::abs(x))); });
    const double tol = 1e-10;
    const auto a = integrate_real_line({f, tol, {0.0}});
    const auto b = integrate_real_line({f, tol, {0.0, -2.5, 0.3, 7.0, 7.0}});
    EXPECT_TRUE(a.converged && b.converged);
    EXPECT_LE(std::abs(a.value - b.value), tol);
}

TEST(RealLine, HalvingTolStaysWithinPreviousEstimate) {
    const auto f = pointwise([](double x) { return cd(1.0 / (1.0 + x * x * x * x), std::exp(-std::abs(x)) * x); });
    double tol = 1e-6;
    auto prev = integrate_real_line({f, tol, {0.0}});
    for (int k = 0; k < 6; ++k) {
        tol /= 2.0;
        const auto next = integrate_real_line({f, tol, {0.0}});
        EXPECT_LE(std::abs(next.value - prev.value), prev.abs_error_estimate + next.abs_error_estimate);
        prev = next;
    }
}

TEST(Interval, Polynomial) {
    const auto r = integrate_interval(pointwise([](double x) { return cd(x * x * x, 1.0); }), 0.0, 2.0, 1e-12);
    EXPECT_NEAR(r.value.real(), 4.0, 1e-13);
    EXPECT_NEAR(r.value.imag(), 2.0, 1e-13);
    EXPECT_EQ(r.evaluations, 15);
}
