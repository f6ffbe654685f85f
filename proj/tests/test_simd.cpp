#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <complex>
#include <cstring>
#include <vector>

#include "wmsim/rng.hpp"
#include "wmsim/simd/kernels.hpp"

using namespace wmsim;
using namespace wmsim::simd;

namespace {

bool bitwise_equal(const std::vector<double> &a, const std::vector<double> &b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct KeldyshInput {
    std::vector<double> alpha;
    std::vector<double> occ[4];
};

KeldyshInput random_input(std::size_t n, RandomStream &rng) {
    KeldyshInput in;
    for (std::size_t i = 0; i < n; ++i) {
        in.alpha.push_back(5.0 * rng.normal());
        for (auto &o : in.occ) {
            o.push_back(std::tanh(rng.normal()));
        }
    }
    return in;
}

template <typename F>
std::pair<std::vector<double>, std::vector<double>> run_trace(F kernel, const KeldyshConstants &c,
                                                              const KeldyshInput &in) {
    std::vector<double> re(in.alpha.size()), im(in.alpha.size());
    KeldyshBatch b{in.alpha, {in.occ[0], in.occ[1], in.occ[2], in.occ[3]}};
    kernel(c, b, re, im);
    return {re, im};
}

} // namespace

TEST(Dispatch, ScalarAlwaysAvailable) {
    const Isa before = active_isa();
    EXPECT_NO_THROW(set_active_isa(Isa::Scalar));
    EXPECT_EQ(active_isa(), Isa::Scalar);
    set_active_isa(before);
    EXPECT_EQ(isa_name(Isa::Scalar), "scalar");
}

TEST(KeldyshTrace, ScalarMatchesExplicitMatrixProduct) {
    // Direct 2x2 product with vertex diag(1, 1/4) at one node.
    const KeldyshConstants c{0.5, 1.0, 0.7, -0.3};
    const double a = 0.2;
    const double xs[4] = {a, a + c.omega, a + c.omega_p, a + c.omega + c.omega_p};
    const double occ[4] = {0.3, -0.8, 0.5, 0.9};
    using cd = std::complex<double>;
    auto g = [&](int k) {
        const cd gr = cd(0, 1) / cd(xs[k] - c.eps, c.gamma / 2);
        const double gk = occ[k] * c.gamma / (2 * (xs[k] - c.eps) * (xs[k] - c.eps) + c.gamma * c.gamma / 2);
        return std::array<cd, 4>{gk, gr, -std::conj(gr), 0.0};
    };
    auto mul = [](std::array<cd, 4> x, std::array<cd, 4> y) {
        return std::array<cd, 4>{x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3], x[2] * y[0] + x[3] * y[2],
                                 x[2] * y[1] + x[3] * y[3]};
    };
    const std::array<cd, 4> n{1.0, 0.0, 0.0, 0.25};
    std::array<cd, 4> sum12;
    for (int i = 0; i < 4; ++i) {
        sum12[i] = g(1)[i] + g(2)[i];
    }
    const auto m = mul(mul(mul(mul(mul(g(0), n), sum12), n), g(3)), n);
    const cd expected = m[0] + m[3];

    std::vector<double> alpha{a}, o0{occ[0]}, o1{occ[1]}, o2{occ[2]}, o3{occ[3]}, re(1), im(1);
    scalar::keldysh_trace(c, {alpha, {o0, o1, o2, o3}}, re, im);
    EXPECT_NEAR(re[0], expected.real(), 1e-14);
    EXPECT_NEAR(im[0], expected.imag(), 1e-14);
}

#if defined(WMSIM_HAVE_AVX2)
TEST(KeldyshTrace, Avx2BitwiseEqualsScalar) {
    if (detected_isa() != Isa::Avx2) {
        GTEST_SKIP() << "CPU without AVX2";
    }
    RandomStream rng(11, 0, 0);
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 15u, 16u, 37u, 1000u}) {
        const KeldyshConstants c{rng.normal(), 0.5 + std::abs(rng.normal()), rng.normal(), rng.normal()};
        const KeldyshInput in = random_input(n, rng);
        const auto s = run_trace(scalar::keldysh_trace, c, in);
        const auto v = run_trace(avx2::keldysh_trace, c, in);
        EXPECT_TRUE(bitwise_equal(s.first, v.first)) << n;
        EXPECT_TRUE(bitwise_equal(s.second, v.second)) << n;
    }
}

TEST(Leapfrog, Avx2BitwiseEqualsScalar) {
    if (detected_isa() != Isa::Avx2) {
        GTEST_SKIP() << "CPU without AVX2";
    }
    RandomStream rng(12, 0, 0);
    const PolynomialPotential v{-1.0, 0.2, 1.0, 1.3};
    for (std::size_t n : {1u, 2u, 4u, 7u, 64u, 1001u}) {
        std::vector<double> q(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            q[i] = rng.normal();
            p[i] = rng.normal();
        }
        auto qs = q, ps = p, qv = q, pv = p;
        scalar::leapfrog_polynomial(v, 1e-3, 500, qs, ps);
        avx2::leapfrog_polynomial(v, 1e-3, 500, qv, pv);
        EXPECT_TRUE(bitwise_equal(qs, qv)) << n;
        EXPECT_TRUE(bitwise_equal(ps, pv)) << n;
    }
}

TEST(Dispatch, SelectsAvx2WhenSupported) {
    if (detected_isa() != Isa::Avx2) {
        GTEST_SKIP() << "CPU without AVX2";
    }
    EXPECT_EQ(active_isa(), Isa::Avx2);
}
#endif

TEST(Leapfrog, NegativeStepMirrorsFlippedTrajectory) {
    const PolynomialPotential v{-1.0, 0.0, 1.0, 1.0};
    std::vector<double> qf{0.3, -1.2}, pf{0.4, 0.1};
    std::vector<double> qr = qf, pr{-0.4, -0.1};
    leapfrog_polynomial(v, 1e-3, 2000, qf, pf);
    leapfrog_polynomial(v, -1e-3, 2000, qr, pr);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(qf[i], qr[i]);
        EXPECT_EQ(pf[i], -pr[i]);
    }
}
