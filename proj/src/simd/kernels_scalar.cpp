#include <stdexcept>

#include "wmsim/simd/kernels.hpp"

namespace wmsim::simd::scalar {

namespace {

struct Green {
    double k;
    double r_re;
    double r_im;
};

inline Green green_at(double x, double occupation, double eps, double half_gamma, double quarter_gamma2) {
    const double u = x - eps;
    const double d = u * u + quarter_gamma2;
    const double inv = 1.0 / d;
    return {occupation * (half_gamma * inv), half_gamma * inv, u * inv};
}

} // namespace

void keldysh_trace(const KeldyshConstants &c, const KeldyshBatch &batch, std::span<double> out_re,
                   std::span<double> out_im) {
    const std::size_t n = batch.alpha.size();
    if (out_re.size() < n || out_im.size() < n) {
        throw std::invalid_argument("keldysh_trace: output too small");
    }
    const double half_gamma = 0.5 * c.gamma;
    const double quarter_gamma2 = half_gamma * half_gamma;
    const double w1 = c.omega;
    const double w2 = c.omega_p;
    const double w3 = c.omega + c.omega_p;
    constexpr double q = 0.25;

    for (std::size_t i = 0; i < n; ++i) {
        const double a = batch.alpha[i];
        const Green g0 = green_at(a, batch.occupation[0][i], c.eps, half_gamma, quarter_gamma2);
        const Green g1 = green_at(a + w1, batch.occupation[1][i], c.eps, half_gamma, quarter_gamma2);
        const Green g2 = green_at(a + w2, batch.occupation[2][i], c.eps, half_gamma, quarter_gamma2);
        const Green g3 = green_at(a + w3, batch.occupation[3][i], c.eps, half_gamma, quarter_gamma2);

        // G^A = -conj(G^R): (-r_re, r_im).
        const double ks = g1.k + g2.k;
        const double rs_re = g1.r_re + g2.r_re;
        const double rs_im = g1.r_im + g2.r_im;
        const double as_re = -rs_re;
        const double as_im = rs_im;

        // E11 = K0 Ks + q R0 As
        const double ra_re = g0.r_re * as_re - g0.r_im * as_im;
        const double ra_im = g0.r_re * as_im + g0.r_im * as_re;
        const double e11_re = g0.k * ks + q * ra_re;
        const double e11_im = q * ra_im;

        // q K0 (Rs A3)
        const double a3_re = -g3.r_re;
        const double a3_im = g3.r_im;
        const double rsa3_re = rs_re * a3_re - rs_im * a3_im;
        const double rsa3_im = rs_re * a3_im + rs_im * a3_re;
        const double qk0 = q * g0.k;

        // q Ks (A0 R3)
        const double a0_re = -g0.r_re;
        const double a0_im = g0.r_im;
        const double a0r3_re = a0_re * g3.r_re - a0_im * g3.r_im;
        const double a0r3_im = a0_re * g3.r_im + a0_im * g3.r_re;
        const double qks = q * ks;

        out_re[i] = e11_re * g3.k + qk0 * rsa3_re + qks * a0r3_re;
        out_im[i] = e11_im * g3.k + qk0 * rsa3_im + qks * a0r3_im;
    }
}

void leapfrog_polynomial(const PolynomialPotential &v, double dt, long steps, std::span<double> q,
                         std::span<double> p) {
    if (q.size() != p.size()) {
        throw std::invalid_argument("leapfrog_polynomial: q and p sizes differ");
    }
    const double half_dt = 0.5 * dt;
    const double dt_over_m = dt / v.mass;
    for (std::size_t i = 0; i < q.size(); ++i) {
        double qi = q[i];
        double pi = p[i];
        double f = -(qi * (v.k2 + qi * (v.k3 + qi * v.k4)));
        for (long s = 0; s < steps; ++s) {
            pi = pi + half_dt * f;
            qi = qi + dt_over_m * pi;
            f = -(qi * (v.k2 + qi * (v.k3 + qi * v.k4)));
            pi = pi + half_dt * f;
        }
        q[i] = qi;
        p[i] = pi;
    }
}

} // namespace wmsim::simd::scalar
