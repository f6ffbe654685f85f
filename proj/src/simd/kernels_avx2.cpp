// Compiled with -mavx2 only. Must not be called unless the CPU reports AVX2.

#include <immintrin.h>

#include <stdexcept>

#include "wmsim/simd/kernels.hpp"

namespace wmsim::simd::avx2 {

namespace {

struct GreenV {
    __m256d k;
    __m256d r_re;
    __m256d r_im;
};

inline GreenV green_at(__m256d x, __m256d occupation, __m256d eps, __m256d half_gamma, __m256d quarter_gamma2) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d u = _mm256_sub_pd(x, eps);
    const __m256d d = _mm256_add_pd(_mm256_mul_pd(u, u), quarter_gamma2);
    const __m256d inv = _mm256_div_pd(one, d);
    const __m256d hg_inv = _mm256_mul_pd(half_gamma, inv);
    return {_mm256_mul_pd(occupation, hg_inv), hg_inv, _mm256_mul_pd(u, inv)};
}

inline __m256d neg(__m256d x) { return _mm256_xor_pd(x, _mm256_set1_pd(-0.0)); }

} // namespace

void keldysh_trace(const KeldyshConstants &c, const KeldyshBatch &batch, std::span<double> out_re,
                   std::span<double> out_im) {
    const std::size_t n = batch.alpha.size();
    if (out_re.size() < n || out_im.size() < n) {
        throw std::invalid_argument("keldysh_trace: output too small");
    }
    const double half_gamma_s = 0.5 * c.gamma;
    const __m256d half_gamma = _mm256_set1_pd(half_gamma_s);
    const __m256d quarter_gamma2 = _mm256_set1_pd(half_gamma_s * half_gamma_s);
    const __m256d eps = _mm256_set1_pd(c.eps);
    const __m256d w1 = _mm256_set1_pd(c.omega);
    const __m256d w2 = _mm256_set1_pd(c.omega_p);
    const __m256d w3 = _mm256_set1_pd(c.omega + c.omega_p);
    const __m256d q = _mm256_set1_pd(0.25);

    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d a = _mm256_loadu_pd(&batch.alpha[i]);
        const GreenV g0 = green_at(a, _mm256_loadu_pd(&batch.occupation[0][i]), eps, half_gamma, quarter_gamma2);
        const GreenV g1 =
            green_at(_mm256_add_pd(a, w1), _mm256_loadu_pd(&batch.occupation[1][i]), eps, half_gamma, quarter_gamma2);
        const GreenV g2 =
            green_at(_mm256_add_pd(a, w2), _mm256_loadu_pd(&batch.occupation[2][i]), eps, half_gamma, quarter_gamma2);
        const GreenV g3 =
            green_at(_mm256_add_pd(a, w3), _mm256_loadu_pd(&batch.occupation[3][i]), eps, half_gamma, quarter_gamma2);

        const __m256d ks = _mm256_add_pd(g1.k, g2.k);
        const __m256d rs_re = _mm256_add_pd(g1.r_re, g2.r_re);
        const __m256d rs_im = _mm256_add_pd(g1.r_im, g2.r_im);
        const __m256d as_re = neg(rs_re);
        const __m256d as_im = rs_im;

        const __m256d ra_re = _mm256_sub_pd(_mm256_mul_pd(g0.r_re, as_re), _mm256_mul_pd(g0.r_im, as_im));
        const __m256d ra_im = _mm256_add_pd(_mm256_mul_pd(g0.r_re, as_im), _mm256_mul_pd(g0.r_im, as_re));
        const __m256d e11_re = _mm256_add_pd(_mm256_mul_pd(g0.k, ks), _mm256_mul_pd(q, ra_re));
        const __m256d e11_im = _mm256_mul_pd(q, ra_im);

        const __m256d a3_re = neg(g3.r_re);
        const __m256d a3_im = g3.r_im;
        const __m256d rsa3_re = _mm256_sub_pd(_mm256_mul_pd(rs_re, a3_re), _mm256_mul_pd(rs_im, a3_im));
        const __m256d rsa3_im = _mm256_add_pd(_mm256_mul_pd(rs_re, a3_im), _mm256_mul_pd(rs_im, a3_re));
        const __m256d qk0 = _mm256_mul_pd(q, g0.k);

        const __m256d a0_re = neg(g0.r_re);
        const __m256d a0_im = g0.r_im;
        const __m256d a0r3_re = _mm256_sub_pd(_mm256_mul_pd(a0_re, g3.r_re), _mm256_mul_pd(a0_im, g3.r_im));
        const __m256d a0r3_im = _mm256_add_pd(_mm256_mul_pd(a0_re, g3.r_im), _mm256_mul_pd(a0_im, g3.r_re));
        const __m256d qks = _mm256_mul_pd(q, ks);

        const __m256d re = _mm256_add_pd(
            _mm256_add_pd(_mm256_mul_pd(e11_re, g3.k), _mm256_mul_pd(qk0, rsa3_re)), _mm256_mul_pd(qks, a0r3_re));
        const __m256d im = _mm256_add_pd(
            _mm256_add_pd(_mm256_mul_pd(e11_im, g3.k), _mm256_mul_pd(qk0, rsa3_im)), _mm256_mul_pd(qks, a0r3_im));
        _mm256_storeu_pd(&out_re[i], re);
        _mm256_storeu_pd(&out_im[i], im);
    }
    if (i < n) {
        KeldyshBatch tail{batch.alpha.subspan(i),
                          {batch.occupation[0].subspan(i), batch.occupation[1].subspan(i),
                           batch.occupation[2].subspan(i), batch.occupation[3].subspan(i)}};
        scalar::keldysh_trace(c, tail, out_re.subspan(i), out_im.subspan(i));
    }
}

void leapfrog_polynomial(const PolynomialPotential &v, double dt, long steps, std::span<double> q,
                         std::span<double> p) {
    if (q.size() != p.size()) {
        throw std::invalid_argument("leapfrog_polynomial: q and p sizes differ");
    }
    const __m256d half_dt = _mm256_set1_pd(0.5 * dt);
    const __m256d dt_over_m = _mm256_set1_pd(dt / v.mass);
    const __m256d k2 = _mm256_set1_pd(v.k2);
    const __m256d k3 = _mm256_set1_pd(v.k3);
    const __m256d k4 = _mm256_set1_pd(v.k4);
    auto force = [&](__m256d x) {
        return neg(_mm256_mul_pd(x, _mm256_add_pd(k2, _mm256_mul_pd(x, _mm256_add_pd(k3, _mm256_mul_pd(x, k4))))));
    };

    const std::size_t n = q.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d qi = _mm256_loadu_pd(&q[i]);
        __m256d pi = _mm256_loadu_pd(&p[i]);
        __m256d f = force(qi);
        for (long s = 0; s < steps; ++s) {
            pi = _mm256_add_pd(pi, _mm256_mul_pd(half_dt, f));
            qi = _mm256_add_pd(qi, _mm256_mul_pd(dt_over_m, pi));
            f = force(qi);
            pi = _mm256_add_pd(pi, _mm256_mul_pd(half_dt, f));
        }
        _mm256_storeu_pd(&q[i], qi);
        _mm256_storeu_pd(&p[i], pi);
    }
    if (i < n) {
        scalar::leapfrog_polynomial(v, dt, steps, q.subspan(i), p.subspan(i));
    }
}

} // namespace wmsim::simd::avx2
