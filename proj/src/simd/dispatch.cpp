#include <atomic>
#include <stdexcept>
#include <string>

#include "wmsim/simd/kernels.hpp"

namespace wmsim::simd {

namespace {

bool cpu_has_avx2() {
#if defined(WMSIM_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

std::atomic<int> g_active{-1};

} // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
    case Isa::Scalar:
        return "scalar";
    case Isa::Avx2:
        return "avx2";
    }
    return "unknown";
}

Isa detected_isa() { return cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar; }

Isa active_isa() {
    int v = g_active.load(std::memory_order_relaxed);
    if (v < 0) {
        v = static_cast<int>(detected_isa());
        g_active.store(v, std::memory_order_relaxed);
    }
    return static_cast<Isa>(v);
}

void set_active_isa(Isa isa) {
    if (isa == Isa::Avx2 && !cpu_has_avx2()) {
        throw std::invalid_argument("set_active_isa: AVX2 is not available on this CPU/build");
    }
    g_active.store(static_cast<int>(isa), std::memory_order_relaxed);
}

void keldysh_trace(const KeldyshConstants &c, const KeldyshBatch &batch, std::span<double> out_re,
                   std::span<double> out_im) {
#if defined(WMSIM_HAVE_AVX2)
    if (active_isa() == Isa::Avx2) {
        avx2::keldysh_trace(c, batch, out_re, out_im);
        return;
    }
#endif
    scalar::keldysh_trace(c, batch, out_re, out_im);
}

void leapfrog_polynomial(const PolynomialPotential &v, double dt, long steps, std::span<double> q,
                         std::span<double> p) {
#if defined(WMSIM_HAVE_AVX2)
    if (active_isa() == Isa::Avx2) {
        avx2::leapfrog_polynomial(v, dt, steps, q, p);
        return;
    }
#endif
    scalar::leapfrog_polynomial(v, dt, steps, q, p);
}

} // namespace wmsim::simd
