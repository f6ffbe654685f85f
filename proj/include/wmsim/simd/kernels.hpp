#pragma once

// Data-parallel inner loops with a scalar reference implementation and
// ISA-specific variants. The dispatched entry points pick the variant once at
// first use; the per-ISA namespaces stay callable so tests can compare them.
//
// Variants perform the same IEEE operations in the same order (no FMA
// contraction), so every variant is bitwise identical to the scalar one.

#include <cstddef>
#include <span>
#include <string_view>

namespace wmsim::simd {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

/// Best ISA supported by the running CPU and compiled into this binary.
Isa detected_isa();

/// ISA used by the dispatched kernels.
Isa active_isa();

/// Overrides the dispatched ISA. Throws std::invalid_argument if the CPU or
/// build does not support it.
void set_active_isa(Isa isa);

/// Single-level dot constants shared by all nodes of a Keldysh batch.
struct KeldyshConstants {
    double eps;
    double gamma;
    double omega;
    double omega_p;
};

/// Inputs for n quadrature nodes. occupation[k][i] is the distribution factor
/// tanh(x/2kT) (or sign(x) at kT = 0) evaluated at the k-th shifted argument
/// alpha, alpha+omega, alpha+omega_p, alpha+omega+omega_p.
struct KeldyshBatch {
    std::span<const double> alpha;
    std::span<const double> occupation[4];
};

/// Tr{G(a) N [G(a+w) + G(a+w')] N G(a+w+w') N} per node, written to
/// out_re/out_im. The -1/2pi prefactor is not applied.
void keldysh_trace(const KeldyshConstants &c, const KeldyshBatch &batch, std::span<double> out_re,
                   std::span<double> out_im);

/// Polynomial potential V(q) = k2 q^2/2 + k3 q^3/3 + k4 q^4/4 for one degree
/// of freedom with mass m.
struct PolynomialPotential {
    double k2 = 0.0;
    double k3 = 0.0;
    double k4 = 0.0;
    double mass = 1.0;
};

/// Velocity-Verlet for `steps` steps of size dt (dt may be negative) applied
/// independently to every (q[i], p[i]).
void leapfrog_polynomial(const PolynomialPotential &v, double dt, long steps, std::span<double> q,
                         std::span<double> p);

namespace scalar {
void keldysh_trace(const KeldyshConstants &c, const KeldyshBatch &batch, std::span<double> out_re,
                   std::span<double> out_im);
void leapfrog_polynomial(const PolynomialPotential &v, double dt, long steps, std::span<double> q,
                         std::span<double> p);
} // namespace scalar

#if defined(WMSIM_HAVE_AVX2)
namespace avx2 {
void keldysh_trace(const KeldyshConstants &c, const KeldyshBatch &batch, std::span<double> out_re,
                   std::span<double> out_im);
void leapfrog_polynomial(const PolynomialPotential &v, double dt, long steps, std::span<double> q,
                         std::span<double> p);
} // namespace avx2
#endif

} // namespace wmsim::simd
