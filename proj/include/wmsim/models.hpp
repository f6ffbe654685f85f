#pragma once

// Concrete systems: the two-level double well and the single-level quantum
// dot whose occupation third cumulant is read out by a tunnel junction.
//
// Units: hbar = k_B = e = 1, h = 2 pi.

#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wmsim/linalg.hpp"
#include "wmsim/quadrature.hpp"
#include "wmsim/quantum.hpp"

namespace wmsim::models {

// ---------------------------------------------------------------------------
// Double well

struct DoubleWellParams {
    double eps = 0.0; // half the energy splitting between wells
    double tau = 0.0; // tunnelling amplitude
    double kT = 1.0;

    double delta() const;
    /// -(eps / Delta^3) tanh(Delta / kT).
    double alpha_c() const;
    /// Throws std::invalid_argument for eps = tau = 0 or kT <= 0.
    void validate() const;
};

struct DoubleWellModel {
    quantum::Hamiltonian hamiltonian; // eps Z + tau X
    quantum::Observable z;            // diag(1, -1) in the {|l>, |r>} basis
};

DoubleWellModel dwell_model(const DoubleWellParams &p);

/// Three-point weak correlator of Z for a thermal initial state,
/// alpha_c (eps^2 + tau^2 cos(2 (t3 - t2) Delta)). Requires t1 <= t2 <= t3.
double dwell_corr_analytic(const DoubleWellParams &p, double t1, double t2, double t3);

/// Plan measuring Z at the three times with strength g.
quantum::MeasurementPlan dwell_plan(const DoubleWellModel &m, double t1, double t2, double t3, double g = 0.0);

struct SmoothingPoint {
    double width;
    double asymmetry; // time_asymmetry of the smoothed three-reading plan
};

/// Replaces each Z reading at t_k by its Gaussian-smoothed version of the given
/// width (see quantum::gaussian_window) and measures the time asymmetry of the
/// resulting weak three-step plan for the thermal state.
std::vector<SmoothingPoint> dwell_smoothing_scan(const DoubleWellParams &p, double t1, double t2, double t3,
                                                 std::span<const double> widths);

/// Least-squares slope of log y against log x. Needs two or more positive pairs.
double loglog_slope(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Quantum dot

struct DotParams {
    double eps = 0.0;   // level energy
    double gamma = 1.0; // tunnelling rate
    double kT = 0.0;    // 0 means the sharp Fermi edge

    void validate() const;
};

/// Keldysh-space Green function [[G^K, G^R], [G^A, 0]] at one frequency.
struct KeldyshBlock {
    std::complex<double> gk;
    std::complex<double> gr;
    std::complex<double> ga;

    ComplexMatrix matrix() const;
    /// Occupation vertex diag(1, 1/4).
    static ComplexMatrix vertex();
};

/// tanh(omega / 2kT), or sign(omega) (0 at 0) when kT = 0.
double occupation_factor(double omega, double kT);

KeldyshBlock green_functions(double omega, const DotParams &p);

struct S3Result {
    double omega = 0.0;
    double omega_p = 0.0;
    std::complex<double> value{};
    double abs_error_estimate = 0.0;
    long evaluations = 0;
};

/// Thrown when the quadrature exhausts its budget; carries the partial result.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string &what, S3Result partial)
        : std::runtime_error(what), partial_(partial) {}
    const S3Result &partial() const { return partial_; }

private:
    S3Result partial_;
};

/// Frequency-domain third cumulant of the dot occupation,
/// -1/2pi int d alpha Tr{G(a) N [G(a+w) + G(a+w')] N G(a+w+w') N},
/// to absolute accuracy tol on the value.
S3Result s3n(double omega, double omega_p, const DotParams &p, double tol, long max_evals = kDefaultMaxEvals);

/// Same integral summed with an explicit 2x2 matrix product per node. Slow;
/// used to cross-check the fused kernel.
S3Result s3n_reference(double omega, double omega_p, const DotParams &p, double tol);

struct DiagonalPeak {
    double omega = 0.0;
    double im_s3 = 0.0; // |Im S3(omega, omega)| at the peak
};

/// Maximum of |Im S3(w, w)| over 0 < w <= wmax: grid scan followed by
/// golden-section refinement to width ~1e-6 Gamma.
DiagonalPeak im_s3_diagonal_peak(const DotParams &p, double wmax, double tol, std::size_t grid = 121);

// ---------------------------------------------------------------------------
// Tunnel-junction detector

struct JunctionParams {
    double gammap = 1.0; // junction level width
    double epsp = 0.0;   // junction level position
    double V = 0.0;      // bias
    double C = 1.0;      // capacitance

    void validate() const;
};

struct JunctionQuantities {
    double transmission;
    double chi;   // d<I>/d eps' scaled by -e^2/C
    double s3_i0; // intrinsic junction third cumulant
};

inline constexpr double kElementaryCharge = 1.0;
inline constexpr double kPlanck = 2.0 * 3.14159265358979323846;

JunctionQuantities junction_quantities(const JunctionParams &j);

struct RegimeItem {
    std::string name;
    double ratio;
    bool pass;
};

struct RegimeReport {
    std::vector<RegimeItem> items;
    double factor;
    bool all_pass() const;
};

/// Scale-separation conditions of the junction readout:
///   eV / max(Gamma, |eps|, kT), min(Gamma', |eps'|) / eV,
///   (e^2/Gamma'C) / (Gamma/eV), (Gamma/eV) / (e^2/Gamma'C)^2,
/// each passing when the ratio is at least `factor` (up to 1e-12 relative).
RegimeReport regime_check(const JunctionParams &j, const DotParams &d, double factor = 10.0);

/// s3_i0 + chi^3 * S3N(omega, omega_p).
std::complex<double> s3_total(const JunctionParams &j, const DotParams &d, double omega, double omega_p, double tol);

} // namespace wmsim::models
