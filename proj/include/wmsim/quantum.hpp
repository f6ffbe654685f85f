#pragma once

// Sequential weak measurements on finite-dimensional quantum systems.
//
// Units: hbar = k_B = 1. Detector readings are reported in a-units (the raw
// ancilla position divided by g), so the reading noise has variance 1/g^2.

#include <cstdint>
#include <optional>
#include <vector>

#include "wmsim/linalg.hpp"
#include "wmsim/moments.hpp"

namespace wmsim::quantum {

inline constexpr std::size_t kMaxSteps = 6;
inline constexpr std::size_t kMaxDim = 16;

class Observable {
public:
    explicit Observable(const ComplexMatrix &m, double degeneracy_tol = kDefaultDegeneracyTol);
    /// Takes an already known spectrum; checks that it reconstructs m.
    Observable(const ComplexMatrix &m, SpectralDecomposition spectrum);

    const ComplexMatrix &matrix() const { return matrix_; }
    const SpectralDecomposition &spectrum() const { return spectrum_; }
    std::size_t dim() const { return matrix_.dim(); }

private:
    ComplexMatrix matrix_;
    SpectralDecomposition spectrum_;
};

class DensityMatrix {
public:
    /// Validates Hermiticity, unit trace and positivity (eigenvalues >= -1e-10).
    explicit DensityMatrix(const ComplexMatrix &m);

    const ComplexMatrix &matrix() const { return matrix_; }
    std::size_t dim() const { return matrix_.dim(); }
    double expectation(const ComplexMatrix &a) const { return (a * matrix_).trace().real(); }

private:
    ComplexMatrix matrix_;
};

class Hamiltonian {
public:
    explicit Hamiltonian(const ComplexMatrix &m);

    const ComplexMatrix &matrix() const { return matrix_; }
    std::size_t dim() const { return matrix_.dim(); }
    static constexpr double hbar() { return 1.0; }

    /// U(t) = exp(-i H t).
    ComplexMatrix propagator(double t) const;
    const EigenSystem &eigensystem() const { return eigen_; }

private:
    ComplexMatrix matrix_;
    EigenSystem eigen_;
};

struct MeasurementStep {
    double time;
    Observable observable;
    double strength = 0.0; // 0 is the weak limit
};

/// Nonempty, time-ordered list of measurements on a common Hilbert space.
class MeasurementPlan {
public:
    explicit MeasurementPlan(std::vector<MeasurementStep> steps);

    /// Every step measured with the same strength g.
    static MeasurementPlan uniform(std::vector<std::pair<double, Observable>> steps, double g);

    const std::vector<MeasurementStep> &steps() const { return steps_; }
    std::size_t size() const { return steps_.size(); }
    std::size_t dim() const { return steps_.front().observable.dim(); }

    /// Plan without the given step.
    MeasurementPlan without(std::size_t index) const;
    /// Same steps with every strength replaced.
    MeasurementPlan with_strength(double g) const;

private:
    std::vector<MeasurementStep> steps_;
};

/// Dense signed joint distribution over outcome tuples; the last axis varies
/// fastest in `weights`.
class Quasiprobability {
public:
    Quasiprobability(std::vector<std::vector<double>> axes, std::vector<double> weights);

    const std::vector<std::vector<double>> &axes() const { return axes_; }
    const std::vector<double> &weights() const { return weights_; }
    std::size_t rank() const { return axes_.size(); }

    double at(std::span<const std::size_t> index) const;
    double total() const;
    double min_weight() const;

    /// sum_a w(a) * prod_{k in steps} a_k (steps may repeat).
    double moment(std::span<const int> steps) const;
    /// First mixed moment <a_1 a_2 ... a_n>.
    double mean_product() const;

private:
    std::vector<std::vector<double>> axes_;
    std::vector<double> weights_;
};

/// Largest |q1(a) - q2(a)| over the union of both outcome grids, with a
/// missing bin counting as weight 0. Axis values within 1e-9 are identified.
double max_abs_difference(const Quasiprobability &q1, const Quasiprobability &q2);

/// Gaussian detector rho_d ~ exp(-q^2/2 alpha - p^2/2 beta). The quantum
/// variances include the zero-point spread.
struct DetectorSpec {
    double alpha;
    double beta;
    double sigma_q;
    double sigma_p;

    static DetectorSpec from_gaussian(double alpha, double beta);
};

Observable heisenberg_evolve(const Observable &a, const Hamiltonian &h, double t);

DensityMatrix thermal_state(const Hamiltonian &h, double kT);

/// Joint quasiprobability of the plan. Steps with strength 0 use the Jordan
/// product with each eigenprojector (eigenvalue axes). Steps with g > 0 bin
/// P_i X P_j at the midpoints (l_i + l_j)/2 with coherence damping
/// exp(-g^2 (l_i - l_j)^2 / 8).
Quasiprobability quasiprob(const MeasurementPlan &plan, const DensityMatrix &rho, const Hamiltonian &h);

/// Tr rho {A_1(t_1), {..., {A_{n-1}(t_{n-1}), A_n(t_n)}}} / 2^(n-1).
double weak_moment(const MeasurementPlan &plan, const DensityMatrix &rho, const Hamiltonian &h);

/// Sums out one axis. Throws std::out_of_range for a bad index.
Quasiprobability marginalize(const Quasiprobability &q, std::size_t step_index);

/// Max-norm of (table with the step summed out) minus (table of the plan
/// without that step), both at the plan's strengths. Zero at g = 0.
double measurement_disturbance(const MeasurementPlan &plan, const DensityMatrix &rho, const Hamiltonian &h,
                               std::size_t step_index);

/// Exact Kraus-operator Monte Carlo of the detector readings. Requires g > 0 on
/// every step. Each (sample, step) pair owns an independent counter-based
/// random stream, so the batch is identical for any thread count.
SampleBatch sample_sequence(const MeasurementPlan &plan, const DensityMatrix &rho, const Hamiltonian &h,
                            std::size_t n_samples, std::uint64_t seed, unsigned threads = 0);

/// sample_sequence followed by deconvolve_moments without materialising the
/// batch; bitwise identical to the two-step route.
MomentTable sample_moments(const MeasurementPlan &plan, const DensityMatrix &rho, const Hamiltonian &h,
                           std::size_t n_samples, std::uint64_t seed, unsigned threads = 0);

/// Removes the 1/g^2 reading noise from the batch's mixed moments.
MomentTable deconvolve_moments(const SampleBatch &batch, unsigned threads = 0);

struct WindowPoint {
    double time;
    double weight; // f(t) dt
};

/// sum_j w_j A(t_j). Weights must sum to 1 within 1e-9.
Observable smoothed_observable(const Observable &a, const Hamiltonian &h, std::span<const WindowPoint> window);

/// Normalised Gaussian window centred on `center` with standard deviation
/// `width`, sampled on `points` nodes over +-5 widths. width = 0 gives a single
/// node.
std::vector<WindowPoint> gaussian_window(double center, double width, std::size_t points = 201);

/// Quasiprobability of the time-reversed experiment (conjugated state,
/// observables and Hamiltonian; reversed order; negated times), with axes
/// permuted back to the forward step order.
Quasiprobability time_reversed_quasiprob(const MeasurementPlan &plan, const DensityMatrix &rho,
                                         const Hamiltonian &h);

/// Max-norm of forward minus aligned reversed quasiprobability.
double time_asymmetry(const MeasurementPlan &plan, const DensityMatrix &rho, const Hamiltonian &h);

/// True iff every pair of Heisenberg-evolved step observables commutes to within
/// 1e-9 ||A_j|| ||A_k|| (Frobenius).
bool compatibility_check(const MeasurementPlan &plan, const Hamiltonian &h);

} // namespace wmsim::quantum
