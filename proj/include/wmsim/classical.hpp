#pragma once

// Classical sequential weak measurements: phase-space ensembles evolved with
// velocity Verlet, impulsive detector couplings g * p_d * A(Gamma) and
// forward/reverse experiment comparison.
//
// Detector variances sigma_q, sigma_p are in detector units; readings are
// returned in a-units (divided by g), so the reading noise has variance
// sigma_q / g^2.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wmsim/moments.hpp"
#include "wmsim/simd/kernels.hpp"

namespace wmsim::classical {

struct PhasePoint {
    std::vector<double> q;
    std::vector<double> p;

    std::size_t dof() const { return q.size(); }
};

enum class Builtin { Harmonic, QuarticDoubleWell, CubicAnharmonic };

class ClassicalSystem {
public:
    using Potential = std::function<double(std::span<const double> q)>;
    using Gradient = std::function<void(std::span<const double> q, std::span<double> grad)>;

    /// Custom potential. The gradient is checked against central differences
    /// of V at a few pseudo-random points; a mismatch above 1e-6 relative
    /// throws std::invalid_argument.
    ClassicalSystem(Potential v, Gradient grad, std::vector<double> masses);

    /// One degree of freedom: harmonic V = q^2/2, double well
    /// V = -q^2/2 + q^4/4, cubic V = q^2/2 + 0.3 q^3/3.
    static ClassicalSystem builtin(Builtin tag, double mass = 1.0);
    static ClassicalSystem polynomial(simd::PolynomialPotential v);

    std::size_t dof() const { return masses_.size(); }
    const std::vector<double> &masses() const { return masses_; }
    double potential(std::span<const double> q) const { return v_(q); }
    void gradient(std::span<const double> q, std::span<double> grad) const { grad_(q, grad); }
    double energy(const PhasePoint &x) const;

    /// Set for one-dof polynomial systems, which use the vectorised integrator.
    const std::optional<simd::PolynomialPotential> &polynomial_form() const { return poly_; }

private:
    ClassicalSystem() = default;

    Potential v_;
    Gradient grad_;
    std::vector<double> masses_;
    std::optional<simd::PolynomialPotential> poly_;
};

/// Velocity Verlet. A negative dt integrates backwards; stepping the
/// momentum-flipped point with -dt mirrors the +dt trajectory exactly. Throws
/// std::domain_error on a non-finite force.
PhasePoint leapfrog_evolve(const PhasePoint &x, const ClassicalSystem &sys, double dt, long steps);

enum class Parity { Even, Odd };

struct ClassicalObservable {
    using Value = std::function<double(const PhasePoint &)>;
    using Gradient = std::function<void(const PhasePoint &, std::span<double> d_dq, std::span<double> d_dp)>;

    std::string name;
    Value value;
    Gradient gradient;
    Parity parity = Parity::Even;

    static ClassicalObservable position(std::size_t i = 0);
    static ClassicalObservable momentum(std::size_t i = 0);
};

struct KickResult {
    PhasePoint point;
    double reading; // g * A(Gamma), before detector noise
};

/// Impulsive coupling g * p_d * A: one explicit Euler step of
/// dq/ds = g p_d dA/dp, dp/ds = -g p_d dA/dq over unit s.
KickResult measurement_kick(const PhasePoint &x, const ClassicalObservable &a, double g, double p_d);

/// Variances of the detector position and momentum.
struct ClassicalDetectorSpec {
    double sigma_q = 0.0;
    double sigma_p = 0.0;
};

struct ClassicalStep {
    double time;
    ClassicalObservable observable;
    /// Detector identity for the random stream; defaults to the step index.
    /// Give inserted steps a fresh channel to keep the other readings'
    /// noise unchanged.
    std::optional<std::uint32_t> channel;
};

struct ClassicalProtocol {
    std::vector<ClassicalStep> steps;
    double g = 0.0;
    ClassicalDetectorSpec detector;
    double dt = 1e-3; // integrator step; every time must lie on this grid

    /// Throws std::invalid_argument on empty or unordered steps, negative
    /// variances, off-grid times, or g = 0 with sigma_p > 0.
    void validate() const;
    ClassicalProtocol without(std::size_t index) const;
};

struct MetropolisOptions {
    std::size_t burn_in_sweeps = 10'000;
    std::size_t stride = 10;
    std::size_t chain_length = 4096; // points drawn per independent chain
};

class PhaseEnsemble {
public:
    /// Phase points (q_1..q_n, p_1..p_n) ~ N(mean, covariance), covariance
    /// given row-major 2n x 2n.
    static PhaseEnsemble gaussian(std::vector<double> mean, std::vector<double> covariance, std::size_t n_points,
                                  std::uint64_t seed);
    /// exp(-H/kT). Momenta are sampled exactly; positions exactly for a
    /// harmonic builtin and by Metropolis otherwise. A cubic polynomial is
    /// sampled inside its metastable well; other polynomials unbounded below
    /// throw std::invalid_argument.
    static PhaseEnsemble boltzmann(const ClassicalSystem &sys, double kT, std::size_t n_points, std::uint64_t seed,
                                   const MetropolisOptions &opts = {}, unsigned threads = 0);
    /// Explicit points (all of the same dimension).
    static PhaseEnsemble from_points(std::span<const PhasePoint> points, std::uint64_t seed = 0);

    std::size_t size() const { return n_; }
    std::size_t dof() const { return dof_; }
    std::uint64_t seed() const { return seed_; }
    const std::string &descriptor() const { return descriptor_; }
    std::span<const double> q(std::size_t i) const { return std::span<const double>(q_).subspan(i * dof_, dof_); }
    std::span<const double> p(std::size_t i) const { return std::span<const double>(p_).subspan(i * dof_, dof_); }
    PhasePoint point(std::size_t i) const;

private:
    std::size_t n_ = 0;
    std::size_t dof_ = 0;
    std::vector<double> q_;
    std::vector<double> p_;
    std::uint64_t seed_ = 0;
    std::string descriptor_;
};

/// Readings of every ensemble point, in forward step order. When the detector
/// exerts no back-action (sigma_p = 0) each trajectory is walked outward from
/// t = 0 rather than chronologically; the readings are the same quantities.
SampleBatch run_experiment(const PhaseEnsemble &ens, const ClassicalSystem &sys, const ClassicalProtocol &proto,
                           std::uint64_t seed, unsigned threads = 0);

/// Time-reversed run: momenta flipped, times negated about t = 0, steps in
/// reversed order, odd observables negated. Columns align with the forward
/// steps and share their noise streams.
SampleBatch reverse_experiment(const PhaseEnsemble &ens, const ClassicalSystem &sys, const ClassicalProtocol &proto,
                               std::uint64_t seed, unsigned threads = 0);

/// Mixed moments with the reading noise sigma_q / g^2 (sigma_q when g = 0)
/// removed. Same implementation as the quantum deconvolution.
MomentTable estimate_moments(const SampleBatch &batch, double g, double sigma_q, unsigned threads = 0);

/// Largest moment difference between the protocol with the given step
/// summed out and the protocol without it. Both runs are averaged over +p_d
/// and -p_d kicks sharing all other random numbers, so the O(g) part cancels
/// exactly and the O(g^2) disturbance is resolved at any g.
double measurement_disturbance(const PhaseEnsemble &ens, const ClassicalSystem &sys, const ClassicalProtocol &proto,
                               std::size_t step_index, std::uint64_t seed, unsigned threads = 0);

} // namespace wmsim::classical
