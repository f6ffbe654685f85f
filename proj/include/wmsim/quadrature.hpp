#pragma once

// Adaptive integration of complex-valued functions over the whole real line.

#include <complex>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace wmsim {

/// Evaluates the integrand at every x, writing results to out (same length).
using BatchIntegrand = std::function<void(std::span<const double> x, std::span<std::complex<double>> out)>;

BatchIntegrand pointwise(std::function<std::complex<double>(double)> f);

inline constexpr long kDefaultMaxEvals = 1'000'000;

struct QuadratureRequest {
    BatchIntegrand integrand;
    double tol = 1e-10;
    /// Mandatory subdivision points (kinks, jumps). Sorted and deduplicated on
    /// use. Empty means a single split at 0.
    std::vector<double> breakpoints;
    long max_evals = kDefaultMaxEvals;
};

struct QuadratureOutcome {
    std::complex<double> value{};
    double abs_error_estimate = 0.0;
    long evaluations = 0;
    bool converged = false;
};

/// Integral over (-inf, inf). Finite panels between breakpoints use adaptive
/// Gauss-Kronrod 15/7 bisection driven by the global error estimate; the two
/// tails are mapped with x = b + t/(1 - t^2). A budget overrun returns
/// converged = false with the partial result. Throws std::invalid_argument on
/// bad requests and std::domain_error on a non-finite integrand sample.
QuadratureOutcome integrate_real_line(const QuadratureRequest &req);

/// Same engine on a finite interval [a, b].
QuadratureOutcome integrate_interval(const BatchIntegrand &f, double a, double b, double tol,
                                     long max_evals = kDefaultMaxEvals);

} // namespace wmsim
