#include "wmsim/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "wmsim/simd/kernels.hpp"

namespace wmsim::models {

namespace {

void require(bool ok, const std::string &msg) {
    if (!ok) {
        throw std::invalid_argument(msg);
    }
}

void check_s3_request(double omega, double omega_p, const DotParams &p, double tol) {
    p.validate();
    require(std::isfinite(omega) && std::isfinite(omega_p), "s3n: frequencies must be finite");
    require(tol > 0.0 && std::isfinite(tol), "s3n: tol must be positive");
}

std::vector<double> kinks(double omega, double omega_p) { return {0.0, -omega, -omega_p, -omega - omega_p}; }

S3Result finish(double omega, double omega_p, const QuadratureOutcome &q, double tol) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    S3Result r{omega, omega_p, -q.value / two_pi, q.abs_error_estimate / two_pi, q.evaluations};
    if (!q.converged || !(r.abs_error_estimate <= tol)) {
        throw ConvergenceError("s3n: quadrature did not reach tol within the evaluation budget", r);
    }
    return r;
}

} // namespace

double DoubleWellParams::delta() const { return std::hypot(eps, tau); }

double DoubleWellParams::alpha_c() const {
    const double d = delta();
    return -(eps / (d * d * d)) * std::tanh(d / kT);
}

void DoubleWellParams::validate() const {
    require(std::isfinite(eps) && std::isfinite(tau), "DoubleWellParams: eps and tau must be finite");
    require(delta() > 0.0, "DoubleWellParams: eps = tau = 0 has no splitting");
    require(kT > 0.0 && std::isfinite(kT), "DoubleWellParams: kT must be positive");
}

DoubleWellModel dwell_model(const DoubleWellParams &p) {
    p.validate();
    ComplexMatrix h = pauli::z() * complex(p.eps) + pauli::x() * complex(p.tau);
    return {quantum::Hamiltonian(h), quantum::Observable(pauli::z())};
}

double dwell_corr_analytic(const DoubleWellParams &p, double t1, double t2, double t3) {
    p.validate();
    require(t1 <= t2 && t2 <= t3, "dwell_corr_analytic: times must satisfy t1 <= t2 <= t3");
    const double d = p.delta();
    return p.alpha_c() * (p.eps * p.eps + p.tau * p.tau * std::cos(2.0 * (t3 - t2) * d / quantum::Hamiltonian::hbar()));
}

quantum::MeasurementPlan dwell_plan(const DoubleWellModel &m, double t1, double t2, double t3, double g) {
    return quantum::MeasurementPlan({{t1, m.z, g}, {t2, m.z, g}, {t3, m.z, g}});
}

std::vector<SmoothingPoint> dwell_smoothing_scan(const DoubleWellParams &p, double t1, double t2, double t3,
                                                 std::span<const double> widths) {
    const DoubleWellModel m = dwell_model(p);
    require(t1 <= t2 && t2 <= t3, "dwell_smoothing_scan: times must satisfy t1 <= t2 <= t3");
    const quantum::DensityMatrix rho = quantum::thermal_state(m.hamiltonian, p.kT);
    std::vector<SmoothingPoint> out;
    for (double w : widths) {
        // Smoothed observables are already in the Heisenberg picture, so every
        // step sits at t = 0 in the order of the window centres.
        std::vector<quantum::MeasurementStep> steps;
        for (double t : {t1, t2, t3}) {
            const auto window = quantum::gaussian_window(t, w);
            steps.push_back({0.0, quantum::smoothed_observable(m.z, m.hamiltonian, window), 0.0});
        }
        out.push_back({w, quantum::time_asymmetry(quantum::MeasurementPlan(std::move(steps)), rho, m.hamiltonian)});
    }
    return out;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size() && x.size() >= 2, "loglog_slope: need two or more pairs");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        require(x[i] > 0.0 && y[i] > 0.0, "loglog_slope: values must be positive");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = static_cast<double>(x.size());
    const double den = n * sxx - sx * sx;
    require(den > 0.0, "loglog_slope: x values must differ");
    return (n * sxy - sx * sy) / den;
}

// ---------------------------------------------------------------------------

void DotParams::validate() const {
    require(std::isfinite(eps), "DotParams: eps must be finite");
    require(gamma > 0.0 && std::isfinite(gamma), "DotParams: gamma must be positive");
    require(kT >= 0.0 && std::isfinite(kT), "DotParams: kT must be >= 0");
}

ComplexMatrix KeldyshBlock::matrix() const { return ComplexMatrix{{gk, gr}, {ga, 0.0}}; }

ComplexMatrix KeldyshBlock::vertex() { return ComplexMatrix{{1.0, 0.0}, {0.0, 0.25}}; }

double occupation_factor(double omega, double kT) {
    if (kT == 0.0) {
        return omega > 0.0 ? 1.0 : (omega < 0.0 ? -1.0 : 0.0);
    }
    return std::tanh(omega / (2.0 * kT));
}

KeldyshBlock green_functions(double omega, const DotParams &p) {
    p.validate();
    const double u = omega - p.eps;
    const complex gr = complex(0.0, 1.0) / complex(u, 0.5 * p.gamma);
    const double gk = occupation_factor(omega, p.kT) * p.gamma / (2.0 * u * u + 0.5 * p.gamma * p.gamma);
    return {gk, gr, -std::conj(gr)};
}

S3Result s3n(double omega, double omega_p, const DotParams &p, double tol, long max_evals) {
    check_s3_request(omega, omega_p, p, tol);
    const simd::KeldyshConstants c{p.eps, p.gamma, omega, omega_p};
    const std::array<double, 4> shift{0.0, omega, omega_p, omega + omega_p};
    BatchIntegrand f = [&](std::span<const double> x, std::span<complex> out) {
        const std::size_t n = x.size();
        std::vector<double> occ(4 * n), re(n), im(n);
        for (std::size_t k = 0; k < 4; ++k) {
            for (std::size_t i = 0; i < n; ++i) {
                occ[k * n + i] = occupation_factor(x[i] + shift[k], p.kT);
            }
        }
        simd::KeldyshBatch batch{x,
                                 {std::span<const double>(occ).subspan(0, n), std::span<const double>(occ).subspan(n, n),
                                  std::span<const double>(occ).subspan(2 * n, n),
                                  std::span<const double>(occ).subspan(3 * n, n)}};
        simd::keldysh_trace(c, batch, re, im);
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = complex(re[i], im[i]);
        }
    };
    QuadratureRequest req{f, 2.0 * std::numbers::pi * tol, kinks(omega, omega_p), max_evals};
    return finish(omega, omega_p, integrate_real_line(req), tol);
}

S3Result s3n_reference(double omega, double omega_p, const DotParams &p, double tol) {
    check_s3_request(omega, omega_p, p, tol);
    const ComplexMatrix n = KeldyshBlock::vertex();
    auto integrand = [&](double a) {
        const ComplexMatrix g0 = green_functions(a, p).matrix();
        const ComplexMatrix gs = green_functions(a + omega, p).matrix() + green_functions(a + omega_p, p).matrix();
        const ComplexMatrix g3 = green_functions(a + omega + omega_p, p).matrix();
        return (g0 * n * gs * n * g3 * n).trace();
    };
    QuadratureRequest req{pointwise(integrand), 2.0 * std::numbers::pi * tol, kinks(omega, omega_p)};
    return finish(omega, omega_p, integrate_real_line(req), tol);
}

DiagonalPeak im_s3_diagonal_peak(const DotParams &p, double wmax, double tol, std::size_t grid) {
    require(wmax > 0.0 && std::isfinite(wmax), "im_s3_diagonal_peak: wmax must be positive");
    require(grid >= 3, "im_s3_diagonal_peak: grid must have at least 3 points");
    auto objective = [&](double w) { return std::abs(s3n(w, w, p, tol).value.imag()); };
    const double step = wmax / static_cast<double>(grid);
    std::size_t best = 0;
    double best_value = -1.0;
    for (std::size_t k = 0; k < grid; ++k) {
        const double v = objective(step * static_cast<double>(k + 1));
        if (v > best_value) {
            best_value = v;
            best = k;
        }
    }
    double lo = step * static_cast<double>(best);
    double hi = std::min(wmax, step * static_cast<double>(best + 2));
    lo = std::max(lo, 1e-3 * step);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = objective(x1);
    double f2 = objective(x2);
    while (hi - lo > 1e-7 * std::max(1.0, wmax)) {
        if (f1 > f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2);
        }
    }
    const double w = 0.5 * (lo + hi);
    return {w, objective(w)};
}

// ---------------------------------------------------------------------------

void JunctionParams::validate() const {
    require(gammap > 0.0 && std::isfinite(gammap), "JunctionParams: gammap must be positive");
    require(C > 0.0 && std::isfinite(C), "JunctionParams: C must be positive");
    require(std::isfinite(epsp) && std::isfinite(V), "JunctionParams: epsp and V must be finite");
}

JunctionQuantities junction_quantities(const JunctionParams &j) {
    j.validate();
    constexpr double e = kElementaryCharge;
    constexpr double h = kPlanck;
    const double g2 = j.gammap * j.gammap;
    const double s = j.epsp * j.epsp + g2;
    const double t = g2 / s;
    const double e4v_h = e * e * e * e * j.V / h;
    return {t, 2.0 * e4v_h * j.epsp * g2 / (j.C * s * s), t * (1.0 - t) * (1.0 - 2.0 * t) * e4v_h};
}

bool RegimeReport::all_pass() const {
    return std::all_of(items.begin(), items.end(), [](const RegimeItem &i) { return i.pass; });
}

RegimeReport regime_check(const JunctionParams &j, const DotParams &d, double factor) {
    j.validate();
    d.validate();
    require(factor > 0.0 && std::isfinite(factor), "regime_check: factor must be positive");
    const double ev = kElementaryCharge * std::abs(j.V);
    const double charging = kElementaryCharge * kElementaryCharge / (j.gammap * j.C);
    const double dot_scale = std::max({d.gamma, std::abs(d.eps), d.kT});
    const double junction_scale = std::min(j.gammap, std::abs(j.epsp));
    const double backaction = d.gamma / ev;

    RegimeReport r;
    r.factor = factor;
    auto add = [&](std::string name, double ratio) {
        // Ratios built from decimal inputs land on the threshold up to rounding.
        r.items.push_back({std::move(name), ratio, ratio >= factor * (1.0 - 1e-12)});
    };
    add("eV >> max(Gamma, |eps|, kT)", ev / dot_scale);
    add("min(Gamma', |eps'|) >> eV", junction_scale / ev);
    add("e^2/(Gamma' C) >> Gamma/eV (coupling strong enough)", charging / backaction);
    add("Gamma/eV >> (e^2/(Gamma' C))^2 (system stays near equilibrium)", backaction / (charging * charging));
    return r;
}

std::complex<double> s3_total(const JunctionParams &j, const DotParams &d, double omega, double omega_p,
                              double tol) {
    const JunctionQuantities jq = junction_quantities(j);
    const double chi3 = jq.chi * jq.chi * jq.chi;
    if (chi3 == 0.0) {
        check_s3_request(omega, omega_p, d, tol);
        return jq.s3_i0;
    }
    const S3Result s = s3n(omega, omega_p, d, tol / std::abs(chi3));
    return complex(jq.s3_i0, 0.0) + chi3 * s.value;
}

} // namespace wmsim::models
