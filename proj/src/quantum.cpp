#include "wmsim/quantum.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "wmsim/parallel.hpp"
#include "wmsim/rng.hpp"

namespace wmsim::quantum {

namespace {

constexpr double kHermitianTol = 1e-10;
constexpr double kBinTol = 1e-9;
constexpr std::size_t kMaxTableSize = std::size_t{1} << 24;

void require(bool ok, const std::string &msg) {
    if (!ok) {
        throw std::invalid_argument(msg);
    }
}

// Sorted unique values, merging neighbours closer than tol.
std::vector<double> merge_values(std::vector<double> v, double tol) {
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double x : v) {
        if (out.empty() || x - out.back() > tol) {
            out.push_back(x);
        }
    }
    return out;
}

std::size_t find_bin(const std::vector<double> &axis, double x, double tol) {
    auto it = std::lower_bound(axis.begin(), axis.end(), x - tol);
    if (it == axis.end() || std::abs(*it - x) > tol) {
        throw std::logic_error("quasiprob: outcome value missing from axis");
    }
    return static_cast<std::size_t>(it - axis.begin());
}

// Superoperators of one measurement step, grouped by outcome bin.
struct StepSuperops {
    struct Term {
        std::size_t i;
        std::size_t j;
        double factor;
    };
    std::vector<double> axis;
    std::vector<std::vector<Term>> bins;
    bool jordan = false; // g == 0: bins[b] is the single projector b
    const SpectralDecomposition *spectrum = nullptr;

    ComplexMatrix apply(std::size_t b, const ComplexMatrix &x) const {
        const auto &p = spectrum->projectors;
        if (jordan) {
            return (p[b] * x + x * p[b]) * complex(0.5);
        }
        ComplexMatrix r(x.dim());
        for (const Term &t : bins[b]) {
            r += (p[t.i] * x * p[t.j]) * complex(t.factor);
        }
        return r;
    }

    // Tr(apply(b, x)); off-diagonal P_i X P_j terms are traceless.
    double trace_apply(std::size_t b, const ComplexMatrix &x) const {
        const auto &p = spectrum->projectors;
        if (jordan) {
            return (p[b] * x).trace().real();
        }
        double s = 0.0;
        for (const Term &t : bins[b]) {
            if (t.i == t.j) {
                s += t.factor * (p[t.i] * x).trace().real();
            }
        }
        return s;
    }
};

StepSuperops make_superops(const Observable &a, double g) {
    StepSuperops ops;
    ops.spectrum = &a.spectrum();
    const auto &lam = a.spectrum().eigenvalues;
    if (g == 0.0) {
        ops.jordan = true;
        ops.axis = lam;
        ops.bins.resize(lam.size());
        return ops;
    }
    std::vector<double> mids;
    for (double li : lam) {
        for (double lj : lam) {
            mids.push_back(0.5 * (li + lj));
        }
    }
    ops.axis = merge_values(mids, kBinTol);
    ops.bins.resize(ops.axis.size());
    for (std::size_t i = 0; i < lam.size(); ++i) {
        for (std::size_t j = 0; j < lam.size(); ++j) {
            const double d = lam[i] - lam[j];
            const std::size_t b = find_bin(ops.axis, 0.5 * (lam[i] + lam[j]), kBinTol);
            ops.bins[b].push_back({i, j, std::exp(-g * g * d * d / 8.0)});
        }
    }
    return ops;
}

std::vector<Observable> evolved_observables(const MeasurementPlan &plan, const Hamiltonian &h) {
    std::vector<Observable> out;
    out.reserve(plan.size());
    for (const auto &s : plan.steps()) {
        out.push_back(heisenberg_evolve(s.observable, h, s.time));
    }
    return out;
}

void check_dims(const MeasurementPlan &plan, const DensityMatrix &rho, const Hamiltonian &h) {
    require(rho.dim() == plan.dim() && h.dim() == plan.dim(), "dimension mismatch between plan, state and Hamiltonian");
}

Observable conjugated(const Observable &a) {
    SpectralDecomposition s = a.spectrum();
    for (auto &p : s.projectors) {
        p = p.conjugate();
    }
    return Observable(a.matrix().conjugate(), std::move(s));
}

Quasiprobability reverse_axes(const Quasiprobability &q) {
    const std::size_t n = q.rank();
    std::vector<std::vector<double>> axes(q.axes().rbegin(), q.axes().rend());
    std::vector<double> weights(q.weights().size());
    std::vector<std::size_t> idx(n, 0);
    for (std::size_t flat = 0; flat < weights.size(); ++flat) {
        // idx enumerates the reversed table in row-major order.
        std::size_t src = 0;
        for (std::size_t k = 0; k < n; ++k) {
            src = src * q.axes()[k].size() + idx[n - 1 - k];
        }
        weights[flat] = q.weights()[src];
        for (std::size_t k = n; k-- > 0;) {
            if (++idx[k] < axes[k].size()) {
                break;
            }
            idx[k] = 0;
        }
    }
    return Quasiprobability(std::move(axes), std::move(weights));
}

} // namespace

// ---------------------------------------------------------------------------

Observable::Observable(const ComplexMatrix &m, double degeneracy_tol)
    : matrix_(m), spectrum_(hermitian_eigen(m, degeneracy_tol)) {}

Observable::Observable(const ComplexMatrix &m, SpectralDecomposition spectrum)
    : matrix_(m), spectrum_(std::move(spectrum)) {
    require(m.is_hermitian(kHermitianTol * std::max(1.0, m.frobenius_norm())), "Observable: matrix is not Hermitian");
    require(!spectrum_.projectors.empty() && spectrum_.projectors.size() == spectrum_.eigenvalues.size(),
            "Observable: malformed spectrum");
    const ComplexMatrix rebuilt = matrix_function(spectrum_, [](double x) { return complex(x); });
    require((rebuilt - m).frobenius_norm() <= 1e-9 * std::max(1.0, m.frobenius_norm()),
            "Observable: spectrum does not reconstruct the matrix");
}

DensityMatrix::DensityMatrix(const ComplexMatrix &m) : matrix_(m) {
    require(m.is_hermitian(kHermitianTol), "DensityMatrix: not Hermitian");
    require(std::abs(m.trace() - complex(1.0)) <= 1e-10, "DensityMatrix: trace differs from 1");
    const EigenSystem es = jacobi_eigensystem(m);
    require(es.eigenvalues.front() >= -1e-10, "DensityMatrix: negative eigenvalue");
}

Hamiltonian::Hamiltonian(const ComplexMatrix &m) : matrix_(m), eigen_(jacobi_eigensystem(m)) {}

ComplexMatrix Hamiltonian::propagator(double t) const {
    const std::size_t n = dim();
    ComplexMatrix u(n);
    for (std::size_t k = 0; k < n; ++k) {
        const complex phase = std::exp(complex(0.0, -eigen_.eigenvalues[k] * t / hbar()));
        for (std::size_t i = 0; i < n; ++i) {
            const complex vik = eigen_.vectors(i, k) * phase;
            for (std::size_t j = 0; j < n; ++j) {
                u(i, j) += vik * std::conj(eigen_.vectors(j, k));
            }
        }
    }
    return u;
}

MeasurementPlan::MeasurementPlan(std::vector<MeasurementStep> steps) : steps_(std::move(steps)) {
    require(!steps_.empty(), "MeasurementPlan: no steps");
    require(steps_.size() <= kMaxSteps, "MeasurementPlan: at most " + std::to_string(kMaxSteps) + " steps");
    const std::size_t d = steps_.front().observable.dim();
    require(d <= kMaxDim, "MeasurementPlan: dimension above " + std::to_string(kMaxDim));
    for (std::size_t k = 0; k < steps_.size(); ++k) {
        const auto &s = steps_[k];
        require(std::isfinite(s.time), "MeasurementPlan: non-finite time");
        require(s.strength >= 0.0 && std::isfinite(s.strength), "MeasurementPlan: strength must be >= 0");
        require(s.observable.dim() == d, "MeasurementPlan: observables of different dimension");
        if (k > 0) {
            require(s.time >= steps_[k - 1].time, "MeasurementPlan: times must be nondecreasing");
        }
    }
}

MeasurementPlan MeasurementPlan::uniform(std::vector<std::pair<double, Observable>> steps, double g) {
    std::vector<MeasurementStep> out;
    out.reserve(steps.size());
    for (auto &[t, a] : steps) {
        out.push_back({t, std::move(a), g});
    }
    return MeasurementPlan(std::move(out));
}

MeasurementPlan MeasurementPlan::without(std::size_t index) const {
    if (index >= steps_.size()) {
        throw std::out_of_range("MeasurementPlan::without: index out of range");
    }
    std::vector<MeasurementStep> s = steps_;
    s.erase(s.begin() + static_cast<std::ptrdiff_t>(index));
    return MeasurementPlan(std::move(s));
}

MeasurementPlan MeasurementPlan::with_strength(double g) const {
    std::vector<MeasurementStep> s = steps_;
    for (auto &step : s) {
        step.strength = g;
    }
    return MeasurementPlan(std::move(s));
}

Quasiprobability::Quasiprobability(std::vector<std::vector<double>> axes, std::vector<double> weights)
    : axes_(std::move(axes)), weights_(std::move(weights)) {
    std::size_t size = 1;
    for (const auto &a : axes_) {
        require(!a.empty(), "Quasiprobability: empty axis");
        size *= a.size();
    }
    require(size == weights_.size(), "Quasiprobability: weight count does not match axes");
}

double Quasiprobability::at(std::span<const std::size_t> index) const {
    if (index.size() != rank()) {
        throw std::out_of_range("Quasiprobability::at: wrong index rank");
    }
    std::size_t flat = 0;
    for (std::size_t k = 0; k < rank(); ++k) {
        if (index[k] >= axes_[k].size()) {
            throw std::out_of_range("Quasiprobability::at: index out of range");
        }
        flat = flat * axes_[k].size() + index[k];
    }
    return weights_[flat];
}

double Quasiprobability::total() const { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }

double Quasiprobability::min_weight() const { return *std::min_element(weights_.begin(), weights_.end()); }

double Quasiprobability::moment(std::span<const int> steps) const {
    for (int s : steps) {
        if (s < 0 || static_cast<std::size_t>(s) >= rank()) {
            throw std::out_of_range("Quasiprobability::moment: step index out of range");
        }
    }
    const std::size_t n = rank();
    std::vector<std::size_t> idx(n, 0);
    double sum = 0.0;
    for (double w : weights_) {
        double prod = w;
        for (int s : steps) {
            prod *= axes_[static_cast<std::size_t>(s)][idx[static_cast<std::size_t>(s)]];
        }
        sum += prod;
        for (std::size_t k = n; k-- > 0;) {
            if (++idx[k] < axes_[k].size()) {
                break;
            }
            idx[k] = 0;
        }
    }
    return sum;
}

double Quasiprobability::mean_product() const {
    std::vector<int> all(rank());
    std::iota(all.begin(), all.end(), 0);
    return moment(all);
}

double max_abs_difference(const Quasiprobability &q1, const Quasiprobability &q2) {
    require(q1.rank() == q2.rank(), "max_abs_difference: tables of different rank");
    const std::size_t n = q1.rank();
    std::vector<std::vector<double>> axes(n);
    std::vector<std::vector<std::size_t>> map1(n), map2(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<double> all = q1.axes()[k];
        all.insert(all.end(), q2.axes()[k].begin(), q2.axes()[k].end());
        axes[k] = merge_values(all, kBinTol);
        for (double v : q1.axes()[k]) {
            map1[k].push_back(find_bin(axes[k], v, kBinTol));
        }
        for (double v : q2.axes()[k]) {
            map2[k].push_back(find_bin(axes[k], v, kBinTol));
        }
    }
    std::size_t size = 1;
    for (const auto &a : axes) {
        size *= a.size();
    }
    std::vector<double> diff(size, 0.0);
    auto scatter = [&](const Quasiprobability &q, const std::vector<std::vector<std::size_t>> &map, double sign) {
        std::vector<std::size_t> idx(n, 0);
        for (double w : q.weights()) {
            std::size_t flat = 0;
            for (std::size_t k = 0; k < n; ++k) {
                flat = flat * axes[k].size() + map[k][idx[k]];
            }
            diff[flat] += sign * w;
            for (std::size_t k = n; k-- > 0;) {
                if (++idx[k] < q.axes()[k].size()) {
                    break;
                }
                idx[k] = 0;
            }
        }
    };
    scatter(q1, map1, 1.0);
    scatter(q2, map2, -1.0);
    double worst = 0.0;
    for (double d : diff) {
        worst = std::max(worst, std::abs(d));
    }
    return worst;
}

DetectorSpec DetectorSpec::from_gaussian(double alpha, double beta) {
    require(alpha > 0.0 && beta > 0.0, "DetectorSpec: alpha and beta must be positive");
    const double hbar = Hamiltonian::hbar();
    const double x = std::sqrt(hbar * hbar / (4.0 * alpha * beta));
    const double coth = 1.0 / std::tanh(x);
    DetectorSpec d{alpha, beta, 0.5 * hbar * std::sqrt(alpha / beta) * coth, 0.5 * hbar * std::sqrt(beta / alpha) * coth};
    require(d.sigma_q * d.sigma_p >= hbar * hbar / 4.0 - 1e-12, "DetectorSpec: uncertainty bound violated");
    return d;
}

// ---------------------------------------------------------------------------

Observable heisenberg_evolve(const Observable &a, const Hamiltonian &h, double t) {
    require(a.dim() == h.dim(), "heisenberg_evolve: dimension mismatch");
    const ComplexMatrix u = h.propagator(t);
    const ComplexMatrix ud = u.adjoint();
    SpectralDecomposition s = a.spectrum();
    for (auto &p : s.projectors) {
        p = hermitian_part(ud * p * u);
    }
    return Observable(hermitian_part(ud * a.matrix() * u), std::move(s));
}

DensityMatrix thermal_state(const Hamiltonian &h, double kT) {
    require(kT > 0.0 && std::isfinite(kT), "thermal_state: kT must be positive");
    const double ground = h.eigensystem().eigenvalues.front();
    ComplexMatrix boltz = matrix_function(h.matrix(), [&](double e) { return complex(std::exp(-(e - ground) / kT)); });
    boltz *= complex(1.0 / boltz.trace().real());
    return DensityMatrix(hermitian_part(boltz));
}

Quasiprobability quasiprob(const MeasurementPlan &plan, const DensityMatrix &rho, const Hamiltonian &h) {
    check_dims(plan, rho, h);
    const std::vector<Observable> evolved = evolved_observables(plan, h);
    std::vector<StepSuperops> ops;
    ops.reserve(plan.size());
    std::size_t size = 1;
    for (std::size_t k = 0; k < plan.size(); ++k) {
        ops.push_back(make_superops(evolved[k], plan.steps()[k].strength));
        size *= ops.back().axis.size();
        require(size <= kMaxTableSize, "quasiprob: outcome table too large");
    }
    std::vector<std::vector<double>> axes;
    for (const auto &o : ops) {
        axes.push_back(o.axis);
    }
    std::vector<double> weights(size, 0.0);

    const std::size_t n = ops.size();
    // Depth-first over outcome prefixes; `flat` is the row-major prefix index.
    auto recurse = [&](auto &self, std::size_t step, std::size_t flat, const ComplexMatrix &x) -> void {
        const StepSuperops &o = ops[step];
        for (std::size_t b = 0; b < o.axis.size(); ++b) {
            const std::size_t next = flat * o.axis.size() + b;
            if (step + 1 == n) {
                weights[next] = o.trace_apply(b, x);
            } else {
                self(self, step + 1, next, o.apply(b, x));
            }
        }
    };
    recurse(recurse, 0, 0, rho.matrix());
    return Quasiprobability(std::move(axes), std::move(weights));
}

double weak_moment(const MeasurementPlan &plan, const DensityMatrix &rho, const Hamiltonian &h) {
    check_dims(plan, rho, h);
    const std::vector<Observable> evolved = evolved_observables(plan, h);
    ComplexMatrix m = evolved.back().matrix();
    for (std::size_t k = evolved.size() - 1; k-- > 0;) {
        m = anticommutator(evolved[k].matrix(), m) * complex(0.5);
    }
    return rho.expectation(m);
}

Quasiprobability marginalize(const Quasiprobability &q, std::size_t step_index) {
    if (step_index >= q.rank()) {
        throw std::out_of_range("marginalize: step index " + std::to_string(step_index) + " out of range");
    }
    std::vector<std::vector<double>> axes = q.axes();
    axes.erase(axes.begin() + static_cast<std::ptrdiff_t>(step_index));
    std::size_t inner = 1;
    for (std::size_t k = step_index + 1; k < q.rank(); ++k) {
        inner *= q.axes()[k].size();
    }
    const std::size_t mid = q.axes()[step_index].size();
    const std::size_t outer = q.weights().size() / (inner * mid);
    std::vector<double> weights(outer * inner, 0.0);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t m = 0; m < mid; ++m) {
            for (std::size_t i = 0; i < inner; ++i) {
                weights[o * inner + i] += q.weights()[(o * mid + m) * inner + i];
            }
        }
    }
    return Quasiprobability(std::move(axes), std::move(weights));
}

double measurement_disturbance(const MeasurementPlan &plan, const DensityMatrix &rho, const Hamiltonian &h,
                               std::size_t step_index) {
    require(plan.size() >= 2, "measurement_disturbance: need at least two steps");
    const Quasiprobability marginal = marginalize(quasiprob(plan, rho, h), step_index);
    return max_abs_difference(marginal, quasiprob(plan.without(step_index), rho, h));
}

// ---------------------------------------------------------------------------
// Monte Carlo

namespace {

// Per-step data for the Kraus sampler, in the eigenbasis of each step's
// (Schroedinger-picture) observable.
struct SamplerStep {
    std::vector<double> eigenvalues;
    ComplexMatrix transfer; // previous basis -> this basis, including U(dt)
};

class KrausSampler {
public:
    KrausSampler(const MeasurementPlan &plan, const DensityMatrix &rho, const Hamiltonian &h, std::uint64_t seed)
        : seed_(seed), rho0_(rho.matrix()), dim_(plan.dim()) {
        check_dims(plan, rho, h);
        g_ = plan.steps().front().strength;
        require(g_ > 0.0, "sample_sequence: strength g must be positive");
        for (const auto &s : plan.steps()) {
            require(s.strength == g_, "sample_sequence: all steps must share one strength");
        }
        ComplexMatrix prev_basis = ComplexMatrix::identity(dim_);
        double prev_time = 0.0;
        for (const auto &s : plan.steps()) {
            EigenSystem es = jacobi_eigensystem(s.observable.matrix());
            ComplexMatrix transfer = es.vectors.adjoint() * h.propagator(s.time - prev_time) * prev_basis;
            steps_.push_back({std::move(es.eigenvalues), std::move(transfer)});
            prev_basis = std::move(es.vectors);
            prev_time = s.time;
        }
    }

    std::size_t n_steps() const { return steps_.size(); }
    double g() const { return g_; }

    void sample(std::size_t index, std::span<double> out, std::vector<complex> &rho,
                std::vector<complex> &tmp) const {
        const std::size_t d = dim_;
        rho.assign(rho0_.entries().begin(), rho0_.entries().end());
        tmp.resize(d * d);
        for (std::size_t k = 0; k < steps_.size(); ++k) {
            const SamplerStep &st = steps_[k];
            RandomStream rng(seed_, index, static_cast<std::uint32_t>(k));
            // rho <- T rho T^dagger
            for (std::size_t i = 0; i < d; ++i) {
                for (std::size_t j = 0; j < d; ++j) {
                    complex s = 0.0;
                    for (std::size_t m = 0; m < d; ++m) {
                        s += st.transfer(i, m) * rho[m * d + j];
                    }
                    tmp[i * d + j] = s;
                }
            }
            for (std::size_t i = 0; i < d; ++i) {
                for (std::size_t j = 0; j < d; ++j) {
                    complex s = 0.0;
                    for (std::size_t m = 0; m < d; ++m) {
                        s += tmp[i * d + m] * std::conj(st.transfer(j, m));
                    }
                    rho[i * d + j] = s;
                }
            }
            double norm = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                norm += std::max(0.0, rho[i * d + i].real());
            }
            double u = rng.uniform() * norm;
            std::size_t pick = d - 1;
            for (std::size_t i = 0; i < d; ++i) {
                const double w = std::max(0.0, rho[i * d + i].real());
                if (u < w) {
                    pick = i;
                    break;
                }
                u -= w;
            }
            const double a = st.eigenvalues[pick] + rng.normal() / g_;
            out[k] = a;

            double closest = std::numeric_limits<double>::infinity();
            for (double l : st.eigenvalues) {
                closest = std::min(closest, (l - a) * (l - a));
            }
            std::array<double, kMaxDim> c{};
            for (std::size_t i = 0; i < d; ++i) {
                const double dl = st.eigenvalues[i] - a;
                c[i] = std::exp(-g_ * g_ * (dl * dl - closest) / 4.0);
            }
            double trace = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                for (std::size_t j = 0; j < d; ++j) {
                    rho[i * d + j] *= c[i] * c[j];
                }
                trace += rho[i * d + i].real();
            }
            for (auto &z : rho) {
                z /= trace;
            }
        }
    }

private:
    std::uint64_t seed_;
    ComplexMatrix rho0_;
    std::size_t dim_;
    double g_ = 0.0;
    std::vector<SamplerStep> steps_;
};

} // namespace

SampleBatch sample_sequence(const MeasurementPlan &plan, const DensityMatrix &rho, const Hamiltonian &h,
                            std::size_t n_samples, std::uint64_t seed, unsigned threads) {
    require(n_samples >= 1, "sample_sequence: n_samples must be >= 1");
    const KrausSampler sampler(plan, rho, h, seed);
    SampleBatch batch;
    batch.n_samples = n_samples;
    batch.n_steps = sampler.n_steps();
    batch.outcomes.resize(n_samples * batch.n_steps);
    batch.g = sampler.g();
    batch.seed = seed;
    parallel_chunks(n_samples, kMomentChunk, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<complex> r, tmp;
        for (std::size_t s = begin; s < end; ++s) {
            sampler.sample(s, std::span<double>(batch.outcomes).subspan(s * batch.n_steps, batch.n_steps), r, tmp);
        }
    });
    return batch;
}

MomentTable sample_moments(const MeasurementPlan &plan, const DensityMatrix &rho, const Hamiltonian &h,
                           std::size_t n_samples, std::uint64_t seed, unsigned threads) {
    require(n_samples >= 2, "sample_moments: need at least 2 samples");
    const KrausSampler sampler(plan, rho, h, seed);
    const std::size_t n_steps = sampler.n_steps();
    MomentAccumulator acc(n_steps, 1.0 / (sampler.g() * sampler.g()));
    std::vector<MomentAccumulator::Partial> partials(chunk_count(n_samples, kMomentChunk));
    parallel_chunks(n_samples, kMomentChunk, threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        std::vector<double> rows((end - begin) * n_steps);
        std::vector<complex> r, tmp;
        for (std::size_t s = begin; s < end; ++s) {
            sampler.sample(s, std::span<double>(rows).subspan((s - begin) * n_steps, n_steps), r, tmp);
        }
        partials[c] = acc.accumulate(rows);
    });
    for (const auto &p : partials) {
        acc.merge(p);
    }
    return acc.finish();
}

MomentTable deconvolve_moments(const SampleBatch &batch, unsigned threads) {
    require(batch.g > 0.0, "deconvolve_moments: batch strength must be positive");
    return deconvolved_moments(batch, 1.0 / (batch.g * batch.g), threads);
}

// ---------------------------------------------------------------------------

Observable smoothed_observable(const Observable &a, const Hamiltonian &h, std::span<const WindowPoint> window) {
    require(!window.empty(), "smoothed_observable: empty window");
    require(a.dim() == h.dim(), "smoothed_observable: dimension mismatch");
    double total = 0.0;
    ComplexMatrix sum(a.dim());
    for (const auto &w : window) {
        require(std::isfinite(w.time) && std::isfinite(w.weight), "smoothed_observable: non-finite window point");
        total += w.weight;
        const ComplexMatrix u = h.propagator(w.time);
        sum += (u.adjoint() * a.matrix() * u) * complex(w.weight);
    }
    require(std::abs(total - 1.0) <= 1e-9, "smoothed_observable: window weights must sum to 1");
    return Observable(hermitian_part(sum));
}

std::vector<WindowPoint> gaussian_window(double center, double width, std::size_t points) {
    require(width >= 0.0 && std::isfinite(width), "gaussian_window: width must be >= 0");
    if (width == 0.0 || points <= 1) {
        return {{center, 1.0}};
    }
    std::vector<WindowPoint> w(points);
    double total = 0.0;
    for (std::size_t j = 0; j < points; ++j) {
        const double z = -5.0 + 10.0 * static_cast<double>(j) / static_cast<double>(points - 1);
        w[j] = {center + width * z, std::exp(-0.5 * z * z)};
        total += w[j].weight;
    }
    for (auto &p : w) {
        p.weight /= total;
    }
    return w;
}

Quasiprobability time_reversed_quasiprob(const MeasurementPlan &plan, const DensityMatrix &rho,
                                         const Hamiltonian &h) {
    check_dims(plan, rho, h);
    std::vector<MeasurementStep> reversed;
    for (auto it = plan.steps().rbegin(); it != plan.steps().rend(); ++it) {
        reversed.push_back({-it->time, conjugated(it->observable), it->strength});
    }
    const MeasurementPlan rplan(std::move(reversed));
    const DensityMatrix rrho(rho.matrix().conjugate());
    const Hamiltonian rh(h.matrix().conjugate());
    return reverse_axes(quasiprob(rplan, rrho, rh));
}

double time_asymmetry(const MeasurementPlan &plan, const DensityMatrix &rho, const Hamiltonian &h) {
    return max_abs_difference(quasiprob(plan, rho, h), time_reversed_quasiprob(plan, rho, h));
}

bool compatibility_check(const MeasurementPlan &plan, const Hamiltonian &h) {
    require(plan.dim() == h.dim(), "compatibility_check: dimension mismatch");
    const std::vector<Observable> evolved = evolved_observables(plan, h);
    for (std::size_t j = 0; j < evolved.size(); ++j) {
        for (std::size_t k = j + 1; k < evolved.size(); ++k) {
            const double bound =
                1e-9 * evolved[j].matrix().frobenius_norm() * evolved[k].matrix().frobenius_norm();
            if (commutator(evolved[j].matrix(), evolved[k].matrix()).frobenius_norm() > bound) {
                return false;
            }
        }
    }
    return true;
}

} // namespace wmsim::quantum
