#include "wmsim/classical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "wmsim/parallel.hpp"
#include "wmsim/rng.hpp"

namespace wmsim::classical {

namespace {

constexpr std::size_t kTrajectoryChunk = 4096;

void require(bool ok, const std::string &msg) {
    if (!ok) {
        throw std::invalid_argument(msg);
    }
}

double polynomial_value(const simd::PolynomialPotential &v, double q) {
    return q * q * (v.k2 / 2.0 + q * (v.k3 / 3.0 + q * v.k4 / 4.0));
}

double polynomial_force(const simd::PolynomialPotential &v, double q) {
    return -(q * (v.k2 + q * (v.k3 + q * v.k4)));
}

// In-place Verlet. One-dof polynomial systems accept any number of points.
void evolve_in_place(const ClassicalSystem &sys, double dt, long steps, std::span<double> q, std::span<double> p,
                     std::vector<double> &force) {
    if (steps <= 0) {
        return;
    }
    if (const auto &poly = sys.polynomial_form()) {
        simd::leapfrog_polynomial(*poly, dt, steps, q, p);
        for (std::size_t i = 0; i < q.size(); ++i) {
            if (!std::isfinite(q[i]) || !std::isfinite(p[i])) {
                throw std::domain_error("leapfrog_evolve: non-finite force along the trajectory");
            }
        }
        return;
    }
    const std::size_t n = q.size();
    const double half_dt = 0.5 * dt;
    force.resize(n);
    auto update_force = [&] {
        sys.gradient(q, force);
        for (double &f : force) {
            if (!std::isfinite(f)) {
                throw std::domain_error("leapfrog_evolve: non-finite force");
            }
            f = -f;
        }
    };
    update_force();
    for (long s = 0; s < steps; ++s) {
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = p[i] + half_dt * force[i];
            q[i] = q[i] + (dt / sys.masses()[i]) * p[i];
        }
        update_force();
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = p[i] + half_dt * force[i];
        }
    }
}

// Lower Cholesky factor of a symmetric positive semidefinite matrix.
std::vector<double> cholesky(const std::vector<double> &a, std::size_t n) {
    std::vector<double> l(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) {
            d -= l[j * n + k] * l[j * n + k];
        }
        require(d >= -1e-12 * std::max(1.0, std::abs(a[j * n + j])), "gaussian ensemble: covariance not PSD");
        l[j * n + j] = std::sqrt(std::max(d, 0.0));
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = l[j * n + j] > 0.0 ? s / l[j * n + j] : 0.0;
        }
    }
    return l;
}

struct ScheduledStep {
    std::size_t forward_index;
    long grid; // time / dt
    double sign; // -1 for odd observables in a reversed run
};

struct RunOptions {
    bool reverse = false;
    double kick_sign = 1.0;
    std::optional<std::size_t> skip;
};

long grid_index(double t, double dt) {
    const double k = std::round(t / dt);
    require(std::abs(t - k * dt) <= 1e-9 * std::max(1.0, std::abs(t)),
            "classical protocol: time " + std::to_string(t) + " is not a multiple of dt");
    return static_cast<long>(k);
}

SampleBatch simulate(const PhaseEnsemble &ens, const ClassicalSystem &sys, const ClassicalProtocol &proto,
                     std::uint64_t seed, const RunOptions &opt, unsigned threads) {
    proto.validate();
    require(ens.dof() == sys.dof(), "experiment: ensemble and system dimensions differ");
    const double g = proto.g;
    const double sq = std::sqrt(proto.detector.sigma_q);
    const double sp = std::sqrt(proto.detector.sigma_p);
    const bool back_action = proto.detector.sigma_p > 0.0 && g > 0.0;

    // Output column of every kept forward step.
    std::vector<std::size_t> column(proto.steps.size(), 0);
    std::size_t n_columns = 0;
    for (std::size_t k = 0; k < proto.steps.size(); ++k) {
        if (opt.skip && *opt.skip == k) {
            continue;
        }
        column[k] = n_columns++;
    }

    std::vector<ScheduledStep> schedule;
    for (std::size_t j = 0; j < proto.steps.size(); ++j) {
        const std::size_t k = opt.reverse ? proto.steps.size() - 1 - j : j;
        if (opt.skip && *opt.skip == k) {
            continue;
        }
        const auto &s = proto.steps[k];
        const long grid = grid_index(opt.reverse ? -s.time : s.time, proto.dt);
        const double sign = opt.reverse && s.observable.parity == Parity::Odd ? -1.0 : 1.0;
        schedule.push_back({k, grid, sign});
    }
    if (!back_action) {
        // Walk outward from t = 0: past steps latest first, then future steps.
        std::stable_sort(schedule.begin(), schedule.end(), [](const ScheduledStep &a, const ScheduledStep &b) {
            const bool pa = a.grid < 0;
            const bool pb = b.grid < 0;
            if (pa != pb) {
                return pa;
            }
            return pa ? a.grid > b.grid : a.grid < b.grid;
        });
    }

    SampleBatch batch;
    batch.n_samples = ens.size();
    batch.n_steps = n_columns;
    batch.g = g;
    batch.seed = seed;
    batch.outcomes.assign(ens.size() * n_columns, 0.0);
    const std::size_t dof = ens.dof();

    parallel_chunks(ens.size(), kTrajectoryChunk, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        // Chunk state, point-major: all points share the schedule, so one-dof
        // polynomial systems advance the whole chunk through the vector kernel.
        const std::size_t m = end - begin;
        std::vector<double> q0(m * dof), p0(m * dof);
        for (std::size_t i = 0; i < m; ++i) {
            std::copy(ens.q(begin + i).begin(), ens.q(begin + i).end(), q0.begin() + static_cast<std::ptrdiff_t>(i * dof));
            std::copy(ens.p(begin + i).begin(), ens.p(begin + i).end(), p0.begin() + static_cast<std::ptrdiff_t>(i * dof));
        }
        if (opt.reverse) {
            for (double &v : p0) {
                v = -v;
            }
        }
        std::vector<double> qs = q0, ps = p0;
        PhasePoint x;
        x.q.resize(dof);
        x.p.resize(dof);
        std::vector<double> force, dq(dof), dp(dof);
        auto evolve_chunk = [&](long delta) {
            const double step_dt = delta >= 0 ? proto.dt : -proto.dt;
            const long n = std::labs(delta);
            if (n == 0) {
                return;
            }
            if (sys.polynomial_form()) {
                evolve_in_place(sys, step_dt, n, qs, ps, force);
                return;
            }
            for (std::size_t i = 0; i < m; ++i) {
                evolve_in_place(sys, step_dt, n, std::span<double>(qs).subspan(i * dof, dof),
                                std::span<double>(ps).subspan(i * dof, dof), force);
            }
        };

        long now = 0;
        bool in_past = false;
        for (const ScheduledStep &st : schedule) {
            if (!back_action && (st.grid < 0) != in_past) {
                // Switching branch: restart from the reference points.
                qs = q0;
                ps = p0;
                now = 0;
                in_past = st.grid < 0;
            }
            evolve_chunk(st.grid - now);
            now = st.grid;

            const ClassicalStep &step = proto.steps[st.forward_index];
            const auto substream = step.channel.value_or(static_cast<std::uint32_t>(st.forward_index));
            for (std::size_t i = 0; i < m; ++i) {
                std::copy_n(qs.begin() + static_cast<std::ptrdiff_t>(i * dof), dof, x.q.begin());
                std::copy_n(ps.begin() + static_cast<std::ptrdiff_t>(i * dof), dof, x.p.begin());
                RandomStream rng(seed, begin + i, substream);
                const double p_d = sp > 0.0 ? sp * rng.normal() : 0.0;
                const double noise = sq > 0.0 ? sq * rng.normal() : 0.0;
                const double a = st.sign * step.observable.value(x);
                if (!std::isfinite(a)) {
                    throw std::domain_error("experiment: non-finite observable value");
                }
                batch.outcomes[(begin + i) * n_columns + column[st.forward_index]] = g > 0.0 ? a + noise / g : a + noise;

                if (back_action && p_d != 0.0) {
                    step.observable.gradient(x, dq, dp);
                    const double c = opt.kick_sign * st.sign * g * p_d;
                    for (std::size_t d = 0; d < dof; ++d) {
                        if (!std::isfinite(dq[d]) || !std::isfinite(dp[d])) {
                            throw std::domain_error("measurement_kick: non-finite gradient");
                        }
                        qs[i * dof + d] += c * dp[d];
                        ps[i * dof + d] -= c * dq[d];
                    }
                }
            }
        }
    });
    return batch;
}

} // namespace

// ---------------------------------------------------------------------------

ClassicalSystem::ClassicalSystem(Potential v, Gradient grad, std::vector<double> masses)
    : v_(std::move(v)), grad_(std::move(grad)), masses_(std::move(masses)) {
    require(v_ && grad_, "ClassicalSystem: potential and gradient required");
    require(!masses_.empty(), "ClassicalSystem: at least one degree of freedom");
    for (double m : masses_) {
        require(m > 0.0 && std::isfinite(m), "ClassicalSystem: masses must be positive");
    }
    const std::size_t n = masses_.size();
    RandomStream rng(0x5eed, 0, 0);
    std::vector<double> q(n), g(n);
    for (int trial = 0; trial < 8; ++trial) {
        for (double &x : q) {
            x = rng.normal();
        }
        grad_(q, g);
        for (std::size_t i = 0; i < n; ++i) {
            const double h = 1e-5 * std::max(1.0, std::abs(q[i]));
            std::vector<double> qp = q, qm = q;
            qp[i] += h;
            qm[i] -= h;
            const double fd = (v_(qp) - v_(qm)) / (2.0 * h);
            require(std::abs(fd - g[i]) <= 1e-6 * std::max(1.0, std::abs(g[i])),
                    "ClassicalSystem: gradient does not match the potential");
        }
    }
}

ClassicalSystem ClassicalSystem::polynomial(simd::PolynomialPotential v) {
    require(v.mass > 0.0 && std::isfinite(v.mass), "ClassicalSystem: mass must be positive");
    ClassicalSystem s;
    s.v_ = [v](std::span<const double> q) { return polynomial_value(v, q[0]); };
    s.grad_ = [v](std::span<const double> q, std::span<double> g) { g[0] = -polynomial_force(v, q[0]); };
    s.masses_ = {v.mass};
    s.poly_ = v;
    return s;
}

ClassicalSystem ClassicalSystem::builtin(Builtin tag, double mass) {
    switch (tag) {
    case Builtin::Harmonic:
        return polynomial({1.0, 0.0, 0.0, mass});
    case Builtin::QuarticDoubleWell:
        return polynomial({-1.0, 0.0, 1.0, mass});
    case Builtin::CubicAnharmonic:
        return polynomial({1.0, 0.3, 0.0, mass});
    }
    throw std::invalid_argument("ClassicalSystem: unknown builtin");
}

double ClassicalSystem::energy(const PhasePoint &x) const {
    double kinetic = 0.0;
    for (std::size_t i = 0; i < dof(); ++i) {
        kinetic += x.p[i] * x.p[i] / (2.0 * masses_[i]);
    }
    return kinetic + v_(x.q);
}

PhasePoint leapfrog_evolve(const PhasePoint &x, const ClassicalSystem &sys, double dt, long steps) {
    require(x.q.size() == sys.dof() && x.p.size() == sys.dof(), "leapfrog_evolve: dimension mismatch");
    require(std::isfinite(dt) && dt != 0.0, "leapfrog_evolve: dt must be finite and nonzero");
    require(steps >= 0, "leapfrog_evolve: steps must be >= 0");
    PhasePoint out = x;
    std::vector<double> force;
    evolve_in_place(sys, dt, steps, out.q, out.p, force);
    return out;
}

ClassicalObservable ClassicalObservable::position(std::size_t i) {
    return {"q" + std::to_string(i), [i](const PhasePoint &x) { return x.q.at(i); },
            [i](const PhasePoint &, std::span<double> dq, std::span<double> dp) {
                std::fill(dq.begin(), dq.end(), 0.0);
                std::fill(dp.begin(), dp.end(), 0.0);
                dq[i] = 1.0;
            },
            Parity::Even};
}

ClassicalObservable ClassicalObservable::momentum(std::size_t i) {
    return {"p" + std::to_string(i), [i](const PhasePoint &x) { return x.p.at(i); },
            [i](const PhasePoint &, std::span<double> dq, std::span<double> dp) {
                std::fill(dq.begin(), dq.end(), 0.0);
                std::fill(dp.begin(), dp.end(), 0.0);
                dp[i] = 1.0;
            },
            Parity::Odd};
}

KickResult measurement_kick(const PhasePoint &x, const ClassicalObservable &a, double g, double p_d) {
    require(std::isfinite(g) && std::isfinite(p_d), "measurement_kick: non-finite coupling");
    KickResult r{x, g * a.value(x)};
    if (g == 0.0 || p_d == 0.0) {
        return r;
    }
    std::vector<double> dq(x.dof()), dp(x.dof());
    a.gradient(x, dq, dp);
    for (std::size_t d = 0; d < x.dof(); ++d) {
        if (!std::isfinite(dq[d]) || !std::isfinite(dp[d])) {
            throw std::domain_error("measurement_kick: non-finite gradient");
        }
        r.point.q[d] += g * p_d * dp[d];
        r.point.p[d] -= g * p_d * dq[d];
    }
    return r;
}

void ClassicalProtocol::validate() const {
    require(!steps.empty(), "ClassicalProtocol: no steps");
    require(std::isfinite(g) && g >= 0.0, "ClassicalProtocol: g must be >= 0");
    require(std::isfinite(dt) && dt > 0.0, "ClassicalProtocol: dt must be positive");
    require(detector.sigma_q >= 0.0 && detector.sigma_p >= 0.0 && std::isfinite(detector.sigma_q) &&
                std::isfinite(detector.sigma_p),
            "ClassicalProtocol: detector variances must be >= 0");
    require(!(g == 0.0 && detector.sigma_p > 0.0),
            "ClassicalProtocol: g = 0 with sigma_p > 0 leaves the reading undefined");
    for (std::size_t k = 0; k < steps.size(); ++k) {
        require(std::isfinite(steps[k].time), "ClassicalProtocol: non-finite time");
        require(steps[k].observable.value && steps[k].observable.gradient, "ClassicalProtocol: incomplete observable");
        if (k > 0) {
            require(steps[k].time >= steps[k - 1].time, "ClassicalProtocol: times must be nondecreasing");
        }
        grid_index(steps[k].time, dt);
    }
}

ClassicalProtocol ClassicalProtocol::without(std::size_t index) const {
    if (index >= steps.size()) {
        throw std::out_of_range("ClassicalProtocol::without: index out of range");
    }
    ClassicalProtocol out = *this;
    for (std::size_t k = 0; k < out.steps.size(); ++k) {
        out.steps[k].channel = steps[k].channel.value_or(static_cast<std::uint32_t>(k));
    }
    out.steps.erase(out.steps.begin() + static_cast<std::ptrdiff_t>(index));
    return out;
}

// ---------------------------------------------------------------------------

PhaseEnsemble PhaseEnsemble::gaussian(std::vector<double> mean, std::vector<double> covariance,
                                      std::size_t n_points, std::uint64_t seed) {
    const std::size_t dim = mean.size();
    require(dim >= 2 && dim % 2 == 0, "gaussian ensemble: mean must hold (q, p) pairs");
    require(covariance.size() == dim * dim, "gaussian ensemble: covariance must be 2n x 2n");
    require(n_points >= 1, "gaussian ensemble: need at least one point");
    const std::vector<double> l = cholesky(covariance, dim);
    PhaseEnsemble e;
    e.n_ = n_points;
    e.dof_ = dim / 2;
    e.seed_ = seed;
    e.descriptor_ = "gaussian";
    e.q_.resize(n_points * e.dof_);
    e.p_.resize(n_points * e.dof_);
    std::vector<double> z(dim);
    for (std::size_t i = 0; i < n_points; ++i) {
        RandomStream rng(seed, i, 2);
        for (double &v : z) {
            v = rng.normal();
        }
        for (std::size_t r = 0; r < dim; ++r) {
            double x = mean[r];
            for (std::size_t c = 0; c <= r; ++c) {
                x += l[r * dim + c] * z[c];
            }
            (r < e.dof_ ? e.q_[i * e.dof_ + r] : e.p_[i * e.dof_ + r - e.dof_]) = x;
        }
    }
    return e;
}

PhaseEnsemble PhaseEnsemble::boltzmann(const ClassicalSystem &sys, double kT, std::size_t n_points,
                                       std::uint64_t seed, const MetropolisOptions &opts, unsigned threads) {
    require(kT > 0.0 && std::isfinite(kT), "boltzmann ensemble: kT must be positive");
    require(n_points >= 1, "boltzmann ensemble: need at least one point");
    require(opts.stride >= 1 && opts.chain_length >= 1, "boltzmann ensemble: stride and chain length must be >= 1");
    const std::size_t dof = sys.dof();
    PhaseEnsemble e;
    e.n_ = n_points;
    e.dof_ = dof;
    e.seed_ = seed;
    e.descriptor_ = "boltzmann";
    e.q_.resize(n_points * dof);
    e.p_.resize(n_points * dof);
    for (std::size_t i = 0; i < n_points; ++i) {
        RandomStream rng(seed, i, 0);
        for (std::size_t d = 0; d < dof; ++d) {
            e.p_[i * dof + d] = std::sqrt(sys.masses()[d] * kT) * rng.normal();
        }
    }

    const auto &poly = sys.polynomial_form();
    if (poly && poly->k3 == 0.0 && poly->k4 == 0.0 && poly->k2 > 0.0) {
        for (std::size_t i = 0; i < n_points; ++i) {
            RandomStream rng(seed, i, 1);
            e.q_[i] = std::sqrt(kT / poly->k2) * rng.normal();
        }
        return e;
    }

    // A cubic without a quartic term is unbounded below: sample the metastable
    // well, bounded by the barrier at q = -k2/k3.
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    if (poly && poly->k4 <= 0.0) {
        require(poly->k4 == 0.0 && poly->k2 > 0.0,
                "boltzmann ensemble: potential is unbounded below and has no well at q = 0");
        const double barrier = -poly->k2 / poly->k3;
        (barrier < 0.0 ? lower : upper) = barrier;
    }

    const std::size_t chains = chunk_count(n_points, opts.chain_length);
    parallel_chunks(chains, 1, threads, [&](std::size_t chain, std::size_t, std::size_t) {
        RandomStream rng(seed, chain, 3);
        std::vector<double> q(dof, 0.0);
        double v = sys.potential(q);
        double width = std::sqrt(kT);
        auto sweep = [&]() -> std::size_t {
            std::size_t accepted = 0;
            for (std::size_t d = 0; d < dof; ++d) {
                const double old = q[d];
                q[d] = old + width * rng.normal();
                const double v_new = sys.potential(q);
                if (q[d] > lower && q[d] < upper && std::isfinite(v_new) && rng.uniform() < std::exp(-(v_new - v) / kT)) {
                    v = v_new;
                    ++accepted;
                } else {
                    q[d] = old;
                }
            }
            return accepted;
        };
        // Burn-in also tunes the proposal width towards ~40% acceptance.
        std::size_t window_accepted = 0;
        for (std::size_t s = 1; s <= opts.burn_in_sweeps; ++s) {
            window_accepted += sweep();
            if (s % 100 == 0) {
                const double rate = static_cast<double>(window_accepted) / static_cast<double>(100 * dof);
                width *= std::exp(rate - 0.4);
                window_accepted = 0;
            }
        }
        const std::size_t begin = chain * opts.chain_length;
        const std::size_t end = std::min(n_points, begin + opts.chain_length);
        for (std::size_t i = begin; i < end; ++i) {
            for (std::size_t s = 0; s < opts.stride; ++s) {
                sweep();
            }
            std::copy(q.begin(), q.end(), e.q_.begin() + static_cast<std::ptrdiff_t>(i * dof));
        }
    });
    return e;
}

PhaseEnsemble PhaseEnsemble::from_points(std::span<const PhasePoint> points, std::uint64_t seed) {
    require(!points.empty(), "PhaseEnsemble: no points");
    PhaseEnsemble e;
    e.n_ = points.size();
    e.dof_ = points.front().dof();
    e.seed_ = seed;
    e.descriptor_ = "explicit";
    require(e.dof_ >= 1, "PhaseEnsemble: zero-dimensional points");
    for (const auto &x : points) {
        require(x.q.size() == e.dof_ && x.p.size() == e.dof_, "PhaseEnsemble: ragged points");
        for (std::size_t d = 0; d < e.dof_; ++d) {
            require(std::isfinite(x.q[d]) && std::isfinite(x.p[d]), "PhaseEnsemble: non-finite point");
        }
        e.q_.insert(e.q_.end(), x.q.begin(), x.q.end());
        e.p_.insert(e.p_.end(), x.p.begin(), x.p.end());
    }
    return e;
}

PhasePoint PhaseEnsemble::point(std::size_t i) const {
    if (i >= n_) {
        throw std::out_of_range("PhaseEnsemble::point: index out of range");
    }
    return {{q(i).begin(), q(i).end()}, {p(i).begin(), p(i).end()}};
}

// ---------------------------------------------------------------------------

SampleBatch run_experiment(const PhaseEnsemble &ens, const ClassicalSystem &sys, const ClassicalProtocol &proto,
                           std::uint64_t seed, unsigned threads) {
    return simulate(ens, sys, proto, seed, {}, threads);
}

SampleBatch reverse_experiment(const PhaseEnsemble &ens, const ClassicalSystem &sys, const ClassicalProtocol &proto,
                               std::uint64_t seed, unsigned threads) {
    RunOptions opt;
    opt.reverse = true;
    return simulate(ens, sys, proto, seed, opt, threads);
}

MomentTable estimate_moments(const SampleBatch &batch, double g, double sigma_q, unsigned threads) {
    require(std::isfinite(g) && g >= 0.0, "estimate_moments: g must be >= 0");
    require(std::isfinite(sigma_q) && sigma_q >= 0.0, "estimate_moments: sigma_q must be >= 0");
    return deconvolved_moments(batch, g > 0.0 ? sigma_q / (g * g) : sigma_q, threads);
}

double measurement_disturbance(const PhaseEnsemble &ens, const ClassicalSystem &sys, const ClassicalProtocol &proto,
                               std::size_t step_index, std::uint64_t seed, unsigned threads) {
    if (step_index >= proto.steps.size()) {
        throw std::out_of_range("measurement_disturbance: step index out of range");
    }
    require(proto.steps.size() >= 2, "measurement_disturbance: need at least two steps");
    // Both runs are averaged over the kick sign so the O(g) effect of every
    // other step cancels on each side.
    RunOptions plus, minus, reduced_plus, reduced_minus;
    minus.kick_sign = -1.0;
    reduced_plus.skip = step_index;
    reduced_minus.skip = step_index;
    reduced_minus.kick_sign = -1.0;
    const double sq = proto.detector.sigma_q;
    auto moments = [&](const RunOptions &opt) {
        return estimate_moments(simulate(ens, sys, proto, seed, opt, threads), proto.g, sq, threads);
    };
    const MomentTable mp = moments(plus);
    const MomentTable mm = moments(minus);
    const MomentTable mrp = moments(reduced_plus);
    const MomentTable mrm = moments(reduced_minus);

    // Map reduced-run columns back to full-run step indices.
    std::vector<int> full_index;
    for (std::size_t k = 0; k < proto.steps.size(); ++k) {
        if (k != step_index) {
            full_index.push_back(static_cast<int>(k));
        }
    }
    double worst = 0.0;
    for (std::size_t m = 0; m < mrp.entries().size(); ++m) {
        const MomentEntry &e = mrp.entries()[m];
        std::vector<int> steps;
        for (int s : e.steps) {
            steps.push_back(full_index[static_cast<std::size_t>(s)]);
        }
        const double marginal = 0.5 * (mp.value(steps) + mm.value(steps));
        const double reduced = 0.5 * (e.value + mrm.entries()[m].value);
        worst = std::max(worst, std::abs(marginal - reduced));
    }
    return worst;
}

} // namespace wmsim::classical
