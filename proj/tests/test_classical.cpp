#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>

#include "wmsim/classical.hpp"
#include "wmsim/quantum.hpp"

using namespace wmsim;
using namespace wmsim::classical;

namespace {

ClassicalProtocol protocol(std::vector<std::pair<double, ClassicalObservable>> steps, double g,
                           ClassicalDetectorSpec det, double dt = 1e-3) {
    ClassicalProtocol p;
    for (auto &[t, a] : steps) {
        p.steps.push_back({t, std::move(a), std::nullopt});
    }
    p.g = g;
    p.detector = det;
    p.dt = dt;
    return p;
}

bool bitwise_equal(const std::vector<double> &a, const std::vector<double> &b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

ClassicalSystem harmonic_custom() {
    return ClassicalSystem([](std::span<const double> q) { return 0.5 * q[0] * q[0]; },
                           [](std::span<const double> q, std::span<double> g) { g[0] = q[0]; }, {1.0});
}

} // namespace

// ---------------------------------------------------------------------------
// Integrator

TEST(Leapfrog, HarmonicReturnsAfterOnePeriod) {
    const ClassicalSystem sys = ClassicalSystem::builtin(Builtin::Harmonic);
    const double dt = 1e-3;
    const long steps = std::lround(2.0 * std::numbers::pi / dt);
    const PhasePoint x = leapfrog_evolve({{1.0}, {0.0}}, sys, dt, steps);
    EXPECT_NEAR(x.q[0], 1.0, 1e-5);
    // The grid misses the period by at most dt/2, which shows up linearly in p.
    EXPECT_NEAR(x.p[0], 0.0, std::abs(steps * dt - 2.0 * std::numbers::pi) + 1e-5);
}

TEST(Leapfrog, FreeParticleMovesUniformly) {
    const ClassicalSystem free = ClassicalSystem::polynomial({0.0, 0.0, 0.0, 2.0});
    const PhasePoint x = leapfrog_evolve({{0.5}, {3.0}}, free, 0.01, 100);
    EXPECT_NEAR(x.q[0], 0.5 + 1.5, 1e-12);
    EXPECT_EQ(x.p[0], 3.0);
}

TEST(Leapfrog, ReversibleAndMirrored) {
    for (Builtin b : {Builtin::Harmonic, Builtin::QuarticDoubleWell, Builtin::CubicAnharmonic}) {
        const ClassicalSystem sys = ClassicalSystem::builtin(b);
        const PhasePoint x0{{0.7}, {-0.4}};
        const PhasePoint x1 = leapfrog_evolve(x0, sys, 1e-3, 5000);
        const PhasePoint back = leapfrog_evolve(x1, sys, -1e-3, 5000);
        EXPECT_NEAR(back.q[0], x0.q[0], 1e-9);
        EXPECT_NEAR(back.p[0], x0.p[0], 1e-9);
        const PhasePoint mirror = leapfrog_evolve({{0.7}, {0.4}}, sys, -1e-3, 5000);
        EXPECT_EQ(mirror.q[0], x1.q[0]);
        EXPECT_EQ(mirror.p[0], -x1.p[0]);
    }
}

TEST(Leapfrog, CustomSystemMatchesPolynomialForm) {
    const ClassicalSystem poly = ClassicalSystem::builtin(Builtin::Harmonic);
    const ClassicalSystem custom = harmonic_custom();
    const PhasePoint a = leapfrog_evolve({{0.3}, {1.1}}, poly, 1e-3, 777);
    const PhasePoint b = leapfrog_evolve({{0.3}, {1.1}}, custom, 1e-3, 777);
    EXPECT_NEAR(a.q[0], b.q[0], 1e-13);
    EXPECT_NEAR(a.p[0], b.p[0], 1e-13);
}

TEST(Leapfrog, EnergyDriftIsBounded) {
    for (Builtin b : {Builtin::Harmonic, Builtin::QuarticDoubleWell}) {
        const ClassicalSystem sys = ClassicalSystem::builtin(b);
        const PhasePoint x0{{1.2}, {0.3}};
        const double e0 = sys.energy(x0);
        PhasePoint x = x0;
        double worst = 0.0;
        for (int block = 0; block < 100; ++block) {
            x = leapfrog_evolve(x, sys, 1e-3, 10000);
            worst = std::max(worst, std::abs(sys.energy(x) - e0));
        }
        EXPECT_LT(worst, 1e-4);
    }
}

TEST(Leapfrog, Errors) {
    const ClassicalSystem sys = ClassicalSystem::builtin(Builtin::Harmonic);
    EXPECT_THROW(leapfrog_evolve({{0.0}, {0.0}}, sys, 0.0, 1), std::invalid_argument);
    EXPECT_THROW(leapfrog_evolve({{0.0, 1.0}, {0.0, 1.0}}, sys, 1e-3, 1), std::invalid_argument);
    const ClassicalSystem blowup([](std::span<const double> q) { return -std::pow(q[0], 6); },
                                 [](std::span<const double> q, std::span<double> g) { g[0] = -6 * std::pow(q[0], 5); },
                                 {1.0});
    EXPECT_THROW(leapfrog_evolve({{2.0}, {0.0}}, blowup, 0.1, 1000), std::domain_error);
}

TEST(ClassicalSystem, RejectsInconsistentGradient) {
    EXPECT_THROW(ClassicalSystem([](std::span<const double> q) { return 0.5 * q[0] * q[0]; },
                                 [](std::span<const double> q, std::span<double> g) { g[0] = 2.0 * q[0]; }, {1.0}),
                 std::invalid_argument);
    EXPECT_THROW(ClassicalSystem([](std::span<const double>) { return 0.0; },
                                 [](std::span<const double>, std::span<double> g) { g[0] = 0.0; }, {-1.0}),
                 std::invalid_argument);
    EXPECT_NO_THROW(harmonic_custom());
}

// ---------------------------------------------------------------------------
// Kicks

TEST(Kick, PositionMeasurementKicksMomentum) {
    const KickResult r = measurement_kick({{0.5}, {1.0}}, ClassicalObservable::position(), 0.2, 3.0);
    EXPECT_EQ(r.point.q[0], 0.5);
    EXPECT_NEAR(r.point.p[0], 1.0 - 0.6, 1e-15);
    EXPECT_NEAR(r.reading, 0.1, 1e-15);
}

TEST(Kick, MomentumMeasurementKicksPosition) {
    const KickResult r = measurement_kick({{0.5}, {1.0}}, ClassicalObservable::momentum(), 0.2, 3.0);
    EXPECT_NEAR(r.point.q[0], 0.5 + 0.6, 1e-15);
    EXPECT_EQ(r.point.p[0], 1.0);
}

TEST(Kick, NoCouplingLeavesPointUnchanged) {
    const KickResult r = measurement_kick({{0.5}, {1.0}}, ClassicalObservable::position(), 0.2, 0.0);
    EXPECT_EQ(r.point.p[0], 1.0);
    const KickResult z = measurement_kick({{0.5}, {1.0}}, ClassicalObservable::position(), 0.0, 5.0);
    EXPECT_EQ(z.point.p[0], 1.0);
    EXPECT_EQ(z.reading, 0.0);
}

// ---------------------------------------------------------------------------
// Ensembles

TEST(Ensemble, GaussianMoments) {
    const PhaseEnsemble e = PhaseEnsemble::gaussian({0.5, -1.0}, {2.0, 0.6, 0.6, 1.0}, 200000, 3);
    double mq = 0, mp = 0, cqq = 0, cqp = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        mq += e.q(i)[0];
        mp += e.p(i)[0];
    }
    mq /= e.size();
    mp /= e.size();
    for (std::size_t i = 0; i < e.size(); ++i) {
        cqq += (e.q(i)[0] - mq) * (e.q(i)[0] - mq);
        cqp += (e.q(i)[0] - mq) * (e.p(i)[0] - mp);
    }
    cqq /= e.size();
    cqp /= e.size();
    const double n = static_cast<double>(e.size());
    EXPECT_NEAR(mq, 0.5, 5.0 * std::sqrt(2.0 / n));
    EXPECT_NEAR(mp, -1.0, 5.0 * std::sqrt(1.0 / n));
    EXPECT_NEAR(cqq, 2.0, 5.0 * 2.0 * std::sqrt(2.0 / n));
    EXPECT_NEAR(cqp, 0.6, 5.0 * std::sqrt((2.0 * 1.0 + 0.36) / n));
    EXPECT_THROW(PhaseEnsemble::gaussian({0.0, 0.0}, {1.0, 2.0, 2.0, 1.0}, 10, 1), std::invalid_argument);
}

TEST(Ensemble, BoltzmannDoubleWellMatchesQuadrature) {
    const ClassicalSystem sys = ClassicalSystem::builtin(Builtin::QuarticDoubleWell);
    const double kT = 0.5;
    const PhaseEnsemble e = PhaseEnsemble::boltzmann(sys, kT, 65536, 11, {2000, 10, 4096});
    // <q^2> and <p^2> by direct trapezoid quadrature of the Boltzmann weight.
    double z = 0, q2 = 0;
    for (double q = -6.0; q <= 6.0; q += 1e-4) {
        const double w = std::exp(-(-0.5 * q * q + 0.25 * q * q * q * q) / kT);
        z += w;
        q2 += w * q * q;
    }
    q2 /= z;
    double sq = 0, sp = 0, sq4 = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double q = e.q(i)[0], p = e.p(i)[0];
        sq += q * q;
        sq4 += q * q * q * q;
        sp += p * p;
    }
    const double n = static_cast<double>(e.size());
    sq /= n;
    sp /= n;
    sq4 /= n;
    // Chains are correlated; allow a generous effective sample size.
    EXPECT_NEAR(sq, q2, 5.0 * std::sqrt((sq4 - sq * sq) / (n / 16.0)));
    EXPECT_NEAR(sp, kT, 5.0 * kT * std::sqrt(2.0 / n));
}

TEST(Ensemble, CubicSamplesItsMetastableWell) {
    const ClassicalSystem sys = ClassicalSystem::builtin(Builtin::CubicAnharmonic);
    const PhaseEnsemble e = PhaseEnsemble::boltzmann(sys, 0.5, 8192, 4, {500, 10, 4096});
    for (std::size_t i = 0; i < e.size(); ++i) {
        ASSERT_GT(e.q(i)[0], -1.0 / 0.3);
    }
    const ClassicalSystem free = ClassicalSystem::polynomial({0.0, 0.0, 0.0, 1.0});
    EXPECT_THROW(PhaseEnsemble::boltzmann(free, 1.0, 10, 1), std::invalid_argument);
    const ClassicalSystem inverted = ClassicalSystem::polynomial({1.0, 0.0, -1.0, 1.0});
    EXPECT_THROW(PhaseEnsemble::boltzmann(inverted, 1.0, 10, 1), std::invalid_argument);
}

TEST(Ensemble, FromPointsValidates) {
    const std::vector<PhasePoint> ragged{{{0.0}, {0.0}}, {{0.0, 1.0}, {0.0, 1.0}}};
    EXPECT_THROW(PhaseEnsemble::from_points(ragged), std::invalid_argument);
    EXPECT_THROW(PhaseEnsemble::from_points(std::vector<PhasePoint>{}), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Experiments

TEST(Experiment, ProtocolValidation) {
    const auto q = ClassicalObservable::position();
    EXPECT_THROW(protocol({{0.0, q}}, 0.0, {1.0, 1.0}).validate(), std::invalid_argument);
    EXPECT_THROW(protocol({{1.0, q}, {0.5, q}}, 1.0, {}).validate(), std::invalid_argument);
    EXPECT_THROW(protocol({{0.0, q}, {0.5005, q}}, 1.0, {}, 1e-3).validate(), std::invalid_argument);
    EXPECT_THROW(protocol({{0.0, q}}, 1.0, {-1.0, 0.0}).validate(), std::invalid_argument);
    EXPECT_THROW(ClassicalProtocol{}.validate(), std::invalid_argument);
    EXPECT_NO_THROW(protocol({{0.0, q}, {0.5, q}}, 0.0, {1.0, 0.0}).validate());
}

TEST(Experiment, StaticSystemReadsItsPoint) {
    const ClassicalSystem free = ClassicalSystem::polynomial({0.0, 0.0, 0.0, 1.0});
    const std::vector<PhasePoint> pts{{{0.25}, {0.0}}, {{-1.5}, {0.0}}};
    const PhaseEnsemble e = PhaseEnsemble::from_points(pts);
    const ClassicalProtocol pr =
        protocol({{-0.5, ClassicalObservable::position()}, {0.0, ClassicalObservable::position()}, {2.0, ClassicalObservable::momentum()}}, 1.0, {});
    const SampleBatch b = run_experiment(e, free, pr, 1);
    EXPECT_EQ(b.row(0)[0], 0.25);
    EXPECT_EQ(b.row(0)[1], 0.25);
    EXPECT_EQ(b.row(1)[2], 0.0);
}

TEST(Experiment, HarmonicAutocorrelation) {
    const ClassicalSystem sys = ClassicalSystem::builtin(Builtin::Harmonic);
    const double kT = 0.5;
    const PhaseEnsemble e = PhaseEnsemble::boltzmann(sys, kT, 200000, 2);
    const ClassicalProtocol pr =
        protocol({{0.0, ClassicalObservable::position()}, {1.3, ClassicalObservable::position()}}, 0.5, {0.2, 0.0});
    const MomentTable m = estimate_moments(run_experiment(e, sys, pr, 9), pr.g, pr.detector.sigma_q);
    EXPECT_NEAR(m.value({0, 1}), kT * std::cos(1.3), 5.0 * m.stderr_of({0, 1}));
    EXPECT_NEAR(m.value({0, 0}), kT, 5.0 * m.stderr_of({0, 0}));
    EXPECT_NEAR(m.value({0}), 0.0, 5.0 * m.stderr_of({0}));
}

TEST(Experiment, NoiseIsRemovedFromMoments) {
    const ClassicalSystem sys = ClassicalSystem::builtin(Builtin::Harmonic);
    const std::vector<PhasePoint> pts(100000, PhasePoint{{0.3}, {0.0}});
    const PhaseEnsemble e = PhaseEnsemble::from_points(pts);
    const ClassicalProtocol pr =
        protocol({{0.0, ClassicalObservable::position()}, {0.0, ClassicalObservable::position()}}, 0.5, {1.0, 0.0});
    const MomentTable m = estimate_moments(run_experiment(e, sys, pr, 4), pr.g, pr.detector.sigma_q);
    for (const MomentEntry &entry : m.entries()) {
        const double expected = std::pow(0.3, static_cast<double>(entry.steps.size()));
        EXPECT_NEAR(entry.value, expected, 5.0 * entry.stderr_) << MomentTable::label(entry.steps);
    }
}

TEST(Experiment, DeconvolutionSharesQuantumImplementation) {
    const ClassicalSystem sys = ClassicalSystem::builtin(Builtin::CubicAnharmonic);
    const PhaseEnsemble e = PhaseEnsemble::gaussian({0.2, 0.0}, {0.5, 0.0, 0.0, 0.5}, 5000, 8);
    const double g = 0.7;
    const ClassicalProtocol pr =
        protocol({{0.0, ClassicalObservable::position()}, {0.4, ClassicalObservable::momentum()}}, g, {1.0, 0.0});
    const SampleBatch b = run_experiment(e, sys, pr, 3);
    const MomentTable c = estimate_moments(b, g, 1.0, 2);
    const MomentTable q = quantum::deconvolve_moments(b, 3);
    ASSERT_EQ(c.entries().size(), q.entries().size());
    for (std::size_t k = 0; k < c.entries().size(); ++k) {
        EXPECT_EQ(c.entries()[k].value, q.entries()[k].value);
        EXPECT_EQ(c.entries()[k].stderr_, q.entries()[k].stderr_);
    }
}

TEST(Experiment, ReproducibleAcrossThreadCounts) {
    const ClassicalSystem sys = ClassicalSystem::builtin(Builtin::QuarticDoubleWell);
    const PhaseEnsemble e = PhaseEnsemble::gaussian({0.0, 0.0}, {1.0, 0.0, 0.0, 1.0}, 10000, 5);
    const ClassicalProtocol pr = protocol(
        {{0.0, ClassicalObservable::position()}, {0.2, ClassicalObservable::momentum()}, {0.5, ClassicalObservable::position()}},
        0.4, {0.5, 0.3});
    EXPECT_TRUE(bitwise_equal(run_experiment(e, sys, pr, 6, 1).outcomes, run_experiment(e, sys, pr, 6, 3).outcomes));
    EXPECT_FALSE(bitwise_equal(run_experiment(e, sys, pr, 6, 1).outcomes, run_experiment(e, sys, pr, 7, 1).outcomes));
}

TEST(Experiment, NoninvasiveInsertionKeepsOtherReadings) {
    const ClassicalSystem sys = ClassicalSystem::builtin(Builtin::QuarticDoubleWell);
    const PhaseEnsemble e = PhaseEnsemble::gaussian({0.0, 0.0}, {1.0, 0.0, 0.0, 1.0}, 3000, 5);
    ClassicalProtocol pr = protocol(
        {{-0.3, ClassicalObservable::position()}, {0.1, ClassicalObservable::momentum()}, {0.7, ClassicalObservable::position()}},
        0.8, {0.4, 0.0});
    const SampleBatch full = run_experiment(e, sys, pr, 12);
    const SampleBatch reduced = run_experiment(e, sys, pr.without(1), 12);
    for (std::size_t i = 0; i < e.size(); ++i) {
        EXPECT_EQ(full.row(i)[0], reduced.row(i)[0]);
        EXPECT_EQ(full.row(i)[2], reduced.row(i)[1]);
    }
    EXPECT_LT(measurement_disturbance(e, sys, pr, 1, 12), 1e-12);
}

TEST(Experiment, ReverseWithoutBackActionMirrorsForward) {
    for (Builtin b : {Builtin::Harmonic, Builtin::QuarticDoubleWell, Builtin::CubicAnharmonic}) {
        const ClassicalSystem sys = ClassicalSystem::builtin(b);
        const PhaseEnsemble e = PhaseEnsemble::boltzmann(sys, 0.2, 4000, 1, {500, 5, 4096});
        const ClassicalProtocol pr = protocol({{-0.2, ClassicalObservable::position()},
                                               {0.0, ClassicalObservable::momentum()},
                                               {0.35, ClassicalObservable::position()},
                                               {1.0, ClassicalObservable::momentum()}},
                                              0.6, {0.3, 0.0});
        const SampleBatch fwd = run_experiment(e, sys, pr, 31);
        const SampleBatch rev = reverse_experiment(e, sys, pr, 31);
        double worst = 0.0;
        for (std::size_t k = 0; k < fwd.outcomes.size(); ++k) {
            worst = std::max(worst, std::abs(fwd.outcomes[k] - rev.outcomes[k]));
        }
        EXPECT_LT(worst, 1e-12);
    }
}

TEST(Experiment, ReverseWithBackActionFlipsOddReadings) {
    // A single momentum reading at t = 0 sees the flipped momentum, negated back.
    const ClassicalSystem sys = ClassicalSystem::builtin(Builtin::Harmonic);
    const std::vector<PhasePoint> pts{{{0.1}, {0.9}}};
    const PhaseEnsemble e = PhaseEnsemble::from_points(pts);
    const ClassicalProtocol pr = protocol({{0.0, ClassicalObservable::momentum()}}, 1.0, {0.0, 0.5});
    EXPECT_EQ(run_experiment(e, sys, pr, 2).outcomes[0], 0.9);
    EXPECT_EQ(reverse_experiment(e, sys, pr, 2).outcomes[0], 0.9);
}

TEST(Disturbance, QuadraticInStrength) {
    const ClassicalSystem sys = ClassicalSystem::builtin(Builtin::Harmonic);
    const PhaseEnsemble e = PhaseEnsemble::boltzmann(sys, 1.0, 20000, 3);
    auto at = [&](double g) {
        const ClassicalProtocol pr = protocol({{0.0, ClassicalObservable::position()},
                                               {0.5, ClassicalObservable::position()},
                                               {1.2, ClassicalObservable::position()}},
                                              g, {0.0, 1.0});
        return measurement_disturbance(e, sys, pr, 1, 77);
    };
    const double d1 = at(0.4), d2 = at(0.2);
    EXPECT_GT(d1, 0.0);
    EXPECT_NEAR(std::log(d1 / d2) / std::log(2.0), 2.0, 0.1);
}

TEST(Disturbance, Errors) {
    const ClassicalSystem sys = ClassicalSystem::builtin(Builtin::Harmonic);
    const PhaseEnsemble e = PhaseEnsemble::gaussian({0.0, 0.0}, {1.0, 0.0, 0.0, 1.0}, 10, 5);
    const ClassicalProtocol one = protocol({{0.0, ClassicalObservable::position()}}, 1.0, {});
    EXPECT_THROW(measurement_disturbance(e, sys, one, 0, 1), std::invalid_argument);
    EXPECT_THROW(measurement_disturbance(e, sys, one, 3, 1), std::out_of_range);
}
