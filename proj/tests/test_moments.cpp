#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "wmsim/moments.hpp"
#include "wmsim/rng.hpp"

using namespace wmsim;

namespace {

SampleBatch gaussian_batch(std::size_t n, std::size_t steps, double sd, std::uint64_t seed) {
    SampleBatch b{n, steps, std::vector<double>(n * steps), 1.0, seed};
    for (std::size_t i = 0; i < n; ++i) {
        RandomStream r(seed, i, 0);
        for (std::size_t k = 0; k < steps; ++k) {
            b.outcomes[i * steps + k] = sd * r.normal();
        }
    }
    return b;
}

} // namespace

TEST(MomentTable, IndexSetsAndLabels) {
    const auto sets = moment_index_sets(3);
    EXPECT_EQ(sets.size(), 3u + 6u + 10u);
    EXPECT_EQ(MomentTable::label({0, 1, 2}), "a1a2a3");
}

TEST(Deconvolution, HandComputedSmallBatch) {
    // Rows (1, 2) and (3, -1), noise variance 0.5.
    SampleBatch b{2, 2, {1.0, 2.0, 3.0, -1.0}, 1.0, 0};
    const MomentTable t = deconvolved_moments(b, 0.5);
    EXPECT_DOUBLE_EQ(t.value({0}), 2.0);
    EXPECT_DOUBLE_EQ(t.value({0, 0}), (1.0 + 9.0) / 2.0 - 0.5);
    EXPECT_DOUBLE_EQ(t.value({1, 0}), (2.0 - 3.0) / 2.0);
    // q0 q0 q1 - s * q1 per row: (2 - 1) and (-9 + 0.5)
    EXPECT_DOUBLE_EQ(t.value({0, 0, 1}), (1.0 + (-8.5)) / 2.0);
    EXPECT_DOUBLE_EQ(t.value({1, 1, 1}), ((8.0 - 1.5 * 2.0) + (-1.0 + 1.5)) / 2.0);
    // stderr of {1, 3}: sd = sqrt(2), / sqrt(2)
    EXPECT_DOUBLE_EQ(t.stderr_of({0}), 1.0);
}

TEST(Deconvolution, ZeroNoiseGivesRawMoments) {
    const SampleBatch b = gaussian_batch(1000, 2, 1.0, 3);
    const MomentTable t = deconvolved_moments(b, 0.0);
    double raw = 0.0;
    for (std::size_t i = 0; i < b.n_samples; ++i) {
        raw += b.outcomes[2 * i] * b.outcomes[2 * i];
    }
    EXPECT_NEAR(t.value({0, 0}), raw / 1000.0, 1e-14);
}

TEST(Deconvolution, PureNoiseHasVanishingCumulants) {
    const SampleBatch b = gaussian_batch(200000, 3, 2.0, 4);
    const MomentTable t = deconvolved_moments(b, 4.0);
    for (const MomentEntry &e : t.entries()) {
        EXPECT_LE(std::abs(e.value), 5.0 * e.stderr_) << MomentTable::label(e.steps);
    }
}

TEST(Deconvolution, ThreadCountDoesNotChangeBits) {
    const SampleBatch b = gaussian_batch(3 * kMomentChunk + 17, 3, 1.0, 5);
    const MomentTable one = deconvolved_moments(b, 1.0, 1);
    const MomentTable four = deconvolved_moments(b, 1.0, 4);
    ASSERT_EQ(one.entries().size(), four.entries().size());
    for (std::size_t m = 0; m < one.entries().size(); ++m) {
        EXPECT_EQ(std::memcmp(&one.entries()[m].value, &four.entries()[m].value, sizeof(double)), 0);
        EXPECT_EQ(std::memcmp(&one.entries()[m].stderr_, &four.entries()[m].stderr_, sizeof(double)), 0);
    }
}

TEST(Deconvolution, Errors) {
    SampleBatch one{1, 2, {1.0, 2.0}, 1.0, 0};
    EXPECT_THROW(deconvolved_moments(one, 1.0), std::invalid_argument);
    SampleBatch bad{2, 2, {1.0, 2.0, 3.0}, 1.0, 0};
    EXPECT_THROW(deconvolved_moments(bad, 1.0), std::invalid_argument);
    EXPECT_THROW(deconvolved_moments(gaussian_batch(4, 1, 1.0, 0), -1.0), std::invalid_argument);
    const MomentTable t = deconvolved_moments(gaussian_batch(4, 1, 1.0, 0), 0.0);
    EXPECT_THROW(t.at({1}), std::out_of_range);
}
