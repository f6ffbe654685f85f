#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "wmsim/rng.hpp"

using wmsim::Philox4x32;
using wmsim::RandomStream;

// Known-answer vectors of Philox4x32-10 from the Random123 distribution.
TEST(Philox, KnownAnswers) {
    using C = Philox4x32::Counter;
    using K = Philox4x32::Key;
    EXPECT_EQ(Philox4x32::apply(C{0, 0, 0, 0}, K{0, 0}), (C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
    EXPECT_EQ(Philox4x32::apply(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, K{0xffffffffu, 0xffffffffu}),
              (C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
    EXPECT_EQ(Philox4x32::apply(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, K{0xa4093822u, 0x299f31d0u}),
              (C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(RandomStream, DeterministicAndAddressable) {
    RandomStream a(42, 7, 3), b(42, 7, 3), c(42, 8, 3), d(42, 7, 4), e(43, 7, 3);
    const double first = a.uniform();
    EXPECT_EQ(first, b.uniform());
    EXPECT_NE(first, c.uniform());
    EXPECT_NE(first, d.uniform());
    EXPECT_NE(first, e.uniform());
}

TEST(RandomStream, UniformStaysInsideOpenInterval) {
    RandomStream r(1, 0, 0);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    // Mean 1/2, standard error sqrt(1/12/n).
    EXPECT_NEAR(sum / n, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(RandomStream, NormalMoments) {
    RandomStream r(5, 1, 2);
    const int n = 400000;
    double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        s1 += x;
        s2 += x * x;
        s3 += x * x * x;
        s4 += x * x * x * x;
    }
    EXPECT_NEAR(s1 / n, 0.0, 5.0 / std::sqrt(n));
    EXPECT_NEAR(s2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
    EXPECT_NEAR(s3 / n, 0.0, 5.0 * std::sqrt(15.0 / n));
    EXPECT_NEAR(s4 / n, 3.0, 5.0 * std::sqrt(96.0 / n));
}

TEST(RandomStream, StreamsDoNotCollide) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 64; ++s) {
        for (std::uint32_t sub = 0; sub < 8; ++sub) {
            RandomStream r(9, s, sub);
            for (int k = 0; k < 8; ++k) {
                seen.insert(r.next_u64());
            }
        }
    }
    EXPECT_EQ(seen.size(), 64u * 8u * 8u);
}
