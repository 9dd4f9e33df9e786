#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "bubblelab/rng.hpp"
#include "bubblelab/stats.hpp"

using namespace bubblelab;

// Known-answer vectors published with the Random123 reference implementation.
TEST(Philox, KnownAnswerVectors) {
    using B = Philox4x32::Block;
    using K = Philox4x32::Key;
    EXPECT_EQ(Philox4x32::generate(B{0, 0, 0, 0}, K{0, 0}),
              (B{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
    EXPECT_EQ(Philox4x32::generate(B{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                   K{0xffffffffu, 0xffffffffu}),
              (B{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
    EXPECT_EQ(Philox4x32::generate(B{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                   K{0xa4093822u, 0x299f31d0u}),
              (B{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(PathRng, SameKeyGivesSameStream) {
    PathRng a(42, 7), b(42, 7);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.normal(), b.normal());
}

TEST(PathRng, StreamsDifferAcrossPathsAndSeeds) {
    PathRng a(42, 7), b(42, 8), c(43, 7);
    const double x = a.uniform();
    EXPECT_NE(x, b.uniform());
    EXPECT_NE(x, c.uniform());
}

TEST(PathRng, UniformStaysInsideOpenInterval) {
    PathRng r(1, 0);
    for (int i = 0; i < 100000; ++i) {
        const double u = r.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(PathRng, NormalMoments) {
    PathRng r(5, 3);
    const int n = 200000;
    std::vector<double> z(n), z2(n);
    for (int i = 0; i < n; ++i) {
        z[i] = r.normal();
        z2[i] = z[i] * z[i];
    }
    EXPECT_TRUE(within(estimate(z), 0.0, 4.0));
    EXPECT_TRUE(within(estimate(z2), 1.0, 4.0));
}

TEST(PathRng, ExponentialMean) {
    PathRng r(9, 1);
    std::vector<double> e(100000);
    for (auto& v : e) v = r.exponential();
    EXPECT_TRUE(within(estimate(e), 1.0, 4.0));
}

TEST(Stats, PairwiseSumIsExactOnIntegers) {
    std::vector<double> xs(1001);
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(i);
    EXPECT_EQ(pairwise_sum(xs), 500500.0);
    EXPECT_EQ(pairwise_sum(std::vector<double>{}), 0.0);
}

TEST(Stats, EstimateMeanAndStandardError) {
    const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
    const Estimate e = estimate(xs);
    EXPECT_DOUBLE_EQ(e.mean, 2.5);
    EXPECT_NEAR(e.std_err, std::sqrt(5.0 / 3.0 / 4.0), 1e-14);
    EXPECT_EQ(e.n, 4u);
}

TEST(Stats, FrequencyUsesBinomialError) {
    const Estimate f = frequency(25, 100);
    EXPECT_DOUBLE_EQ(f.mean, 0.25);
    EXPECT_NEAR(f.std_err, std::sqrt(0.25 * 0.75 / 100.0), 1e-15);
}

TEST(Stats, AgreementTests) {
    EXPECT_TRUE(agree({1.0, 0.1, 10}, {1.2, 0.1, 10}));
    EXPECT_FALSE(agree({1.0, 0.01, 10}, {1.2, 0.01, 10}));
    EXPECT_TRUE(agree({0.5, 0.0, 1}, {0.5, 0.0, 1}));
    EXPECT_TRUE(within({0.9, 0.05, 10}, 1.0));
    EXPECT_FALSE(within({0.9, 0.01, 10}, 1.0));
}
