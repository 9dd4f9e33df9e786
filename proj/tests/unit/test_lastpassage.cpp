#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "bubblelab/bes3.hpp"
#include "bubblelab/lastpassage.hpp"
#include "bubblelab/normal.hpp"
#include "bubblelab/sde_engine.hpp"

using namespace bubblelab;

TEST(LastPassage, TracksTheLatestCrossing) {
    LastPassageTracker tr(1.0);
    tr.start(0.5);
    EXPECT_FALSE(tr.record().crossed);
    tr.step(0.1, 0.5, 1.5);
    tr.step(0.2, 1.5, 1.2);
    tr.step(0.3, 1.2, 0.8);
    tr.step(0.4, 0.8, 0.9);
    EXPECT_TRUE(tr.record().crossed);
    EXPECT_DOUBLE_EQ(tr.record().time, 0.3);
}

TEST(LastPassage, TangencyWithoutCrossingDoesNotCount) {
    LastPassageTracker tr(1.0);
    tr.start(0.5);
    tr.step(0.1, 0.5, 0.999999);
    tr.step(0.2, 0.999999, 0.5);
    EXPECT_FALSE(tr.record().crossed);
    tr.step(0.3, 0.5, 1.0);
    EXPECT_DOUBLE_EQ(tr.record().time, 0.3);
    tr.touch(0.35);
    EXPECT_DOUBLE_EQ(tr.record().time, 0.35);
}

TEST(LastPassage, StartOnTheLevel) {
    const std::vector<double> v{1.0, 2.0, 3.0};
    const std::vector<double> g{0.0, 0.5, 1.0};
    const LastPassageRecord r = detect_rho(v, g, 1.0);
    EXPECT_TRUE(r.crossed);
    EXPECT_EQ(r.time, 0.0);
}

TEST(LastPassage, StopIndexLimitsTheScan) {
    const std::vector<double> v{0.5, 1.5, 0.5, 1.5};
    const std::vector<double> g{0.0, 1.0, 2.0, 3.0};
    EXPECT_DOUBLE_EQ(detect_rho(v, g, 1.0).time, 3.0);
    EXPECT_DOUBLE_EQ(detect_rho(v, g, 1.0, 2).time, 2.0);
    EXPECT_DOUBLE_EQ(detect_rho(v, g, 1.0, 1).time, 1.0);
}

// With Y == 1 the last-passage probability Q(rho_K <= T < tau) equals the
// inverse BES(3) call price.
TEST(LastPassage, ExchangeSamplesWithConstantSecondAsset) {
    SimParams p;
    p.horizon = 4.0;
    p.dt = 1e-2;
    p.n_paths = 20000;
    p.seed = 31;
    p.record_times = {1.0};
    EventLevels z;
    z.rho = {1.0};
    const TwoAssetEnsemble q =
        simulate_two_asset(two_asset(2.0, 0.0, 0.0, 0.0), Measure::Q, p, z);
    const ExchangeSamples s = exchange_samples(q, 1.0, 1.0);
    EXPECT_EQ(s.european.size(), p.n_paths);
    EXPECT_EQ(s.inclusion_violations, 0u);
    const Estimate e = estimate(s.european);
    EXPECT_TRUE(within(e, bes3_call_closed(1.0, 1.0, 1.0), 3.5)) << e.mean << " +- " << e.std_err;
    const Estimate d = estimate(s.defaulted);
    EXPECT_TRUE(within(d, 2.0 * norm_cdf(-1.0), 3.5));

    const PremiumReport r = premium_identity_check(two_asset(2.0, 0.0, 0.0, 0.0), q, 1.0, 1.0);
    EXPECT_TRUE(r.consistent);
    EXPECT_TRUE(agree(r.premium, r.default_mass));
}
