#include <gtest/gtest.h>

#include <cmath>

#include "bubblelab/errors.hpp"
#include "bubblelab/normal.hpp"
#include "bubblelab/pricers.hpp"

using namespace bubblelab;

namespace {

SimParams params(std::size_t n, std::uint64_t seed, double horizon = 1.0) {
    SimParams p;
    p.horizon = horizon;
    p.dt = 1e-2;
    p.n_paths = n;
    p.seed = seed;
    return p;
}

}  // namespace

TEST(Barriers, NamesRoundTrip) {
    for (Barrier b : {Barrier::DI, Barrier::DO, Barrier::UI, Barrier::UO})
        EXPECT_EQ(barrier_from_string(to_string(b)), b);
    EXPECT_THROW(barrier_from_string("KI"), ConfigError);
    EXPECT_EQ(style_from_string("american"), Style::American);
}

TEST(Barriers, InAndOutPartitionTheVanilla) {
    SimParams p = params(20000, 41);
    p.levels.below = {0.5};
    p.levels.above = {2.0};
    p.record_times = {1.0};
    const PathEnsemble pe = simulate_p(inverse_bes3(), p);
    const PathEnsemble qe = simulate_q(inverse_bes3(), p);
    const PayoffSpec call = call_payoff(1.0, 1.0);
    const double vanilla = price_direct_p(pe, call).value;
    const double vanilla_q = price_decomposition_q(qe, call).value;

    const BarrierReport di = barrier_price(pe, qe, call, Barrier::DI, 0.5);
    const BarrierReport dout = barrier_price(pe, qe, call, Barrier::DO, 0.5);
    EXPECT_NEAR(di.left.value + dout.left.value, vanilla, 1e-12);
    EXPECT_NEAR(di.right.value + dout.right.value, vanilla_q, 1e-12);

    const BarrierReport ui = barrier_price(pe, qe, call, Barrier::UI, 2.0);
    const BarrierReport uo = barrier_price(pe, qe, call, Barrier::UO, 2.0);
    EXPECT_NEAR(ui.left.value + uo.left.value, vanilla, 1e-12);
    EXPECT_EQ(uo.right.default_term.mean, 0.0);
    for (const auto* r : {&di, &dout, &ui, &uo}) EXPECT_TRUE(r->consistent) << to_string(r->type);
}

TEST(Barriers, UnmonitoredLevelIsAnError) {
    SimParams p = params(10, 1);
    const PathEnsemble pe = simulate_p(inverse_bes3(), p);
    const PathEnsemble qe = simulate_q(inverse_bes3(), p);
    EXPECT_THROW(barrier_price(pe, qe, call_payoff(1.0, 1.0), Barrier::DI, 0.5), RangeError);
}

TEST(Barriers, MultiDatePayoffIsUnsupported) {
    EXPECT_THROW(barrier_price(inverse_bes3(), reset_call_payoff(1.0, {0.5}, 1.0), Barrier::DI, 0.5,
                               params(10, 1)),
                 UnsupportedError);
}

TEST(Exchange, ConstantSecondAssetMatchesClosedForms) {
    const ModelSpec m = two_asset(2.0, 0.0, 0.0, 0.0);
    SimParams p = params(20000, 23);
    const ExchangeEstimate e = exchange_lastpassage(m, 1.0, 1.0, Style::European, p);
    EXPECT_DOUBLE_EQ(e.horizon_sim, 4.0);
    EXPECT_NEAR(e.price.value, bes3_call_closed(1.0, 1.0, 1.0), 3.5 * e.price.std_err);
    const ExchangeEstimate a = exchange_lastpassage(m, 1.0, 1.0, Style::American, p);
    EXPECT_NEAR(a.price.value, bes3_call_closed(1.0, 1.0, 1.0) + 2.0 * norm_cdf(-1.0),
                3.5 * a.price.std_err);
    EXPECT_THROW(exchange_lastpassage(m, 1.0, 1.0, Style::European, p, 0.5), ConfigError);
}

TEST(Exchange, DirectUnderP) {
    const ModelSpec m = two_asset(2.0, 0.0, 0.0, 0.0);
    SimParams p = params(20000, 29);
    const TwoAssetEnsemble pe = simulate_two_asset(m, Measure::P, p);
    const PriceEstimate d = exchange_direct_p(pe, 1.0, 1.0);
    EXPECT_NEAR(d.value, bes3_call_closed(1.0, 1.0, 1.0), 3.5 * d.std_err);
    const TwoAssetEnsemble qe = simulate_two_asset(m, Measure::Q, params(5, 1));
    EXPECT_THROW(exchange_direct_p(qe, 1.0, 1.0), PreconditionError);
}

TEST(RealWorld, PayoffLimits) {
    const RealWorldPayoff call = real_world_call(1.0);
    EXPECT_TRUE(call.american_ok);
    EXPECT_DOUBLE_EQ(call.g(0.0), 1.0);
    EXPECT_DOUBLE_EQ(call.g(0.5), 0.5);
    const RealWorldPayoff put = real_world_put(1.0);
    EXPECT_FALSE(put.american_ok);
    EXPECT_DOUBLE_EQ(put.g(0.0), 0.0);
}

TEST(RealWorld, AmericanPutIsUnsupported) {
    const ModelSpec m = two_asset(2.0, 0.0, 0.0, 0.0);
    const TwoAssetEnsemble q = simulate_two_asset(m, Measure::Q, params(10, 1));
    EXPECT_THROW(real_world_price(q, real_world_put(1.0), 1.0, Style::American), UnsupportedError);
    const RealWorldReport r = real_world_price(q, real_world_put(1.0), 1.0, Style::European);
    EXPECT_EQ(r.american.n_paths, 0u);
}

TEST(RealWorld, AmericanCallWithConstantSecondAsset) {
    const ModelSpec m = two_asset(2.0, 0.0, 0.0, 0.0);
    const TwoAssetEnsemble q = simulate_two_asset(m, Measure::Q, params(20000, 37));
    const RealWorldReport r = real_world_price(q, real_world_call(1.0), 1.0, Style::American);
    EXPECT_NEAR(r.american.value, bes3_call_closed(1.0, 1.0, 1.0) + 2.0 * norm_cdf(-1.0),
                3.5 * r.american.std_err);
    EXPECT_NEAR(r.premium.mean, 2.0 * norm_cdf(-1.0), 3.5 * r.premium.std_err);
}

TEST(Chooser, RequiresAnInteriorDecisionDate) {
    SimParams p = params(10, 1, 2.0);
    EXPECT_THROW(chooser_price(inverse_bes3(), 1.0, 0.0, 2.0, p), ConfigError);
    EXPECT_THROW(chooser_price(inverse_bes3(), 1.0, 1.0, 2.0, p, Method::ClosedForm),
                 UnsupportedError);
    EXPECT_THROW(chooser_price(cev(1.3), 1.0, 1.0, 2.0, p), UnsupportedError);
}

TEST(Chooser, MethodsAgree) {
    SimParams p = params(20000, 51, 2.0);
    const PriceEstimate d = chooser_price(inverse_bes3(), 1.0, 1.0, 2.0, p, Method::DirectP);
    const PriceEstimate q = chooser_price(inverse_bes3(), 1.0, 1.0, 2.0, p, Method::DecompositionQ);
    EXPECT_TRUE(agree(d.as_estimate(), q.as_estimate(), 3.5)) << d.value << " " << q.value;
}

TEST(Chooser, ConditionalMeans) {
    const ConditionalMean m2 = conditional_mean(inverse_bes3());
    EXPECT_DOUBLE_EQ(m2.m(1.0, 1.0), bes3_mean(1.0, 1.0));
    EXPECT_NEAR(m2.m(1e9, 1.0), m2.limit(1.0), 1e-8);
    const ConditionalMean m15 = conditional_mean(cev(1.5));
    EXPECT_NEAR(m15.m(1e9, 0.5), m15.limit(0.5), 1e-8);
    EXPECT_LT(m15.m(2.0, 1.0), 2.0);

    // The mean of a CEV 1.5 process is its Q-survival probability times x0.
    SimParams p = params(40000, 61);
    const PathEnsemble q = simulate_q(cev(1.5), p);
    std::size_t alive = 0;
    for (std::size_t i = 0; i < q.n_paths; ++i) alive += q.absorbed_by(i, 1.0) ? 0 : 1;
    EXPECT_TRUE(within(frequency(alive, q.n_paths), m15.m(1.0, 1.0), 3.5));
}

TEST(Chooser, CevMethodsAgree) {
    SimParams p = params(20000, 53, 2.0);
    const PriceEstimate d = chooser_price(cev(1.5), 1.0, 1.0, 2.0, p, Method::DirectP);
    const PriceEstimate q = chooser_price(cev(1.5), 1.0, 1.0, 2.0, p, Method::DecompositionQ);
    EXPECT_TRUE(agree(d.as_estimate(), q.as_estimate(), 3.5)) << d.value << " " << q.value;
}
