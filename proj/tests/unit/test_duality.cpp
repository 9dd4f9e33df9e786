#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "bubblelab/bes3.hpp"
#include "bubblelab/duality.hpp"
#include "bubblelab/errors.hpp"
#include "bubblelab/normal.hpp"
#include "bubblelab/sde_engine.hpp"

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

// Two Q paths on {0, 0.5, 1}: one alive, one absorbed between 0.5 and 1.
PathEnsemble toy_q() {
    PathEnsemble q;
    q.measure = Measure::Q;
    q.dt = 0.5;
    q.steps = 2;
    q.grid = {0.0, 0.5, 1.0};
    q.grid_steps = {0, 1, 2};
    q.n_paths = 2;
    q.values = {1.0, 2.0, 4.0, 1.0, 0.5, kInf};
    q.clocks.resize(2);
    q.clocks[1].tau_x = 1.0;
    return q;
}

}  // namespace

TEST(Payoffs, BoundaryLimits) {
    const PayoffSpec call = call_payoff(1.0, 1.0);
    const std::vector<double> y{0.25};
    EXPECT_DOUBLE_EQ(call.g(y), 0.25 * 3.0);
    ASSERT_TRUE(call.decomposable());
    EXPECT_DOUBLE_EQ(call.eta[0]({}), 1.0);

    const PayoffSpec put = put_payoff(2.0, 1.0);
    EXPECT_DOUBLE_EQ(put.eta[0]({}), 0.0);

    const PayoffSpec ratio = ratio_call_payoff(1.0, 0.5, 1.0);
    const std::vector<double> y1{0.5};
    EXPECT_DOUBLE_EQ(ratio.eta[1](y1), 0.5);

    const PayoffSpec reset = reset_call_payoff(1.0, {0.25, 0.5, 0.75}, 1.0);
    EXPECT_EQ(reset.dates(), 4u);
    EXPECT_TRUE(reset.decomposable());
    EXPECT_DOUBLE_EQ(forward_payoff(1.0).eta[0]({}), 1.0);
    EXPECT_DOUBLE_EQ(unit_payoff(1.0).eta[0]({}), 0.0);
    EXPECT_DOUBLE_EQ(bounded_payoff(2.0, 1.0).eta[0]({}), 0.0);
}

TEST(Decomposition, HandBuiltEnsemble) {
    const PathEnsemble q = toy_q();
    const PayoffSpec call = call_payoff(1.0, 1.0);
    const PriceEstimate d = price_decomposition_q(q, call);
    // Alive path: g(1/4) = (1 - 1/4); dead path contributes eta = 1 to both terms.
    EXPECT_DOUBLE_EQ(d.main_term.mean, (0.75 + 1.0) / 2.0);
    EXPECT_DOUBLE_EQ(d.default_term.mean, 0.5);
    EXPECT_DOUBLE_EQ(d.value, 0.375);
    EXPECT_DOUBLE_EQ(price_survival_q(q, call).value, 0.375);
    const PriceEstimate c = corrected_price(q, call);
    EXPECT_DOUBLE_EQ(c.value, 0.875);
    EXPECT_EQ(c.default_term.mean, 0.0);
}

TEST(Decomposition, WrongMeasureIsRejected) {
    const PathEnsemble q = toy_q();
    EXPECT_THROW(price_direct_p(q, call_payoff(1.0, 1.0)), PreconditionError);
}

TEST(Decomposition, MainMinusDefaultIsSurvivalOnTheSamePaths) {
    SimParams p = params(5000, 4);
    const PayoffSpec pay = reset_call_payoff(1.0, {0.25, 0.5, 0.75}, 1.0);
    const PathEnsemble q = simulate_q(inverse_bes3(), with_dates(p, pay.times));
    const PriceEstimate d = price_decomposition_q(q, pay);
    const PriceEstimate s = price_survival_q(q, pay);
    EXPECT_NEAR(d.value, s.value, 1e-12);
    EXPECT_NEAR(d.main_term.mean - d.default_term.mean, d.value, 1e-12);
}

TEST(Decomposition, CallAgreesWithClosedForm) {
    SimParams p = params(40000, 6);
    const PayoffSpec call = call_payoff(1.0, 1.0);
    const PriceEstimate dp = price_direct_p(inverse_bes3(), call, p);
    const PriceEstimate sq = price_survival_q(inverse_bes3(), call, p);
    const double closed = bes3_call_closed(1.0, 1.0, 1.0);
    EXPECT_TRUE(within(dp.as_estimate(), closed, 3.5)) << dp.value << " +- " << dp.std_err;
    EXPECT_TRUE(within(sq.as_estimate(), closed, 3.5)) << sq.value << " +- " << sq.std_err;
}

TEST(Bubble, DefaultMassOfInverseBes3) {
    const BubbleTerm b = bubble_term(inverse_bes3(), 0.0, 1.0, params(40000, 9));
    EXPECT_NEAR(b.value, 2.0 * norm_cdf(-1.0), 3.5 * b.std_err);
    EXPECT_THROW(bubble_term(toy_q(), 1.0, 0.5), ConfigError);
}

TEST(Reweight, ForwardEqualsSurvival) {
    SimParams p = params(20000, 13);
    const PathEnsemble q = simulate_q(inverse_bes3(), p);
    const PriceEstimate r = reweight_price(q, 1.0, [](double x) { return x; });
    std::size_t alive = 0;
    for (std::size_t i = 0; i < q.n_paths; ++i) alive += q.absorbed_by(i, 1.0) ? 0 : 1;
    EXPECT_NEAR(r.value, static_cast<double>(alive) / static_cast<double>(q.n_paths), 1e-12);
}

TEST(Methods, NamesRoundTrip) {
    for (Method m : {Method::DirectP, Method::SurvivalQ, Method::DecompositionQ, Method::ClosedForm,
                     Method::Corrected})
        EXPECT_EQ(method_from_string(to_string(m)), m);
    EXPECT_THROW(method_from_string("monte_carlo"), ConfigError);
}
