#include <gtest/gtest.h>

#include <cmath>

#include "bubblelab/bes3.hpp"
#include "bubblelab/errors.hpp"
#include "bubblelab/normal.hpp"
#include "bubblelab/sde_engine.hpp"
#include "bubblelab/stats.hpp"

using namespace bubblelab;

namespace {

SimParams small(double horizon, std::size_t n, std::uint64_t seed) {
    SimParams p;
    p.horizon = horizon;
    p.dt = 1e-2;
    p.n_paths = n;
    p.seed = seed;
    return p;
}

Estimate survival(const PathEnsemble& q, double t) {
    std::size_t alive = 0;
    for (std::size_t i = 0; i < q.n_paths; ++i) alive += q.absorbed_by(i, t) ? 0 : 1;
    return frequency(alive, q.n_paths);
}

}  // namespace

TEST(Grid, StepsMustDivideHorizon) {
    EXPECT_EQ(checked_steps(1.0, 1e-3), 1000u);
    EXPECT_THROW(checked_steps(1.0, 0.3), ConfigError);
    EXPECT_THROW(checked_steps(1.0, 0.0), ConfigError);
    SimParams p = small(1.0, 1, 1);
    p.record_times = {0.5, 0.25};
    EXPECT_EQ(record_steps(p, 100), (std::vector<std::size_t>{0, 25, 50, 100}));
    p.record_times = {0.255};
    EXPECT_THROW(record_steps(p, 100), ConfigError);
    p.record_times = {2.0};
    EXPECT_THROW(record_steps(p, 100), ConfigError);
}

TEST(Engine, WorkerCountDoesNotChangeResults) {
    for (const ModelSpec& m : {inverse_bes3(), cev(1.5), cev(1.3), exp_lm()}) {
        SimParams p = small(1.0, 400, 11);
        p.levels.below = {0.5};
        const PathEnsemble a = simulate_p(m, p);
        p.workers = 3;
        const PathEnsemble b = simulate_p(m, p);
        EXPECT_EQ(a.values, b.values) << m.name;
        const PathEnsemble qa = simulate_q(m, p);
        p.workers = 1;
        const PathEnsemble qb = simulate_q(m, p);
        EXPECT_EQ(qa.values, qb.values) << m.name;
        for (std::size_t i = 0; i < qa.n_paths; ++i)
            ASSERT_EQ(qa.clocks[i].tau_x, qb.clocks[i].tau_x);
    }
}

TEST(Engine, PathSubstreamsAreAddressable) {
    SimParams p = small(1.0, 50, 5);
    const PathEnsemble all = simulate_p(inverse_bes3(), p);
    p.n_paths = 10;
    p.first_path_id = 20;
    const PathEnsemble part = simulate_p(inverse_bes3(), p);
    for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t k = 0; k < all.grid_size(); ++k)
            ASSERT_EQ(part.value(i, k), all.value(20 + i, k));
}

TEST(Engine, RecordsOnlyRequestedTimes) {
    SimParams p = small(2.0, 5, 1);
    p.record_times = {0.5, 1.0};
    const PathEnsemble e = simulate_p(inverse_bes3(), p);
    EXPECT_EQ(e.grid, (std::vector<double>{0.0, 0.5, 1.0, 2.0}));
    EXPECT_EQ(e.index_of(1.0), 2u);
    EXPECT_THROW(e.index_of(0.7), RangeError);
}

TEST(Engine, InverseBes3MeanAndSurvival) {
    SimParams p = small(1.0, 40000, 21);
    p.record_times = {1.0};
    const PathEnsemble pe = simulate_p(inverse_bes3(), p);
    const Estimate mean = estimate(pe.column(pe.index_of(1.0)));
    EXPECT_TRUE(within(mean, bes3_mean(1.0, 1.0), 3.5)) << mean.mean << " +- " << mean.std_err;

    const PathEnsemble qe = simulate_q(inverse_bes3(), p);
    const Estimate alive = survival(qe, 1.0);
    EXPECT_TRUE(within(alive, 1.0 - 2.0 * norm_cdf(-1.0), 3.5)) << alive.mean;
    for (std::size_t i = 0; i < qe.n_paths; ++i)
        if (qe.absorbed_by(i, 1.0)) ASSERT_EQ(qe.value(i, qe.index_of(1.0)), kInf);
}

TEST(Engine, DualIsAQMartingale) {
    SimParams p = small(1.0, 40000, 3);
    for (const ModelSpec& m : {inverse_bes3(), cev(1.5), cev(1.3)}) {
        const PathEnsemble q = simulate_q(m, p);
        const std::size_t k = q.index_of(1.0);
        std::vector<double> v(q.n_paths);
        for (std::size_t i = 0; i < q.n_paths; ++i) v[i] = q.reciprocal(i, k);
        const Estimate e = estimate(v);
        EXPECT_TRUE(within(e, 1.0, 3.5)) << m.name << " " << e.mean << " +- " << e.std_err;
    }
}

TEST(Engine, PositivityFloorUnderP) {
    SimParams p = small(1.0, 2000, 8);
    p.exact_schemes = false;
    const PathEnsemble e = simulate_p(cev(1.5), p);
    for (double v : e.values) ASSERT_GT(v, 0.0);
}

TEST(Engine, ExactAndEulerSchemesAgree) {
    SimParams p = small(1.0, 20000, 12);
    p.dt = 1e-3;
    p.record_times = {1.0};
    const PathEnsemble exact = simulate_q(cev(1.5), p);
    p.exact_schemes = false;
    const PathEnsemble euler = simulate_q(cev(1.5), p);
    EXPECT_TRUE(agree(survival(exact, 1.0), survival(euler, 1.0), 3.5));
}

TEST(Engine, TwoAssetWithConstantSecondAsset) {
    SimParams p = small(1.0, 200, 2);
    const ModelSpec m = two_asset(2.0, 0.0, 0.0, 0.0);
    const TwoAssetEnsemble pe = simulate_two_asset(m, Measure::P, p);
    for (double y : pe.second.values) ASSERT_EQ(y, 1.0);
    const TwoAssetEnsemble qe = simulate_two_asset(m, Measure::Q, p);
    const std::size_t k = qe.first.index_of(1.0);
    for (std::size_t i = 0; i < qe.first.n_paths; ++i) {
        const double z = qe.second.value(i, k);
        if (qe.first.absorbed_by(i, 1.0))
            ASSERT_EQ(z, 0.0);
        else
            ASSERT_NEAR(z, qe.first.reciprocal(i, k), 1e-12);
    }
}

TEST(Engine, ObserverSeesEveryStep) {
    SimParams p = small(0.5, 3, 2);
    std::size_t calls = 0;
    simulate_two_asset(two_asset(2.0, 1.0, 0.3), Measure::P, p, {},
                       [&](const StepView& v) {
                           ++calls;
                           EXPECT_LT(v.path, 3u);
                       });
    EXPECT_EQ(calls, 3u * 50u);
}

TEST(Projection, KernelAtZeroVarianceIsThePointValue) {
    EXPECT_NEAR(projection_kernel(1.0, 2.0, 2.0, 0.0), 1.0 / 3.0, 1e-14);
    EXPECT_LT(projection_kernel(1.0, 0.0, 0.0, 0.5), 1.0);
}

TEST(Projection, ProjectedMeanMatchesFullMean) {
    const std::vector<double> ts{0.25, 0.5, 1.0};
    const ProjectionEnsemble pe = optional_projection_bes3(4, ts, 4000, 17, 1e-2);
    for (double t : ts) {
        const Estimate a = estimate(pe.projected.column(pe.projected.index_of(t)));
        const Estimate b = estimate(pe.full.column(pe.full.index_of(t)));
        EXPECT_TRUE(agree(a, b)) << t;
    }
}
