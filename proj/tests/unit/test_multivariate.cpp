#include <gtest/gtest.h>

#include <cmath>

#include "bubblelab/errors.hpp"
#include "bubblelab/multivariate.hpp"

using namespace bubblelab;

TEST(JointIntegrands, UncorrelatedCaseIsLogarithmic) {
    const JointIntegrands a = joint_integrands(2.0, 4.0, 3.0, 5.0, 0.0);
    EXPECT_DOUBLE_EQ(a.a_x, 0.5);
    EXPECT_DOUBLE_EQ(a.a_y, 0.25);
}

TEST(JointIntegrands, CorrelatedCase) {
    const double x = 1.5, y = 0.5, f = 2.0, g = 1.0, h = 0.6;
    const JointIntegrands a = joint_integrands(x, y, f, g, h);
    const double det = f * g - h * h;
    EXPECT_NEAR(a.a_x, (f * y - h * x) * g / (y * x * det), 1e-14);
    EXPECT_NEAR(a.a_y, (g * x - h * y) * f / (y * x * det), 1e-14);
}

TEST(JointIntegrands, SingularCovarianceThrows) {
    EXPECT_THROW(joint_integrands(1.0, 1.0, 1.0, 1.0, 1.0), SingularityError);
    EXPECT_THROW(joint_integrands(1.0, 1.0, 0.0, 1.0, 0.0), SingularityError);
}

TEST(JointExponential, NormalizationAndReweightedMeans) {
    SimParams p;
    p.horizon = 1.0;
    p.dt = 1e-3;
    p.n_paths = 4000;
    p.seed = 19;
    p.record_times = {0.5, 1.0};
    for (double rho : {-0.5, 0.5}) {
        const JointEnsemble e = simulate_joint_exponential(two_asset(2.0, 2.0, rho), p, 8.0);
        const auto checks = joint_checks(e, {0.5, 1.0}, 4.0);
        ASSERT_EQ(checks.size(), 2u);
        for (const auto& c : checks) {
            EXPECT_TRUE(c.normalized) << rho << " t=" << c.t << " " << c.normalization.mean;
            EXPECT_TRUE(c.constant) << rho << " t=" << c.t;
        }
    }
}

TEST(JointExponential, DeterministicAcrossWorkers) {
    SimParams p;
    p.horizon = 0.2;
    p.dt = 1e-2;
    p.n_paths = 64;
    p.seed = 2;
    const JointEnsemble a = simulate_joint_exponential(two_asset(2.0, 2.0, 0.3), p, 8.0);
    p.workers = 4;
    const JointEnsemble b = simulate_joint_exponential(two_asset(2.0, 2.0, 0.3), p, 8.0);
    EXPECT_EQ(a.weight, b.weight);
    EXPECT_EQ(a.x, b.x);
}

TEST(Kelvin, LowDimensionIsUnsupported) {
    SimParams p;
    EXPECT_THROW(kelvin_inversion(2, 8.0, p), UnsupportedError);
}

TEST(Kelvin, ReweightedMeansAreConstantAndConformal) {
    SimParams p;
    p.horizon = 1.0;
    p.dt = 1e-3;
    p.n_paths = 4000;
    p.seed = 77;
    p.record_times = {0.25, 0.5, 1.0};
    const KelvinEnsemble e = kelvin_inversion(3, 8.0, p);
    EXPECT_DOUBLE_EQ(e.component(0, 0, 0), 1.0);
    for (const auto& c : kelvin_checks(e, {0.25, 0.5, 1.0}, 4.0)) EXPECT_TRUE(c.constant) << c.t;
    const ConformalCheck cc = conformal_check(e, 4.0);
    EXPECT_TRUE(cc.conformal);
    EXPECT_EQ(cc.off_diagonal.size(), 3u);
    EXPECT_EQ(cc.diagonal_gaps.size(), 2u);
}
