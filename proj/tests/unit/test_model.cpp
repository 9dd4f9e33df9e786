#include <gtest/gtest.h>

#include <cmath>

#include "bubblelab/errors.hpp"
#include "bubblelab/model.hpp"

using namespace bubblelab;

TEST(Catalog, PresetsValidate) {
    EXPECT_NO_THROW(validate(inverse_bes3()));
    EXPECT_NO_THROW(validate(cev(1.5)));
    EXPECT_NO_THROW(validate(exp_lm()));
    EXPECT_NO_THROW(validate(time_changed(1.0)));
    EXPECT_NO_THROW(validate(two_asset(2.0, 0.0, 0.0, 0.0)));
}

TEST(Catalog, RejectsBadParameters) {
    EXPECT_THROW(validate(inverse_bes3(0.0)), ConfigError);
    EXPECT_THROW(validate(inverse_bes3(-1.0)), ConfigError);
    EXPECT_THROW(validate(two_asset(2.0, 2.0, 1.0)), ConfigError);
    EXPECT_THROW(validate(two_asset(2.0, 2.0, -1.5)), ConfigError);
    ModelSpec m = natural_scale(nullptr);
    EXPECT_THROW(validate(m), ConfigError);
}

TEST(Catalog, IntegerBesselDimension) {
    EXPECT_EQ(integer_bessel_dimension({1.0, 2.0}), 3);
    EXPECT_EQ(integer_bessel_dimension({1.0, 1.5}), 4);
    EXPECT_EQ(integer_bessel_dimension({1.0, 1.25}), 6);
    EXPECT_EQ(integer_bessel_dimension({1.0, 1.3}), 0);
    EXPECT_EQ(integer_bessel_dimension({1.0, 1.0}), 0);
}

TEST(Strictness, InverseBes3IsStrict) {
    const StrictnessReport r = classify_strictness(inverse_bes3());
    EXPECT_TRUE(r.positive);
    EXPECT_TRUE(r.strict);
    // int_1^inf x / x^4 dx = 1/2.
    EXPECT_NEAR(r.integral_upper, 0.5, 1e-8);
    EXPECT_NEAR(r.exponent_infinity, -3.0, 1e-6);
}

TEST(Strictness, CevFamily) {
    const StrictnessReport s15 = classify_strictness(cev(1.5));
    EXPECT_TRUE(s15.positive);
    EXPECT_TRUE(s15.strict);
    EXPECT_NEAR(s15.integral_upper, 1.0, 1e-8);

    const StrictnessReport gbm = classify_strictness(cev(1.0));
    EXPECT_TRUE(gbm.positive);
    EXPECT_FALSE(gbm.strict);

    const StrictnessReport sqrt_model = classify_strictness(cev(0.5));
    EXPECT_FALSE(sqrt_model.positive);
    EXPECT_NEAR(sqrt_model.integral_lower, 1.0, 1e-8);
    EXPECT_FALSE(sqrt_model.strict);
}

TEST(Strictness, RejectsModelsOutsideNaturalScale) {
    EXPECT_THROW(classify_strictness(exp_lm()), UnsupportedError);
}

TEST(Dual, SigmaBarOfInverseBes3IsMinusOne) {
    const ScalarFn sb = dual_sigma(inverse_bes3().sigma);
    for (double v : {0.1, 1.0, 7.0}) EXPECT_NEAR(sb(v), -1.0, 1e-14);
    const DualDynamics d = dual_dynamics(cev(1.5));
    EXPECT_NEAR(d.sigma_bar(4.0), -2.0, 1e-14);
}

// Bessel(3) in its own scale: s(x) = -1/x, and M = 1/X has sigma(m) = m^2.
TEST(ScaleFunctionTest, BesselThreeIsInverted) {
    const ScaleFunction s([](double x) { return 1.0 / x; }, [](double) { return 1.0; });
    for (double x : {0.01, 0.5, 1.0, 3.0, 200.0}) {
        EXPECT_NEAR(s(x), -1.0 / x, 1e-6 / x) << x;
        EXPECT_NEAR(s.derivative(x), 1.0 / (x * x), 1e-5 / (x * x)) << x;
        EXPECT_NEAR(s.inverse(s(x)), x, 1e-6 * x) << x;
    }
    for (double m : {0.2, 1.0, 5.0}) EXPECT_NEAR(s.natural_sigma(m), m * m, 1e-5 * m * m);
}

TEST(ScaleFunctionTest, NaturalScaleModelIsStrict) {
    const ModelSpec st = scaled_transient([](double x) { return 1.0 / x; }, [](double) { return 1.0; });
    const ModelSpec nat = to_natural_scale(st);
    EXPECT_NEAR(nat.x0, 1.0, 1e-9);
    EXPECT_TRUE(classify_strictness(nat).strict);
}

TEST(TimeChange, MapsGridAndUsesTerminalValue) {
    PathEnsemble y;
    y.grid = {0.0, 1.0, 3.0};
    y.n_paths = 1;
    y.values = {1.0, 2.0, 4.0};
    y.clocks.resize(1);
    const PathEnsemble x = time_change_strictify(y);
    ASSERT_EQ(x.grid.size(), 4u);
    EXPECT_DOUBLE_EQ(x.grid[1], 0.5);
    EXPECT_DOUBLE_EQ(x.grid[2], 0.75);
    EXPECT_DOUBLE_EQ(x.grid[3], 1.0);
    EXPECT_DOUBLE_EQ(x.value(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(x.value(0, 1), 1.5);
    EXPECT_DOUBLE_EQ(x.value(0, 3), 2.5);
    EXPECT_THROW(time_change_strictify(y, {0.9}), RangeError);
}
