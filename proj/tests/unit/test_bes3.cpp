#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bubblelab/bes3.hpp"
#include "bubblelab/normal.hpp"
#include "bubblelab/path_ensemble.hpp"

using namespace bubblelab;
using boost::math::quadrature::gauss_kronrod;

namespace {

struct CallCase {
    double x, K, T, value;
};

// Evaluated to 30 digits with an arbitrary precision integrator.
constexpr CallCase kCalls[] = {
    {1, 1, 1, 0.07314106992168894},   {1, 0.5, 1, 0.22415615027240518},
    {1, 2, 1, 0.019669019414488699},  {2, 1, 0.5, 0.23201811967555796},
    {10, 1, 1, 0.11467301649199657},  {100, 1, 1, 0.11518983639939582},
    {1000, 1, 1, 0.11519501634193938}, {1, 1, 25, 0.0010366361481045636},
    {1, 1, 4, 0.014178542175518966},
};

// x int_0^{1/K} (1 - K v) [phi_T(v - 1/x) - phi_T(v + 1/x)] dv by adaptive quadrature.
double call_by_quadrature(double x, double K, double T) {
    const double s = std::sqrt(T);
    auto f = [&](double v) {
        return (1.0 - K * v) * (norm_pdf((v - 1.0 / x) / s) - norm_pdf((v + 1.0 / x) / s)) / s;
    };
    return x * gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0 / K, 15, 1e-13);
}

}  // namespace

TEST(Bes3Call, MatchesHighPrecisionTable) {
    for (const auto& c : kCalls)
        EXPECT_NEAR(bes3_call_closed(c.x, c.K, c.T), c.value, 1e-10)
            << "x=" << c.x << " K=" << c.K << " T=" << c.T;
}

TEST(Bes3Call, MatchesIntegralRepresentation) {
    for (double x : {0.5, 1.0, 3.0})
        for (double K : {0.25, 1.0, 4.0})
            for (double T : {0.1, 1.0, 9.0})
                EXPECT_NEAR(bes3_call_closed(x, K, T), call_by_quadrature(x, K, T), 1e-9);
}

TEST(Bes3Call, BoundedByTheLargeStartLimit) {
    const double bound = 2.0 / std::sqrt(2.0 * std::numbers::pi);
    for (double x : {1.0, 10.0, 100.0, 1000.0}) EXPECT_LE(bes3_call_closed(x, 1.0, 1.0), bound);
}

TEST(Bes3Call, PutCallParityWithTheMeanFunction) {
    // E(K - X_T)^+ = C - m(x) + K, and the put is bounded by K.
    for (double K : {0.5, 1.0, 2.0}) {
        const double put = bes3_call_closed(1.0, K, 1.0) - bes3_mean(1.0, 1.0) + K;
        EXPECT_GE(put, 0.0);
        EXPECT_LE(put, K);
    }
}

TEST(Bes3Mean, StrictLocalMartingaleDefect) {
    EXPECT_NEAR(bes3_mean(1.0, 1.0), 1.0 - 2.0 * norm_cdf(-1.0), 1e-15);
    EXPECT_LT(bes3_mean(1.0, 2.0), bes3_mean(1.0, 1.0));
    EXPECT_NEAR(bes3_mean(1e8, 1.0), bes3_mean_limit(1.0), 1e-7);
    EXPECT_NEAR(bes3_mean_limit(1.0), 0.7978845608028654, 1e-15);
}

TEST(Bes3Density, IntegratesToSurvivalAndMean) {
    for (double t : {0.25, 1.0, 4.0}) {
        auto d = [t](double z) { return bes3_density(z, t); };
        auto zd = [t](double z) { return z * bes3_density(z, t); };
        const double mass = gauss_kronrod<double, 61>::integrate(d, 0.0, kInf, 15, 1e-12);
        const double mean = gauss_kronrod<double, 61>::integrate(zd, 0.0, kInf, 15, 1e-12);
        EXPECT_NEAR(mass, 1.0, 1e-8) << t;
        EXPECT_NEAR(mean, bes3_mean(1.0, t), 1e-7) << t;
    }
}

TEST(Bes3Exchange, IndependentCopies) {
    EXPECT_NEAR(exchange_closed_bes3(1.0, 1.0, 1.0), 0.19662453, 1e-7);
    // K = 0 reduces to the mean of X.
    EXPECT_NEAR(exchange_closed_bes3(1.0, 0.0, 1.0), bes3_mean(1.0, 1.0), 1e-9);
    EXPECT_LT(exchange_closed_bes3(1.0, 2.0, 1.0), exchange_closed_bes3(1.0, 1.0, 1.0));
}
