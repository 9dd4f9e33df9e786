#pragma once

#include <functional>
#include <string>

#include "bubblelab/bes3.hpp"
#include "bubblelab/duality.hpp"
#include "bubblelab/lastpassage.hpp"
#include "bubblelab/sde_engine.hpp"

namespace bubblelab {

enum class Barrier { DI, DO, UI, UO };

std::string to_string(Barrier b);
Barrier barrier_from_string(const std::string& s);

// Both sides of a knock-in / knock-out identity: the P-expectation of
// h(X_T) on the barrier event, and the Q main term minus the barrier's default
// term. Down barriers use T_D = inf{t : X_t <= D}, up barriers the running
// maximum m_T >= F (X_0 counts).
struct BarrierReport {
    Barrier type = Barrier::DI;
    double level = 0.0;
    PriceEstimate left;
    PriceEstimate right;
    bool consistent = false;
};

// `payoff` must have a single date T and a constant boundary limit eta.
// The ensembles must monitor `level` (below for D*, above for U*).
BarrierReport barrier_price(const PathEnsemble& p, const PathEnsemble& q, const PayoffSpec& payoff,
                            Barrier type, double level);
BarrierReport barrier_price(const ModelSpec& model, const PayoffSpec& payoff, Barrier type,
                            double level, SimParams params);

enum class Style { European, American };

std::string to_string(Style s);
Style style_from_string(const std::string& s);

struct ExchangeEstimate {
    PriceEstimate price;
    double tail_mass = 0.0;  // Q(T < tau_X <= horizon_sim)
    double horizon_sim = 0.0;
    std::size_t alive_at_horizon = 0;
};

// Exchange option E(K, T) or A(K, T) from a Q-ensemble of (X, Z) that
// monitors the level 1/K on Z.
ExchangeEstimate exchange_lastpassage(const TwoAssetEnsemble& q, double K, double T, Style style);
// Simulates under Q to horizon_multiplier * T.
ExchangeEstimate exchange_lastpassage(const ModelSpec& model, double K, double T, Style style,
                                      SimParams params, double horizon_multiplier = 4.0);

// E^P(X_T - K Y_T)^+ from a P-ensemble of (X, Y).
PriceEstimate exchange_direct_p(const TwoAssetEnsemble& p, double K, double T);

// Payoff h(S) on S = X / Y for real-world pricing.
struct RealWorldPayoff {
    std::string name;
    std::function<double(double)> h;
    double eta = 0.0;  // lim h(s) / s as s -> infinity
    // h convex, h(0) = 0, h(s) <= s and eta = 1: the American value is E^Q g(Z_T).
    bool american_ok = false;

    double g(double z) const { return z > 0.0 ? z * h(1.0 / z) : eta; }
};

RealWorldPayoff real_world_call(double K);
RealWorldPayoff real_world_put(double K);
RealWorldPayoff real_world_forward();

struct RealWorldReport {
    PriceEstimate european;
    PriceEstimate american;  // value 0 and n_paths 0 when the payoff does not qualify
    Estimate premium;        // E^Q[1{tau_X <= T} g(Z_tau)]
    Estimate z_zero;         // Q(Z_T = 0)
};

RealWorldReport real_world_price(const TwoAssetEnsemble& q, const RealWorldPayoff& payoff, double T,
                                 Style style);
// E^P[Y_T h(X_T / Y_T)].
PriceEstimate real_world_direct_p(const TwoAssetEnsemble& p, const RealWorldPayoff& payoff,
                                  double T);

// Closed-form conditional mean for sigma = c x^2 and sigma = c x^1.5. Throws
// UnsupportedError for other models.
ConditionalMean conditional_mean(const ModelSpec& model);

// Chooser by the requested method, on a model with a closed-form conditional mean.
PriceEstimate chooser_price(const ModelSpec& model, double K, double S, double T, SimParams params,
                            Method method = Method::DecompositionQ);

}  // namespace bubblelab
