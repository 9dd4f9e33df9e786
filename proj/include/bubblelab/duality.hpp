#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "bubblelab/model.hpp"
#include "bubblelab/path_ensemble.hpp"
#include "bubblelab/payoff.hpp"
#include "bubblelab/stats.hpp"

namespace bubblelab {

enum class Method { DirectP, SurvivalQ, DecompositionQ, ClosedForm, Corrected };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct PriceEstimate {
    double value = 0.0;
    double std_err = 0.0;
    std::size_t n_paths = 0;
    Estimate main_term;
    Estimate default_term;
    Method method = Method::ClosedForm;
    std::size_t rejected = 0;

    Estimate as_estimate() const noexcept { return {value, std_err, n_paths}; }
};

// Paths whose payoff is not finite are dropped; more than this fraction aborts.
inline constexpr double kMaxRejectedFraction = 1e-3;

PriceEstimate price_direct_p(const PathEnsemble& p, const PayoffSpec& payoff);
PriceEstimate price_survival_q(const PathEnsemble& q, const PayoffSpec& payoff);
// value = main - default, computed on the same Q paths.
PriceEstimate price_decomposition_q(const PathEnsemble& q, const PayoffSpec& payoff);
// Main term of the decomposition alone (default term set to zero).
PriceEstimate corrected_price(const PathEnsemble& q, const PayoffSpec& payoff);

// Convenience overloads that simulate with the payoff dates recorded.
PriceEstimate price_direct_p(const ModelSpec& model, const PayoffSpec& payoff, SimParams params);
PriceEstimate price_survival_q(const ModelSpec& model, const PayoffSpec& payoff, SimParams params);
PriceEstimate price_decomposition_q(const ModelSpec& model, const PayoffSpec& payoff,
                                    SimParams params);
PriceEstimate corrected_price(const ModelSpec& model, const PayoffSpec& payoff, SimParams params);

struct BubbleTerm {
    double t = 0.0;
    double T = 0.0;
    double value = 0.0;
    double std_err = 0.0;
};

// Q-frequency of {t < tau_X <= T}.
BubbleTerm bubble_term(const PathEnsemble& q, double t, double T);
BubbleTerm bubble_term(const ModelSpec& model, double t, double T, SimParams params);

// E^P[F] = E^Q[F(X_t) V_t] on paths not absorbed by t, where V = 1/X is the
// true Q-martingale carried by the ensemble and F is evaluated on X.
PriceEstimate reweight_price(const PathEnsemble& q, double t,
                             const std::function<double(double)>& functional);

// Records the payoff dates on top of whatever the caller asked for.
SimParams with_dates(SimParams params, const std::vector<double>& times);

}  // namespace bubblelab
