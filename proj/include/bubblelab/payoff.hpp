#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace bubblelab {

using PathFn = std::function<double(std::span<const double>)>;

// Payoff h(X_{t_1}, ..., X_{t_n}) on monitoring dates `times`. eta[k] is the
// limit of g(y) = y_n h(1/y) as (y_{k+1}, ..., y_n) -> 0 with y_1..y_k fixed,
// as a function of (y_1, ..., y_k). Payoffs without analytic limits leave eta
// empty and cannot be decomposed.
struct PayoffSpec {
    std::string name;
    std::vector<double> times;
    PathFn h;
    std::vector<PathFn> eta;

    std::size_t dates() const noexcept { return times.size(); }
    bool decomposable() const noexcept { return eta.size() == times.size(); }

    // g(y) = y_n h(1/y_1, ..., 1/y_n) for y with positive entries.
    double g(std::span<const double> y) const;
};

PayoffSpec call_payoff(double K, double T);
PayoffSpec put_payoff(double K, double T);
// (X_T - min(K, X_{t_1}, ..., X_{t_m}))^+ with reset dates t_1 < ... < t_m < T.
PayoffSpec reset_call_payoff(double K, const std::vector<double>& resets, double T);
// (X_T / X_S - K)^+.
PayoffSpec ratio_call_payoff(double K, double S, double T);
// m(x, t) = E(X_{s+t} | X_s = x) and its limit as x -> infinity.
struct ConditionalMean {
    std::string name;
    std::function<double(double, double)> m;
    std::function<double(double)> limit;
};

// sigma(x) = c x^2: x (1 - 2 Phi(-1 / (c x sqrt t))).
ConditionalMean power2_mean(double c = 1.0);
// sigma(x) = c x^1.5: x (1 - exp(-2 / (c^2 x t))); the dual 4 / (c^2 X) is a
// squared Bessel process of dimension 0.
ConditionalMean power15_mean(double c = 1.0);

// Chooser: call if m(X_S, T - S) >= K, put otherwise.
PayoffSpec chooser_payoff(double K, double S, double T, const ConditionalMean& mean);
// Chooser on an inverse BES(3) process.
PayoffSpec chooser_payoff(double K, double S, double T);
// min(X_T, c).
PayoffSpec bounded_payoff(double c, double T);
// X_T.
PayoffSpec forward_payoff(double T);
// 1.
PayoffSpec unit_payoff(double T);

}  // namespace bubblelab
