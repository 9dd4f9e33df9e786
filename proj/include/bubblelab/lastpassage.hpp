#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "bubblelab/path_ensemble.hpp"
#include "bubblelab/stats.hpp"

namespace bubblelab {

// Online last-passage detection at a fixed level. A step from v_prev to v
// counts as a passage if v equals the level or the two values straddle it
// strictly; the recorded time is the right end of the step. A start exactly at
// the level is a passage at time 0.
class LastPassageTracker {
public:
    explicit LastPassageTracker(double level) noexcept { rec_.level = level; }

    void start(double v0) noexcept {
        rec_.time = 0.0;
        rec_.crossed = v0 == rec_.level;
    }

    void step(double t, double v_prev, double v) noexcept {
        const double a = v_prev - rec_.level;
        const double b = v - rec_.level;
        if (b == 0.0 || (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0)) {
            rec_.time = t;
            rec_.crossed = true;
        }
    }

    // A passage seen between grid points, e.g. by a Brownian bridge test.
    void touch(double t) noexcept {
        rec_.time = t;
        rec_.crossed = true;
    }

    const LastPassageRecord& record() const noexcept { return rec_; }

private:
    LastPassageRecord rec_;
};

// Last passage of a recorded path at `level`, scanning indices [0, stop].
// Post-explosion values are not scanned when stop is the absorption index.
LastPassageRecord detect_rho(std::span<const double> values, std::span<const double> grid,
                             double level, std::size_t stop);
LastPassageRecord detect_rho(std::span<const double> values, std::span<const double> grid,
                             double level);

struct TwoAssetEnsemble;
struct ModelSpec;

// Per-path exchange payoffs from a Q-ensemble of (X, Z): the European
// indicator (1 - K Z_tau)^+ 1{rho_K <= T < tau} and the American
// (1 - K Z_tau)^+ 1{rho_K <= tau ^ T}. Paths still alive at the simulation
// horizon H are completed with the probability (1 - K Z_H)^+ that Z never
// returns to 1/K, so rho_K over the whole half-line is not needed.
struct ExchangeSamples {
    std::vector<double> european;
    std::vector<double> american;
    std::vector<double> defaulted;  // 1{tau <= T}
    std::size_t alive_at_horizon = 0;
    std::size_t inclusion_violations = 0;
};

ExchangeSamples exchange_samples(const TwoAssetEnsemble& q, double K, double T);

struct PremiumReport {
    Estimate premium;      // American minus European, from the last-passage indicators
    Estimate default_mass; // Q(tau_X <= T)
    Estimate european;
    Estimate american;
    std::size_t inclusion_violations = 0;  // paths with rho_K > tau of Z at 0
    bool consistent = false;
};

// Requires the ensemble to carry Z = Y/X with the level 1/K monitored and Y
// to be a true martingale under P.
PremiumReport premium_identity_check(const ModelSpec& model, const TwoAssetEnsemble& q, double K,
                                     double T);

}  // namespace bubblelab
