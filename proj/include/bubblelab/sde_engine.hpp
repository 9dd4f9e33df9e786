#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "bubblelab/model.hpp"
#include "bubblelab/path_ensemble.hpp"

namespace bubblelab {

// Paths of X under P. Exact schemes: three-dimensional Brownian motion for
// InverseBes3, Bessel radial steps for sigma = c x^alpha with integer Bessel
// dimension, lognormal steps for alpha = 1. Everything else uses
// full-truncation Euler with a positivity floor.
PathEnsemble simulate_p(const ModelSpec& model, const SimParams& params);

// Paths of X = 1/V under Q, where V is the dual martingale absorbed at 0.
// Values are +inf from the explosion time on and clocks[i].tau_x holds the
// first grid time with V = 0.
PathEnsemble simulate_q(const ModelSpec& model, const SimParams& params);

// Under P: first = X, second = Y. Under Q: first = X (stored as 1/V with the
// explosion convention), second = Z = Y/X, which is 0 from tau_x on unless Y
// had blown up (past 1e10) by then, in which case Z keeps its last value.
struct TwoAssetEnsemble {
    Measure measure = Measure::P;
    PathEnsemble first;
    PathEnsemble second;
};

// One simulation step of a two-asset path: the pair before and after the step
// (X, Y under P; X, Z under Q) and the standard normal drivers of W and B, or
// NaN when the scheme does not step with a single normal per driver.
struct StepView {
    std::size_t path;
    std::size_t step;
    double first_prev;
    double second_prev;
    double first;
    double second;
    double z_first;
    double z_second;
};

// Called after every step. Within a worker the paths are visited one after
// another, so per-path state indexed by `path` needs no locking. Under Q the
// calls may end early for a path that has been absorbed.
using StepObserver = std::function<void(const StepView&)>;

// `second_levels` are monitored on Y (under P) or on Z (under Q).
TwoAssetEnsemble simulate_two_asset(const ModelSpec& model, Measure measure,
                                    const SimParams& params,
                                    const EventLevels& second_levels = {},
                                    const StepObserver& observer = {});

// Optional projection of X = 1/|B| (B three-dimensional Brownian motion from
// (1, 0, 0)) onto the filtration that sees B^1, B^2 continuously and B^3 only
// at multiples of 1/n. The first ensemble holds the projection, the second
// holds 1/|B_t| on the same driver paths.
struct ProjectionEnsemble {
    PathEnsemble projected;
    PathEnsemble full;
};

ProjectionEnsemble optional_projection_bes3(int n, const std::vector<double>& t_grid,
                                            std::size_t n_paths, std::uint64_t seed,
                                            double dt = 1e-3, std::size_t workers = 1);

// Projection kernel u(x, y, a, s) = E[(x^2 + y^2 + (a + sqrt(s) G)^2)^(-1/2)],
// G standard normal; s = 0 gives the point value.
double projection_kernel(double x, double y, double a, double s);

}  // namespace bubblelab
