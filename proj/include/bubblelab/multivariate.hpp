#pragma once

#include <cstddef>
#include <vector>

#include "bubblelab/model.hpp"
#include "bubblelab/path_ensemble.hpp"
#include "bubblelab/stats.hpp"

namespace bubblelab {

// Integrands of M = int a_X dX + a_Y dY for d<X> = f dt, d<Y> = g dt,
// d<X, Y> = h dt. Throws SingularityError when f g - h^2 < 1e-14.
struct JointIntegrands {
    double a_x = 0.0;
    double a_y = 0.0;
};

JointIntegrands joint_integrands(double x, double y, double f, double g, double h);

// Paths of (X, Y) under P stopped at tau_n = inf{t : E(M)_t > n} ^ n, with the
// weights E(M)_{t ^ tau_n} = exp(M - <M> / 2). <M> accumulates the bracket
// (a_X^2 f + 2 a_X a_Y h + a_Y^2 g) dt evaluated at the left end of each step.
struct JointEnsemble {
    double cap = 0.0;
    double x0 = 1.0;
    double y0 = 1.0;
    std::vector<double> grid;
    std::size_t n_paths = 0;
    std::vector<double> weight;  // n_paths x grid
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> tau;  // +inf when neither the cap nor the time n was reached
    SimDiagnostics diagnostics;

    std::size_t at(std::size_t path, std::size_t idx) const noexcept {
        return path * grid.size() + idx;
    }
    std::size_t index_of(double t) const;
};

JointEnsemble simulate_joint_exponential(const ModelSpec& model, const SimParams& params,
                                         double cap);

struct JointCheck {
    double t = 0.0;
    Estimate normalization;  // E[E(M)_{t ^ tau_n}], target 1
    Estimate inv_x;          // E[E(M)_{t ^ tau_n} / X_{t ^ tau_n}], target 1 / X_0
    Estimate inv_y;
    bool normalized = false;
    bool constant = false;
};

std::vector<JointCheck> joint_checks(const JointEnsemble& e, const std::vector<double>& times,
                                     double k = 3.0);

// Kelvin inversion Y = X / |X|^2 of a d-dimensional Brownian motion X started
// at `start`, stopped at tau_n = inf{t : |X_t| <= 1/n}, with the weights
// |X_{t ^ tau_n}|^(2 - d) / |X_0|^(2 - d). The realized covariation of Y is
// accumulated over [0, window ^ tau_n].
struct KelvinEnsemble {
    int dim = 3;
    double cap = 0.0;
    double window = 0.0;
    std::vector<double> start;
    std::vector<double> grid;
    std::size_t n_paths = 0;
    std::vector<double> y;       // n_paths x grid x dim
    std::vector<double> weight;  // n_paths x grid
    std::vector<double> tau;
    std::vector<double> covariation;  // n_paths x dim x dim

    double component(std::size_t path, std::size_t idx, int i) const noexcept {
        return y[(path * grid.size() + idx) * static_cast<std::size_t>(dim) +
                 static_cast<std::size_t>(i)];
    }
    std::size_t index_of(double t) const;
};

// Default start (1, 0, ..., 0). Throws UnsupportedError for d < 3.
KelvinEnsemble kelvin_inversion(int dim, double cap, const SimParams& params, double window = 0.1,
                                std::vector<double> start = {});

struct KelvinCheck {
    double t = 0.0;
    std::vector<Estimate> components;  // E[w Y^i_{t ^ tau_n}], target Y^i_0
    bool constant = false;
};

std::vector<KelvinCheck> kelvin_checks(const KelvinEnsemble& e, const std::vector<double>& times,
                                       double k = 3.0);

// <Y^i, Y^j> = <Y^1> 1{i = j}: diagonal differences and off-diagonal entries
// of the realized covariation, each tested against 0.
struct ConformalCheck {
    std::vector<Estimate> diagonal;
    std::vector<Estimate> diagonal_gaps;  // <Y^i> - <Y^1>, i >= 2
    std::vector<Estimate> off_diagonal;   // i < j, row-major
    bool conformal = false;
};

ConformalCheck conformal_check(const KelvinEnsemble& e, double k = 3.0);

}  // namespace bubblelab
