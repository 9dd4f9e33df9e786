#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bubblelab/path_ensemble.hpp"

namespace bubblelab {

using ScalarFn = std::function<double(double)>;

enum class ModelKind {
    InverseBes3,
    NaturalScaleDiffusion,
    ExponentialLM,
    ScaledTransientDiffusion,
    TimeChangedMartingale,
    TwoAssetCorrelated,
};

std::string to_string(ModelKind k);

// sigma(x) = scale * x^exponent. Carried alongside the function handle so the
// engine can pick an exact scheme.
struct PowerLaw {
    double scale = 1.0;
    double exponent = 1.0;
};

class ScaleFunction;

// Declarative description of a strictly positive local martingale under P.
// Function handles must be pure; a ModelSpec is shared read-only between workers.
struct ModelSpec {
    ModelKind kind = ModelKind::NaturalScaleDiffusion;
    std::string name;
    double x0 = 1.0;

    // NaturalScaleDiffusion / InverseBes3 / first asset of TwoAssetCorrelated: dX = sigma(X) dW.
    ScalarFn sigma;
    std::optional<PowerLaw> sigma_power;

    // ExponentialLM: dX = X b(Y) dW, dY = mu(Y) dt + sigma_y(Y) dW.
    ScalarFn b;
    ScalarFn mu;
    ScalarFn sigma_y;
    double factor0 = 0.0;

    // ScaledTransientDiffusion: dX~ = drift_b(X~) dt + diff_sigma(X~) dW; the
    // local martingale is -s(X~) for the normalised scale function s.
    ScalarFn drift_b;
    ScalarFn diff_sigma;

    // TimeChangedMartingale: the driving martingale Y is geometric Brownian
    // motion with this volatility.
    double tc_vol = 1.0;

    // TwoAssetCorrelated: dY = gamma(Y) dB, d<B, W> = rho dt.
    ScalarFn gamma;
    std::optional<PowerLaw> gamma_power;
    double rho = 0.0;
    double y0 = 1.0;
};

ModelSpec inverse_bes3(double x0 = 1.0);
ModelSpec cev(double alpha, double x0 = 1.0, double scale = 1.0);
ModelSpec natural_scale(ScalarFn sigma, double x0 = 1.0, std::string name = "natural_scale");
ModelSpec exp_lm(ScalarFn b, ScalarFn mu, ScalarFn sigma_y, double factor0, double x0 = 1.0);
// b(y) = y, mu = 0, sigma = 1, Y_0 = 1.
ModelSpec exp_lm();
ModelSpec scaled_transient(ScalarFn drift_b, ScalarFn diff_sigma);
ModelSpec time_changed(double vol);
ModelSpec two_asset(ScalarFn sigma, ScalarFn gamma, double rho, double x0 = 1.0,
                    double y0 = 1.0, std::string name = "two_asset");
// sigma(x) = x^alpha_x, gamma(y) = y^alpha_y. alpha_y = 0 with gamma_scale 0 gives Y == y0.
ModelSpec two_asset(double alpha_x, double alpha_y, double rho, double gamma_scale = 1.0);

// Throws ConfigError / InputError when invariants fail.
void validate(const ModelSpec& model);

// Bessel dimension 2 + 1/(alpha - 1) when it is an integer >= 3, else 0.
int integer_bessel_dimension(const PowerLaw& p);

// Q-dynamics of the dual: d(1/X) = sigma_bar(1/X) dW^Q, and for ExponentialLM
// the Q-drift mu + sigma b of the factor.
struct DualDynamics {
    ScalarFn sigma_bar;
    ScalarFn q_drift_y;
    std::shared_ptr<const ScaleFunction> scale;
};

DualDynamics dual_dynamics(const ModelSpec& model);

// sigma_bar(y) = -y^2 sigma(1/y).
ScalarFn dual_sigma(ScalarFn sigma);

struct StrictnessReport {
    bool positive = false;
    bool strict = false;
    double integral_lower = kInf;  // int_0^1 x / sigma^2(x) dx, +inf when divergent
    double integral_upper = kInf;  // int_1^inf x / sigma^2(x) dx
    double exponent_origin = 0.0;  // fitted power of x / sigma^2(x) near 0
    double exponent_infinity = 0.0;
};

StrictnessReport classify_strictness(const ModelSpec& model, double quad_tol = 1e-10);

// Normalised scale function of dX = b dt + sigma dW: s(1) = -1, s(inf) = 0,
// tabulated on a log grid and evaluated by monotone interpolation.
class ScaleFunction {
public:
    ScaleFunction(ScalarFn drift_b, ScalarFn diff_sigma, double x_lo = 1e-6, double x_hi = 1e6,
                  std::size_t points = 1201);

    double operator()(double x) const;
    double derivative(double x) const;
    // x with s(x) = s; s must lie in (s(x_lo), s(x_hi)).
    double inverse(double s) const;
    // Diffusion coefficient of M = -s(X~) in its own natural scale.
    double natural_sigma(double m) const;

    double x_lo() const noexcept { return xs_.front(); }
    double x_hi() const noexcept { return xs_.back(); }

private:
    double interp_log(const std::vector<double>& ys, double x) const;

    ScalarFn drift_b_;
    ScalarFn diff_sigma_;
    std::vector<double> xs_;
    std::vector<double> log_xs_;
    std::vector<double> s_;
    std::vector<double> ds_;
};

// Natural-scale form of a ScaledTransientDiffusion: M = -s(X~) with
// dM = s'(X~) sigma(X~) dW.
ModelSpec to_natural_scale(const ModelSpec& scaled);

// X_t = (1 + Y_{t/(1-t)}) / 2 for t < 1 and (1 + Y_H) / 2 for t >= 1, where
// Y_H is the value at the simulation horizon. Default output grid is the image
// of the input grid plus t = 1; explicit `times` may be given instead.
PathEnsemble time_change_strictify(const PathEnsemble& y_paths,
                                   const std::vector<double>& times = {});

}  // namespace bubblelab
