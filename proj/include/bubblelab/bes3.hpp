#pragma once

namespace bubblelab {

// Closed forms for the inverse of a three-dimensional Bessel process X with
// X_0 = x, dX = X^2 dW.

// E(X_T - K)^+. Equals x int_0^{1/K} (1 - K v) [phi_T(v - 1/x) - phi_T(v + 1/x)] dv.
double bes3_call_closed(double x, double K, double T);

// Density of X_t started from 1.
double bes3_density(double z, double t);

// m(x) = E(X_T | X_S = x) with T - S = t: x (1 - 2 Phi(-1 / (x sqrt t))).
double bes3_mean(double x, double t);

// lim_{x -> inf} m(x) = sqrt(2 / (pi t)).
double bes3_mean_limit(double t);

// E(X_T - K Y_T)^+ for independent inverse BES(3) processes with X_0 = x,
// Y_0 = 1, by quadrature of the call price against the law of Y_T.
double exchange_closed_bes3(double x, double K, double T, double quad_tol = 1e-10);

}  // namespace bubblelab
