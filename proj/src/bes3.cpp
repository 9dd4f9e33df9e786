#include "bubblelab/bes3.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bubblelab/errors.hpp"
#include "bubblelab/normal.hpp"

namespace bubblelab {

namespace {

void check_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        std::ostringstream os;
        os << what << " must be positive and finite, got " << v;
        throw InputError(os.str());
    }
}

}  // namespace

double bes3_call_closed(double x, double K, double T) {
    check_positive(x, "x");
    check_positive(K, "K");
    check_positive(T, "T");
    const double st = std::sqrt(T);
    const double u = 1.0 / (x * st);
    const double a = (x - K) / (x * K * st);
    const double b = (x + K) / (x * K * st);
    const double c = (K - x) / (x * K * st);
    const double first = x * ((norm_cdf(a) - norm_cdf(-u)) + (norm_cdf(u) - norm_cdf(b)));
    const double second = K * ((norm_cdf(b) - norm_cdf(c)) + x * st * (norm_pdf(b) - norm_pdf(a)));
    return std::max(0.0, first - second);
}

double bes3_density(double z, double t) {
    if (!(z > 0.0) || !(t > 0.0)) return 0.0;
    const double w = 1.0 / z;
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * t);
    const double d1 = (w - 1.0) * (w - 1.0) / (2.0 * t);
    const double d2 = (w + 1.0) * (w + 1.0) / (2.0 * t);
    return w * w * w * norm * (std::exp(-d1) - std::exp(-d2));
}

double bes3_mean(double x, double t) {
    check_positive(x, "x");
    if (t <= 0.0) return x;
    return x * std::erf(1.0 / (x * std::sqrt(2.0 * t)));
}

double bes3_mean_limit(double t) {
    check_positive(t, "t");
    return std::sqrt(2.0 / (std::numbers::pi * t));
}

double exchange_closed_bes3(double x, double K, double T, double quad_tol) {
    check_positive(x, "x");
    check_positive(T, "T");
    if (K < 0.0) throw InputError("exchange strike must be nonnegative");
    if (K == 0.0) return bes3_mean(x, T);
    // Integrate over w = 1/Y_T, a BES(3) value with density w (phi_T(w-1) - phi_T(w+1)).
    const double st = std::sqrt(T);
    auto f = [&](double w) {
        if (w <= 0.0) return 0.0;
        const double dens = w * (norm_pdf((w - 1.0) / st) - norm_pdf((w + 1.0) / st)) / st;
        return dens * bes3_call_closed(x, K / w, T);
    };
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double hi = 1.0 + 40.0 * st;
    double err = 0.0;
    const double v = GK::integrate(f, 0.0, hi, 20, quad_tol, &err);
    if (!std::isfinite(v) || err > std::max(1e3 * quad_tol, 1e-8) * std::max(1.0, std::abs(v))) {
        std::ostringstream os;
        os << "exchange quadrature failed on [0, " << hi << "] (estimate " << v << ", error " << err
           << ")";
        throw NumericError(os.str());
    }
    return v;
}

}  // namespace bubblelab
