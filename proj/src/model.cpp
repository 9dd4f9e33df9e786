#include "bubblelab/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "bubblelab/errors.hpp"

namespace bubblelab {

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::InverseBes3: return "InverseBes3";
        case ModelKind::NaturalScaleDiffusion: return "NaturalScaleDiffusion";
        case ModelKind::ExponentialLM: return "ExponentialLM";
        case ModelKind::ScaledTransientDiffusion: return "ScaledTransientDiffusion";
        case ModelKind::TimeChangedMartingale: return "TimeChangedMartingale";
        case ModelKind::TwoAssetCorrelated: return "TwoAssetCorrelated";
    }
    return "unknown";
}

namespace {

ScalarFn power_fn(PowerLaw p) {
    if (p.exponent == 2.0) return [c = p.scale](double x) { return c * x * x; };
    if (p.exponent == 1.0) return [c = p.scale](double x) { return c * x; };
    if (p.exponent == 0.0) return [c = p.scale](double) { return c; };
    return [p](double x) { return p.scale * std::pow(x, p.exponent); };
}

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

}  // namespace

ModelSpec inverse_bes3(double x0) {
    ModelSpec m;
    m.kind = ModelKind::InverseBes3;
    m.name = "inverse_bes3";
    m.x0 = x0;
    m.sigma_power = PowerLaw{1.0, 2.0};
    m.sigma = power_fn(*m.sigma_power);
    return m;
}

ModelSpec cev(double alpha, double x0, double scale) {
    ModelSpec m;
    m.kind = ModelKind::NaturalScaleDiffusion;
    m.name = "cev(" + fmt_double(alpha) + ")";
    m.x0 = x0;
    m.sigma_power = PowerLaw{scale, alpha};
    m.sigma = power_fn(*m.sigma_power);
    return m;
}

ModelSpec natural_scale(ScalarFn sigma, double x0, std::string name) {
    ModelSpec m;
    m.kind = ModelKind::NaturalScaleDiffusion;
    m.name = std::move(name);
    m.x0 = x0;
    m.sigma = std::move(sigma);
    return m;
}

ModelSpec exp_lm(ScalarFn b, ScalarFn mu, ScalarFn sigma_y, double factor0, double x0) {
    ModelSpec m;
    m.kind = ModelKind::ExponentialLM;
    m.name = "exp_lm";
    m.x0 = x0;
    m.b = std::move(b);
    m.mu = std::move(mu);
    m.sigma_y = std::move(sigma_y);
    m.factor0 = factor0;
    return m;
}

ModelSpec exp_lm() {
    return exp_lm([](double y) { return y; }, [](double) { return 0.0; },
                  [](double) { return 1.0; }, 1.0, 1.0);
}

ModelSpec scaled_transient(ScalarFn drift_b, ScalarFn diff_sigma) {
    ModelSpec m;
    m.kind = ModelKind::ScaledTransientDiffusion;
    m.name = "scaled_transient";
    m.x0 = 1.0;
    m.drift_b = std::move(drift_b);
    m.diff_sigma = std::move(diff_sigma);
    return m;
}

ModelSpec time_changed(double vol) {
    ModelSpec m;
    m.kind = ModelKind::TimeChangedMartingale;
    m.name = "time_changed(" + fmt_double(vol) + ")";
    m.x0 = 1.0;
    m.tc_vol = vol;
    return m;
}

ModelSpec two_asset(ScalarFn sigma, ScalarFn gamma, double rho, double x0, double y0,
                    std::string name) {
    ModelSpec m;
    m.kind = ModelKind::TwoAssetCorrelated;
    m.name = std::move(name);
    m.x0 = x0;
    m.y0 = y0;
    m.sigma = std::move(sigma);
    m.gamma = std::move(gamma);
    m.rho = rho;
    return m;
}

ModelSpec two_asset(double alpha_x, double alpha_y, double rho, double gamma_scale) {
    ModelSpec m;
    m.kind = ModelKind::TwoAssetCorrelated;
    m.name = "two_asset(" + fmt_double(alpha_x) + "," + fmt_double(alpha_y) + "," +
             fmt_double(rho) + ")";
    m.sigma_power = PowerLaw{1.0, alpha_x};
    m.sigma = power_fn(*m.sigma_power);
    m.gamma_power = PowerLaw{gamma_scale, alpha_y};
    m.gamma = power_fn(*m.gamma_power);
    m.rho = rho;
    return m;
}

void validate(const ModelSpec& m) {
    if (!(m.x0 > 0.0) || !std::isfinite(m.x0))
        throw ConfigError("model " + m.name + ": x0 must be positive, got " + fmt_double(m.x0));
    switch (m.kind) {
        case ModelKind::InverseBes3:
        case ModelKind::NaturalScaleDiffusion:
            if (!m.sigma) throw ConfigError("model " + m.name + ": sigma is not set");
            break;
        case ModelKind::ExponentialLM:
            if (!m.b || !m.mu || !m.sigma_y)
                throw ConfigError("model " + m.name + ": b, mu and sigma_y must all be set");
            break;
        case ModelKind::ScaledTransientDiffusion:
            if (!m.drift_b || !m.diff_sigma)
                throw ConfigError("model " + m.name + ": drift_b and diff_sigma must be set");
            break;
        case ModelKind::TimeChangedMartingale:
            if (!(m.tc_vol >= 0.0)) throw ConfigError("model " + m.name + ": negative volatility");
            break;
        case ModelKind::TwoAssetCorrelated:
            if (!m.sigma || !m.gamma)
                throw ConfigError("model " + m.name + ": sigma and gamma must be set");
            if (!(m.rho > -1.0 && m.rho < 1.0))
                throw ConfigError("model " + m.name + ": correlation must lie in (-1, 1), got " +
                                  fmt_double(m.rho));
            if (!(m.y0 > 0.0)) throw ConfigError("model " + m.name + ": y0 must be positive");
            break;
    }
}

int integer_bessel_dimension(const PowerLaw& p) {
    if (!(p.exponent > 1.0) || !(p.scale > 0.0)) return 0;
    const double delta = 2.0 + 1.0 / (p.exponent - 1.0);
    const double r = std::round(delta);
    if (std::abs(delta - r) > 1e-12 || r < 3.0 || r > 64.0) return 0;
    return static_cast<int>(r);
}

ScalarFn dual_sigma(ScalarFn sigma) {
    return [sigma = std::move(sigma)](double y) {
        if (y <= 0.0) return 0.0;
        return -y * y * sigma(1.0 / y);
    };
}

DualDynamics dual_dynamics(const ModelSpec& m) {
    DualDynamics d;
    switch (m.kind) {
        case ModelKind::InverseBes3:
            d.sigma_bar = [](double y) { return y > 0.0 ? -1.0 : 0.0; };
            break;
        case ModelKind::NaturalScaleDiffusion:
        case ModelKind::TwoAssetCorrelated:
            if (m.sigma_power) {
                const PowerLaw p = *m.sigma_power;
                d.sigma_bar = [p](double y) {
                    return y > 0.0 ? -p.scale * std::pow(y, 2.0 - p.exponent) : 0.0;
                };
            } else {
                d.sigma_bar = dual_sigma(m.sigma);
            }
            break;
        case ModelKind::ExponentialLM:
            // 1/X has volatility -b(Y)/X; the state dependence on Y is handled by the engine.
            d.sigma_bar = nullptr;
            d.q_drift_y = [mu = m.mu, s = m.sigma_y, b = m.b](double y) {
                return mu(y) + s(y) * b(y);
            };
            break;
        case ModelKind::ScaledTransientDiffusion: {
            auto scale = std::make_shared<const ScaleFunction>(m.drift_b, m.diff_sigma);
            d.sigma_bar = dual_sigma([scale](double x) { return scale->natural_sigma(x); });
            d.scale = std::move(scale);
            break;
        }
        case ModelKind::TimeChangedMartingale:
            throw UnsupportedError("model " + m.name + " has no dual dynamics");
    }
    return d;
}

namespace {

struct TailFit {
    double exponent = 0.0;
    double max_residual = 0.0;
};

// Least-squares slope of log sigma against log x over [10^a, 10^b].
TailFit fit_power(const ScalarFn& sigma, double a, double b, const std::string& name) {
    constexpr int kPoints = 21;
    std::array<double, kPoints> lx{}, ly{};
    for (int i = 0; i < kPoints; ++i) {
        const double e = a + (b - a) * i / (kPoints - 1);
        const double x = std::pow(10.0, e);
        const double s = sigma(x);
        if (!std::isfinite(s) || !(s > 0.0))
            throw InputError("model " + name + ": sigma(" + fmt_double(x) +
                             ") = " + fmt_double(s) + " is not a positive finite number");
        lx[i] = std::log(x);
        ly[i] = std::log(s);
    }
    double mx = 0, my = 0;
    for (int i = 0; i < kPoints; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= kPoints;
    my /= kPoints;
    double sxy = 0, sxx = 0;
    for (int i = 0; i < kPoints; ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    TailFit f;
    f.exponent = sxy / sxx;
    for (int i = 0; i < kPoints; ++i)
        f.max_residual = std::max(f.max_residual, std::abs(ly[i] - my - f.exponent * (lx[i] - mx)));
    return f;
}

constexpr double kFitResidual = 1e-3;
constexpr double kExponentDrift = 1e-3;
constexpr double kBoundary = 1e-6;

// Exponent of sigma over two adjacent outer decades; the two fits must agree
// and be clean straight lines, otherwise no verdict is possible.
double tail_exponent(const ScalarFn& sigma, double a_inner, double a_outer, const std::string& name,
                     const char* where) {
    const double mid = 0.5 * (a_inner + a_outer);
    const TailFit inner = fit_power(sigma, std::min(a_inner, mid), std::max(a_inner, mid), name);
    const TailFit outer = fit_power(sigma, std::min(mid, a_outer), std::max(mid, a_outer), name);
    if (inner.max_residual > kFitResidual || outer.max_residual > kFitResidual ||
        std::abs(inner.exponent - outer.exponent) > kExponentDrift) {
        throw IndeterminateError("model " + name + ": sigma is not a power law near " + where +
                                 " (fitted exponents " + fmt_double(inner.exponent) + ", " +
                                 fmt_double(outer.exponent) + ")");
    }
    return outer.exponent;
}

}  // namespace

StrictnessReport classify_strictness(const ModelSpec& m, double quad_tol) {
    if (m.kind != ModelKind::NaturalScaleDiffusion && m.kind != ModelKind::InverseBes3)
        throw UnsupportedError("classify_strictness needs a diffusion in natural scale, got " +
                               to_string(m.kind));
    if (!m.sigma) throw InputError("model " + m.name + ": sigma is not set");

    StrictnessReport r;
    // x / sigma^2(x) ~ x^(1 - 2 alpha): integrable at 0 iff alpha < 1, at infinity iff alpha > 1.
    const double alpha0 = tail_exponent(m.sigma, -4.0, -8.0, m.name, "0");
    const double alpha_inf = tail_exponent(m.sigma, 4.0, 8.0, m.name, "infinity");
    r.exponent_origin = 1.0 - 2.0 * alpha0;
    r.exponent_infinity = 1.0 - 2.0 * alpha_inf;
    r.positive = r.exponent_origin <= -1.0 + kBoundary;
    r.strict = r.exponent_infinity < -1.0 - kBoundary;

    auto integrand = [&](double x) {
        const double s = m.sigma(x);
        return x / (s * s);
    };
    if (!r.positive) {
        boost::math::quadrature::tanh_sinh<double> ts;
        double err = 0.0;
        r.integral_lower = ts.integrate(integrand, 0.0, 1.0, quad_tol, &err);
        if (!std::isfinite(r.integral_lower))
            throw NumericError("model " + m.name + ": quadrature of x/sigma^2 failed on (0, 1]");
    }
    if (r.strict) {
        boost::math::quadrature::exp_sinh<double> es;
        double err = 0.0;
        r.integral_upper = es.integrate(
            [&](double u) { return integrand(1.0 + u); }, quad_tol, &err);
        if (!std::isfinite(r.integral_upper))
            throw NumericError("model " + m.name + ": quadrature of x/sigma^2 failed on [1, inf)");
    }
    return r;
}

ScaleFunction::ScaleFunction(ScalarFn drift_b, ScalarFn diff_sigma, double x_lo, double x_hi,
                             std::size_t points)
    : drift_b_(std::move(drift_b)), diff_sigma_(std::move(diff_sigma)) {
    if (!(x_lo > 0.0 && x_lo < 1.0 && x_hi > 1.0) || points < 11)
        throw ConfigError("scale function grid must bracket 1");
    const double l0 = std::log(x_lo), l1 = std::log(x_hi);
    xs_.resize(points);
    log_xs_.resize(points);
    for (std::size_t i = 0; i < points; ++i) {
        log_xs_[i] = l0 + (l1 - l0) * static_cast<double>(i) / static_cast<double>(points - 1);
        xs_[i] = std::exp(log_xs_[i]);
    }
    const auto one = static_cast<std::size_t>(
        std::lower_bound(xs_.begin(), xs_.end(), 1.0) - xs_.begin());
    log_xs_.insert(log_xs_.begin() + static_cast<std::ptrdiff_t>(one), 0.0);
    xs_.insert(xs_.begin() + static_cast<std::ptrdiff_t>(one), 1.0);
    if (xs_[one + 1] == 1.0) {
        xs_.erase(xs_.begin() + static_cast<std::ptrdiff_t>(one) + 1);
        log_xs_.erase(log_xs_.begin() + static_cast<std::ptrdiff_t>(one) + 1);
    }
    const std::size_t n = xs_.size();

    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    auto inner = [&](double z) {
        const double s = diff_sigma_(z);
        return 2.0 * drift_b_(z) / (s * s);
    };
    auto check = [](double v, double a, double b, const char* what) {
        if (!std::isfinite(v))
            throw NumericError(std::string("scale function: ") + what +
                               " quadrature failed on [" + fmt_double(a) + ", " + fmt_double(b) +
                               "]");
    };

    // I(y) = int_1^y 2 b / sigma^2, then s'(y) = exp(-I(y)).
    std::vector<double> big_i(n, 0.0);
    for (std::size_t i = one + 1; i < n; ++i) {
        const double v = GK::integrate(inner, xs_[i - 1], xs_[i], 5, 1e-12);
        check(v, xs_[i - 1], xs_[i], "drift");
        big_i[i] = big_i[i - 1] + v;
    }
    for (std::size_t i = one; i-- > 0;) {
        const double v = GK::integrate(inner, xs_[i], xs_[i + 1], 5, 1e-12);
        check(v, xs_[i], xs_[i + 1], "drift");
        big_i[i] = big_i[i + 1] - v;
    }
    std::vector<double> raw_ds(n), raw_s(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) raw_ds[i] = std::exp(-big_i[i]);

    // Segment integrals of s' by Gauss-Kronrod on a log-log interpolant of
    // exp(-I) refined with the drift integrand.
    auto seg = [&](std::size_t i) {
        const double a = xs_[i], b = xs_[i + 1];
        auto ds = [&, a](double y) {
            const double v = GK::integrate(inner, a, y, 3, 1e-10);
            return std::exp(-(big_i[i] + v));
        };
        const double v = GK::integrate(ds, a, b, 3, 1e-10);
        check(v, a, b, "scale");
        return v;
    };
    for (std::size_t i = one + 1; i < n; ++i) raw_s[i] = raw_s[i - 1] + seg(i - 1);
    for (std::size_t i = one; i-- > 0;) raw_s[i] = raw_s[i + 1] - seg(i);

    // Tail beyond x_hi from the power-law slope of s' over the last decade.
    const std::size_t back = std::max<std::size_t>(1, (n - 1) / 12);
    const double q = (std::log(raw_ds[n - 1]) - std::log(raw_ds[n - 1 - back])) /
                     (log_xs_[n - 1] - log_xs_[n - 1 - back]);
    if (!(q < -1.0))
        throw NumericError("scale function: s' decays like x^" + fmt_double(q) +
                           " near infinity, the diffusion is not transient to infinity");
    const double tail = -raw_ds[n - 1] * xs_[n - 1] / (q + 1.0);
    const double s_inf = raw_s[n - 1] + tail;

    s_.resize(n);
    ds_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        s_[i] = (raw_s[i] - s_inf) / s_inf;
        ds_[i] = raw_ds[i] / s_inf;
    }
}

double ScaleFunction::interp_log(const std::vector<double>& ys, double x) const {
    // Piecewise linear in (log x, log |y|), extrapolated linearly at both ends.
    const double lx = std::log(x);
    std::size_t i = static_cast<std::size_t>(
        std::upper_bound(log_xs_.begin(), log_xs_.end(), lx) - log_xs_.begin());
    i = std::clamp<std::size_t>(i, 1, log_xs_.size() - 1);
    const double la = std::log(std::abs(ys[i - 1])), lb = std::log(std::abs(ys[i]));
    const double w = (lx - log_xs_[i - 1]) / (log_xs_[i] - log_xs_[i - 1]);
    return std::exp(la + w * (lb - la));
}

double ScaleFunction::operator()(double x) const { return -interp_log(s_, x); }

double ScaleFunction::derivative(double x) const { return interp_log(ds_, x); }

double ScaleFunction::inverse(double s) const {
    if (!(s < 0.0)) throw RangeError("scale function inverse: value must be negative");
    // -s is decreasing in x, so search on the reversed order.
    const double target = std::log(-s);
    std::vector<double>::size_type lo = 0, hi = s_.size() - 1;
    auto ls = [&](std::size_t i) { return std::log(-s_[i]); };
    if (target >= ls(0)) {
        lo = 0;
        hi = 1;
    } else if (target <= ls(hi)) {
        lo = hi - 1;
    } else {
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (ls(mid) > target)
                lo = mid;
            else
                hi = mid;
        }
    }
    const double w = (target - ls(lo)) / (ls(hi) - ls(lo));
    return std::exp(log_xs_[lo] + w * (log_xs_[hi] - log_xs_[lo]));
}

double ScaleFunction::natural_sigma(double m) const {
    if (!(m > 0.0)) return 0.0;
    const double x = inverse(-m);
    return derivative(x) * diff_sigma_(x);
}

ModelSpec to_natural_scale(const ModelSpec& scaled) {
    if (scaled.kind != ModelKind::ScaledTransientDiffusion)
        throw UnsupportedError("to_natural_scale needs a ScaledTransientDiffusion model");
    auto scale = std::make_shared<const ScaleFunction>(scaled.drift_b, scaled.diff_sigma);
    ModelSpec m = natural_scale([scale](double x) { return scale->natural_sigma(x); },
                                -(*scale)(1.0), scaled.name);
    return m;
}

PathEnsemble time_change_strictify(const PathEnsemble& y, const std::vector<double>& times) {
    if (y.grid.empty()) throw RangeError("time_change_strictify: empty input grid");
    const double u_max = y.grid.back();

    std::vector<double> out_times;
    if (times.empty()) {
        for (double u : y.grid) out_times.push_back(u / (1.0 + u));
        if (out_times.back() < 1.0) out_times.push_back(1.0);
    } else {
        out_times = times;
        if (!std::is_sorted(out_times.begin(), out_times.end()) || out_times.front() < 0.0)
            throw ConfigError("time_change_strictify: times must be nonnegative and increasing");
    }

    // For each output time, a pair of input indices and an interpolation weight.
    struct Src {
        std::size_t i = 0;
        std::size_t j = 0;
        double w = 0.0;
    };
    std::vector<Src> src(out_times.size());
    const double eps = 1e-12 * std::max(1.0, u_max);
    for (std::size_t k = 0; k < out_times.size(); ++k) {
        const double t = out_times[k];
        if (t >= 1.0) {
            src[k] = {y.grid.size() - 1, y.grid.size() - 1, 0.0};
            continue;
        }
        const double u = t / (1.0 - t);
        if (u > u_max + eps)
            throw RangeError("time_change_strictify: t = " + fmt_double(t) + " maps to " +
                             fmt_double(u) + ", beyond the simulated horizon " +
                             fmt_double(u_max));
        auto it = std::lower_bound(y.grid.begin(), y.grid.end(), u - eps);
        const auto j = static_cast<std::size_t>(it - y.grid.begin());
        if (j < y.grid.size() && std::abs(y.grid[j] - u) <= eps) {
            src[k] = {j, j, 0.0};
        } else {
            const std::size_t hi = std::min(j, y.grid.size() - 1);
            const std::size_t lo = hi == 0 ? 0 : hi - 1;
            const double w = hi == lo ? 0.0 : (u - y.grid[lo]) / (y.grid[hi] - y.grid[lo]);
            src[k] = {lo, hi, w};
        }
    }

    PathEnsemble x;
    x.measure = y.measure;
    x.dt = 0.0;
    x.steps = 0;
    x.grid = out_times;
    x.n_paths = y.n_paths;
    x.seed = y.seed;
    x.first_path_id = y.first_path_id;
    x.model_name = "time_changed(" + y.model_name + ")";
    x.values.resize(x.n_paths * x.grid.size());
    x.clocks.resize(x.n_paths);
    for (std::size_t p = 0; p < x.n_paths; ++p) {
        for (std::size_t k = 0; k < out_times.size(); ++k) {
            const Src& s = src[k];
            const double yv = (1.0 - s.w) * y.value(p, s.i) + s.w * y.value(p, s.j);
            x.value(p, k) = 0.5 * (1.0 + yv);
        }
    }
    return x;
}

}  // namespace bubblelab
