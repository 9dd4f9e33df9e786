#include "bubblelab/sde_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bubblelab/errors.hpp"
#include "bubblelab/lastpassage.hpp"
#include "bubblelab/rng.hpp"
#include "parallel.hpp"

namespace bubblelab {

namespace {

// Above this the pre-absorption ratio Y = Z/V is treated as an explosion of Y.
constexpr double kExplosionCap = 1e10;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct State {
    double x = 0.0;  // X under P, V = 1/X under Q
    double y = 0.0;  // factor or second asset
    double b[3] = {0.0, 0.0, 0.0};
    bool dead = false;
};

class Scheme {
public:
    virtual ~Scheme() = default;
    virtual void reset(State& s) const = 0;
    virtual void advance(PathRng& rng, State& s, SimDiagnostics& diag) const = 0;
    // Reported value of X; +inf once dead.
    virtual double observe(const State& s) const { return s.dead ? kInf : s.x; }
};

double chi_square(PathRng& rng, int k) {
    double v = 0.0;
    for (int i = 0; i + 1 < k; i += 2) v += 2.0 * rng.exponential();
    if (k % 2 == 1) {
        const double z = rng.normal();
        v += z * z;
    }
    return v;
}

// X = 1/(c |B|), B three-dimensional Brownian motion.
class Bes3Cartesian final : public Scheme {
public:
    Bes3Cartesian(double x0, double c, double dt) : x0_(x0), c_(c), sq_(std::sqrt(dt)) {}
    void reset(State& s) const override {
        s = State{};
        s.b[0] = 1.0 / (c_ * x0_);
        s.x = x0_;
    }
    void advance(PathRng& rng, State& s, SimDiagnostics&) const override {
        for (double& bi : s.b) bi += sq_ * rng.normal();
        s.x = 1.0 / (c_ * std::sqrt(s.b[0] * s.b[0] + s.b[1] * s.b[1] + s.b[2] * s.b[2]));
    }

private:
    double x0_, c_, sq_;
};

// dX = c X^alpha dW through R = X^(1 - alpha) / (c (alpha - 1)), a Bessel
// process of integer dimension delta.
class BesselRadial final : public Scheme {
public:
    BesselRadial(double x0, PowerLaw p, int delta, double dt)
        : x0_(x0), k_(p.scale * (p.exponent - 1.0)), inv_(-1.0 / (p.exponent - 1.0)),
          e_(1.0 - p.exponent), delta_(delta), dt_(dt), sq_(std::sqrt(dt)) {}
    void reset(State& s) const override {
        s = State{};
        s.x = x0_;
        s.y = std::pow(x0_, e_) / k_;
    }
    void advance(PathRng& rng, State& s, SimDiagnostics&) const override {
        const double a = s.y + sq_ * rng.normal();
        s.y = std::sqrt(a * a + dt_ * chi_square(rng, delta_ - 1));
        s.x = std::pow(k_ * s.y, inv_);
    }

private:
    double x0_, k_, inv_, e_;
    int delta_;
    double dt_, sq_;
};

// dX = c X dW exactly, or its reciprocal dV = -c V dW.
class Lognormal final : public Scheme {
public:
    Lognormal(double start, double c, double dt, bool dual)
        : start_(start), c_(c), dt_(dt), sq_(std::sqrt(dt)), dual_(dual) {}
    void reset(State& s) const override {
        s = State{};
        s.x = start_;
    }
    void advance(PathRng& rng, State& s, SimDiagnostics&) const override {
        const double z = dual_ ? -rng.normal() : rng.normal();
        s.x *= std::exp(c_ * sq_ * z - 0.5 * c_ * c_ * dt_);
    }
    double observe(const State& s) const override { return dual_ ? 1.0 / s.x : s.x; }

private:
    double start_, c_, dt_, sq_;
    bool dual_;
};

// Steps of dX = sigma(X) (dW + q dt) driven by a given normal, for the
// correlated two-asset schemes. For sigma = c x^alpha with alpha > 1,
// R = X^(1 - alpha) / (c (alpha - 1)) solves dR = (delta - 1) / (2R) dt - dW - q dt
// and takes a drift-implicit step, which keeps R positive. Otherwise log X
// takes an Euler step.
class CorrelatedStep {
public:
    CorrelatedStep(ScalarFn sigma, std::optional<PowerLaw> p, double dt)
        : sigma_(std::move(sigma)), dt_(dt), sq_(std::sqrt(dt)) {
        if (p && p->exponent > 1.0 && p->scale > 0.0) {
            radial_ = true;
            k_ = p->scale * (p->exponent - 1.0);
            inv_ = -1.0 / (p->exponent - 1.0);
            e_ = 1.0 - p->exponent;
            disc_ = 2.0 * (p->exponent / (p->exponent - 1.0)) * dt;
        }
    }

    double operator()(double x, double z, double q) const {
        if (radial_) {
            const double a = std::pow(x, e_) / k_ - sq_ * z - q * dt_;
            const double r = 0.5 * (a + std::sqrt(a * a + disc_));
            return std::pow(k_ * r, inv_);
        }
        const double v = sigma_(x) / x;
        return x * std::exp(v * (sq_ * z + q * dt_) - 0.5 * v * v * dt_);
    }

private:
    ScalarFn sigma_;
    double dt_, sq_;
    bool radial_ = false;
    double k_ = 0.0, inv_ = 0.0, e_ = 0.0, disc_ = 0.0;
};

// Full-truncation Euler; proposals at or below zero are reflected to the floor.
class EulerP final : public Scheme {
public:
    EulerP(double x0, ScalarFn sigma, double floor, double dt)
        : x0_(x0), sigma_(std::move(sigma)), floor_(floor), sq_(std::sqrt(dt)) {}
    void reset(State& s) const override {
        s = State{};
        s.x = x0_;
    }
    void advance(PathRng& rng, State& s, SimDiagnostics& diag) const override {
        const double vol = sigma_(std::max(s.x, floor_));
        s.x += vol * sq_ * rng.normal();
        if (!(s.x > 0.0)) {
            s.x = floor_;
            ++diag.floor_hits;
        }
    }

private:
    double x0_;
    ScalarFn sigma_;
    double floor_, sq_;
};

// Absorption test for a step of dV = sbar(V) dW that stayed positive: the
// probability that a Brownian bridge with the frozen variance s2 touched 0.
bool bridge_hit(PathRng& rng, double v0, double v1, double s2, double dt) {
    if (!(s2 > 0.0)) return false;
    const double e = 2.0 * v0 * v1 / (s2 * dt);
    if (e > 40.0) return false;
    return rng.uniform() < std::exp(-e);
}

// Euler for V = 1/X with absorption at 0. s2_zero is sbar^2(0+), which bounds
// the bridge variance from above for coefficients that vanish at 0.
class EulerDual final : public Scheme {
public:
    EulerDual(double x0, ScalarFn sbar, double s2_zero, bool bridge, double dt)
        : v0_(1.0 / x0), sbar_(std::move(sbar)), s2_zero_(s2_zero), bridge_(bridge), dt_(dt),
          sq_(std::sqrt(dt)) {}
    void reset(State& s) const override {
        s = State{};
        s.x = v0_;
    }
    void advance(PathRng& rng, State& s, SimDiagnostics& diag) const override {
        const double vol = sbar_(s.x);
        const double next = s.x + vol * sq_ * rng.normal();
        if (!(next > 0.0)) {
            s.x = 0.0;
            s.dead = true;
            return;
        }
        if (bridge_) {
            const double v1 = sbar_(next);
            const double s2 = std::min({vol * vol, v1 * v1, s2_zero_});
            if (bridge_hit(rng, s.x, next, s2, dt_)) {
                s.x = 0.0;
                s.dead = true;
                ++diag.bridge_absorptions;
                return;
            }
        }
        s.x = next;
    }
    double observe(const State& s) const override { return s.dead ? kInf : 1.0 / s.x; }

private:
    double v0_;
    ScalarFn sbar_;
    double s2_zero_;
    bool bridge_;
    double dt_, sq_;
};

// V = (c^2 / 4) U with U a squared Bessel process of dimension 0, sampled from
// its exact Poisson-gamma transition. This is the dual of sigma = c x^1.5.
class Besq0Dual final : public Scheme {
public:
    Besq0Dual(double x0, double c, double dt) : v0_(1.0 / x0), k_(0.25 * c * c), dt_(dt) {}
    void reset(State& s) const override {
        s = State{};
        s.x = v0_;
    }
    void advance(PathRng& rng, State& s, SimDiagnostics&) const override {
        const double u = s.x / k_;
        const double lambda = u / (2.0 * dt_);
        if (lambda > kEulerMean) {
            // Far from 0 the transition is Gaussian to high accuracy: dU = 2 sqrt(U) dW.
            s.x = k_ * (u + 2.0 * std::sqrt(u * dt_) * rng.normal());
            return;
        }
        PathUrbg g(rng);
        std::poisson_distribution<long> pois(lambda);
        const long n = pois(g);
        if (n == 0) {
            s.x = 0.0;
            s.dead = true;
            return;
        }
        std::gamma_distribution<double> gam(static_cast<double>(n), 1.0);
        s.x = k_ * 2.0 * dt_ * gam(g);
    }
    double observe(const State& s) const override { return s.dead ? kInf : 1.0 / s.x; }

private:
    static constexpr double kEulerMean = 64.0;
    double v0_, k_, dt_;
};

// dX = X b(Y) dW, dY = mu dt + sigma dW under P; under Q the factor drift is
// mu + sigma b and 1/X carries the volatility -b(Y). Log-Euler in X.
class ExpLM final : public Scheme {
public:
    ExpLM(const ModelSpec& m, bool dual, double dt)
        : x0_(m.x0), y0_(m.factor0), b_(m.b), mu_(m.mu), sy_(m.sigma_y), dual_(dual), dt_(dt),
          sq_(std::sqrt(dt)) {}
    void reset(State& s) const override {
        s = State{};
        s.x = dual_ ? 1.0 / x0_ : x0_;
        s.y = y0_;
    }
    void advance(PathRng& rng, State& s, SimDiagnostics&) const override {
        const double z = rng.normal();
        const double b = b_(s.y);
        const double sy = sy_(s.y);
        const double drift = dual_ ? mu_(s.y) + sy * b : mu_(s.y);
        s.x *= std::exp((dual_ ? -b : b) * sq_ * z - 0.5 * b * b * dt_);
        s.y += drift * dt_ + sy * sq_ * z;
        if (dual_ && (!(s.x > 0.0) || !std::isfinite(s.y))) {
            s.x = 0.0;
            s.dead = true;
        }
    }
    double observe(const State& s) const override {
        if (!dual_) return s.x;
        return s.dead ? kInf : 1.0 / s.x;
    }

private:
    double x0_, y0_;
    ScalarFn b_, mu_, sy_;
    bool dual_;
    double dt_, sq_;
};

double sbar_squared_at_zero(const ModelSpec& m, const DualDynamics& d) {
    if (m.sigma_power) {
        const double e = 2.0 - m.sigma_power->exponent;
        if (e > 0.0) return 0.0;
        if (e == 0.0) return m.sigma_power->scale * m.sigma_power->scale;
        return kInf;
    }
    const double v = d.sigma_bar(1e-12);
    return std::isfinite(v) ? v * v : kInf;
}

std::unique_ptr<Scheme> p_scheme(const ModelSpec& m, const SimParams& prm) {
    switch (m.kind) {
        case ModelKind::InverseBes3:
            return std::make_unique<Bes3Cartesian>(m.x0, 1.0, prm.dt);
        case ModelKind::NaturalScaleDiffusion:
        case ModelKind::TwoAssetCorrelated:
            if (prm.exact_schemes && m.sigma_power) {
                const PowerLaw p = *m.sigma_power;
                if (p.exponent == 1.0) return std::make_unique<Lognormal>(m.x0, p.scale, prm.dt, false);
                const int delta = integer_bessel_dimension(p);
                if (delta == 3) return std::make_unique<Bes3Cartesian>(m.x0, p.scale, prm.dt);
                if (delta > 3) return std::make_unique<BesselRadial>(m.x0, p, delta, prm.dt);
            }
            return std::make_unique<EulerP>(m.x0, m.sigma, prm.positivity_floor, prm.dt);
        case ModelKind::ExponentialLM:
            return std::make_unique<ExpLM>(m, false, prm.dt);
        case ModelKind::ScaledTransientDiffusion:
        case ModelKind::TimeChangedMartingale:
            break;
    }
    throw UnsupportedError("no P scheme for model " + m.name);
}

std::unique_ptr<Scheme> q_scheme(const ModelSpec& m, const SimParams& prm) {
    switch (m.kind) {
        case ModelKind::InverseBes3:
            return std::make_unique<EulerDual>(m.x0, [](double) { return -1.0; }, 1.0,
                                               prm.absorption_bridge, prm.dt);
        case ModelKind::NaturalScaleDiffusion:
        case ModelKind::TwoAssetCorrelated:
        case ModelKind::ScaledTransientDiffusion: {
            const ModelSpec nat =
                m.kind == ModelKind::ScaledTransientDiffusion ? to_natural_scale(m) : m;
            if (prm.exact_schemes && nat.sigma_power) {
                const PowerLaw p = *nat.sigma_power;
                if (p.exponent == 1.0)
                    return std::make_unique<Lognormal>(1.0 / nat.x0, p.scale, prm.dt, true);
                if (integer_bessel_dimension(p) == 4)
                    return std::make_unique<Besq0Dual>(nat.x0, p.scale, prm.dt);
            }
            const DualDynamics d = dual_dynamics(nat);
            return std::make_unique<EulerDual>(nat.x0, d.sigma_bar, sbar_squared_at_zero(nat, d),
                                               prm.absorption_bridge, prm.dt);
        }
        case ModelKind::ExponentialLM:
            return std::make_unique<ExpLM>(m, true, prm.dt);
        case ModelKind::TimeChangedMartingale:
            break;
    }
    throw UnsupportedError("model " + m.name + " has no dual dynamics to simulate under Q");
}

// Per-path event monitoring at every simulation step.
class EventTracker {
public:
    EventTracker(const EventLevels& lv, bool extrema) : lv_(lv), extrema_(extrema) {
        rho_.reserve(lv.rho.size());
        for (double l : lv.rho) rho_.emplace_back(l);
    }

    void start(EventClock& c, double x0) {
        c = EventClock{};
        c.first_below.assign(lv_.below.size(), kInf);
        c.first_above.assign(lv_.above.size(), kInf);
        c.tau_n.assign(lv_.caps.size(), kInf);
        for (auto& r : rho_) r.start(x0);
        run_min_ = run_max_ = x0;
        check(c, 0.0, x0);
    }

    void step(EventClock& c, double t, double x_prev, double x) {
        check(c, t, x);
        for (auto& r : rho_) r.step(t, x_prev, x);
        run_min_ = std::min(run_min_, x);
        run_max_ = std::max(run_max_, x);
    }

    // Bridge test for barrier levels inside a step whose endpoints are both on
    // the unhit side. Distances are taken in the coordinate u(x), in which the
    // diffusion has unit volatility; without u the variance sigma(x0) sigma(x1)
    // is frozen over the step.
    void touch_levels(EventClock& c, double t, double x_prev, double x, const ScalarFn& u,
                      const ScalarFn& sigma, double dt, PathRng& rng) {
        if (!std::isfinite(x_prev) || !std::isfinite(x)) return;
        auto hit = [&](double level) {
            if (u) {
                const double ul = u(level);
                return bridge_hit(rng, std::abs(u(x_prev) - ul), std::abs(u(x) - ul), 1.0, dt);
            }
            return bridge_hit(rng, std::abs(x_prev - level), std::abs(x - level),
                              std::abs(sigma(x_prev) * sigma(x)), dt);
        };
        for (std::size_t i = 0; i < lv_.below.size(); ++i)
            if (c.first_below[i] == kInf && hit(lv_.below[i])) c.first_below[i] = t;
        for (std::size_t i = 0; i < lv_.above.size(); ++i)
            if (c.first_above[i] == kInf && hit(lv_.above[i])) c.first_above[i] = t;
    }

    bool has_barriers() const noexcept { return !lv_.below.empty() || !lv_.above.empty(); }

    // Bridge test for last passages inside a step that did not straddle a level.
    void touch_rho(double t, double x_prev, double x, double s2, double dt, PathRng& rng) {
        for (auto& r : rho_) {
            const double a = x_prev - r.record().level;
            const double b = x - r.record().level;
            if (a * b > 0.0 && bridge_hit(rng, std::abs(a), std::abs(b), s2, dt)) r.touch(t);
        }
    }

    void snapshot(EventClock& c) const {
        if (!extrema_) return;
        c.running_min.push_back(run_min_);
        c.running_max.push_back(run_max_);
    }

    void finish(EventClock& c, double horizon) const {
        for (std::size_t i = 0; i < lv_.caps.size(); ++i)
            if (c.tau_n[i] == kInf && lv_.caps[i] <= horizon) c.tau_n[i] = lv_.caps[i];
        c.rho.clear();
        for (const auto& r : rho_) c.rho.push_back(r.record());
    }

private:
    void check(EventClock& c, double t, double x) const {
        for (std::size_t i = 0; i < lv_.below.size(); ++i)
            if (c.first_below[i] == kInf && x <= lv_.below[i]) c.first_below[i] = t;
        for (std::size_t i = 0; i < lv_.above.size(); ++i)
            if (c.first_above[i] == kInf && x > lv_.above[i]) c.first_above[i] = t;
        for (std::size_t i = 0; i < lv_.caps.size(); ++i)
            if (c.tau_n[i] == kInf && x > lv_.caps[i]) c.tau_n[i] = std::min(t, lv_.caps[i]);
    }

    const EventLevels& lv_;
    bool extrema_;
    std::vector<LastPassageTracker> rho_;
    double run_min_ = 0.0;
    double run_max_ = 0.0;
};

PathEnsemble make_ensemble(const ModelSpec& m, Measure measure, const SimParams& prm,
                           std::size_t steps, const EventLevels& levels) {
    PathEnsemble e;
    e.measure = measure;
    e.dt = prm.dt;
    e.steps = steps;
    e.grid_steps = record_steps(prm, steps);
    e.grid.reserve(e.grid_steps.size());
    for (std::size_t k : e.grid_steps) e.grid.push_back(static_cast<double>(k) * prm.dt);
    e.n_paths = prm.n_paths;
    e.values.assign(prm.n_paths * e.grid.size(), 0.0);
    e.levels = levels;
    e.clocks.resize(prm.n_paths);
    e.seed = prm.seed;
    e.first_path_id = prm.first_path_id;
    e.model_name = m.name;
    return e;
}

void check_params(const SimParams& prm) {
    if (prm.n_paths < 1) throw ConfigError("n_paths must be at least 1");
}

void add(SimDiagnostics& a, const SimDiagnostics& b) {
    a.floor_hits += b.floor_hits;
    a.bridge_absorptions += b.bridge_absorptions;
    a.explosion_flags += b.explosion_flags;
}

// Unit-volatility coordinate of dX = sigma(X) dW for sigma = c x^alpha.
ScalarFn lamperti(const ModelSpec& m) {
    if (!m.sigma_power || m.sigma_power->scale <= 0.0) return {};
    const double c = m.sigma_power->scale;
    const double a = m.sigma_power->exponent;
    if (a == 1.0) return [c](double x) { return std::log(x) / c; };
    return [c, a](double x) { return std::pow(x, 1.0 - a) / (c * (1.0 - a)); };
}

PathEnsemble run_single(const ModelSpec& m, Measure measure, const SimParams& prm,
                        const Scheme& scheme) {
    const std::size_t steps = checked_steps(prm.horizon, prm.dt);
    const ScalarFn u = lamperti(m);
    const bool level_bridge =
        prm.absorption_bridge && (u || m.kind == ModelKind::NaturalScaleDiffusion) && m.sigma;
    PathEnsemble e = make_ensemble(m, measure, prm, steps, prm.levels);
    const std::size_t g = e.grid.size();
    std::vector<SimDiagnostics> diags(std::max<std::size_t>(prm.workers, 1));

    detail::for_path_ranges(prm.n_paths, prm.workers, [&](std::size_t w, std::size_t begin,
                                                          std::size_t end) {
        EventTracker tracker(e.levels, prm.record_extrema);
        SimDiagnostics& diag = diags[w];
        State s;
        for (std::size_t p = begin; p < end; ++p) {
            PathRng rng(prm.seed, prm.first_path_id + p);
            EventClock& clock = e.clocks[p];
            double* row = e.values.data() + p * g;
            scheme.reset(s);
            double x = scheme.observe(s);
            tracker.start(clock, x);
            row[0] = x;
            tracker.snapshot(clock);
            std::size_t k = 1;
            for (std::size_t n = 1; n <= steps; ++n) {
                const double t = static_cast<double>(n) * prm.dt;
                const double prev = x;
                if (!s.dead) {
                    scheme.advance(rng, s, diag);
                    if (s.dead) clock.tau_x = t;
                }
                x = scheme.observe(s);
                tracker.step(clock, t, prev, x);
                if (level_bridge && tracker.has_barriers())
                    tracker.touch_levels(clock, t, prev, x, u, m.sigma, prm.dt, rng);
                if (k < g && e.grid_steps[k] == n) {
                    row[k++] = x;
                    tracker.snapshot(clock);
                }
                if (s.dead && prev == kInf) {
                    // Frozen: the remaining recorded points repeat the explosion state.
                    for (; k < g; ++k) {
                        row[k] = x;
                        tracker.snapshot(clock);
                    }
                    break;
                }
            }
            tracker.finish(clock, e.horizon());
        }
    });
    for (const auto& d : diags) add(e.diagnostics, d);
    return e;
}

PathEnsemble simulate_time_changed(const ModelSpec& m, const SimParams& prm) {
    SimParams inner = prm;
    inner.levels = {};
    Lognormal gbm(1.0, m.tc_vol, prm.dt, false);
    ModelSpec y = m;
    y.name = "gbm(" + std::to_string(m.tc_vol) + ")";
    PathEnsemble ys = run_single(y, Measure::P, inner, gbm);
    PathEnsemble x = time_change_strictify(ys);
    x.model_name = m.name;
    x.dt = prm.dt;
    return x;
}

}  // namespace

PathEnsemble simulate_p(const ModelSpec& model, const SimParams& params) {
    validate(model);
    check_params(params);
    if (model.kind == ModelKind::TimeChangedMartingale) return simulate_time_changed(model, params);
    if (model.kind == ModelKind::ScaledTransientDiffusion) {
        const ModelSpec nat = to_natural_scale(model);
        const auto scheme = p_scheme(nat, params);
        return run_single(nat, Measure::P, params, *scheme);
    }
    const auto scheme = p_scheme(model, params);
    return run_single(model, Measure::P, params, *scheme);
}

PathEnsemble simulate_q(const ModelSpec& model, const SimParams& params) {
    validate(model);
    check_params(params);
    const auto scheme = q_scheme(model, params);
    return run_single(model, Measure::Q, params, *scheme);
}

namespace {

TwoAssetEnsemble two_asset_p(const ModelSpec& m, const SimParams& prm,
                             const EventLevels& second_levels, const StepObserver& observer) {
    const std::size_t steps = checked_steps(prm.horizon, prm.dt);
    TwoAssetEnsemble out;
    out.measure = Measure::P;
    out.first = make_ensemble(m, Measure::P, prm, steps, prm.levels);
    out.second = make_ensemble(m, Measure::P, prm, steps, second_levels);
    out.second.model_name = m.name + ":Y";
    const std::size_t g = out.first.grid.size();

    ModelSpec mx = natural_scale(m.sigma, m.x0, m.name + ":X");
    mx.sigma_power = m.sigma_power;
    const bool y_const = m.gamma_power && m.gamma_power->scale == 0.0;
    ModelSpec my = natural_scale(m.gamma, m.y0, m.name + ":Y");
    my.sigma_power = m.gamma_power;

    auto exact = [&](const ModelSpec& s) {
        if (!prm.exact_schemes || !s.sigma_power) return false;
        return s.sigma_power->exponent == 1.0 || integer_bessel_dimension(*s.sigma_power) >= 3;
    };
    const bool independent_exact = m.rho == 0.0 && exact(mx) && (y_const || exact(my));
    const CorrelatedStep step_x(m.sigma, m.sigma_power, prm.dt);
    const CorrelatedStep step_y(m.gamma, m.gamma_power, prm.dt);
    std::unique_ptr<Scheme> sx, sy;
    if (independent_exact) {
        sx = p_scheme(mx, prm);
        if (!y_const) sy = p_scheme(my, prm);
    }
    const double rho = m.rho;
    const double rho_c = std::sqrt(1.0 - rho * rho);
    const double dt = prm.dt;
    std::vector<SimDiagnostics> diags(std::max<std::size_t>(prm.workers, 1));

    detail::for_path_ranges(prm.n_paths, prm.workers, [&](std::size_t w, std::size_t begin,
                                                          std::size_t end) {
        EventTracker tx(out.first.levels, prm.record_extrema);
        EventTracker ty(out.second.levels, prm.record_extrema);
        SimDiagnostics& diag = diags[w];
        State a, b;
        for (std::size_t p = begin; p < end; ++p) {
            PathRng rng(prm.seed, prm.first_path_id + p);
            EventClock& cx = out.first.clocks[p];
            EventClock& cy = out.second.clocks[p];
            double* rx = out.first.values.data() + p * g;
            double* ry = out.second.values.data() + p * g;
            double x = m.x0, y = m.y0;
            if (sx) sx->reset(a);
            if (sy) sy->reset(b);
            tx.start(cx, x);
            ty.start(cy, y);
            rx[0] = x;
            ry[0] = y;
            tx.snapshot(cx);
            ty.snapshot(cy);
            std::size_t k = 1;
            for (std::size_t n = 1; n <= steps; ++n) {
                const double t = static_cast<double>(n) * dt;
                const double px = x, py = y;
                double z1 = kNaN, z2 = kNaN;
                if (independent_exact) {
                    sx->advance(rng, a, diag);
                    x = sx->observe(a);
                    if (sy) {
                        sy->advance(rng, b, diag);
                        y = sy->observe(b);
                    }
                } else {
                    z1 = rng.normal();
                    z2 = rho * z1 + rho_c * rng.normal();
                    x = step_x(x, z1, 0.0);
                    if (!y_const) y = step_y(y, z2, 0.0);
                }
                if (observer) observer({p, n, px, py, x, y, z1, z2});
                tx.step(cx, t, px, x);
                ty.step(cy, t, py, y);
                if (k < g && out.first.grid_steps[k] == n) {
                    rx[k] = x;
                    ry[k] = y;
                    tx.snapshot(cx);
                    ty.snapshot(cy);
                    ++k;
                }
            }
            tx.finish(cx, out.first.horizon());
            ty.finish(cy, out.first.horizon());
        }
    });
    for (const auto& d : diags) add(out.first.diagnostics, d);
    return out;
}

TwoAssetEnsemble two_asset_q(const ModelSpec& m, const SimParams& prm,
                             const EventLevels& second_levels, const StepObserver& observer) {
    const std::size_t steps = checked_steps(prm.horizon, prm.dt);
    TwoAssetEnsemble out;
    out.measure = Measure::Q;
    out.first = make_ensemble(m, Measure::Q, prm, steps, prm.levels);
    out.second = make_ensemble(m, Measure::Q, prm, steps, second_levels);
    out.second.model_name = m.name + ":Z";
    const std::size_t g = out.first.grid.size();

    const DualDynamics d = dual_dynamics(m);
    const double s2_zero = sbar_squared_at_zero(m, d);
    const double rho = m.rho;
    const double rho_c = std::sqrt(1.0 - rho * rho);
    const double dt = prm.dt;
    const double sq = std::sqrt(dt);

    // Y is simulated directly and Z = Y V. With rho = 0 the law of Y is the
    // same under Q as under P, so its exact P scheme applies.
    const bool y_const = m.gamma_power && m.gamma_power->scale == 0.0;
    ModelSpec my = natural_scale(m.gamma, m.y0, m.name + ":Y");
    my.sigma_power = m.gamma_power;
    const bool y_exact = prm.exact_schemes && my.sigma_power &&
                         (my.sigma_power->exponent == 1.0 ||
                          integer_bessel_dimension(*my.sigma_power) >= 3);
    std::unique_ptr<Scheme> sy;
    if (!y_const && rho == 0.0 && y_exact) sy = p_scheme(my, prm);
    const CorrelatedStep step_y(m.gamma, m.gamma_power, prm.dt);
    std::vector<SimDiagnostics> diags(std::max<std::size_t>(prm.workers, 1));

    detail::for_path_ranges(prm.n_paths, prm.workers, [&](std::size_t w, std::size_t begin,
                                                          std::size_t end) {
        EventTracker tx(out.first.levels, prm.record_extrema);
        EventTracker tz(out.second.levels, prm.record_extrema);
        SimDiagnostics& diag = diags[w];
        State ys;
        for (std::size_t p = begin; p < end; ++p) {
            PathRng rng(prm.seed, prm.first_path_id + p);
            EventClock& cx = out.first.clocks[p];
            EventClock& cz = out.second.clocks[p];
            double* rx = out.first.values.data() + p * g;
            double* rz = out.second.values.data() + p * g;
            double v = 1.0 / m.x0;
            double y = m.y0;
            double z = y * v;
            bool dead = false, flagged = false;
            double x = m.x0;
            if (sy) sy->reset(ys);
            tx.start(cx, x);
            tz.start(cz, z);
            rx[0] = x;
            rz[0] = z;
            tx.snapshot(cx);
            tz.snapshot(cz);
            std::size_t k = 1;
            for (std::size_t n = 1; n <= steps; ++n) {
                const double t = static_cast<double>(n) * dt;
                const double px = x, pz = z;
                double s2z = 0.0, zw = kNaN, zb = kNaN;
                if (!dead) {
                    zw = rng.normal();
                    const double sv = d.sigma_bar(v);
                    const double gy = y_const ? 0.0 : m.gamma(y);
                    const double az = gy * v, bz = y * sv;
                    s2z = az * az + bz * bz + 2.0 * rho * az * bz;
                    const double nv = v + sv * sq * zw;
                    bool absorb = !(nv > 0.0);
                    if (!absorb && prm.absorption_bridge) {
                        const double s1 = d.sigma_bar(nv);
                        if (bridge_hit(rng, v, nv, std::min({sv * sv, s1 * s1, s2_zero}), dt)) {
                            absorb = true;
                            ++diag.bridge_absorptions;
                        }
                    }
                    const double py = y;
                    if (sy) {
                        sy->advance(rng, ys, diag);
                        y = sy->observe(ys);
                    } else if (!y_const) {
                        // Under Q the driver of Y picks up the drift rho sigma(X) / X = -rho sbar(V) / V.
                        zb = rho * zw + rho_c * rng.normal();
                        y = step_y(y, zb, rho * (-sv / v));
                    }
                    if (absorb) {
                        dead = true;
                        cx.tau_x = t;
                        cz.tau_x = t;
                        if (!std::isfinite(py) || py > kExplosionCap) {
                            flagged = true;
                        } else {
                            z = 0.0;
                        }
                        v = 0.0;
                    } else {
                        v = nv;
                        if (!std::isfinite(y)) y = py;
                        if (y > kExplosionCap) flagged = true;
                        z = y * v;
                    }
                    x = dead ? kInf : 1.0 / v;
                }
                if (observer) observer({p, n, px, pz, x, z, zw, zb});
                tx.step(cx, t, px, x);
                tz.step(cz, t, pz, z);
                if (s2z > 0.0 && z > 0.0 && prm.absorption_bridge)
                    tz.touch_rho(t, pz, z, s2z, dt, rng);
                if (k < g && out.first.grid_steps[k] == n) {
                    rx[k] = x;
                    rz[k] = z;
                    tx.snapshot(cx);
                    tz.snapshot(cz);
                    ++k;
                }
                if (dead && px == kInf) {
                    for (; k < g; ++k) {
                        rx[k] = x;
                        rz[k] = z;
                        tx.snapshot(cx);
                        tz.snapshot(cz);
                    }
                    break;
                }
            }
            tx.finish(cx, out.first.horizon());
            tz.finish(cz, out.first.horizon());
            if (flagged) ++diag.explosion_flags;
        }
    });
    for (const auto& dg : diags) add(out.first.diagnostics, dg);
    return out;
}

}  // namespace

TwoAssetEnsemble simulate_two_asset(const ModelSpec& model, Measure measure,
                                    const SimParams& params, const EventLevels& second_levels,
                                    const StepObserver& observer) {
    if (model.kind != ModelKind::TwoAssetCorrelated)
        throw UnsupportedError("simulate_two_asset needs a TwoAssetCorrelated model");
    validate(model);
    check_params(params);
    return measure == Measure::P ? two_asset_p(model, params, second_levels, observer)
                                 : two_asset_q(model, params, second_levels, observer);
}

double projection_kernel(double x, double y, double a, double s) {
    const double r2 = x * x + y * y;
    if (s <= 0.0) return 1.0 / std::sqrt(r2 + a * a);
    const double sd = std::sqrt(s);
    const double norm = 1.0 / (sd * std::sqrt(2.0 * std::numbers::pi));
    auto f = [&](double z) {
        const double u = (z - a) / sd;
        return std::exp(-0.5 * u * u) * norm / std::sqrt(r2 + z * z);
    };
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double lo = a - 12.0 * sd, hi = a + 12.0 * sd;
    double err = 0.0, total = 0.0;
    if (lo < 0.0 && hi > 0.0) {
        total = GK::integrate(f, lo, 0.0, 15, 1e-10, &err);
        double err2 = 0.0;
        total += GK::integrate(f, 0.0, hi, 15, 1e-10, &err2);
        err += err2;
    } else {
        total = GK::integrate(f, lo, hi, 15, 1e-10, &err);
    }
    if (!std::isfinite(total) || err > 1e-6 * std::abs(total)) {
        std::ostringstream os;
        os << "projection kernel quadrature did not converge at (" << x << ", " << y << ", " << a
           << ", " << s << ")";
        throw NumericError(os.str());
    }
    return total;
}

ProjectionEnsemble optional_projection_bes3(int n, const std::vector<double>& t_grid,
                                            std::size_t n_paths, std::uint64_t seed, double dt,
                                            std::size_t workers) {
    if (n < 1) throw ConfigError("projection: n must be at least 1");
    if (t_grid.empty()) throw ConfigError("projection: empty time grid");
    const double horizon = *std::max_element(t_grid.begin(), t_grid.end());
    const std::size_t per_block = checked_steps(1.0 / n, dt);
    SimParams prm;
    prm.horizon = horizon;
    prm.dt = dt;
    prm.n_paths = n_paths;
    prm.seed = seed;
    prm.record_times = t_grid;
    const std::size_t steps = checked_steps(horizon, dt);

    ProjectionEnsemble out;
    ModelSpec m = inverse_bes3(1.0);
    m.name = "optional_projection(" + std::to_string(n) + ")";
    out.projected = make_ensemble(m, Measure::P, prm, steps, {});
    out.full = make_ensemble(inverse_bes3(1.0), Measure::P, prm, steps, {});
    const std::size_t g = out.projected.grid.size();

    detail::for_path_ranges(n_paths, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            PathRng rng(seed, p);
            double b[3] = {1.0, 0.0, 0.0};
            double b3_block = 0.0;
            double* rp = out.projected.values.data() + p * g;
            double* rf = out.full.values.data() + p * g;
            rp[0] = rf[0] = 1.0;
            std::size_t k = 1;
            const double sq = std::sqrt(dt);
            for (std::size_t i = 1; i <= steps && k < g; ++i) {
                for (double& bi : b) bi += sq * rng.normal();
                if (i % per_block == 0) b3_block = b[2];
                if (out.projected.grid_steps[k] != i) continue;
                const std::size_t since = i % per_block;
                const double lag = static_cast<double>(since) * dt;
                rf[k] = 1.0 / std::sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2]);
                rp[k] = since == 0 ? rf[k] : projection_kernel(b[0], b[1], b3_block, lag);
                ++k;
            }
        }
    });
    return out;
}

}  // namespace bubblelab
