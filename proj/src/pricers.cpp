#include "bubblelab/pricers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bubblelab/errors.hpp"

namespace bubblelab {

std::string to_string(Barrier b) {
    switch (b) {
        case Barrier::DI: return "DI";
        case Barrier::DO: return "DO";
        case Barrier::UI: return "UI";
        case Barrier::UO: return "UO";
    }
    return "unknown";
}

Barrier barrier_from_string(const std::string& s) {
    for (Barrier b : {Barrier::DI, Barrier::DO, Barrier::UI, Barrier::UO})
        if (to_string(b) == s) return b;
    throw ConfigError("unknown barrier type '" + s + "'");
}

std::string to_string(Style s) { return s == Style::European ? "european" : "american"; }

Style style_from_string(const std::string& s) {
    if (s == "european") return Style::European;
    if (s == "american") return Style::American;
    throw ConfigError("unknown exercise style '" + s + "'");
}

namespace {

bool is_down(Barrier b) { return b == Barrier::DI || b == Barrier::DO; }

bool barrier_event(const PathEnsemble& e, std::size_t p, Barrier type, std::size_t lvl, double T,
                   double x0) {
    const EventClock& c = e.clocks[p];
    switch (type) {
        case Barrier::DI: return c.first_below[lvl] <= T;
        case Barrier::DO: return !(c.first_below[lvl] <= T);
        case Barrier::UI: return x0 >= e.levels.above[lvl] || c.first_above[lvl] <= T;
        case Barrier::UO: return !(x0 >= e.levels.above[lvl] || c.first_above[lvl] <= T);
    }
    return false;
}

PriceEstimate finish(std::vector<double> samples, Method m) {
    PriceEstimate r;
    r.method = m;
    const Estimate e = estimate(samples);
    r.value = e.mean;
    r.std_err = e.std_err;
    r.n_paths = e.n;
    return r;
}

}  // namespace

BarrierReport barrier_price(const PathEnsemble& p, const PathEnsemble& q, const PayoffSpec& payoff,
                            Barrier type, double level) {
    if (payoff.dates() != 1 || !payoff.decomposable())
        throw UnsupportedError("barrier pricing needs a single-date payoff with a finite limit eta");
    if (p.n_paths == 0 || q.n_paths == 0) throw PreconditionError("empty ensemble");
    const double x0p = p.value(0, 0);
    const double T = payoff.times[0];
    const double eta = payoff.eta[0]({});
    if (!std::isfinite(eta)) throw UnsupportedError("payoff " + payoff.name + " has no finite eta");

    const auto& lv_p = is_down(type) ? p.levels.below : p.levels.above;
    const auto& lv_q = is_down(type) ? q.levels.below : q.levels.above;
    const std::size_t ip = p.level_index(lv_p, level);
    const std::size_t iq = q.level_index(lv_q, level);
    const std::size_t kp = p.index_of(T);
    const std::size_t kq = q.index_of(T);

    std::vector<double> left(p.n_paths);
    for (std::size_t i = 0; i < p.n_paths; ++i) {
        const double x = p.value(i, kp);
        left[i] = barrier_event(p, i, type, ip, T, x0p) ? payoff.h(std::span<const double>(&x, 1))
                                                         : 0.0;
    }

    const double x0q = q.value(0, 0);
    std::vector<double> main(q.n_paths), deflt(q.n_paths), diff(q.n_paths);
    for (std::size_t i = 0; i < q.n_paths; ++i) {
        const double y = q.reciprocal(i, kq);
        const double tau = q.clocks[i].tau_x;
        const bool ev = barrier_event(q, i, type, iq, T, x0q);
        main[i] = ev ? (y > 0.0 ? payoff.g(std::span<const double>(&y, 1)) : eta) : 0.0;
        bool d = false;
        switch (type) {
            case Barrier::DI: d = q.clocks[i].first_below[iq] < tau && tau <= T; break;
            case Barrier::DO: d = !(q.clocks[i].first_below[iq] <= T) && tau <= T; break;
            case Barrier::UI: d = tau <= T; break;
            case Barrier::UO: d = false; break;
        }
        deflt[i] = d ? eta : 0.0;
        diff[i] = main[i] - deflt[i];
    }

    BarrierReport r;
    r.type = type;
    r.level = level;
    r.left = finish(std::move(left), Method::DirectP);
    r.right = finish(std::move(diff), Method::DecompositionQ);
    r.right.main_term = estimate(main);
    r.right.default_term = estimate(deflt);
    r.consistent = agree(r.left.as_estimate(), r.right.as_estimate());
    return r;
}

BarrierReport barrier_price(const ModelSpec& model, const PayoffSpec& payoff, Barrier type,
                            double level, SimParams params) {
    params = with_dates(std::move(params), payoff.times);
    if (is_down(type))
        params.levels.below.push_back(level);
    else
        params.levels.above.push_back(level);
    const PathEnsemble p = simulate_p(model, params);
    SimParams qp = params;
    qp.seed = params.seed + 1;
    const PathEnsemble q = simulate_q(model, qp);
    return barrier_price(p, q, payoff, type, level);
}

ExchangeEstimate exchange_lastpassage(const TwoAssetEnsemble& q, double K, double T, Style style) {
    const ExchangeSamples s = exchange_samples(q, K, T);
    ExchangeEstimate r;
    r.price = finish(style == Style::European ? s.european : s.american, Method::SurvivalQ);
    r.horizon_sim = q.first.grid.back();
    r.alive_at_horizon = s.alive_at_horizon;
    std::size_t tail = 0;
    for (const auto& c : q.first.clocks)
        if (c.tau_x > T && c.tau_x <= r.horizon_sim) ++tail;
    r.tail_mass = static_cast<double>(tail) / static_cast<double>(q.first.n_paths);
    return r;
}

ExchangeEstimate exchange_lastpassage(const ModelSpec& model, double K, double T, Style style,
                                      SimParams params, double horizon_multiplier) {
    if (horizon_multiplier < 1.0) throw ConfigError("horizon multiplier must be at least 1");
    const double dt = params.dt;
    params.horizon = std::max(T, std::ceil(horizon_multiplier * T / dt - 1e-9) * dt);
    params.record_times = {T};
    EventLevels zl;
    if (K > 0.0) zl.rho.push_back(1.0 / K);
    return exchange_lastpassage(simulate_two_asset(model, Measure::Q, params, zl), K, T, style);
}

PriceEstimate exchange_direct_p(const TwoAssetEnsemble& p, double K, double T) {
    if (p.measure != Measure::P) throw PreconditionError("exchange_direct_p needs a P-ensemble");
    const std::size_t k = p.first.index_of(T);
    std::vector<double> s(p.first.n_paths);
    for (std::size_t i = 0; i < s.size(); ++i)
        s[i] = std::max(p.first.value(i, k) - K * p.second.value(i, k), 0.0);
    return finish(std::move(s), Method::DirectP);
}

RealWorldPayoff real_world_call(double K) {
    std::ostringstream os;
    os << "real_world_call(K=" << K << ")";
    return {os.str(), [K](double s) { return std::max(s - K, 0.0); }, 1.0, true};
}

RealWorldPayoff real_world_put(double K) {
    std::ostringstream os;
    os << "real_world_put(K=" << K << ")";
    return {os.str(), [K](double s) { return std::max(K - s, 0.0); }, 0.0, false};
}

RealWorldPayoff real_world_forward() {
    return {"real_world_forward", [](double s) { return s; }, 1.0, true};
}

RealWorldReport real_world_price(const TwoAssetEnsemble& q, const RealWorldPayoff& payoff, double T,
                                 Style style) {
    if (q.measure != Measure::Q) throw PreconditionError("real_world_price needs a Q-ensemble");
    if (style == Style::American && !payoff.american_ok)
        throw UnsupportedError("American real-world value needs h convex with h(0) = 0, h(s) <= s "
                               "and eta = 1; " + payoff.name + " does not qualify");
    const PathEnsemble& zs = q.second;
    const std::size_t k = zs.index_of(T);
    const std::size_t last = zs.grid.size() - 1;
    const std::size_t n = zs.n_paths;
    std::vector<double> gt(n), prem(n), eur(n), zero(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double tau = zs.clocks[i].tau_x;
        gt[i] = payoff.g(zs.value(i, k));
        // Z stays at its absorption value, so the last recorded value is Z_tau.
        prem[i] = tau <= T ? payoff.g(zs.value(i, last)) : 0.0;
        eur[i] = gt[i] - prem[i];
        zero[i] = zs.value(i, k) == 0.0 ? 1.0 : 0.0;
    }
    RealWorldReport r;
    r.european = finish(std::move(eur), Method::DecompositionQ);
    r.european.main_term = estimate(gt);
    r.european.default_term = estimate(prem);
    r.premium = r.european.default_term;
    r.z_zero = estimate(zero);
    if (payoff.american_ok) r.american = finish(std::move(gt), Method::SurvivalQ);
    return r;
}

PriceEstimate real_world_direct_p(const TwoAssetEnsemble& p, const RealWorldPayoff& payoff,
                                  double T) {
    if (p.measure != Measure::P) throw PreconditionError("real_world_direct_p needs a P-ensemble");
    const std::size_t k = p.first.index_of(T);
    std::vector<double> s(p.first.n_paths);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double y = p.second.value(i, k);
        s[i] = y * payoff.h(p.first.value(i, k) / y);
    }
    return finish(std::move(s), Method::DirectP);
}

ConditionalMean conditional_mean(const ModelSpec& model) {
    const bool natural =
        model.kind == ModelKind::InverseBes3 || model.kind == ModelKind::NaturalScaleDiffusion;
    if (natural && model.sigma_power) {
        const PowerLaw p = *model.sigma_power;
        if (p.exponent == 2.0) return power2_mean(p.scale);
        if (p.exponent == 1.5) return power15_mean(p.scale);
    }
    throw UnsupportedError("no closed-form conditional mean for " + model.name +
                           "; the chooser needs sigma = c x^2 or c x^1.5");
}

PriceEstimate chooser_price(const ModelSpec& model, double K, double S, double T, SimParams params,
                            Method method) {
    const ConditionalMean mean = conditional_mean(model);
    if (!(0.0 < S && S < T)) throw ConfigError("chooser needs 0 < S < T");
    const PayoffSpec payoff = chooser_payoff(K, S, T, mean);
    switch (method) {
        case Method::DirectP: return price_direct_p(model, payoff, std::move(params));
        case Method::SurvivalQ: return price_survival_q(model, payoff, std::move(params));
        case Method::DecompositionQ: return price_decomposition_q(model, payoff, std::move(params));
        case Method::Corrected: return corrected_price(model, payoff, std::move(params));
        case Method::ClosedForm: break;
    }
    throw UnsupportedError("chooser has no closed form");
}

}  // namespace bubblelab
