#include "bubblelab/duality.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bubblelab/errors.hpp"
#include "bubblelab/sde_engine.hpp"

namespace bubblelab {

std::string to_string(Method m) {
    switch (m) {
        case Method::DirectP: return "direct_p";
        case Method::SurvivalQ: return "survival_q";
        case Method::DecompositionQ: return "decomposition_q";
        case Method::ClosedForm: return "closed_form";
        case Method::Corrected: return "corrected";
    }
    return "unknown";
}

Method method_from_string(const std::string& s) {
    for (Method m : {Method::DirectP, Method::SurvivalQ, Method::DecompositionQ,
                     Method::ClosedForm, Method::Corrected})
        if (to_string(m) == s) return m;
    throw ConfigError("unknown method '" + s + "'");
}

namespace {

std::vector<std::size_t> date_indices(const PathEnsemble& e, const PayoffSpec& payoff) {
    std::vector<std::size_t> idx;
    idx.reserve(payoff.times.size());
    for (double t : payoff.times) idx.push_back(e.index_of(t));
    return idx;
}

void require(const PathEnsemble& e, Measure m, const char* who) {
    if (e.measure != m) {
        std::ostringstream os;
        os << who << " needs an ensemble simulated under " << to_string(m);
        throw PreconditionError(os.str());
    }
}

// Drops non-finite samples and enforces the rejection budget.
std::size_t screen(std::vector<double>& samples, const std::string& what) {
    const std::size_t n = samples.size();
    std::erase_if(samples, [](double v) { return !std::isfinite(v); });
    const std::size_t rejected = n - samples.size();
    if (static_cast<double>(rejected) > kMaxRejectedFraction * static_cast<double>(n)) {
        std::ostringstream os;
        os << what << ": " << rejected << " of " << n << " paths gave a non-finite payoff";
        throw NumericError(os.str());
    }
    return rejected;
}

PriceEstimate from_samples(std::vector<double> samples, Method method, const std::string& what) {
    PriceEstimate r;
    r.method = method;
    r.rejected = screen(samples, what);
    const Estimate e = estimate(samples);
    r.value = e.mean;
    r.std_err = e.std_err;
    r.n_paths = e.n;
    return r;
}

struct Decomposed {
    std::vector<double> main;
    std::vector<double> deflt;
};

Decomposed decompose(const PathEnsemble& q, const PayoffSpec& payoff) {
    if (!payoff.decomposable())
        throw UnsupportedError("payoff " + payoff.name +
                               " has no boundary limits eta; the decomposition is undefined");
    const auto idx = date_indices(q, payoff);
    const std::size_t n = idx.size();
    Decomposed d;
    d.main.resize(q.n_paths);
    d.deflt.resize(q.n_paths);
    std::vector<double> y(n);
    for (std::size_t p = 0; p < q.n_paths; ++p) {
        std::size_t alive = 0;
        for (std::size_t j = 0; j < n; ++j) {
            y[j] = q.reciprocal(p, idx[j]);
            if (y[j] > 0.0) alive = j + 1;
        }
        if (alive == n) {
            d.main[p] = payoff.g(y);
            d.deflt[p] = 0.0;
        } else {
            const double eta = payoff.eta[alive](std::span<const double>(y.data(), alive));
            d.main[p] = eta;
            d.deflt[p] = eta;
        }
    }
    return d;
}

}  // namespace

PriceEstimate price_direct_p(const PathEnsemble& p, const PayoffSpec& payoff) {
    require(p, Measure::P, "price_direct_p");
    const auto idx = date_indices(p, payoff);
    std::vector<double> samples(p.n_paths);
    std::vector<double> x(idx.size());
    for (std::size_t i = 0; i < p.n_paths; ++i) {
        for (std::size_t j = 0; j < idx.size(); ++j) x[j] = p.value(i, idx[j]);
        samples[i] = payoff.h(x);
    }
    return from_samples(std::move(samples), Method::DirectP, payoff.name);
}

PriceEstimate price_survival_q(const PathEnsemble& q, const PayoffSpec& payoff) {
    require(q, Measure::Q, "price_survival_q");
    const auto idx = date_indices(q, payoff);
    std::vector<double> samples(q.n_paths);
    std::vector<double> y(idx.size());
    for (std::size_t i = 0; i < q.n_paths; ++i) {
        if (q.value(i, idx.back()) == kInf) {
            samples[i] = 0.0;
            continue;
        }
        for (std::size_t j = 0; j < idx.size(); ++j) y[j] = q.reciprocal(i, idx[j]);
        samples[i] = payoff.g(y);
    }
    return from_samples(std::move(samples), Method::SurvivalQ, payoff.name);
}

PriceEstimate price_decomposition_q(const PathEnsemble& q, const PayoffSpec& payoff) {
    require(q, Measure::Q, "price_decomposition_q");
    Decomposed d = decompose(q, payoff);
    std::vector<double> diff(q.n_paths);
    for (std::size_t i = 0; i < q.n_paths; ++i) diff[i] = d.main[i] - d.deflt[i];
    PriceEstimate r = from_samples(std::move(diff), Method::DecompositionQ, payoff.name);
    screen(d.main, payoff.name);
    screen(d.deflt, payoff.name);
    r.main_term = estimate(d.main);
    r.default_term = estimate(d.deflt);
    r.value = r.main_term.mean - r.default_term.mean;
    return r;
}

PriceEstimate corrected_price(const PathEnsemble& q, const PayoffSpec& payoff) {
    require(q, Measure::Q, "corrected_price");
    Decomposed d = decompose(q, payoff);
    PriceEstimate r = from_samples(std::move(d.main), Method::Corrected, payoff.name);
    r.main_term = r.as_estimate();
    r.default_term = Estimate{0.0, 0.0, r.n_paths};
    return r;
}

SimParams with_dates(SimParams params, const std::vector<double>& times) {
    for (double t : times) {
        params.horizon = std::max(params.horizon, t);
        params.record_times.push_back(t);
    }
    std::sort(params.record_times.begin(), params.record_times.end());
    params.record_times.erase(std::unique(params.record_times.begin(), params.record_times.end()),
                              params.record_times.end());
    return params;
}

PriceEstimate price_direct_p(const ModelSpec& model, const PayoffSpec& payoff, SimParams params) {
    return price_direct_p(simulate_p(model, with_dates(std::move(params), payoff.times)), payoff);
}

PriceEstimate price_survival_q(const ModelSpec& model, const PayoffSpec& payoff, SimParams params) {
    return price_survival_q(simulate_q(model, with_dates(std::move(params), payoff.times)), payoff);
}

PriceEstimate price_decomposition_q(const ModelSpec& model, const PayoffSpec& payoff,
                                    SimParams params) {
    return price_decomposition_q(simulate_q(model, with_dates(std::move(params), payoff.times)),
                                 payoff);
}

PriceEstimate corrected_price(const ModelSpec& model, const PayoffSpec& payoff, SimParams params) {
    return corrected_price(simulate_q(model, with_dates(std::move(params), payoff.times)), payoff);
}

BubbleTerm bubble_term(const PathEnsemble& q, double t, double T) {
    require(q, Measure::Q, "bubble_term");
    if (!(0.0 <= t && t <= T)) throw ConfigError("bubble term needs 0 <= t <= T");
    if (T > q.grid.back() * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "bubble term horizon " << T << " exceeds the simulated horizon " << q.grid.back();
        throw RangeError(os.str());
    }
    std::size_t hits = 0;
    for (const auto& c : q.clocks)
        if (c.tau_x > t && c.tau_x <= T) ++hits;
    const Estimate f = frequency(hits, q.n_paths);
    return {t, T, f.mean, f.std_err};
}

BubbleTerm bubble_term(const ModelSpec& model, double t, double T, SimParams params) {
    params.horizon = std::max(params.horizon, T);
    if (params.record_times.empty()) params.record_times = {T};
    return bubble_term(simulate_q(model, params), t, T);
}

PriceEstimate reweight_price(const PathEnsemble& q, double t,
                             const std::function<double(double)>& functional) {
    require(q, Measure::Q, "reweight_price");
    const std::size_t k = q.index_of(t);
    std::vector<double> samples(q.n_paths);
    for (std::size_t i = 0; i < q.n_paths; ++i) {
        const double x = q.value(i, k);
        samples[i] = x == kInf ? 0.0 : functional(x) / x;
    }
    return from_samples(std::move(samples), Method::SurvivalQ, "reweighted functional");
}

}  // namespace bubblelab
