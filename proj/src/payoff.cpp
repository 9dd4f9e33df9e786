#include "bubblelab/payoff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bubblelab/bes3.hpp"
#include "bubblelab/errors.hpp"

namespace bubblelab {

double PayoffSpec::g(std::span<const double> y) const {
    std::vector<double> x(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) x[i] = 1.0 / y[i];
    return y.back() * h(x);
}

namespace {

PathFn constant(double c) {
    return [c](std::span<const double>) { return c; };
}

std::string num(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

void check_dates(const std::vector<double>& t) {
    if (t.empty()) throw ConfigError("payoff needs at least one monitoring date");
    if (t.front() <= 0.0) throw ConfigError("payoff dates must be positive");
    for (std::size_t i = 1; i < t.size(); ++i)
        if (!(t[i] > t[i - 1])) throw ConfigError("payoff dates must be strictly increasing");
}

}  // namespace

PayoffSpec call_payoff(double K, double T) {
    PayoffSpec p;
    p.name = "call(K=" + num(K) + ",T=" + num(T) + ")";
    p.times = {T};
    check_dates(p.times);
    p.h = [K](std::span<const double> x) { return std::max(x[0] - K, 0.0); };
    p.eta = {constant(1.0)};
    return p;
}

PayoffSpec put_payoff(double K, double T) {
    PayoffSpec p;
    p.name = "put(K=" + num(K) + ",T=" + num(T) + ")";
    p.times = {T};
    check_dates(p.times);
    p.h = [K](std::span<const double> x) { return std::max(K - x[0], 0.0); };
    p.eta = {constant(0.0)};
    return p;
}

PayoffSpec reset_call_payoff(double K, const std::vector<double>& resets, double T) {
    PayoffSpec p;
    p.name = "reset_call(K=" + num(K) + ",T=" + num(T) + ",resets=" + num(resets.size()) + ")";
    p.times = resets;
    p.times.push_back(T);
    check_dates(p.times);
    p.h = [K](std::span<const double> x) {
        double strike = K;
        for (std::size_t i = 0; i + 1 < x.size(); ++i) strike = std::min(strike, x[i]);
        return std::max(x.back() - strike, 0.0);
    };
    p.eta.assign(p.times.size(), constant(1.0));
    return p;
}

PayoffSpec ratio_call_payoff(double K, double S, double T) {
    PayoffSpec p;
    p.name = "ratio_call(K=" + num(K) + ",S=" + num(S) + ",T=" + num(T) + ")";
    p.times = {S, T};
    check_dates(p.times);
    p.h = [K](std::span<const double> x) { return std::max(x[1] / x[0] - K, 0.0); };
    p.eta = {constant(0.0), [](std::span<const double> y) { return y[0]; }};
    return p;
}

ConditionalMean power2_mean(double c) {
    ConditionalMean cm;
    cm.name = "power2";
    cm.m = [c](double x, double t) { return x * std::erf(1.0 / (c * x * std::sqrt(2.0 * t))); };
    cm.limit = [c](double t) { return bes3_mean_limit(t) / c; };
    return cm;
}

ConditionalMean power15_mean(double c) {
    ConditionalMean cm;
    cm.name = "power15";
    cm.m = [c](double x, double t) { return -x * std::expm1(-2.0 / (c * c * x * t)); };
    cm.limit = [c](double t) { return 2.0 / (c * c * t); };
    return cm;
}

PayoffSpec chooser_payoff(double K, double S, double T, const ConditionalMean& mean) {
    PayoffSpec p;
    p.name = "chooser(K=" + num(K) + ",S=" + num(S) + ",T=" + num(T) + ")";
    p.times = {S, T};
    check_dates(p.times);
    const double tau = T - S;
    auto m = mean.m;
    p.h = [K, tau, m](std::span<const double> x) {
        const bool call = m(x[0], tau) >= K;
        return call ? std::max(x[1] - K, 0.0) : std::max(K - x[1], 0.0);
    };
    const double eta0 = mean.limit(tau) > K ? 1.0 : 0.0;
    p.eta = {constant(eta0), [K, tau, m](std::span<const double> y) {
                 return m(1.0 / y[0], tau) >= K ? 1.0 : 0.0;
             }};
    return p;
}

PayoffSpec chooser_payoff(double K, double S, double T) {
    return chooser_payoff(K, S, T, power2_mean());
}

PayoffSpec bounded_payoff(double c, double T) {
    PayoffSpec p;
    p.name = "bounded(c=" + num(c) + ",T=" + num(T) + ")";
    p.times = {T};
    check_dates(p.times);
    p.h = [c](std::span<const double> x) { return std::min(x[0], c); };
    p.eta = {constant(0.0)};
    return p;
}

PayoffSpec forward_payoff(double T) {
    PayoffSpec p;
    p.name = "forward(T=" + num(T) + ")";
    p.times = {T};
    check_dates(p.times);
    p.h = [](std::span<const double> x) { return x[0]; };
    p.eta = {constant(1.0)};
    return p;
}

PayoffSpec unit_payoff(double T) {
    PayoffSpec p;
    p.name = "unit(T=" + num(T) + ")";
    p.times = {T};
    check_dates(p.times);
    p.h = constant(1.0);
    p.eta = {constant(0.0)};
    return p;
}

}  // namespace bubblelab
