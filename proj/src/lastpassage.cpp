#include "bubblelab/lastpassage.hpp"

#include <algorithm>
#include <sstream>

#include "bubblelab/errors.hpp"
#include "bubblelab/model.hpp"
#include "bubblelab/sde_engine.hpp"

namespace bubblelab {

LastPassageRecord detect_rho(std::span<const double> values, std::span<const double> grid,
                             double level, std::size_t stop) {
    LastPassageTracker tr(level);
    if (values.empty()) return tr.record();
    stop = std::min(stop, values.size() - 1);
    tr.start(values[0]);
    for (std::size_t i = 1; i <= stop; ++i) tr.step(grid[i], values[i - 1], values[i]);
    return tr.record();
}

LastPassageRecord detect_rho(std::span<const double> values, std::span<const double> grid,
                             double level) {
    return detect_rho(values, grid, level, values.empty() ? 0 : values.size() - 1);
}

ExchangeSamples exchange_samples(const TwoAssetEnsemble& q, double K, double T) {
    if (q.measure != Measure::Q) throw PreconditionError("exchange payoffs need a Q-ensemble");
    if (K < 0.0 || T < 0.0) throw ConfigError("exchange option needs K >= 0 and T >= 0");
    const PathEnsemble& zs = q.second;
    const double horizon = zs.grid.back();
    if (T > horizon * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "maturity " << T << " exceeds the simulated horizon " << horizon;
        throw RangeError(os.str());
    }
    std::size_t lvl = 0;
    if (K > 0.0) lvl = zs.level_index(zs.levels.rho, 1.0 / K);
    const std::size_t last = zs.grid.size() - 1;

    ExchangeSamples out;
    out.european.resize(zs.n_paths);
    out.american.resize(zs.n_paths);
    out.defaulted.resize(zs.n_paths);
    for (std::size_t p = 0; p < zs.n_paths; ++p) {
        const double tau = zs.clocks[p].tau_x;
        const double z_end = zs.value(p, last);
        const double weight = std::max(0.0, 1.0 - K * z_end);
        double rho = 0.0;
        if (K > 0.0) {
            const LastPassageRecord& r = zs.clocks[p].rho[lvl];
            rho = r.time;
            if (r.crossed && rho > tau) ++out.inclusion_violations;
        }
        out.defaulted[p] = tau <= T ? 1.0 : 0.0;
        if (tau <= horizon) {
            out.european[p] = (rho <= T && T < tau) ? weight : 0.0;
            out.american[p] = rho <= std::min(tau, T) ? weight : 0.0;
        } else {
            ++out.alive_at_horizon;
            const double v = rho <= T ? weight : 0.0;
            out.european[p] = v;
            out.american[p] = v;
        }
    }
    return out;
}

namespace {

bool second_asset_is_true_martingale(const ModelSpec& m) {
    if (m.gamma_power) return m.gamma_power->scale == 0.0 || m.gamma_power->exponent <= 1.0;
    try {
        return !classify_strictness(natural_scale(m.gamma, m.y0, m.name + ":Y")).strict;
    } catch (const Error&) {
        return false;
    }
}

}  // namespace

PremiumReport premium_identity_check(const ModelSpec& model, const TwoAssetEnsemble& q, double K,
                                     double T) {
    if (!second_asset_is_true_martingale(model))
        throw PreconditionError("premium identity needs Y to be a true martingale; " + model.name +
                                " has a strict or unclassifiable second asset");
    const ExchangeSamples s = exchange_samples(q, K, T);
    std::vector<double> diff(s.european.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = s.american[i] - s.european[i];

    PremiumReport r;
    r.premium = estimate(diff);
    r.default_mass = estimate(s.defaulted);
    r.european = estimate(s.european);
    r.american = estimate(s.american);
    r.inclusion_violations = s.inclusion_violations;
    r.consistent = agree(r.premium, r.default_mass) && r.inclusion_violations == 0;
    return r;
}

}  // namespace bubblelab
