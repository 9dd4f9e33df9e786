#include "bubblelab/path_ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bubblelab/errors.hpp"

namespace bubblelab {

std::string to_string(Measure m) { return m == Measure::P ? "P" : "Q"; }

namespace {

double grid_tol(double dt) { return std::max(dt * 1e-9, 1e-12); }

}  // namespace

std::size_t PathEnsemble::index_of(double t) const {
    const double tol = grid_tol(dt);
    auto it = std::lower_bound(grid.begin(), grid.end(), t - tol);
    if (it == grid.end() || std::abs(*it - t) > tol) {
        std::ostringstream os;
        os << "time " << t << " is not on the recorded grid of " << model_name;
        throw RangeError(os.str());
    }
    return static_cast<std::size_t>(it - grid.begin());
}

std::vector<double> PathEnsemble::column(std::size_t idx) const {
    std::vector<double> out(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) out[p] = value(p, idx);
    return out;
}

std::size_t PathEnsemble::level_index(const std::vector<double>& lv, double level) const {
    for (std::size_t i = 0; i < lv.size(); ++i)
        if (lv[i] == level) return i;
    std::ostringstream os;
    os << "level " << level << " was not monitored in the simulation of " << model_name;
    throw RangeError(os.str());
}

std::size_t checked_steps(double horizon, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
    if (!(horizon >= 0.0) || !std::isfinite(horizon))
        throw ConfigError("horizon must be nonnegative");
    const double k = horizon / dt;
    const double r = std::round(k);
    if (std::abs(k - r) > 1e-9 * std::max(1.0, r)) {
        std::ostringstream os;
        os << "horizon " << horizon << " is not a multiple of dt " << dt;
        throw ConfigError(os.str());
    }
    return static_cast<std::size_t>(r);
}

std::vector<std::size_t> record_steps(const SimParams& params, std::size_t steps) {
    std::vector<std::size_t> out;
    if (params.record_times.empty()) {
        out.resize(steps + 1);
        for (std::size_t i = 0; i <= steps; ++i) out[i] = i;
        return out;
    }
    out.push_back(0);
    out.push_back(steps);
    for (double t : params.record_times) {
        if (t < 0.0 || t > params.horizon * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "record time " << t << " lies outside [0, " << params.horizon << "]";
            throw ConfigError(os.str());
        }
        const double k = t / params.dt;
        const double r = std::round(k);
        if (std::abs(k - r) > 1e-9 * std::max(1.0, r)) {
            std::ostringstream os;
            os << "record time " << t << " is not a multiple of dt " << params.dt;
            throw ConfigError(os.str());
        }
        out.push_back(static_cast<std::size_t>(r));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace bubblelab
