#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace bubblelab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Measure { P, Q };

std::string to_string(Measure m);

// Levels monitored at every simulation step. Each EventClock stores one entry
// per level, in the order given here.
struct EventLevels {
    std::vector<double> below;  // T_a = inf{t : X_t <= a}
    std::vector<double> above;  // tau_a = inf{t : X_t > a}
    std::vector<double> rho;    // last passage sup{t : X_t = level}
    std::vector<double> caps;   // tau_n = inf{t : X_t > n} ^ n
};

struct LastPassageRecord {
    double level = 0.0;
    double time = 0.0;  // 0 when the level is never attained
    bool crossed = false;
};

struct EventClock {
    double tau_x = kInf;  // explosion time; Q only
    std::vector<double> tau_n;
    std::vector<double> first_below;
    std::vector<double> first_above;
    std::vector<double> running_min;  // one entry per recorded grid point
    std::vector<double> running_max;
    std::vector<LastPassageRecord> rho;
};

struct SimDiagnostics {
    std::size_t floor_hits = 0;          // P: Euler proposals reflected to the positivity floor
    std::size_t bridge_absorptions = 0;  // Q: absorptions detected by the bridge test only
    std::size_t explosion_flags = 0;     // two-asset Q: paths on which Y passed 1e10
};

// A batch of simulated paths. Values are recorded on `grid`, a subset of the
// uniform simulation grid k * dt; events are monitored at every step. Under Q,
// values are X = 1/V with X = +inf from the explosion time on.
class PathEnsemble {
public:
    Measure measure = Measure::P;
    double dt = 0.0;
    std::size_t steps = 0;
    std::vector<double> grid;
    std::vector<std::size_t> grid_steps;
    std::size_t n_paths = 0;
    std::vector<double> values;  // row-major, n_paths x grid.size()
    EventLevels levels;
    std::vector<EventClock> clocks;
    std::uint64_t seed = 0;
    std::uint64_t first_path_id = 0;  // path i used substream first_path_id + i
    std::string model_name;
    SimDiagnostics diagnostics;

    std::size_t grid_size() const noexcept { return grid.size(); }
    double horizon() const noexcept { return static_cast<double>(steps) * dt; }

    double value(std::size_t path, std::size_t idx) const noexcept {
        return values[path * grid.size() + idx];
    }
    double& value(std::size_t path, std::size_t idx) noexcept {
        return values[path * grid.size() + idx];
    }
    std::span<const double> path(std::size_t p) const noexcept {
        return {values.data() + p * grid.size(), grid.size()};
    }

    // 1/X with the convention 1/inf = 0.
    double reciprocal(std::size_t path, std::size_t idx) const noexcept {
        const double x = value(path, idx);
        return x == kInf ? 0.0 : 1.0 / x;
    }

    bool absorbed_by(std::size_t path, double t) const noexcept { return clocks[path].tau_x <= t; }

    // Index of the recorded grid point equal to t (to within dt * 1e-9).
    // Throws RangeError if t is not on the recorded grid.
    std::size_t index_of(double t) const;

    std::vector<double> column(std::size_t idx) const;

    std::size_t level_index(const std::vector<double>& lv, double level) const;
};

// Discretisation and bookkeeping for one simulation run.
struct SimParams {
    double horizon = 1.0;
    double dt = 1e-3;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 1;
    std::vector<double> record_times;  // empty: record every step
    EventLevels levels;
    std::size_t workers = 1;
    std::uint64_t first_path_id = 0;
    double positivity_floor = 1e-12;
    // Brownian-bridge tests between grid points for absorption, barrier levels
    // and last passages.
    bool absorption_bridge = true;
    bool exact_schemes = true;  // use exact radial / lognormal schemes when the model admits them
    bool record_extrema = false;  // fill EventClock::running_min / running_max
};

// Checks dt > 0 and horizon = k * dt; returns k.
std::size_t checked_steps(double horizon, double dt);

// Recorded step indices: {0, steps} plus every record time. Throws ConfigError
// for times off the dt grid or outside [0, horizon].
std::vector<std::size_t> record_steps(const SimParams& params, std::size_t steps);

}  // namespace bubblelab
