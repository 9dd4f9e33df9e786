#include "bubblelab/multivariate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bubblelab/errors.hpp"
#include "bubblelab/rng.hpp"
#include "bubblelab/sde_engine.hpp"
#include "parallel.hpp"

namespace bubblelab {

namespace {

constexpr double kMinDeterminant = 1e-14;

std::size_t grid_index(const std::vector<double>& grid, double t, double dt) {
    const double tol = std::max(dt * 1e-9, 1e-12);
    auto it = std::lower_bound(grid.begin(), grid.end(), t - tol);
    if (it == grid.end() || std::abs(*it - t) > tol) {
        std::ostringstream os;
        os << "time " << t << " is not on the recorded grid";
        throw RangeError(os.str());
    }
    return static_cast<std::size_t>(it - grid.begin());
}

std::vector<double> grid_times(const std::vector<std::size_t>& steps, double dt) {
    std::vector<double> g(steps.size());
    for (std::size_t i = 0; i < steps.size(); ++i) g[i] = static_cast<double>(steps[i]) * dt;
    return g;
}

}  // namespace

JointIntegrands joint_integrands(double x, double y, double f, double g, double h) {
    const double det = f * g - h * h;
    if (!(det >= kMinDeterminant)) {
        std::ostringstream os;
        os << "f g - h^2 = " << det << " at X = " << x << ", Y = " << y << " (f = " << f
           << ", g = " << g << ", h = " << h << ")";
        throw SingularityError(os.str());
    }
    const double den = y * x * det;
    return {(f * y - h * x) * g / den, (g * x - h * y) * f / den};
}

std::size_t JointEnsemble::index_of(double t) const {
    return grid_index(grid, t, grid.size() > 1 ? grid[1] - grid[0] : 1.0);
}

JointEnsemble simulate_joint_exponential(const ModelSpec& model, const SimParams& params,
                                         double cap) {
    if (model.kind != ModelKind::TwoAssetCorrelated)
        throw UnsupportedError("the joint exponential needs a TwoAssetCorrelated model");
    if (!(cap >= 1.0)) throw ConfigError("cap n must be at least 1");
    validate(model);
    const std::size_t steps = checked_steps(params.horizon, params.dt);
    const std::vector<std::size_t> rec = record_steps(params, steps);

    JointEnsemble e;
    e.cap = cap;
    e.x0 = model.x0;
    e.y0 = model.y0;
    e.grid = grid_times(rec, params.dt);
    e.n_paths = params.n_paths;
    const std::size_t g = rec.size();
    e.weight.assign(e.n_paths * g, 0.0);
    e.x.assign(e.n_paths * g, 0.0);
    e.y.assign(e.n_paths * g, 0.0);
    e.tau.assign(e.n_paths, kInf);

    struct PathState {
        double m = 0.0, qv = 0.0, w = 1.0, x = 0.0, y = 0.0;
        std::size_t k = 1;
        bool stopped = false;
    };
    std::vector<PathState> st(e.n_paths);
    for (std::size_t p = 0; p < e.n_paths; ++p) {
        st[p].x = model.x0;
        st[p].y = model.y0;
        e.weight[e.at(p, 0)] = 1.0;
        e.x[e.at(p, 0)] = model.x0;
        e.y[e.at(p, 0)] = model.y0;
    }
    const double dt = params.dt;
    const double sq = std::sqrt(dt);
    const double rho = model.rho;

    auto observer = [&](const StepView& v) {
        PathState& s = st[v.path];
        if (!s.stopped) {
            const double sx = model.sigma(v.first_prev);
            const double gy = model.gamma(v.second_prev);
            const double f = sx * sx, gg = gy * gy, h = rho * sx * gy;
            const JointIntegrands a = joint_integrands(v.first_prev, v.second_prev, f, gg, h);
            const double dm = (a.a_x * sx * v.z_first + a.a_y * gy * v.z_second) * sq;
            s.m += dm;
            s.qv += (a.a_x * a.a_x * f + 2.0 * a.a_x * a.a_y * h + a.a_y * a.a_y * gg) * dt;
            s.w = std::exp(s.m - 0.5 * s.qv);
            s.x = v.first;
            s.y = v.second;
            const double t = static_cast<double>(v.step) * dt;
            if (s.w > cap || t >= cap - 1e-12) {
                s.stopped = true;
                e.tau[v.path] = std::min(t, cap);
            }
        }
        for (; s.k < g && rec[s.k] == v.step; ++s.k) {
            e.weight[e.at(v.path, s.k)] = s.w;
            e.x[e.at(v.path, s.k)] = s.x;
            e.y[e.at(v.path, s.k)] = s.y;
        }
    };
    // The weights need the normal drivers of each step, which only the correlated
    // schemes expose.
    SimParams sim = params;
    sim.exact_schemes = false;
    const TwoAssetEnsemble paths = simulate_two_asset(model, Measure::P, sim, {}, observer);
    e.diagnostics = paths.first.diagnostics;
    return e;
}

std::vector<JointCheck> joint_checks(const JointEnsemble& e, const std::vector<double>& times,
                                     double k) {
    std::vector<JointCheck> out;
    std::vector<double> w(e.n_paths), ix(e.n_paths), iy(e.n_paths);
    for (double t : times) {
        const std::size_t idx = e.index_of(t);
        for (std::size_t p = 0; p < e.n_paths; ++p) {
            const std::size_t i = e.at(p, idx);
            w[p] = e.weight[i];
            ix[p] = e.weight[i] / e.x[i];
            iy[p] = e.weight[i] / e.y[i];
        }
        JointCheck c;
        c.t = t;
        c.normalization = estimate(w);
        c.inv_x = estimate(ix);
        c.inv_y = estimate(iy);
        c.normalized = within(c.normalization, 1.0, k);
        c.constant = within(c.inv_x, 1.0 / e.x0, k) && within(c.inv_y, 1.0 / e.y0, k);
        out.push_back(c);
    }
    return out;
}

std::size_t KelvinEnsemble::index_of(double t) const {
    return grid_index(grid, t, grid.size() > 1 ? grid[1] - grid[0] : 1.0);
}

KelvinEnsemble kelvin_inversion(int dim, double cap, const SimParams& params, double window,
                                std::vector<double> start) {
    if (dim < 3) throw UnsupportedError("Kelvin inversion needs dimension d >= 3");
    if (!(cap >= 1.0)) throw ConfigError("cap n must be at least 1");
    if (!(window > 0.0)) throw ConfigError("covariation window must be positive");
    const auto d = static_cast<std::size_t>(dim);
    if (start.empty()) {
        start.assign(d, 0.0);
        start[0] = 1.0;
    }
    if (start.size() != d) throw ConfigError("start point has the wrong dimension");
    double r0 = 0.0;
    for (double s : start) r0 += s * s;
    r0 = std::sqrt(r0);
    if (!(r0 > 1.0 / cap)) throw ConfigError("start point lies inside the stopping ball");

    const std::size_t steps = checked_steps(params.horizon, params.dt);
    const std::vector<std::size_t> rec = record_steps(params, steps);
    KelvinEnsemble e;
    e.dim = dim;
    e.cap = cap;
    e.window = window;
    e.start = start;
    e.grid = grid_times(rec, params.dt);
    e.n_paths = params.n_paths;
    const std::size_t g = rec.size();
    e.y.assign(e.n_paths * g * d, 0.0);
    e.weight.assign(e.n_paths * g, 0.0);
    e.tau.assign(e.n_paths, kInf);
    e.covariation.assign(e.n_paths * d * d, 0.0);

    const double dt = params.dt;
    const double sq = std::sqrt(dt);
    const double w0 = std::pow(r0, 2.0 - dim);
    const double inner = 1.0 / cap;

    detail::for_path_ranges(e.n_paths, params.workers, [&](std::size_t, std::size_t begin,
                                                            std::size_t end) {
        std::vector<double> b(d), y(d), py(d);
        for (std::size_t p = begin; p < end; ++p) {
            PathRng rng(params.seed, params.first_path_id + p);
            b = start;
            for (std::size_t i = 0; i < d; ++i) y[i] = b[i] / (r0 * r0);
            double w = 1.0;
            bool stopped = false;
            double* cov = e.covariation.data() + p * d * d;
            auto record = [&](std::size_t k) {
                std::copy(y.begin(), y.end(), e.y.begin() + static_cast<std::ptrdiff_t>((p * g + k) * d));
                e.weight[p * g + k] = w;
            };
            record(0);
            std::size_t k = 1;
            for (std::size_t n = 1; n <= steps; ++n) {
                const double t = static_cast<double>(n) * dt;
                if (!stopped) {
                    double r2 = 0.0;
                    for (std::size_t i = 0; i < d; ++i) {
                        b[i] += sq * rng.normal();
                        r2 += b[i] * b[i];
                    }
                    py = y;
                    for (std::size_t i = 0; i < d; ++i) y[i] = b[i] / r2;
                    const double r = std::sqrt(r2);
                    w = std::pow(r, 2.0 - dim) / w0;
                    if (t <= window + 1e-12) {
                        for (std::size_t i = 0; i < d; ++i)
                            for (std::size_t j = 0; j < d; ++j)
                                cov[i * d + j] += (y[i] - py[i]) * (y[j] - py[j]);
                    }
                    if (r <= inner) {
                        stopped = true;
                        e.tau[p] = t;
                    }
                }
                for (; k < g && rec[k] == n; ++k) record(k);
            }
        }
    });
    return e;
}

std::vector<KelvinCheck> kelvin_checks(const KelvinEnsemble& e, const std::vector<double>& times,
                                       double k) {
    const auto d = static_cast<std::size_t>(e.dim);
    double r2 = 0.0;
    for (double s : e.start) r2 += s * s;
    std::vector<KelvinCheck> out;
    std::vector<double> s(e.n_paths);
    for (double t : times) {
        const std::size_t idx = e.index_of(t);
        KelvinCheck c;
        c.t = t;
        c.constant = true;
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t p = 0; p < e.n_paths; ++p)
                s[p] = e.weight[p * e.grid.size() + idx] * e.component(p, idx, static_cast<int>(i));
            c.components.push_back(estimate(s));
            c.constant = c.constant && within(c.components.back(), e.start[i] / r2, k);
        }
        out.push_back(std::move(c));
    }
    return out;
}

ConformalCheck conformal_check(const KelvinEnsemble& e, double k) {
    const auto d = static_cast<std::size_t>(e.dim);
    ConformalCheck c;
    c.conformal = true;
    std::vector<double> s(e.n_paths);
    auto entry = [&](std::size_t p, std::size_t i, std::size_t j) {
        return e.covariation[p * d * d + i * d + j];
    };
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t p = 0; p < e.n_paths; ++p) s[p] = entry(p, i, i);
        c.diagonal.push_back(estimate(s));
    }
    for (std::size_t i = 1; i < d; ++i) {
        for (std::size_t p = 0; p < e.n_paths; ++p) s[p] = entry(p, i, i) - entry(p, 0, 0);
        c.diagonal_gaps.push_back(estimate(s));
        c.conformal = c.conformal && within(c.diagonal_gaps.back(), 0.0, k);
    }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) {
            for (std::size_t p = 0; p < e.n_paths; ++p) s[p] = entry(p, i, j);
            c.off_diagonal.push_back(estimate(s));
            c.conformal = c.conformal && within(c.off_diagonal.back(), 0.0, k);
        }
    return c;
}

}  // namespace bubblelab
