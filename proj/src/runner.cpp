#include "bubblelab/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include "bubblelab/bes3.hpp"
#include "bubblelab/errors.hpp"
#include "bubblelab/normal.hpp"
#include "bubblelab/pricers.hpp"

namespace bubblelab {

namespace {

using Clock = std::chrono::steady_clock;

// Q paths use ids from here on so that they never share a stream with P paths.
constexpr std::uint64_t kQPathOffset = std::uint64_t{1} << 40;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double grid_ceil(double t, double dt) { return std::ceil(t / dt - 1e-9) * dt; }

void add_unique(std::vector<double>& v, double x) {
    if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}

bool is_down(Barrier b) { return b == Barrier::DI || b == Barrier::DO; }

SimParams base_params(const ExperimentConfig& c) {
    SimParams s;
    s.dt = c.sim.dt;
    s.n_paths = c.sim.n_paths;
    s.seed = c.sim.seed;
    s.workers = c.sim.workers;
    s.absorption_bridge = c.sim.absorption_bridge;
    s.exact_schemes = c.sim.exact_schemes;
    return s;
}

PayoffSpec single_payoff(const PayoffConfig& p, const ModelSpec& model) {
    if (p.type == "call") return call_payoff(p.K, p.T);
    if (p.type == "put") return put_payoff(p.K, p.T);
    if (p.type == "bounded") return bounded_payoff(p.cap, p.T);
    if (p.type == "forward") return forward_payoff(p.T);
    if (p.type == "unit") return unit_payoff(p.T);
    if (p.type == "reset_call") return reset_call_payoff(p.K, p.resets, p.T);
    if (p.type == "ratio_call") return ratio_call_payoff(p.K, p.S, p.T);
    if (p.type == "chooser") return chooser_payoff(p.K, p.S, p.T, conditional_mean(model));
    if (p.type == "barrier") return p.underlying == "put" ? put_payoff(p.K, p.T) : call_payoff(p.K, p.T);
    throw UnsupportedError("payoff " + p.type + " is not a single-asset payoff");
}

RealWorldPayoff real_world_payoff(const PayoffConfig& p) {
    if (p.type == "real_world_call") return real_world_call(p.K);
    if (p.type == "real_world_put") return real_world_put(p.K);
    return real_world_forward();
}

PriceEstimate closed_estimate(double v) {
    PriceEstimate e;
    e.value = v;
    e.method = Method::ClosedForm;
    return e;
}

[[noreturn]] void no_method(const PayoffConfig& p, Method m) {
    throw UnsupportedError("method " + to_string(m) + " is not available for " + p.label());
}

// Shared ensembles, simulated on first use.
class Context {
public:
    explicit Context(const ExperimentConfig& c) : c_(c), model_(c.model.build()) {
        single_ = base_params(c);
        double latest = 0.0;
        double latest_exchange = 0.0;
        two_ = base_params(c);
        for (const auto& p : c.payoffs) {
            if (p.two_asset()) {
                for (double t : p.dates()) add_unique(two_.record_times, t);
                latest_two_ = std::max(latest_two_, p.T);
                if (p.type == "exchange") {
                    latest_exchange = std::max(latest_exchange, p.T);
                    if (p.K > 0.0) add_unique(z_levels_.rho, 1.0 / p.K);
                }
            } else {
                for (double t : p.dates()) add_unique(single_.record_times, t);
                latest = std::max(latest, p.T);
                if (p.type == "barrier")
                    add_unique(is_down(p.barrier) ? single_.levels.below : single_.levels.above,
                               p.level);
            }
        }
        single_.horizon = c.sim.horizon > 0.0 ? c.sim.horizon : latest;
        std::sort(single_.record_times.begin(), single_.record_times.end());
        std::sort(two_.record_times.begin(), two_.record_times.end());
        two_.horizon = std::max(c.sim.horizon > 0.0 ? c.sim.horizon : latest_two_,
                                grid_ceil(c.sim.horizon_sim_multiplier * latest_exchange, c.sim.dt));
    }

    const ModelSpec& model() const { return model_; }

    const PathEnsemble& p() {
        if (!p_) p_ = simulate_p(model_, single_);
        return *p_;
    }
    const PathEnsemble& q() {
        if (!q_) {
            SimParams s = single_;
            s.first_path_id = kQPathOffset;
            q_ = simulate_q(model_, s);
        }
        return *q_;
    }
    const TwoAssetEnsemble& p2() {
        if (!p2_) {
            SimParams s = two_;
            s.horizon = c_.sim.horizon > 0.0 ? c_.sim.horizon : latest_two_;
            p2_ = simulate_two_asset(model_, Measure::P, s);
        }
        return *p2_;
    }
    const TwoAssetEnsemble& q2() {
        if (!q2_) {
            SimParams s = two_;
            s.first_path_id = kQPathOffset;
            q2_ = simulate_two_asset(model_, Measure::Q, s, z_levels_);
        }
        return *q2_;
    }

    SimDiagnostics p_diagnostics() const {
        SimDiagnostics d;
        if (p_) d = p_->diagnostics;
        if (p2_) add(d, p2_->first.diagnostics);
        return d;
    }
    SimDiagnostics q_diagnostics() const {
        SimDiagnostics d;
        if (q_) d = q_->diagnostics;
        if (q2_) add(d, q2_->first.diagnostics);
        return d;
    }

    bool has_single_q() const { return q_.has_value(); }
    bool has_single_p() const { return p_.has_value(); }

private:
    static void add(SimDiagnostics& a, const SimDiagnostics& b) {
        a.floor_hits += b.floor_hits;
        a.bridge_absorptions += b.bridge_absorptions;
        a.explosion_flags += b.explosion_flags;
    }

    const ExperimentConfig& c_;
    ModelSpec model_;
    SimParams single_;
    SimParams two_;
    double latest_two_ = 0.0;
    EventLevels z_levels_;
    std::optional<PathEnsemble> p_, q_;
    std::optional<TwoAssetEnsemble> p2_, q2_;
};

bool is_bes3(const ModelSpec& m) {
    return m.kind == ModelKind::InverseBes3 ||
           (m.sigma_power && m.sigma_power->exponent == 2.0 && m.sigma_power->scale == 1.0);
}

double bes3_default_mass(double x0, double T) { return 2.0 * norm_cdf(-1.0 / (x0 * std::sqrt(T))); }

PriceEstimate single_cell(Context& ctx, const PayoffConfig& p, Method m) {
    const ModelSpec& model = ctx.model();
    if (p.type == "barrier") {
        const BarrierReport r =
            barrier_price(ctx.p(), ctx.q(), single_payoff(p, model), p.barrier, p.level);
        if (m == Method::DirectP) return r.left;
        if (m == Method::DecompositionQ) return r.right;
        no_method(p, m);
    }
    const PayoffSpec spec = single_payoff(p, model);
    switch (m) {
        case Method::DirectP: return price_direct_p(ctx.p(), spec);
        case Method::SurvivalQ: return price_survival_q(ctx.q(), spec);
        case Method::DecompositionQ: return price_decomposition_q(ctx.q(), spec);
        case Method::Corrected: return corrected_price(ctx.q(), spec);
        case Method::ClosedForm: break;
    }
    if (is_bes3(model) && model.kind != ModelKind::TwoAssetCorrelated) {
        const double x = model.x0;
        if (p.type == "unit") return closed_estimate(1.0);
        if (p.T > 0.0) {
            if (p.type == "forward") return closed_estimate(bes3_mean(x, p.T));
            if (p.type == "call" && p.K > 0.0) return closed_estimate(bes3_call_closed(x, p.K, p.T));
            if (p.type == "put" && p.K > 0.0)
                return closed_estimate(bes3_call_closed(x, p.K, p.T) - bes3_mean(x, p.T) + p.K);
        }
    }
    throw UnsupportedError("no closed form for " + p.label() + " on " + model.name);
}

PriceEstimate two_asset_cell(Context& ctx, const PayoffConfig& p, Method m) {
    const ModelSpec& model = ctx.model();
    const bool american = p.style == Style::American;
    if (p.type == "exchange") {
        switch (m) {
            case Method::SurvivalQ: return exchange_lastpassage(ctx.q2(), p.K, p.T, p.style).price;
            case Method::DirectP:
                if (american) no_method(p, m);
                return exchange_direct_p(ctx.p2(), p.K, p.T);
            case Method::ClosedForm: {
                const bool x_bes3 = model.sigma_power && model.sigma_power->exponent == 2.0 &&
                                    model.sigma_power->scale == 1.0;
                const bool y_one = model.gamma_power && model.gamma_power->scale == 0.0 &&
                                   model.y0 == 1.0;
                const bool y_bes3 = model.gamma_power && model.gamma_power->exponent == 2.0 &&
                                    model.gamma_power->scale == 1.0 && model.y0 == 1.0 &&
                                    model.rho == 0.0;
                if (x_bes3 && y_one && p.K > 0.0 && p.T > 0.0) {
                    const double e = bes3_call_closed(model.x0, p.K, p.T);
                    return closed_estimate(american ? e + bes3_default_mass(model.x0, p.T) : e);
                }
                if (x_bes3 && y_bes3 && !american && p.T > 0.0)
                    return closed_estimate(exchange_closed_bes3(model.x0, p.K, p.T));
                throw UnsupportedError("no closed form for " + p.label() + " on " + model.name);
            }
            default: no_method(p, m);
        }
    }
    const RealWorldPayoff payoff = real_world_payoff(p);
    switch (m) {
        case Method::DirectP:
            if (american) no_method(p, m);
            return real_world_direct_p(ctx.p2(), payoff, p.T);
        case Method::DecompositionQ:
            if (american) no_method(p, m);
            return real_world_price(ctx.q2(), payoff, p.T, Style::European).european;
        case Method::SurvivalQ:
            if (!american) no_method(p, m);
            return real_world_price(ctx.q2(), payoff, p.T, Style::American).american;
        default: no_method(p, m);
    }
}

bool comparable(Method m) { return m != Method::Corrected; }

void flag_consistency(std::vector<PriceRow>& rows, std::size_t begin) {
    std::vector<std::size_t> idx;
    for (std::size_t i = begin; i < rows.size(); ++i)
        if (rows[i].error.empty() && comparable(method_from_string(rows[i].method))) idx.push_back(i);
    if (idx.size() < 2) return;
    bool ok = true;
    for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = a + 1; b < idx.size(); ++b) {
            const Estimate ea{*rows[idx[a]].value, *rows[idx[a]].std_err, 0};
            const Estimate eb{*rows[idx[b]].value, *rows[idx[b]].std_err, 0};
            ok = ok && agree(ea, eb);
        }
    for (std::size_t i : idx) rows[i].consistent = ok;
}

std::string style_of(const PayoffConfig& p) {
    return p.two_asset() ? to_string(p.style) : "european";
}

nlohmann::json diagnostics_json(const SimDiagnostics& d) {
    return {{"floor_hits", d.floor_hits},
            {"bridge_absorptions", d.bridge_absorptions},
            {"explosion_flags", d.explosion_flags}};
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& c) {
    const auto t0 = Clock::now();
    RunReport r;
    r.config_hash = sha256_hex(c.text);
    r.seed = c.sim.seed;
    Context ctx(c);
    r.model = ctx.model().name;
    for (const auto& p : c.payoffs) {
        const std::size_t begin = r.rows.size();
        for (Method m : c.methods) {
            const auto tc = Clock::now();
            PriceRow row;
            try {
                const PriceEstimate e = p.two_asset() ? two_asset_cell(ctx, p, m) : single_cell(ctx, p, m);
                row = make_row(p.label(), r.model, p.K, p.T, style_of(p), e);
                row.method = to_string(m);
            } catch (const Error& err) {
                row.pricer = p.label();
                row.model = r.model;
                row.K = p.K;
                row.T = p.T;
                row.style = style_of(p);
                row.method = to_string(m);
                row.error = err.what();
            }
            row.seconds = seconds_since(tc);
            r.rows.push_back(std::move(row));
        }
        flag_consistency(r.rows, begin);
    }
    r.p_diagnostics = ctx.p_diagnostics();
    r.q_diagnostics = ctx.q_diagnostics();
    r.seconds = seconds_since(t0);
    return r;
}

nlohmann::json RunReport::manifest(const ExperimentConfig& c) const {
    nlohmann::json j;
    j["schema"] = kManifestSchema;
    j["config"] = {{"source", c.source}, {"sha256", config_hash}};
    j["seed"] = seed;
    j["build_id"] = build_id();
    j["model"] = model;
    j["sim"] = {{"dt", c.sim.dt},
                {"n_paths", c.sim.n_paths},
                {"horizon", c.sim.horizon},
                {"horizon_sim_multiplier", c.sim.horizon_sim_multiplier},
                {"absorption_bridge", c.sim.absorption_bridge},
                {"exact_schemes", c.sim.exact_schemes},
                {"rng", "philox4x32-10"}};
    j["diagnostics"] = {{"P", diagnostics_json(p_diagnostics)}, {"Q", diagnostics_json(q_diagnostics)}};
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json cell = {{"pricer", row.pricer},
                               {"method", row.method},
                               {"K", row.K},
                               {"T", row.T},
                               {"style", row.style},
                               {"status", row.error.empty() ? "ok" : "error"},
                               {"timing_seconds", row.seconds}};
        if (!row.error.empty()) cell["error"] = row.error;
        cells.push_back(std::move(cell));
    }
    j["cells"] = std::move(cells);
    j["timing_seconds"] = seconds;
    return j;
}

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << content;
}

}  // namespace

std::string write_outputs(const ExperimentConfig& c, const RunReport& r) {
    std::ostringstream csv;
    write_price_csv(csv, r.rows);
    if (!c.outputs.csv.empty()) write_file(c.outputs.csv, csv.str());
    if (!c.outputs.json.empty()) write_file(c.outputs.json, r.manifest(c).dump(2) + "\n");
    if (c.outputs.dump_paths) {
        const std::string stem = !c.outputs.csv.empty() ? c.outputs.csv : "bubblelab";
        Context ctx(c);
        const bool single = std::any_of(c.payoffs.begin(), c.payoffs.end(),
                                        [](const PayoffConfig& p) { return !p.two_asset(); });
        if (single) {
            for (const PathEnsemble* e : {&ctx.p(), &ctx.q()}) {
                const std::string base = stem + ".paths_" + to_string(e->measure);
                std::ostringstream os;
                write_path_csv(os, *e);
                write_file(base + ".csv", os.str());
                write_file(base + ".json", path_sidecar(*e).dump(2) + "\n");
            }
        }
        if (std::any_of(c.payoffs.begin(), c.payoffs.end(),
                        [](const PayoffConfig& p) { return p.type == "exchange"; })) {
            std::ostringstream os;
            write_clock_csv(os, ctx.q2().second);
            write_file(stem + ".clocks_Q.csv", os.str());
        }
    }
    return csv.str();
}

std::vector<VerifyLine> verify_experiment(const ExperimentConfig& c) {
    std::vector<VerifyLine> out;
    const RunReport r = run_experiment(c);
    const std::size_t block = c.methods.size();
    for (std::size_t i = 0; i + block <= r.rows.size() && block > 0; i += block) {
        const PriceRow& head = r.rows[i];
        std::ostringstream name;
        name << head.pricer << " K=" << format_number(head.K) << " T=" << format_number(head.T)
             << ' ' << head.style;
        std::ostringstream detail;
        std::optional<bool> ok;
        for (std::size_t k = i; k < i + block; ++k) {
            const PriceRow& row = r.rows[k];
            if (!row.error.empty()) continue;
            detail << row.method << '=' << format_number(*row.value) << "+-"
                   << format_number(*row.std_err) << ' ';
            if (row.consistent) ok = *row.consistent;
        }
        if (ok) out.push_back({name.str() + " method agreement", *ok, detail.str()});
    }

    // Model-level identities on fresh ensembles.
    const ModelSpec model = c.model.build();
    SimParams s = base_params(c);
    std::vector<double> dates = {0.25, 0.5, 1.0};
    s.horizon = 1.0;
    s.record_times = dates;
    if (model.kind != ModelKind::TwoAssetCorrelated && model.kind != ModelKind::TimeChangedMartingale) {
        const PathEnsemble p = simulate_p(model, s);
        SimParams sq = s;
        sq.first_path_id = kQPathOffset;
        const PathEnsemble q = simulate_q(model, sq);
        for (double t : dates) {
            const Estimate pm = estimate(p.column(p.index_of(t)));
            std::size_t alive = 0;
            std::vector<double> v(q.n_paths);
            const std::size_t k = q.index_of(t);
            for (std::size_t i = 0; i < q.n_paths; ++i) {
                if (!q.absorbed_by(i, t)) ++alive;
                v[i] = q.reciprocal(i, k);
            }
            const Estimate surv = frequency(alive, q.n_paths);
            std::ostringstream os;
            os << "E^P X_t=" << format_number(pm.mean) << "+-" << format_number(pm.std_err)
               << " Q(tau>t)=" << format_number(surv.mean) << "+-" << format_number(surv.std_err);
            out.push_back({"mass identity t=" + format_number(t), agree(pm, surv), os.str()});
            const Estimate vm = estimate(v);
            std::ostringstream ov;
            ov << "E^Q[1/X_t]=" << format_number(vm.mean) << "+-" << format_number(vm.std_err)
               << " target " << format_number(1.0 / model.x0);
            out.push_back({"Q-martingale 1/X t=" + format_number(t), within(vm, 1.0 / model.x0), ov.str()});
        }
    }
    if (model.kind == ModelKind::TwoAssetCorrelated) {
        const TwoAssetEnsemble q = simulate_two_asset(model, Measure::Q, s);
        const std::size_t flags = q.first.diagnostics.explosion_flags;
        out.push_back({"no explosion of Y before tau_X", flags == 0,
                       std::to_string(flags) + " flagged paths"});
        for (const auto& p : c.payoffs) {
            if (p.type != "exchange" || p.K <= 0.0) continue;
            SimParams sx = base_params(c);
            sx.horizon = grid_ceil(c.sim.horizon_sim_multiplier * p.T, c.sim.dt);
            sx.record_times = {p.T};
            sx.first_path_id = kQPathOffset;
            EventLevels zl;
            zl.rho = {1.0 / p.K};
            try {
                const TwoAssetEnsemble qx = simulate_two_asset(model, Measure::Q, sx, zl);
                const PremiumReport pr = premium_identity_check(model, qx, p.K, p.T);
                std::ostringstream os;
                os << "A-E=" << format_number(pr.premium.mean) << "+-" << format_number(pr.premium.std_err)
                   << " Q(tau<=T)=" << format_number(pr.default_mass.mean)
                   << " rho>tau violations=" << pr.inclusion_violations;
                out.push_back({"exchange premium identity K=" + format_number(p.K) + " T=" + format_number(p.T),
                               pr.consistent, os.str()});
            } catch (const PreconditionError& e) {
                out.push_back({"exchange premium identity K=" + format_number(p.K) + " skipped", true, e.what()});
            }
        }
    }
    return out;
}

std::vector<AsymptoticsCell> asymptotics_table(const std::vector<double>& strikes,
                                               const std::vector<double>& maturities,
                                               const SimParams& params, double horizon_multiplier) {
    const ModelSpec model = two_asset(2.0, 0.0, 0.0, 0.0);
    std::vector<AsymptoticsCell> out;
    for (double T : maturities) {
        SimParams s = params;
        s.horizon = grid_ceil(horizon_multiplier * T, params.dt);
        s.record_times = {T};
        EventLevels zl;
        for (double K : strikes)
            if (K > 0.0) zl.rho.push_back(1.0 / K);
        const TwoAssetEnsemble q = simulate_two_asset(model, Measure::Q, s, zl);
        for (double K : strikes) {
            AsymptoticsCell cell;
            cell.K = K;
            cell.T = T;
            cell.european_closed = bes3_call_closed(model.x0, K, T);
            cell.american_closed = cell.european_closed + bes3_default_mass(model.x0, T);
            const ExchangeEstimate e = exchange_lastpassage(q, K, T, Style::European);
            const ExchangeEstimate a = exchange_lastpassage(q, K, T, Style::American);
            cell.european = e.price.as_estimate();
            cell.american = a.price.as_estimate();
            cell.tail_mass = e.tail_mass;
            out.push_back(cell);
        }
    }
    return out;
}

}  // namespace bubblelab
