#include "bubblelab/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "bubblelab/errors.hpp"

namespace bubblelab {

namespace {

struct Preset {
    std::vector<std::string> keys;
};

const std::map<std::string, Preset>& presets() {
    static const std::map<std::string, Preset> p = {
        {"inverse_bes3", {{"x0"}}},
        {"cev", {{"alpha", "x0", "scale"}}},
        {"exp_lm", {{"x0", "factor0"}}},
        {"time_changed", {{"vol"}}},
        {"scaled_transient", {{"delta"}}},
        {"two_asset", {{"alpha_x", "alpha_y", "rho", "gamma_scale", "x0", "y0"}}},
    };
    return p;
}

double param(const std::map<std::string, double>& m, const std::string& k, double fallback) {
    const auto it = m.find(k);
    return it == m.end() ? fallback : it->second;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

class Parser {
public:
    explicit Parser(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const {
        std::ostringstream os;
        os << source_;
        const YAML::Mark m = n.Mark();
        if (m.line >= 0) os << ':' << m.line + 1 << ':' << m.column + 1;
        os << ": " << msg;
        throw ConfigError(os.str());
    }

    void check_keys(const YAML::Node& map, const std::set<std::string>& allowed,
                    const std::string& where) const {
        if (!map.IsMap()) fail(map, where + " must be a mapping");
        for (const auto& kv : map) {
            const auto key = kv.first.as<std::string>();
            if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + where);
        }
    }

    double number(const YAML::Node& n, const std::string& what) const {
        try {
            return n.as<double>();
        } catch (const YAML::Exception&) {
            fail(n, what + " must be a number");
        }
    }

    std::uint64_t unsigned_int(const YAML::Node& n, const std::string& what) const {
        const std::string s = n.IsScalar() ? n.as<std::string>() : std::string{};
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
            fail(n, what + " must be a nonnegative integer");
        try {
            return n.as<std::uint64_t>();
        } catch (const YAML::Exception&) {
            fail(n, what + " is out of range");
        }
    }

    bool boolean(const YAML::Node& n, const std::string& what) const {
        try {
            return n.as<bool>();
        } catch (const YAML::Exception&) {
            fail(n, what + " must be true or false");
        }
    }

    std::string text(const YAML::Node& n, const std::string& what) const {
        if (!n.IsScalar()) fail(n, what + " must be a string");
        return n.as<std::string>();
    }

    ModelConfig model(const YAML::Node& n) const {
        if (!n.IsMap()) fail(n, "model must be a mapping");
        if (!n["preset"]) fail(n, "model.preset is required");
        ModelConfig m;
        m.preset = text(n["preset"], "model.preset");
        const auto it = presets().find(m.preset);
        if (it == presets().end()) fail(n["preset"], "unknown model preset '" + m.preset + "'");
        std::set<std::string> allowed(it->second.keys.begin(), it->second.keys.end());
        allowed.insert("preset");
        check_keys(n, allowed, "model '" + m.preset + "'");
        for (const auto& kv : n) {
            const auto key = kv.first.as<std::string>();
            if (key != "preset") m.params[key] = number(kv.second, "model." + key);
        }
        try {
            validate(m.build());
        } catch (const ConfigError& e) {
            fail(n, e.what());
        } catch (const InputError& e) {
            fail(n, e.what());
        }
        return m;
    }

    PayoffConfig payoff(const YAML::Node& n) const {
        if (!n.IsMap()) fail(n, "each payoff must be a mapping");
        if (!n["type"]) fail(n, "payoff type is required");
        PayoffConfig p;
        p.line = n.Mark().line + 1;
        p.type = text(n["type"], "payoff type");
        static const std::map<std::string, std::set<std::string>> fields = {
            {"call", {"K", "T"}},
            {"put", {"K", "T"}},
            {"bounded", {"cap", "T"}},
            {"forward", {"T"}},
            {"unit", {"T"}},
            {"reset_call", {"K", "T", "resets"}},
            {"ratio_call", {"K", "S", "T"}},
            {"chooser", {"K", "S", "T"}},
            {"barrier", {"K", "T", "barrier", "level", "underlying"}},
            {"exchange", {"K", "T", "style"}},
            {"real_world_call", {"K", "T", "style"}},
            {"real_world_put", {"K", "T", "style"}},
            {"real_world_forward", {"T", "style"}},
        };
        const auto it = fields.find(p.type);
        if (it == fields.end()) fail(n["type"], "unknown payoff type '" + p.type + "'");
        std::set<std::string> allowed = it->second;
        allowed.insert("type");
        check_keys(n, allowed, "payoff '" + p.type + "'");
        if (n["K"]) p.K = number(n["K"], "K");
        if (n["T"]) p.T = number(n["T"], "T");
        if (n["S"]) p.S = number(n["S"], "S");
        if (n["cap"]) p.cap = number(n["cap"], "cap");
        if (n["level"]) p.level = number(n["level"], "level");
        if (n["resets"]) {
            if (!n["resets"].IsSequence()) fail(n["resets"], "resets must be a list of times");
            for (const auto& r : n["resets"]) p.resets.push_back(number(r, "reset date"));
        }
        if (n["barrier"]) {
            try {
                p.barrier = barrier_from_string(text(n["barrier"], "barrier"));
            } catch (const ConfigError& e) {
                fail(n["barrier"], e.what());
            }
        }
        if (n["underlying"]) {
            p.underlying = text(n["underlying"], "underlying");
            if (p.underlying != "call" && p.underlying != "put")
                fail(n["underlying"], "underlying must be call or put");
        }
        if (n["style"]) {
            try {
                p.style = style_from_string(text(n["style"], "style"));
            } catch (const ConfigError& e) {
                fail(n["style"], e.what());
            }
        }
        if (p.type == "barrier" && !n["level"]) fail(n, "barrier payoff needs a level");
        if (!(p.T >= 0.0)) fail(n, "T must be nonnegative");
        if (!(p.K >= 0.0)) fail(n, "K must be nonnegative");
        if ((p.type == "chooser" || p.type == "ratio_call") && !(p.S > 0.0 && p.S < p.T))
            fail(n, p.type + " needs 0 < S < T");
        for (double r : p.resets)
            if (!(r > 0.0 && r < p.T)) fail(n["resets"], "reset dates must lie in (0, T)");
        if (!std::is_sorted(p.resets.begin(), p.resets.end()))
            fail(n["resets"], "reset dates must be increasing");
        return p;
    }

    SimConfig sim(const YAML::Node& n) const {
        check_keys(n, {"horizon", "dt", "n_paths", "seed", "workers", "horizon_sim_multiplier",
                       "absorption_bridge", "exact_schemes"},
                   "sim");
        SimConfig s;
        if (!n["seed"]) fail(n, "sim.seed is required");
        s.seed = unsigned_int(n["seed"], "sim.seed");
        if (n["horizon"]) s.horizon = number(n["horizon"], "sim.horizon");
        if (n["dt"]) s.dt = number(n["dt"], "sim.dt");
        if (n["n_paths"]) s.n_paths = unsigned_int(n["n_paths"], "sim.n_paths");
        if (n["workers"]) s.workers = unsigned_int(n["workers"], "sim.workers");
        if (n["horizon_sim_multiplier"])
            s.horizon_sim_multiplier = number(n["horizon_sim_multiplier"], "sim.horizon_sim_multiplier");
        if (n["absorption_bridge"]) s.absorption_bridge = boolean(n["absorption_bridge"], "sim.absorption_bridge");
        if (n["exact_schemes"]) s.exact_schemes = boolean(n["exact_schemes"], "sim.exact_schemes");
        if (!(s.dt > 0.0)) fail(n["dt"] ? n["dt"] : n, "sim.dt must be positive");
        if (s.n_paths == 0) fail(n["n_paths"], "sim.n_paths must be positive");
        if (s.workers == 0) fail(n["workers"], "sim.workers must be positive");
        if (!(s.horizon_sim_multiplier >= 1.0))
            fail(n["horizon_sim_multiplier"], "sim.horizon_sim_multiplier must be at least 1");
        if (s.horizon < 0.0) fail(n["horizon"], "sim.horizon must be nonnegative");
        return s;
    }

    std::vector<Method> methods(const YAML::Node& n) const {
        if (!n.IsSequence()) fail(n, "methods must be a list");
        std::vector<Method> out;
        for (const auto& m : n) {
            Method v;
            try {
                v = method_from_string(text(m, "method"));
            } catch (const ConfigError& e) {
                fail(m, e.what());
            }
            if (std::find(out.begin(), out.end(), v) != out.end())
                fail(m, "method '" + to_string(v) + "' listed twice");
            out.push_back(v);
        }
        return out;
    }

    OutputConfig outputs(const YAML::Node& n) const {
        check_keys(n, {"csv", "json", "dump_paths"}, "outputs");
        OutputConfig o;
        if (n["csv"]) o.csv = text(n["csv"], "outputs.csv");
        if (n["json"]) o.json = text(n["json"], "outputs.json");
        if (n["dump_paths"]) o.dump_paths = boolean(n["dump_paths"], "outputs.dump_paths");
        return o;
    }

private:
    std::string source_;
};

}  // namespace

ModelSpec ModelConfig::build() const {
    if (preset == "inverse_bes3") return inverse_bes3(param(params, "x0", 1.0));
    if (preset == "cev")
        return cev(param(params, "alpha", 2.0), param(params, "x0", 1.0),
                   param(params, "scale", 1.0));
    if (preset == "exp_lm") {
        ModelSpec m = exp_lm();
        m.x0 = param(params, "x0", 1.0);
        m.factor0 = param(params, "factor0", 1.0);
        return m;
    }
    if (preset == "time_changed") return time_changed(param(params, "vol", 1.0));
    if (preset == "scaled_transient") {
        const double delta = param(params, "delta", 3.0);
        ModelSpec m = scaled_transient([delta](double x) { return 0.5 * (delta - 1.0) / x; },
                                       [](double) { return 1.0; });
        m.name = "scaled_transient(" + fmt(delta) + ")";
        return m;
    }
    if (preset == "two_asset") {
        ModelSpec m = two_asset(param(params, "alpha_x", 2.0), param(params, "alpha_y", 2.0),
                                param(params, "rho", 0.0), param(params, "gamma_scale", 1.0));
        m.x0 = param(params, "x0", 1.0);
        m.y0 = param(params, "y0", 1.0);
        return m;
    }
    throw ConfigError("unknown model preset '" + preset + "'");
}

std::string PayoffConfig::label() const {
    std::ostringstream os;
    os.precision(10);
    if (type == "barrier")
        os << "barrier_" << to_string(barrier) << "_" << underlying << "(level=" << level << ")";
    else if (type == "chooser" || type == "ratio_call")
        os << type << "(S=" << S << ")";
    else if (type == "reset_call") {
        os << "reset_call(";
        for (std::size_t i = 0; i < resets.size(); ++i) os << (i ? ";" : "") << resets[i];
        os << ")";
    } else if (type == "bounded")
        os << "bounded(cap=" << cap << ")";
    else
        os << type;
    return os.str();
}

std::vector<double> PayoffConfig::dates() const {
    std::vector<double> d = resets;
    if (S > 0.0) d.push_back(S);
    d.push_back(T);
    return d;
}

bool PayoffConfig::two_asset() const {
    return type == "exchange" || type.rfind("real_world", 0) == 0;
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
    const Parser ps(source);
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        std::ostringstream os;
        os << source << ':' << e.mark.line + 1 << ':' << e.mark.column + 1 << ": " << e.msg;
        throw ConfigError(os.str());
    }
    if (!root.IsMap()) throw ConfigError(source + ":1:1: config must be a mapping");
    ps.check_keys(root, {"model", "payoffs", "sim", "methods", "outputs"}, "config");
    ExperimentConfig c;
    c.source = source;
    c.text = text;
    if (!root["model"]) ps.fail(root, "model section is required");
    c.model = ps.model(root["model"]);
    if (!root["sim"]) ps.fail(root, "sim section is required (sim.seed has no default)");
    c.sim = ps.sim(root["sim"]);
    if (root["payoffs"]) {
        const YAML::Node pl = root["payoffs"];
        if (!pl.IsSequence() && !pl.IsNull()) ps.fail(pl, "payoffs must be a list");
        if (pl.IsSequence())
            for (const auto& p : pl) c.payoffs.push_back(ps.payoff(p));
    }
    if (root["methods"])
        c.methods = ps.methods(root["methods"]);
    else
        c.methods = {Method::SurvivalQ};
    if (root["outputs"]) c.outputs = ps.outputs(root["outputs"]);

    const bool two = c.model.preset == "two_asset";
    double latest = 0.0;
    for (std::size_t i = 0; i < c.payoffs.size(); ++i) {
        const PayoffConfig& p = c.payoffs[i];
        const YAML::Node pn = root["payoffs"][i];
        if (p.two_asset() && !two) ps.fail(pn, p.type + " needs the two_asset model preset");
        latest = std::max(latest, p.T);
        for (double t : p.dates()) {
            try {
                checked_steps(t, c.sim.dt);
            } catch (const ConfigError&) {
                ps.fail(pn, "date " + fmt(t) + " is not a multiple of sim.dt");
            }
        }
    }
    if (c.sim.horizon > 0.0) {
        try {
            checked_steps(c.sim.horizon, c.sim.dt);
        } catch (const ConfigError& e) {
            ps.fail(root["sim"]["horizon"], e.what());
        }
        if (c.sim.horizon < latest)
            ps.fail(root["sim"]["horizon"], "sim.horizon is before the latest payoff date");
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

}  // namespace bubblelab
