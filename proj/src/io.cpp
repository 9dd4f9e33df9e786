#include "bubblelab/io.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include <openssl/evp.h>

#include "bubblelab/errors.hpp"

#ifndef BUBBLELAB_BUILD_ID
#define BUBBLELAB_BUILD_ID "unknown"
#endif

namespace bubblelab {

PriceRow make_row(std::string pricer, std::string model, double K, double T, std::string style,
                  const PriceEstimate& e) {
    PriceRow r;
    r.pricer = std::move(pricer);
    r.model = std::move(model);
    r.K = K;
    r.T = T;
    r.style = std::move(style);
    r.method = to_string(e.method);
    r.value = e.value;
    r.std_err = e.std_err;
    if (e.main_term.n > 0) r.main_term = e.main_term.mean;
    if (e.default_term.n > 0) r.default_term = e.default_term.mean;
    return r;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

// Quotes a CSV field when it contains a separator, quote or newline.
std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : std::string{}; }

}  // namespace

void write_price_header(std::ostream& os) {
    os << "pricer,model,K,T,style,method,value,std_err,main_term,default_term,consistent,error\n";
}

void write_price_row(std::ostream& os, const PriceRow& r) {
    os << csv_field(r.pricer) << ',' << csv_field(r.model) << ',' << format_number(r.K) << ','
       << format_number(r.T) << ',' << r.style << ',' << r.method << ',' << opt(r.value) << ','
       << opt(r.std_err) << ',' << opt(r.main_term) << ',' << opt(r.default_term) << ',';
    if (r.consistent) os << (*r.consistent ? "true" : "false");
    os << ',' << csv_field(r.error) << '\n';
}

void write_price_csv(std::ostream& os, const std::vector<PriceRow>& rows) {
    write_price_header(os);
    for (const auto& r : rows) write_price_row(os, r);
}

nlohmann::json price_record(const std::string& payoff, const PriceEstimate& e, std::uint64_t seed) {
    nlohmann::json j;
    j["payoff"] = payoff;
    j["method"] = to_string(e.method);
    j["value"] = e.value;
    j["std_err"] = e.std_err;
    j["main_term"] = e.main_term.n > 0 ? nlohmann::json(e.main_term.mean) : nlohmann::json();
    j["default_term"] = e.default_term.n > 0 ? nlohmann::json(e.default_term.mean) : nlohmann::json();
    j["n_paths"] = e.n_paths;
    j["seed"] = seed;
    return j;
}

void write_path_csv(std::ostream& os, const PathEnsemble& e) {
    os << "path_id,t,value,absorbed\n";
    for (std::size_t p = 0; p < e.n_paths; ++p) {
        const std::uint64_t id = e.first_path_id + p;
        for (std::size_t k = 0; k < e.grid.size(); ++k) {
            const double t = e.grid[k];
            os << id << ',' << format_number(t) << ',' << format_number(e.value(p, k)) << ','
               << (e.absorbed_by(p, t) ? 1 : 0) << '\n';
        }
    }
}

namespace {

nlohmann::json time_or_null(double t) {
    return std::isfinite(t) ? nlohmann::json(t) : nlohmann::json();
}

nlohmann::json times(const std::vector<double>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (double t : v) a.push_back(time_or_null(t));
    return a;
}

}  // namespace

nlohmann::json path_sidecar(const PathEnsemble& e) {
    nlohmann::json j;
    j["schema"] = kManifestSchema;
    j["model"] = e.model_name;
    j["measure"] = to_string(e.measure);
    j["dt"] = e.dt;
    j["steps"] = e.steps;
    j["n_paths"] = e.n_paths;
    j["rng"] = {{"generator", "philox4x32-10"},
                {"seed", e.seed},
                {"first_path_id", e.first_path_id},
                {"stream", "key = seed, counter = (path_id, draw index)"}};
    j["levels"] = {{"below", e.levels.below},
                   {"above", e.levels.above},
                   {"rho", e.levels.rho},
                   {"caps", e.levels.caps}};
    j["diagnostics"] = {{"floor_hits", e.diagnostics.floor_hits},
                        {"bridge_absorptions", e.diagnostics.bridge_absorptions},
                        {"explosion_flags", e.diagnostics.explosion_flags}};
    nlohmann::json clocks = nlohmann::json::array();
    for (std::size_t p = 0; p < e.n_paths; ++p) {
        const EventClock& c = e.clocks[p];
        nlohmann::json rho = nlohmann::json::array();
        for (const auto& r : c.rho)
            rho.push_back({{"level", r.level}, {"time", r.time}, {"crossed", r.crossed}});
        clocks.push_back({{"path_id", e.first_path_id + p},
                          {"tau_x", time_or_null(c.tau_x)},
                          {"tau_n", times(c.tau_n)},
                          {"first_below", times(c.first_below)},
                          {"first_above", times(c.first_above)},
                          {"rho", rho}});
    }
    j["clocks"] = std::move(clocks);
    return j;
}

void write_clock_csv(std::ostream& os, const PathEnsemble& e) {
    os << "path_id,level,rho,tau_x,crossed\n";
    for (std::size_t p = 0; p < e.n_paths; ++p) {
        const EventClock& c = e.clocks[p];
        for (const auto& r : c.rho)
            os << e.first_path_id + p << ',' << format_number(r.level) << ','
               << format_number(r.time) << ',' << format_number(c.tau_x) << ','
               << (r.crossed ? 1 : 0) << '\n';
    }
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

std::string build_id() { return BUBBLELAB_BUILD_ID; }

}  // namespace bubblelab
