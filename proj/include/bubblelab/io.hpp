#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bubblelab/duality.hpp"
#include "bubblelab/path_ensemble.hpp"

namespace bubblelab {

inline constexpr const char* kManifestSchema = "bubblelab.v1";

// One row of the price surface. Empty optionals print as empty fields.
struct PriceRow {
    std::string pricer;
    std::string model;
    double K = 0.0;
    double T = 0.0;
    std::string style;
    std::string method;
    std::optional<double> value;
    std::optional<double> std_err;
    std::optional<double> main_term;
    std::optional<double> default_term;
    std::optional<bool> consistent;
    std::string error;
    double seconds = 0.0;
};

PriceRow make_row(std::string pricer, std::string model, double K, double T, std::string style,
                  const PriceEstimate& e);

// Decimal text that round-trips the double; identical input gives identical text.
std::string format_number(double v);

void write_price_header(std::ostream& os);
void write_price_row(std::ostream& os, const PriceRow& row);
void write_price_csv(std::ostream& os, const std::vector<PriceRow>& rows);

// Record {payoff, method, value, std_err, main_term, default_term, n_paths, seed}.
nlohmann::json price_record(const std::string& payoff, const PriceEstimate& e, std::uint64_t seed);

// Columns path_id,t,value,absorbed; one line per path and recorded time.
void write_path_csv(std::ostream& os, const PathEnsemble& e);
// Clocks and RNG provenance for a path dump.
nlohmann::json path_sidecar(const PathEnsemble& e);
// Columns path_id,level,rho,tau_x,crossed.
void write_clock_csv(std::ostream& os, const PathEnsemble& e);

std::string sha256_hex(const std::string& data);

// Build identifier baked in at configure time (git describe).
std::string build_id();

}  // namespace bubblelab
