#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bubblelab/config.hpp"
#include "bubblelab/io.hpp"

namespace bubblelab {

struct RunReport {
    std::vector<PriceRow> rows;  // config order: payoff, then method
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string model;
    SimDiagnostics p_diagnostics;
    SimDiagnostics q_diagnostics;
    double seconds = 0.0;

    // Manifest with schema bubblelab.v1. Only the timing fields vary between
    // identical runs.
    nlohmann::json manifest(const ExperimentConfig& c) const;
};

// Evaluates every (payoff x method) cell on shared P- and Q-ensembles. A cell
// that throws becomes an error row; the run continues.
RunReport run_experiment(const ExperimentConfig& c);

// Writes the CSV, manifest and optional path dumps named in c.outputs. Returns
// the CSV text (also written to the csv path when one is set).
std::string write_outputs(const ExperimentConfig& c, const RunReport& r);

struct VerifyLine {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Method agreement per payoff plus the model-level identities that apply to
// the configured model.
std::vector<VerifyLine> verify_experiment(const ExperimentConfig& c);

// E(K, T) and A(K, T) for X an inverse BES(3) process and Y == 1.
struct AsymptoticsCell {
    double K = 0.0;
    double T = 0.0;
    double european_closed = 0.0;
    double american_closed = 0.0;
    Estimate european;
    Estimate american;
    double tail_mass = 0.0;
};

std::vector<AsymptoticsCell> asymptotics_table(const std::vector<double>& strikes,
                                               const std::vector<double>& maturities,
                                               const SimParams& params,
                                               double horizon_multiplier = 4.0);

}  // namespace bubblelab
