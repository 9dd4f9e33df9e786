#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bubblelab/duality.hpp"
#include "bubblelab/model.hpp"
#include "bubblelab/pricers.hpp"

namespace bubblelab {

// Named model preset with numeric parameters, e.g. {preset: cev, alpha: 1.5}.
struct ModelConfig {
    std::string preset = "inverse_bes3";
    std::map<std::string, double> params;

    ModelSpec build() const;
};

// One payoff entry. Which fields matter depends on `type`:
// call, put, bounded, forward, unit, reset_call, ratio_call, chooser, barrier,
// exchange, real_world_call, real_world_put, real_world_forward.
struct PayoffConfig {
    std::string type;
    double K = 1.0;
    double T = 1.0;
    double S = 0.0;                 // chooser / ratio_call decision date
    std::vector<double> resets;     // reset_call
    double cap = 1.0;               // bounded
    Barrier barrier = Barrier::DI;  // barrier
    double level = 0.0;
    std::string underlying = "call";  // barrier payoff: call or put
    Style style = Style::European;
    int line = 0;  // 1-based source line, 0 when built in code

    std::string label() const;
    // Monitoring dates this payoff needs on the simulation grid.
    std::vector<double> dates() const;
    bool two_asset() const;
};

struct SimConfig {
    double horizon = 0.0;  // 0: the latest payoff date
    double dt = 1e-3;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    double horizon_sim_multiplier = 4.0;
    bool absorption_bridge = true;
    bool exact_schemes = true;
};

struct OutputConfig {
    std::string csv;
    std::string json;
    bool dump_paths = false;
};

struct ExperimentConfig {
    std::string source;  // file name for diagnostics
    std::string text;    // exact bytes that were parsed, hashed into the manifest
    ModelConfig model;
    std::vector<PayoffConfig> payoffs;
    SimConfig sim;
    std::vector<Method> methods;
    OutputConfig outputs;
};

// YAML with top-level keys model, payoffs, sim, methods, outputs. Errors are
// ConfigError with a "source:line:column:" prefix.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

}  // namespace bubblelab
