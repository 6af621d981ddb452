#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cota/eval.hpp"

namespace cota {

// One experiment, as read from the JSON config file. Command-line flags are
// applied on top by the caller.
struct RunConfig {
    std::string scenario = "stc_np";
    std::optional<std::filesystem::path> base_model, abs_model;  // replace the named scenario when both set
    std::optional<std::filesystem::path> lrcs_csv, wmg_csv;      // EBM tables; synthetic stand-in otherwise
    int bins = kDefaultBins;
    std::map<std::string, std::vector<std::string>> alignment;  // Hamming alignment for model files
    bool synthetic = false;

    MethodSpec spec;
    ExperimentConfig experiment;
    std::optional<double> grid_step;  // grid mode when set
    bool baselines = true;
    std::filesystem::path out = "results";
};

RunConfig parse_run_config(const std::string& json_text, const std::string& source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);
std::string dump_run_config(const RunConfig& cfg);

// Builds the scenario a config refers to (named, model files, or EBM tables).
Scenario resolve_scenario(const RunConfig& cfg);

}  // namespace cota
