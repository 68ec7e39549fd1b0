#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "lordnet/config.hpp"

namespace lordnet::exp {

struct PresetMetric {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool less_equal = true;  // pass iff value <= threshold (>= otherwise)
    bool pass = false;
};

struct PresetResult {
    std::string name;
    bool passed = false;
    std::vector<PresetMetric> metrics;
    nlohmann::json summary;
};

struct Preset {
    std::string name;
    std::string scale;  // "ci" (seed-pinned, gating) or "extended" (full-budget reference)
    std::string description;
    nlohmann::json config;
    nlohmann::json reference;  // full-budget reference metrics, recorded alongside
};

const std::vector<Preset>& presets();
const Preset& find_preset(const std::string& name);

// Executes gen -> train -> eval for the named preset, archives artifacts
// under <out_root>/presets/<name>/ and compares metrics against the preset's
// expectations.
PresetResult run_preset(const std::string& name, const std::string& out_root, int jobs);

// Finite-difference gradient audit over every differentiable op and both
// assembled network variants (plus the CNN baseline).
struct GradSuiteEntry {
    std::string name;
    double max_dev = 0.0;
};
std::vector<GradSuiteEntry> run_gradcheck_suite(int num_seeds, std::uint64_t seed_base);

}  // namespace lordnet::exp
