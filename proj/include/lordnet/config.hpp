#pragma once

#include <string>

#include <json.hpp>

#include "lordnet/cnn.hpp"
#include "lordnet/msr.hpp"
#include "lordnet/net.hpp"
#include "lordnet/train.hpp"

namespace lordnet {

// Parsed form of the JSON run configuration. Sections: problem, grid,
// network, train, eval, seeds, gen, output_dir. Unknown keys are rejected
// with the offending path.
struct RunConfig {
    msr::ResidualSpec problem;
    rf::GrfSpec grf;
    double warm_start_seconds = 0.0;

    std::string arch = "lord";  // "lord" or "cnn"
    net::NetworkConfig netcfg;
    cnn::DilatedCnnConfig cnncfg;

    train::TrainConfig traincfg;

    int eval_samples = 100;
    std::string eval_protocol = "one_step";
    int eval_horizon = 100;
    int eval_stride = 1;
    int timing_reps = 100;

    std::uint64_t seed_train = 1;
    std::uint64_t seed_test = 900001;
    std::uint64_t seed_init = 7;

    int gen_count = 16;
    bool gen_targets = false;

    std::string output_dir = "out";
    nlohmann::json raw;  // the validated document, archived into manifests
};

// Baseline document for a problem kind at grid size n; parse_run_config
// applied to it round-trips.
nlohmann::json default_config_json(msr::ResidualKind kind, int n);

RunConfig parse_run_config(const nlohmann::json& j);

}  // namespace lordnet
