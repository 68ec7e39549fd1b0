#pragma once

#include <string>

#include "lordnet/config.hpp"

namespace lordnet::cli {

// Exit codes shared by every subcommand.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 1;
inline constexpr int kNumericalError = 2;
inline constexpr int kAcceptanceFailure = 3;

// Writes random-field samples (and solver targets with gen.targets) plus a
// manifest under <output_dir>/dataset. Refuses an existing dataset without
// `force`.
int cmd_gen(const RunConfig& cfg, bool force);

// Runs the reference solver over the generated dataset; emits solutions (or
// trajectories) and a residual-audit line per sample.
int cmd_solve(const RunConfig& cfg);

// Trains the configured model; emits checkpoint, loss curve, manifest.
int cmd_train(const RunConfig& cfg);

// Evaluates a trained checkpoint (or, with use_fdm_wrapper, the solver
// itself as the metric floor); emits report.json and per-sample CSV.
int cmd_eval(const RunConfig& cfg, const std::string& checkpoint_dir, bool use_fdm_wrapper);

// Full finite-difference gradient audit; non-zero exit on any deviation
// >= 1e-5.
int cmd_gradcheck(int num_seeds, std::uint64_t seed);

// LDNF -> PGM heatmap (p2|p5) or full-precision CSV.
int cmd_render(const std::string& field_file, const std::string& out_path, const std::string& format);

// Runs a named preset; exit 3 with a metric diff on acceptance failure.
int cmd_experiments(const std::string& preset_name, const std::string& out_root, int jobs);

}  // namespace lordnet::cli
