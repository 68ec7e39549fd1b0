#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lordnet/fdm.hpp"
#include "lordnet/model.hpp"
#include "lordnet/msr.hpp"
#include "lordnet/randfield.hpp"

namespace lordnet::eval {

// One autoregressive step on a full-grid state.
struct StepModel {
    std::string name;
    std::function<Field(const Field&)> step;
};

// Wraps a trained network: crops wall-grid states to the interior, runs the
// forward pass, pads the frozen boundary back on (and gauge-fixes periodic
// predictions to zero mean).
StepModel network_step_model(const ModelIface& model, const msr::ResidualSpec& spec);

// Stateless solver step psi_t -> psi_{t+1}: rebuilds omega from psi with the
// discrete operator, advances it, and solves for the next stream function.
StepModel fdm_onestep_model(const msr::ResidualSpec& spec);

// Solver replay seeded with omega_0; each step advances the internal
// vorticity and returns the next stream function, ignoring the fed-back
// state. Matches fdm::ns_trajectory bit-exactly.
StepModel fdm_replay_model(const Field& omega_0, const msr::ResidualSpec& spec);

// ||pred - truth||_2 / ||truth||_2; with gauge_fix both fields are
// mean-projected first. A zero-norm truth is a degenerate case and throws
// NumericError instead of dividing by zero.
double relative_error(const Field& pred, const Field& truth, bool gauge_fix = false);

// [state_0, model(state_0), ...]; steps+1 entries. Aborts with the failing
// step index if a state goes non-finite.
std::vector<Field> rollout(const StepModel& model, const Field& state_0, int steps);

struct EvalReport {
    std::string protocol;  // "one_step" or "rollout"
    int horizon = 0;
    std::vector<double> per_sample;             // terminal error per sample
    std::vector<std::vector<double>> curves;    // rollout: error vs step per sample
    double mean_error = 0.0;
    double std_error = 0.0;                     // over samples
    double median_inference_ms = 0.0;
};

// FDM test trajectory: the vorticity the recorded segment starts from
// (after any warm start) plus the psi sequence of length horizon+1.
struct TestTrajectory {
    Field omega_start;
    std::vector<Field> psis;
};

// Test trajectories for the NS problems: initial vorticity from the
// random-field spec (optionally warm-started by `warm_steps` solver steps),
// then `horizon` recorded steps.
std::vector<TestTrajectory> make_test_trajectories(const msr::ResidualSpec& spec, const rf::GrfSpec& grf,
                                                   int samples, int horizon, int warm_steps,
                                                   std::uint64_t seed_base);

// Mean +- std of the one-step relative error over all (sample, t) states
// with stride `stride` along each trajectory.
EvalReport evaluate_one_step(const StepModel& model, const std::vector<TestTrajectory>& truth,
                             bool gauge_fix, int stride = 1);

// Autoregressive rollout from each trajectory's initial state; per-sample
// error recorded at every step, the terminal value reported.
EvalReport evaluate_rollout(const StepModel& model, const std::vector<TestTrajectory>& truth,
                            bool gauge_fix);

// Poisson protocol: held-out forcings by seed, truth from the solver.
EvalReport evaluate_poisson(const ModelIface& model, const msr::ResidualSpec& spec,
                            const rf::GrfSpec& grf, int samples, std::uint64_t seed_base);

// Median wall-clock per forward pass over `reps` repetitions.
double time_inference_ms(const std::function<void()>& fn, int reps);

}  // namespace lordnet::eval
