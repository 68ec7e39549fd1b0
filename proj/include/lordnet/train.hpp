#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lordnet/model.hpp"
#include "lordnet/msr.hpp"
#include "lordnet/randfield.hpp"

namespace lordnet::train {

enum class LossKind { mse, msr };
enum class DataSource { sampled_initials, fdm_trajectories, pool };

LossKind loss_from_name(const std::string& name);
DataSource source_from_name(const std::string& name);

struct PoolConfig {
    int size = 64;
    int refresh_period = 10;        // iterations between pool_step calls
    double refresh_fraction = 0.25; // fraction replaced by model predictions
    int reinit_period = 40;         // max refresh age before reset
};

struct TrainConfig {
    LossKind loss = LossKind::msr;
    double lr0 = 1e-3;
    double decay_factor = 0.8;
    int decay_every = 2000;
    int batch = 16;
    int max_iters = 2000;
    std::uint64_t seed = 1;
    msr::ResidualSpec problem;
    rf::GrfSpec grf;  // input distribution; grf.n must match the grid
    DataSource source = DataSource::sampled_initials;
    PoolConfig pool;
    double warm_start_seconds = 0.0;  // lid-driven: solver-advance T0 before training states
    int state_count = 32;             // cached states (ns) / dataset size (mse)
    int log_every = 50;
    double divergence_limit = 1e6;
    int jobs = 0;  // 0 = library default

    void validate() const;
};

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig cfg;
    std::vector<Field> m, v;
    long t = 0;

    static AdamState init(const ParamSet& params, AdamConfig cfg = {});
};

// Bias-corrected update, in place. Non-finite gradients abort with
// NumericError carrying the parameter name index.
void adam_step(ParamSet& params, const std::vector<Field>& grads, AdamState& state, double lr);

// ---------------------------------------------------------------------------
// Rollout data pool
// ---------------------------------------------------------------------------

struct DataPool {
    struct Entry {
        Field state;
        int age = 0;
    };
    std::vector<Entry> entries;
};

// Replaces a round-robin fraction of entries with one-step model predictions
// (ageing them); entries at reinit_period are reset to fresh states.
void pool_step(DataPool& pool, const PoolConfig& cfg,
               const std::function<Field(const Field&)>& model_step,
               const std::function<Field()>& fresh_state, std::uint64_t round);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct LossCurvePoint {
    int iter;
    double lr;
    double loss;
};

struct TrainResult {
    std::vector<LossCurvePoint> curve;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    bool diverged = false;
    int iterations_run = 0;
};

// NS training/test states: initial vorticity from the random-field spec,
// warm-started by `warm_steps` solver steps (lid-driven), then converted to
// the stream function. Returns full-grid psi fields.
std::vector<Field> make_initial_states(const msr::ResidualSpec& spec, const rf::GrfSpec& grf, int count,
                                       int warm_steps, std::uint64_t seed_base);

// Runs the configured loop. MSR draws inputs only (fresh forcings for
// Poisson, cached or pooled states for NS) -- it has no access to solved
// targets by construction. MSE pre-generates (input, target) pairs with the
// solver. On divergence the parameters are rolled back to the last good
// iterate and the result is flagged.
TrainResult train(ModelIface& model, const TrainConfig& cfg);

}  // namespace lordnet::train
