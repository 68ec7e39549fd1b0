#include "lordnet/train.hpp"

#include <cmath>

#include "lordnet/eval.hpp"
#include "lordnet/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lordnet::train {

LossKind loss_from_name(const std::string& name) {
    if (name == "mse") return LossKind::mse;
    if (name == "msr") return LossKind::msr;
    throw ConfigError("unknown loss '" + name + "'");
}

DataSource source_from_name(const std::string& name) {
    if (name == "sampled_initials") return DataSource::sampled_initials;
    if (name == "fdm_trajectories") return DataSource::fdm_trajectories;
    if (name == "pool") return DataSource::pool;
    throw ConfigError("unknown dataset_source '" + name + "'");
}

void TrainConfig::validate() const {
    problem.validate();
    if (lr0 <= 0.0) throw ConfigError("train: lr0 must be positive");
    if (decay_factor <= 0.0 || decay_factor > 1.0) throw ConfigError("train: decay_factor must be in (0,1]");
    if (decay_every < 1) throw ConfigError("train: decay_every must be >= 1");
    if (batch < 1) throw ConfigError("train: batch must be >= 1");
    if (max_iters < 0) throw ConfigError("train: max_iters must be >= 0");
    if (state_count < 1) throw ConfigError("train: state_count must be >= 1");
    if (problem.grid.periodic() && grf.n != problem.grid.n)
        throw ConfigError("train: periodic problems need grf.n == grid n");
    if (grf.n < problem.grid.n) throw ConfigError("train: grf.n must cover the grid");
    // The MSR path draws inputs only; it is structurally cut off from solver
    // targets.
    if (loss == LossKind::msr && source == DataSource::fdm_trajectories)
        throw ConfigError("train: MSR does not read solver-generated targets");
    if (loss == LossKind::mse && source != DataSource::fdm_trajectories)
        throw ConfigError("train: MSE requires solver-generated targets (dataset_source=fdm_trajectories)");
    if (msr::is_poisson(problem.kind) && source == DataSource::pool)
        throw ConfigError("train: the data pool applies to time-dependent problems only");
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

AdamState AdamState::init(const ParamSet& params, AdamConfig cfg) {
    AdamState st;
    st.cfg = cfg;
    for (int i = 0; i < params.size(); ++i) {
        st.m.emplace_back(params.field(i).shape());
        st.v.emplace_back(params.field(i).shape());
    }
    return st;
}

void adam_step(ParamSet& params, const std::vector<Field>& grads, AdamState& state, double lr) {
    if (static_cast<int>(grads.size()) != params.size())
        throw ShapeError("adam_step: gradient count does not match parameter count");
    for (int k = 0; k < params.size(); ++k)
        if (!grads[static_cast<std::size_t>(k)].all_finite())
            throw NumericError("adam_step: non-finite gradient for parameter '" + params.name(k) + "'");
    state.t += 1;
    const double b1 = state.cfg.beta1, b2 = state.cfg.beta2, eps = state.cfg.eps;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (int k = 0; k < params.size(); ++k) {
        Field& p = params.field(k);
        Field& m = state.m[static_cast<std::size_t>(k)];
        Field& v = state.v[static_cast<std::size_t>(k)];
        const Field& g = grads[static_cast<std::size_t>(k)];
        for (std::int64_t i = 0; i < p.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

// ---------------------------------------------------------------------------
// Data pool
// ---------------------------------------------------------------------------

void pool_step(DataPool& pool, const PoolConfig& cfg,
               const std::function<Field(const Field&)>& model_step,
               const std::function<Field()>& fresh_state, std::uint64_t round) {
    const int size = static_cast<int>(pool.entries.size());
    if (size == 0) return;
    const int refresh = static_cast<int>(cfg.refresh_fraction * size);
    for (int k = 0; k < refresh; ++k) {
        const int idx = static_cast<int>((round * static_cast<std::uint64_t>(refresh) +
                                          static_cast<std::uint64_t>(k)) %
                                         static_cast<std::uint64_t>(size));
        DataPool::Entry& e = pool.entries[static_cast<std::size_t>(idx)];
        e.state = model_step(e.state);
        e.age += 1;
    }
    for (auto& e : pool.entries) {
        if (e.age >= cfg.reinit_period) {
            e.state = fresh_state();
            e.age = 0;
        }
    }
}

// ---------------------------------------------------------------------------
// NS state preparation
// ---------------------------------------------------------------------------

std::vector<Field> make_initial_states(const msr::ResidualSpec& spec, const rf::GrfSpec& grf, int count,
                                       int warm_steps, std::uint64_t seed_base) {
    std::vector<Field> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        rf::GrfSpec g = grf;
        g.seed = Rng::derive(seed_base, static_cast<std::uint64_t>(i));
        Field omega = rf::sample_grf(g);
        for (int t = 0; t < warm_steps; ++t)
            omega = fdm::ns_step(omega, spec.grid, spec.ns, spec.cg_tol).omega_next;
        out.push_back(fdm::poisson_solve(omega, spec.grid, spec.cg_tol));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

namespace {

struct ItemResult {
    double loss = 0.0;
    std::vector<Field> grads;
};

// One sample's loss and parameter gradients on its own tape.
ItemResult eval_item(const ModelIface& model, const TrainConfig& cfg, const Field& ctx,
                     const Field* target) {
    Tape t;
    std::vector<DiffValue> bound = bind_params(t, model.params());
    DiffValue loss;
    if (cfg.loss == LossKind::mse) {
        DiffValue u = model.forward(t, bound, t.input(ctx));
        loss = msr::mse_loss(u, *target);
    } else if (msr::is_poisson(cfg.problem.kind)) {
        DiffValue u = model.forward(t, bound, t.input(ctx));
        loss = msr::msr_loss(msr::poisson_residual(u, ctx, cfg.problem));
    } else {
        const bool wall = !cfg.problem.grid.periodic();
        Field x_in = wall ? crop_interior(ctx) : ctx;
        DiffValue u = model.forward(t, bound, t.input(x_in));
        loss = msr::msr_loss(msr::ns_residual(ctx, u, cfg.problem));
    }
    t.backward(loss);
    ItemResult r;
    r.loss = loss.value()[0];
    r.grads.reserve(static_cast<std::size_t>(t.num_params()));
    for (int k = 0; k < t.num_params(); ++k) r.grads.push_back(t.param_grad(k));
    return r;
}

ParamSet copy_params(const ParamSet& p) { return p; }

}  // namespace

TrainResult train(ModelIface& model, const TrainConfig& cfg) {
    cfg.validate();
    const msr::ResidualSpec& spec = cfg.problem;
    const bool poisson = msr::is_poisson(spec.kind);
    const bool wall = !spec.grid.periodic();
    const int warm_steps = static_cast<int>(std::lround(cfg.warm_start_seconds / spec.ns.dt));

    const std::uint64_t draw_seed = Rng::derive(cfg.seed, 0x111);
    const std::uint64_t data_seed = Rng::derive(cfg.seed, 0x222);
    const std::uint64_t fresh_seed = Rng::derive(cfg.seed, 0x333);

    // MSR inputs: cached NS states (or a pool over them). MSE: solver pairs.
    std::vector<Field> states;
    DataPool pool;
    std::vector<std::pair<Field, Field>> pairs;  // network-shaped (input, target)
    std::uint64_t fresh_counter = 0;

    if (cfg.loss == LossKind::msr && !poisson) {
        states = make_initial_states(spec, cfg.grf, cfg.state_count, warm_steps, data_seed);
        if (cfg.source == DataSource::pool) {
            pool.entries.resize(static_cast<std::size_t>(cfg.pool.size));
            for (int i = 0; i < cfg.pool.size; ++i)
                pool.entries[static_cast<std::size_t>(i)].state =
                    states[static_cast<std::size_t>(i) % states.size()];
        }
    } else if (cfg.loss == LossKind::mse) {
        if (poisson) {
            for (int i = 0; i < cfg.state_count; ++i) {
                rf::GrfSpec g = cfg.grf;
                g.seed = Rng::derive(data_seed, static_cast<std::uint64_t>(i));
                Field f = rf::sample_grf_on_grid(g, spec.grid.n);
                if (!wall) f = mean_project(f);
                Field u = fdm::poisson_solve(f, spec.grid, spec.cg_tol);
                if (wall)
                    pairs.emplace_back(crop_interior(f), crop_interior(u));
                else
                    pairs.emplace_back(f, u);
            }
        } else {
            // A few trajectories, consecutive (psi_t, psi_{t+1}) pairs.
            const int per_traj = 50;
            const int ntraj = (cfg.state_count + per_traj - 1) / per_traj;
            std::vector<Field> starts = make_initial_states(spec, cfg.grf, ntraj, warm_steps, data_seed);
            for (int s = 0; s < ntraj && static_cast<int>(pairs.size()) < cfg.state_count; ++s) {
                Field omega = fdm::vorticity_from_stream(starts[static_cast<std::size_t>(s)], spec.grid);
                fdm::NsParams p = spec.ns;
                p.steps = per_traj;
                std::vector<Field> psis = fdm::ns_trajectory(omega, spec.grid, p, spec.cg_tol);
                for (std::size_t t = 0; t + 1 < psis.size() && static_cast<int>(pairs.size()) < cfg.state_count;
                     ++t) {
                    Field in = wall ? crop_interior(psis[t]) : psis[t];
                    Field out = wall ? crop_interior(psis[t + 1]) : psis[t + 1];
                    pairs.emplace_back(std::move(in), std::move(out));
                }
            }
        }
    }

    AdamState adam = AdamState::init(model.params());
    TrainResult result;
    double lr = cfg.lr0;
    ParamSet last_good = copy_params(model.params());

#ifdef _OPENMP
    const int nthreads = cfg.jobs > 0 ? cfg.jobs : omp_get_max_threads();
#endif

    std::vector<ItemResult> items(static_cast<std::size_t>(cfg.batch));
    std::vector<Field> batch_ctx(static_cast<std::size_t>(cfg.batch));
    std::vector<const Field*> batch_tgt(static_cast<std::size_t>(cfg.batch), nullptr);

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        if (iter > 0 && iter % cfg.decay_every == 0) lr *= cfg.decay_factor;

        if (cfg.source == DataSource::pool && iter > 0 && iter % cfg.pool.refresh_period == 0) {
            eval::StepModel stepper = eval::network_step_model(model, spec);
            pool_step(
                pool, cfg.pool, stepper.step,
                [&]() {
                    return make_initial_states(spec, cfg.grf, 1, warm_steps,
                                               Rng::derive(fresh_seed, fresh_counter++))
                        .front();
                },
                static_cast<std::uint64_t>(iter / cfg.pool.refresh_period));
        }

        // Deterministic batch assembly.
        for (int i = 0; i < cfg.batch; ++i) {
            const std::uint64_t stream =
                Rng::derive(draw_seed, static_cast<std::uint64_t>(iter) * cfg.batch + i);
            if (cfg.loss == LossKind::mse) {
                const auto& pr = pairs[static_cast<std::size_t>(stream % pairs.size())];
                batch_ctx[static_cast<std::size_t>(i)] = pr.first;
                batch_tgt[static_cast<std::size_t>(i)] = &pr.second;
            } else if (poisson) {
                rf::GrfSpec g = cfg.grf;
                g.seed = stream;
                Field f = rf::sample_grf_on_grid(g, spec.grid.n);
                batch_ctx[static_cast<std::size_t>(i)] = wall ? crop_interior(f) : mean_project(f);
            } else if (cfg.source == DataSource::pool) {
                batch_ctx[static_cast<std::size_t>(i)] =
                    pool.entries[static_cast<std::size_t>(stream % pool.entries.size())].state;
            } else {
                batch_ctx[static_cast<std::size_t>(i)] = states[static_cast<std::size_t>(stream % states.size())];
            }
        }

#ifdef _OPENMP
#pragma omp parallel for num_threads(nthreads) schedule(static)
#endif
        for (int i = 0; i < cfg.batch; ++i)
            items[static_cast<std::size_t>(i)] =
                eval_item(model, cfg, batch_ctx[static_cast<std::size_t>(i)],
                          batch_tgt[static_cast<std::size_t>(i)]);

        double loss = 0.0;
        for (int i = 0; i < cfg.batch; ++i) loss += items[static_cast<std::size_t>(i)].loss;
        loss /= cfg.batch;

        if (!std::isfinite(loss) || loss > cfg.divergence_limit) {
            model.params() = last_good;
            result.diverged = true;
            result.iterations_run = iter;
            return result;
        }

        if (iter == 0) result.initial_loss = loss;
        result.final_loss = loss;
        if (iter % cfg.log_every == 0 || iter + 1 == cfg.max_iters)
            result.curve.push_back({iter, lr, loss});

        last_good = copy_params(model.params());

        std::vector<Field> grads;
        grads.reserve(static_cast<std::size_t>(model.params().size()));
        const double inv_b = 1.0 / cfg.batch;
        for (int k = 0; k < model.params().size(); ++k) {
            Field g(model.params().field(k).shape());
            for (int i = 0; i < cfg.batch; ++i)
                axpy(inv_b, items[static_cast<std::size_t>(i)].grads[static_cast<std::size_t>(k)], g);
            grads.push_back(std::move(g));
        }
        adam_step(model.params(), grads, adam, lr);
        result.iterations_run = iter + 1;
    }
    return result;
}

}  // namespace lordnet::train
