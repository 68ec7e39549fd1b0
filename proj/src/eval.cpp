#include "lordnet/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>

#include "lordnet/rng.hpp"

namespace lordnet::eval {

StepModel network_step_model(const ModelIface& model, const msr::ResidualSpec& spec) {
    const bool wall = !spec.grid.periodic();
    const bool periodic = spec.grid.periodic();
    const ModelIface* m = &model;
    return StepModel{"network", [m, wall, periodic](const Field& state) {
                         Field x = wall ? crop_interior(state) : state;
                         Field y = predict(*m, x);
                         if (wall) return pad_with_zero_ring(y);
                         if (periodic) return mean_project(y);
                         return y;
                     }};
}

StepModel fdm_onestep_model(const msr::ResidualSpec& spec) {
    return StepModel{"fdm_onestep", [spec](const Field& psi) {
                         Field omega = fdm::vorticity_from_stream(psi, spec.grid);
                         fdm::NsStepResult r = fdm::ns_step(omega, spec.grid, spec.ns, spec.cg_tol);
                         return fdm::poisson_solve(r.omega_next, spec.grid, spec.cg_tol);
                     }};
}

StepModel fdm_replay_model(const Field& omega_0, const msr::ResidualSpec& spec) {
    auto omega = std::make_shared<Field>(omega_0);
    return StepModel{"fdm_replay", [omega, spec](const Field& /*ignored*/) {
                         fdm::NsStepResult r = fdm::ns_step(*omega, spec.grid, spec.ns, spec.cg_tol);
                         *omega = std::move(r.omega_next);
                         return fdm::poisson_solve(*omega, spec.grid, spec.cg_tol);
                     }};
}

double relative_error(const Field& pred, const Field& truth, bool gauge_fix) {
    require_same_shape(pred, truth, "relative_error");
    Field p = gauge_fix ? mean_project(pred) : pred;
    Field t = gauge_fix ? mean_project(truth) : truth;
    const double tn = norm2(t);
    if (tn == 0.0) throw NumericError("relative_error: zero-norm truth (degenerate case)");
    return norm2(p - t) / tn;
}

std::vector<Field> rollout(const StepModel& model, const Field& state_0, int steps) {
    if (steps < 0) throw ConfigError("rollout: steps must be >= 0");
    std::vector<Field> out;
    out.reserve(static_cast<std::size_t>(steps) + 1);
    out.push_back(state_0);
    for (int t = 0; t < steps; ++t) {
        Field next = model.step(out.back());
        if (!next.all_finite())
            throw NumericError("rollout: non-finite state at step " + std::to_string(t + 1));
        out.push_back(std::move(next));
    }
    return out;
}

std::vector<TestTrajectory> make_test_trajectories(const msr::ResidualSpec& spec, const rf::GrfSpec& grf,
                                                   int samples, int horizon, int warm_steps,
                                                   std::uint64_t seed_base) {
    std::vector<TestTrajectory> out;
    out.reserve(static_cast<std::size_t>(samples));
    for (int s = 0; s < samples; ++s) {
        rf::GrfSpec g = grf;
        g.seed = Rng::derive(seed_base, static_cast<std::uint64_t>(s));
        Field omega = rf::sample_grf_on_grid(g, spec.grid.n);
        fdm::NsParams warm = spec.ns;
        for (int t = 0; t < warm_steps; ++t)
            omega = fdm::ns_step(omega, spec.grid, warm, spec.cg_tol).omega_next;
        fdm::NsParams p = spec.ns;
        p.steps = horizon;
        TestTrajectory traj;
        traj.psis = fdm::ns_trajectory(omega, spec.grid, p, spec.cg_tol);
        traj.omega_start = std::move(omega);
        out.push_back(std::move(traj));
    }
    return out;
}

static void finish_stats(EvalReport& r) {
    double sum = 0.0;
    for (double e : r.per_sample) sum += e;
    r.mean_error = r.per_sample.empty() ? 0.0 : sum / static_cast<double>(r.per_sample.size());
    double var = 0.0;
    for (double e : r.per_sample) var += (e - r.mean_error) * (e - r.mean_error);
    r.std_error = r.per_sample.size() > 1
                      ? std::sqrt(var / static_cast<double>(r.per_sample.size() - 1))
                      : 0.0;
}

EvalReport evaluate_one_step(const StepModel& model, const std::vector<TestTrajectory>& truth,
                             bool gauge_fix, int stride) {
    if (stride < 1) throw ConfigError("evaluate_one_step: stride must be >= 1");
    EvalReport r;
    r.protocol = "one_step";
    r.horizon = 1;
    for (const auto& traj : truth) {
        double sum = 0.0;
        int count = 0;
        for (std::size_t t = 0; t + 1 < traj.psis.size(); t += static_cast<std::size_t>(stride)) {
            Field pred = model.step(traj.psis[t]);
            sum += relative_error(pred, traj.psis[t + 1], gauge_fix);
            ++count;
        }
        if (count > 0) r.per_sample.push_back(sum / count);
    }
    finish_stats(r);
    return r;
}

EvalReport evaluate_rollout(const StepModel& model, const std::vector<TestTrajectory>& truth,
                            bool gauge_fix) {
    EvalReport r;
    r.protocol = "rollout";
    for (const auto& traj : truth) {
        const int steps = static_cast<int>(traj.psis.size()) - 1;
        r.horizon = steps;
        std::vector<Field> pred = rollout(model, traj.psis.front(), steps);
        std::vector<double> curve;
        curve.reserve(static_cast<std::size_t>(steps));
        for (int t = 1; t <= steps; ++t)
            curve.push_back(relative_error(pred[static_cast<std::size_t>(t)],
                                           traj.psis[static_cast<std::size_t>(t)], gauge_fix));
        r.per_sample.push_back(curve.empty() ? 0.0 : curve.back());
        r.curves.push_back(std::move(curve));
    }
    finish_stats(r);
    return r;
}

EvalReport evaluate_poisson(const ModelIface& model, const msr::ResidualSpec& spec,
                            const rf::GrfSpec& grf, int samples, std::uint64_t seed_base) {
    if (!msr::is_poisson(spec.kind)) throw ConfigError("evaluate_poisson: spec is not a poisson kind");
    const bool periodic = spec.grid.periodic();
    EvalReport r;
    r.protocol = "one_step";
    r.horizon = 0;
    for (int s = 0; s < samples; ++s) {
        rf::GrfSpec g = grf;
        g.seed = Rng::derive(seed_base, static_cast<std::uint64_t>(s));
        Field f_full = rf::sample_grf_on_grid(g, spec.grid.n);
        if (periodic) f_full = mean_project(f_full);
        Field truth_full = fdm::poisson_solve(f_full, spec.grid, spec.cg_tol);
        Field input = periodic ? f_full : crop_interior(f_full);
        Field truth = periodic ? truth_full : crop_interior(truth_full);
        Field pred = predict(model, input);
        r.per_sample.push_back(relative_error(pred, truth, periodic));
    }
    finish_stats(r);
    return r;
}

double time_inference_ms(const std::function<void()>& fn, int reps) {
    std::vector<double> ms;
    ms.reserve(static_cast<std::size_t>(reps));
    for (int i = 0; i < reps; ++i) {
        auto t0 = std::chrono::steady_clock::now();
        fn();
        auto t1 = std::chrono::steady_clock::now();
        ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    std::sort(ms.begin(), ms.end());
    return ms.empty() ? 0.0 : ms[ms.size() / 2];
}

}  // namespace lordnet::eval
