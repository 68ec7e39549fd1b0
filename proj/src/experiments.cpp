#include "lordnet/experiments.hpp"

#include <cmath>
#include <filesystem>

#include "lordnet/eval.hpp"
#include "lordnet/io.hpp"
#include "lordnet/rng.hpp"

namespace lordnet::exp {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Gradcheck suite
// ---------------------------------------------------------------------------

namespace {

using Problem = GradCheckProblem;

std::vector<std::pair<std::string, Problem>> build_gradcheck_problems() {
    std::vector<std::pair<std::string, Problem>> out;

    out.emplace_back("elementwise_gelu_chain", Problem{
        {Shape{2, 3, 3}, Shape{2, 3, 3}},
        [](Tape&, const std::vector<DiffValue>& p) {
            DiffValue mixed = add(hadamard(p[0], p[1]), scale(sub(p[0], p[1]), 0.7));
            return mean_square(gelu(mixed));
        }});

    out.emplace_back("conv1x1_bias", Problem{
        {Shape{3, 4, 4}, Shape{2, 3}, Shape{2}},
        [](Tape&, const std::vector<DiffValue>& p) {
            return mean_square(gelu(conv1x1(p[0], p[1], p[2])));
        }});

    out.emplace_back("axis_matmul_rows", Problem{
        {Shape{2, 4, 3}, Shape{2, 4, 5}},
        [](Tape&, const std::vector<DiffValue>& p) { return mean_square(axis_matmul(p[0], p[1], 0)); }});

    out.emplace_back("axis_matmul_cols", Problem{
        {Shape{2, 4, 3}, Shape{2, 3, 2}},
        [](Tape&, const std::vector<DiffValue>& p) {
            return mean_square(gelu(axis_matmul(p[0], p[1], 1)));
        }});

    out.emplace_back("axis_matmul_depth", Problem{
        {Shape{1, 3, 2, 4}, Shape{1, 4, 2}},
        [](Tape&, const std::vector<DiffValue>& p) { return mean_square(axis_matmul(p[0], p[1], 2)); }});

    out.emplace_back("channel_scale", Problem{
        {Shape{3, 4, 2}, Shape{3, 2}},
        [](Tape&, const std::vector<DiffValue>& p) { return mean_square(channel_scale(p[0], p[1], 1)); }});

    out.emplace_back("stencil_periodic", Problem{
        {Shape{1, 5, 5}},
        [](Tape&, const std::vector<DiffValue>& p) {
            StencilKernel k = StencilKernel::laplacian5(BoundaryMode::periodic_wrap);
            return mean_square(stencil_apply(p[0], k, 0.2));
        }});

    out.emplace_back("stencil_dirichlet_pad", Problem{
        {Shape{1, 3, 3}},
        [](Tape&, const std::vector<DiffValue>& p) {
            StencilKernel k = StencilKernel::laplacian5(BoundaryMode::dirichlet_interior_only);
            return mean_square(stencil_apply(pad_interior(p[0]), k, 0.25));
        }});

    out.emplace_back("conv2d_dilated_wrap", Problem{
        {Shape{2, 5, 5}, Shape{2, 2, 3, 3}},
        [](Tape&, const std::vector<DiffValue>& p) {
            return mean_square(conv2d_dilated(p[0], p[1], 2, BoundaryMode::periodic_wrap));
        }});

    out.emplace_back("conv2d_dilated_zero", Problem{
        {Shape{2, 5, 5}, Shape{2, 2, 3, 3}},
        [](Tape&, const std::vector<DiffValue>& p) {
            return mean_square(gelu(conv2d_dilated(p[0], p[1], 2, BoundaryMode::zero_pad)));
        }});

    out.emplace_back("mcfc_dense", Problem{
        {Shape{2, 4}, Shape{2, 3, 4}},
        [](Tape&, const std::vector<DiffValue>& p) { return mean_square(net::mcfc_dense_forward(p[0], p[1])); }});

    out.emplace_back("lowrank_vec", Problem{
        {Shape{2, 5}, Shape{2, 2}, Shape{2, 2, 3}, Shape{2, 2, 5}},
        [](Tape&, const std::vector<DiffValue>& p) {
            return mean_square(net::lowrank_vec_forward(p[0], p[1], p[2], p[3]));
        }});

    out.emplace_back("lord2d_rank2", Problem{
        {Shape{2, 4, 3}, Shape{2, 2}, Shape{2, 4, 2}, Shape{2, 3, 3}, Shape{2, 4, 2}, Shape{2, 3, 3}},
        [](Tape&, const std::vector<DiffValue>& p) {
            net::LordFactorHandles h;
            h.eta = p[1];
            h.A = {{p[2], p[3]}, {p[4], p[5]}};
            return mean_square(net::lord_factored_forward(p[0], h));
        }});

    out.emplace_back("lord3d", Problem{
        {Shape{1, 3, 3, 3}, Shape{1, 1}, Shape{1, 3, 3}, Shape{1, 3, 3}, Shape{1, 3, 3}},
        [](Tape&, const std::vector<DiffValue>& p) {
            net::LordFactorHandles h;
            h.eta = p[1];
            h.A = {{p[2], p[3], p[4]}};
            return mean_square(net::lord_factored_forward(p[0], h));
        }});

    // Residual chains (input side only; stencil coefficients are constant).
    {
        msr::ResidualSpec spec;
        spec.kind = msr::ResidualKind::poisson_dirichlet;
        spec.grid = fdm::GridSpec::make_dirichlet(5);
        Field f(Shape{1, 3, 3});
        Rng rng(1234);
        for (std::int64_t i = 0; i < f.size(); ++i) f[i] = rng.normal();
        out.emplace_back("poisson_residual_chain", Problem{
            {Shape{1, 3, 3}},
            [spec, f](Tape&, const std::vector<DiffValue>& p) {
                return msr::msr_loss(msr::poisson_residual(p[0], f, spec));
            }});
    }
    {
        msr::ResidualSpec spec;
        spec.kind = msr::ResidualKind::ns_liddriven;
        spec.grid = fdm::GridSpec::make_lid_driven(5, 1.0);
        spec.ns = {100.0, 1e-3, 1};
        Field psi_t(Shape{1, 5, 5});
        Rng rng(77);
        for (int i = 1; i < 4; ++i)
            for (int j = 1; j < 4; ++j) psi_t.at(0, i, j) = 0.1 * rng.normal();
        out.emplace_back("ns_residual_liddriven", Problem{
            {Shape{1, 3, 3}},
            [spec, psi_t](Tape&, const std::vector<DiffValue>& p) {
                return msr::msr_loss(msr::ns_residual(psi_t, p[0], spec));
            }});
    }
    {
        msr::ResidualSpec spec;
        spec.kind = msr::ResidualKind::ns_periodic;
        spec.grid = fdm::GridSpec::make_periodic(4);
        spec.ns = {100.0, 1e-3, 1};
        Field psi_t(Shape{1, 4, 4});
        Rng rng(78);
        for (std::int64_t i = 0; i < psi_t.size(); ++i) psi_t[i] = 0.1 * rng.normal();
        psi_t = mean_project(psi_t);
        out.emplace_back("ns_residual_periodic", Problem{
            {Shape{1, 4, 4}},
            [spec, psi_t](Tape&, const std::vector<DiffValue>& p) {
                return msr::msr_loss(msr::ns_residual(psi_t, p[0], spec));
            }});
    }

    // Assembled networks at reduced size; the input rides along as an extra
    // checked parameter.
    auto network_problem = [](net::NetworkConfig cfg) {
        net::Network model = net::build_network(cfg);
        std::vector<Shape> shapes;
        for (int i = 0; i < model.params().size(); ++i) shapes.push_back(model.params().field(i).shape());
        shapes.push_back(Shape{1, cfg.height, cfg.width});
        const int nparams = static_cast<int>(shapes.size()) - 1;
        return Problem{shapes, [model, nparams](Tape&, const std::vector<DiffValue>& p) {
                           std::vector<DiffValue> bound(p.begin(), p.begin() + nparams);
                           return mean_square(model.forward(*p.front().tape, bound, p.back()));
                       }};
    };
    {
        net::NetworkConfig cfg;
        cfg.variant = net::Variant::poisson_linear;
        cfg.channels = 3;
        cfg.layers = 2;
        cfg.rank = 1;
        cfg.height = cfg.width = 4;
        cfg.init_seed = 5;
        out.emplace_back("poisson_linear_network", network_problem(cfg));
    }
    {
        net::NetworkConfig cfg;
        cfg.variant = net::Variant::ns_lord;
        cfg.channels = 4;
        cfg.layers = 2;
        cfg.rank = 1;
        cfg.height = cfg.width = 4;
        cfg.hidden = {6, 5};
        cfg.init_seed = 6;
        out.emplace_back("ns_lord_network", network_problem(cfg));
    }
    {
        cnn::DilatedCnnConfig cfg;
        cfg.channels = 3;
        cfg.height = cfg.width = 5;
        cfg.boundary = BoundaryMode::zero_pad;
        cfg.init_seed = 7;
        cnn::CnnModel model = cnn::build_cnn(cfg);
        std::vector<Shape> shapes;
        for (int i = 0; i < model.params().size(); ++i) shapes.push_back(model.params().field(i).shape());
        shapes.push_back(Shape{1, 5, 5});
        const int nparams = static_cast<int>(shapes.size()) - 1;
        out.emplace_back("dilated_cnn_network", Problem{
            shapes, [model, nparams](Tape&, const std::vector<DiffValue>& p) {
                std::vector<DiffValue> bound(p.begin(), p.begin() + nparams);
                return mean_square(model.forward(*p.front().tape, bound, p.back()));
            }});
    }
    return out;
}

}  // namespace

std::vector<GradSuiteEntry> run_gradcheck_suite(int num_seeds, std::uint64_t seed_base) {
    std::vector<GradSuiteEntry> entries;
    for (auto& [name, problem] : build_gradcheck_problems()) {
        GradSuiteEntry e;
        e.name = name;
        for (int s = 0; s < num_seeds; ++s)
            e.max_dev = std::max(e.max_dev, gradcheck(problem, Rng::derive(seed_base, static_cast<std::uint64_t>(s))));
        entries.push_back(std::move(e));
    }
    return entries;
}

// ---------------------------------------------------------------------------
// Preset table
// ---------------------------------------------------------------------------

namespace {

json ci_poisson_config(msr::ResidualKind kind) {
    json j = default_config_json(kind, 32);
    j["train"]["batch"] = 16;
    j["train"]["max_iters"] = 6000;
    j["train"]["decay_every"] = 1500;
    j["train"]["log_every"] = 200;
    j["eval"]["samples"] = 100;
    return j;
}

json extended_poisson_config(msr::ResidualKind kind, int n) {
    json j = default_config_json(kind, n);
    j["network"]["channels"] = n >= 128 ? 64 : 16;
    j["network"]["layers"] = n >= 128 ? 4 : 2;
    j["train"]["batch"] = 256;
    j["train"]["max_iters"] = 150000;
    j["train"]["decay_every"] = 10000;
    j["train"]["decay_factor"] = 0.8;
    j["eval"]["samples"] = 100;
    return j;
}

std::vector<Preset> build_presets() {
    std::vector<Preset> out;

    {
        Preset p;
        p.name = "poisson_periodic_n32_ci";
        p.scale = "ci";
        p.description = "Linear factored network on the periodic Poisson problem at n=32, reduced budget.";
        p.config = ci_poisson_config(msr::ResidualKind::poisson_periodic);
        p.reference = {{"full_budget_mean_rel_error", 0.00051}, {"full_budget_std", 0.00006}};
        out.push_back(std::move(p));
    }
    {
        Preset p;
        p.name = "poisson_dirichlet_cnn_vs_lord_ci";
        p.scale = "ci";
        p.description = "Factored network vs matched-budget dilated CNN on the Dirichlet Poisson problem.";
        p.config = ci_poisson_config(msr::ResidualKind::poisson_dirichlet);
        p.reference = {{"full_budget_lord_error", 0.00265}, {"full_budget_cnn_error", 0.73042}};
        out.push_back(std::move(p));
    }
    {
        Preset p;
        p.name = "ns_liddriven_n32_ci";
        p.scale = "ci";
        p.description = "Residual-trained stream-function stepper, lid-driven cavity at 32x32, pooled states.";
        json j = default_config_json(msr::ResidualKind::ns_liddriven, 32);
        j["train"]["max_iters"] = 2500;
        j["train"]["decay_every"] = 600;
        j["train"]["state_count"] = 24;
        j["eval"]["samples"] = 6;
        j["eval"]["horizon"] = 100;
        j["eval"]["stride"] = 5;
        p.config = j;
        p.reference = {{"full_budget_error_1", 0.000071}, {"full_budget_error_2700", 0.0284}};
        out.push_back(std::move(p));
    }
    {
        Preset p;
        p.name = "ns_periodic_n32_ci";
        p.scale = "ci";
        p.description = "Residual-trained stepper on the periodic vorticity problem at 32x32.";
        json j = default_config_json(msr::ResidualKind::ns_periodic, 32);
        j["train"]["dataset_source"] = "sampled_initials";
        j["train"]["max_iters"] = 2500;
        j["train"]["decay_every"] = 600;
        j["train"]["state_count"] = 48;
        j["eval"]["samples"] = 6;
        j["eval"]["horizon"] = 20;
        j["eval"]["stride"] = 1;
        p.config = j;
        p.reference = {{"full_budget_error_1", 0.0000092}, {"full_budget_error_200", 0.00247}};
        out.push_back(std::move(p));
    }
    {
        Preset p;
        p.name = "entanglement_rows";
        p.scale = "ci";
        p.description = "Inverse-operator rows at n=32: periodic rows are circular shifts, Dirichlet rows are not.";
        json j;
        j["problem"] = {{"kind", "poisson_periodic"}};
        j["grid"] = {{"n", 32}};
        j["output_dir"] = "out";
        p.config = j;
        out.push_back(std::move(p));
    }

    {
        Preset p;
        p.name = "poisson_periodic_n32_extended";
        p.scale = "extended";
        p.description = "Full-budget periodic Poisson profile (batch 256, 150k iterations).";
        p.config = extended_poisson_config(msr::ResidualKind::poisson_periodic, 32);
        p.reference = {{"mean_rel_error", 0.00051}, {"std", 0.00006}};
        out.push_back(std::move(p));
    }
    {
        Preset p;
        p.name = "poisson_dirichlet_n32_extended";
        p.scale = "extended";
        p.description = "Full-budget Dirichlet Poisson profile.";
        p.config = extended_poisson_config(msr::ResidualKind::poisson_dirichlet, 32);
        p.reference = {{"mean_rel_error", 0.00265}, {"std", 0.00015}};
        out.push_back(std::move(p));
    }
    {
        Preset p;
        p.name = "poisson_periodic_n128_extended";
        p.scale = "extended";
        p.description = "Full-budget periodic Poisson profile at n=128 (64 channels, 4 layers).";
        p.config = extended_poisson_config(msr::ResidualKind::poisson_periodic, 128);
        p.reference = {{"mean_rel_error", 0.00379}, {"std", 0.00031}};
        out.push_back(std::move(p));
    }
    {
        Preset p;
        p.name = "ns_liddriven_n64_extended";
        p.scale = "extended";
        p.description = "Full-budget lid-driven profile at 64x64 (2 Lord modules, 64 channels).";
        json j = default_config_json(msr::ResidualKind::ns_liddriven, 64);
        j["network"]["channels"] = 64;
        j["network"]["hidden"] = json::array({256, 128});
        j["train"]["batch"] = 64;
        j["train"]["max_iters"] = 390000;
        j["train"]["decay_every"] = 7800;
        j["train"]["decay_factor"] = 0.9;
        j["train"]["state_count"] = 5000;
        j["eval"]["samples"] = 25;
        j["eval"]["horizon"] = 2700;
        p.config = j;
        p.reference = {{"error_1", 0.000071}, {"error_2700", 0.0284}, {"parameter_size", 1150000}};
        out.push_back(std::move(p));
    }
    {
        Preset p;
        p.name = "ns_periodic_n64_extended";
        p.scale = "extended";
        p.description = "Full-budget periodic vorticity profile at 64x64.";
        json j = default_config_json(msr::ResidualKind::ns_periodic, 64);
        j["network"]["channels"] = 64;
        j["network"]["hidden"] = json::array({256, 128});
        j["train"]["dataset_source"] = "sampled_initials";
        j["train"]["batch"] = 64;
        j["train"]["max_iters"] = 500000;
        j["train"]["decay_every"] = 50000;
        j["train"]["decay_factor"] = 0.9;
        j["train"]["state_count"] = 6000;
        j["eval"]["samples"] = 25;
        j["eval"]["horizon"] = 200;
        p.config = j;
        p.reference = {{"error_1", 0.0000092}, {"error_200", 0.00247}};
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace

const std::vector<Preset>& presets() {
    static const std::vector<Preset> table = build_presets();
    return table;
}

const Preset& find_preset(const std::string& name) {
    for (const auto& p : presets())
        if (p.name == name) return p;
    throw ConfigError("unknown preset '" + name + "'");
}

// ---------------------------------------------------------------------------
// Preset execution
// ---------------------------------------------------------------------------

namespace {

PresetMetric metric(std::string name, double value, double threshold, bool less_equal = true) {
    PresetMetric m;
    m.name = std::move(name);
    m.value = value;
    m.threshold = threshold;
    m.less_equal = less_equal;
    m.pass = less_equal ? value <= threshold : value >= threshold;
    return m;
}

struct TrainedRun {
    train::TrainResult result;
    json summary;
};

TrainedRun train_model(ModelIface& model, RunConfig cfg, const std::string& dir, int jobs,
                       const std::string& tag) {
    cfg.traincfg.jobs = jobs;
    TrainedRun run;
    run.result = train::train(model, cfg.traincfg);
    io::save_checkpoint(dir + "/checkpoint_" + tag, model.params(), cfg.raw);
    std::vector<io::CurvePoint> curve;
    for (const auto& p : run.result.curve) curve.push_back({p.iter, p.lr, p.loss});
    io::write_loss_curve(dir + "/loss_curve_" + tag + ".csv", curve);
    run.summary = {{"initial_loss", run.result.initial_loss},
                   {"final_loss", run.result.final_loss},
                   {"iterations", run.result.iterations_run},
                   {"diverged", run.result.diverged}};
    return run;
}

PresetResult run_poisson_periodic_ci(const Preset& preset, const std::string& dir, int jobs) {
    RunConfig cfg = parse_run_config(preset.config);
    net::Network model = net::build_network(cfg.netcfg);
    PresetResult res;
    res.name = preset.name;
    TrainedRun run = train_model(model, cfg, dir, jobs, "lord");
    eval::EvalReport report = eval::evaluate_poisson(model, cfg.problem, cfg.grf, cfg.eval_samples, cfg.seed_test);
    res.metrics.push_back(metric("mean_rel_error", report.mean_error, 5e-3));
    res.summary = {{"train", run.summary},
                   {"eval", {{"mean", report.mean_error}, {"std", report.std_error}, {"samples", cfg.eval_samples}}},
                   {"reference", preset.reference}};
    return res;
}

PresetResult run_poisson_dirichlet_cnn_vs_lord(const Preset& preset, const std::string& dir, int jobs) {
    RunConfig cfg = parse_run_config(preset.config);
    PresetResult res;
    res.name = preset.name;

    net::Network lord = net::build_network(cfg.netcfg);
    TrainedRun lord_run = train_model(lord, cfg, dir, jobs, "lord");
    eval::EvalReport lord_rep = eval::evaluate_poisson(lord, cfg.problem, cfg.grf, cfg.eval_samples, cfg.seed_test);

    cnn::CnnModel baseline = cnn::build_cnn(cfg.cnncfg);
    RunConfig cnn_cfg = cfg;  // matched budget
    TrainedRun cnn_run = train_model(baseline, cnn_cfg, dir, jobs, "cnn");
    eval::EvalReport cnn_rep =
        eval::evaluate_poisson(baseline, cfg.problem, cfg.grf, cfg.eval_samples, cfg.seed_test);

    res.metrics.push_back(metric("lord_mean_rel_error", lord_rep.mean_error, 2e-2));
    res.metrics.push_back(metric("lord_to_cnn_error_ratio", lord_rep.mean_error / cnn_rep.mean_error, 0.1));
    res.summary = {{"lord", {{"train", lord_run.summary}, {"mean", lord_rep.mean_error}, {"std", lord_rep.std_error}}},
                   {"cnn", {{"train", cnn_run.summary}, {"mean", cnn_rep.mean_error}, {"std", cnn_rep.std_error}}},
                   {"reference", preset.reference}};
    return res;
}

PresetResult run_ns_ci(const Preset& preset, const std::string& dir, int jobs) {
    RunConfig cfg = parse_run_config(preset.config);
    PresetResult res;
    res.name = preset.name;

    net::Network model = net::build_network(cfg.netcfg);
    TrainedRun run = train_model(model, cfg, dir, jobs, "lord");

    const int warm_steps = static_cast<int>(std::lround(cfg.warm_start_seconds / cfg.problem.ns.dt));
    const bool gauge = cfg.problem.grid.periodic();
    auto trajs = eval::make_test_trajectories(cfg.problem, cfg.grf, cfg.eval_samples, cfg.eval_horizon,
                                              warm_steps, cfg.seed_test);

    eval::StepModel net_step = eval::network_step_model(model, cfg.problem);
    eval::EvalReport one = eval::evaluate_one_step(net_step, trajs, gauge, cfg.eval_stride);
    eval::EvalReport roll = eval::evaluate_rollout(net_step, trajs, gauge);

    // Metric floor: the solver replayed through the same harness.
    eval::StepModel replay = eval::fdm_replay_model(trajs.front().omega_start, cfg.problem);
    eval::EvalReport floor_roll = eval::evaluate_rollout(replay, {trajs.front()}, gauge);
    double floor_max = 0.0;
    for (const auto& curve : floor_roll.curves)
        for (double e : curve) floor_max = std::max(floor_max, e);

    const double drop = run.result.initial_loss / std::max(run.result.final_loss, 1e-300);
    res.metrics.push_back(metric("train_loss_drop", drop, 100.0, false));
    res.metrics.push_back(metric("error_one_step", one.mean_error, 1e-2));
    res.metrics.push_back(
        metric("rollout_terminal_error", roll.mean_error, preset.name == "ns_periodic_n32_ci" ? 0.1 : 0.2));
    res.metrics.push_back(metric("fdm_replay_rollout_floor", floor_max, 10.0 * cfg.problem.cg_tol));

    res.summary = {{"train", run.summary},
                   {"error_one_step", {{"mean", one.mean_error}, {"std", one.std_error}}},
                   {"rollout", {{"horizon", roll.horizon}, {"mean", roll.mean_error}, {"std", roll.std_error}}},
                   {"fdm_replay_rollout_floor", floor_max},
                   {"reference", preset.reference}};

    // Archive the rollout error curves.
    json curves = json::array();
    for (const auto& c : roll.curves) curves.push_back(c);
    io::write_json_file(dir + "/rollout_curves.json", curves);
    return res;
}

PresetResult run_entanglement(const Preset& preset, const std::string& dir, int /*jobs*/) {
    PresetResult res;
    res.name = preset.name;
    const int n = preset.config.at("grid").at("n").get<int>();

    // Four probe points (interior coordinates for the Dirichlet case).
    const std::vector<std::pair<int, int>> probes = {{n / 4, n / 4}, {n / 2, n / 2}, {3 * n / 4, n / 4},
                                                     {n / 8, 5 * n / 8}};

    fdm::GridSpec per = fdm::GridSpec::make_periodic(n);
    std::vector<Field> per_rows;
    for (auto [i, j] : probes) per_rows.push_back(fdm::inverse_operator_row(i * n + j, per));

    // Periodic rows must be circular shifts of one another.
    double shift_dev = 0.0;
    for (std::size_t k = 1; k < per_rows.size(); ++k) {
        const int di = probes[k].first - probes[0].first;
        const int dj = probes[k].second - probes[0].second;
        shift_dev = std::max(shift_dev, max_abs(per_rows[k] - circular_shift(per_rows[0], di, dj)));
    }

    fdm::GridSpec dir_grid = fdm::GridSpec::make_dirichlet(n);
    const int m = n - 2;
    std::vector<Field> dir_rows;
    for (auto [i, j] : probes) {
        const int ii = std::min(std::max(i - 1, 0), m - 1);
        const int jj = std::min(std::max(j - 1, 0), m - 1);
        dir_rows.push_back(fdm::inverse_operator_row(ii * m + jj, dir_grid));
    }

    // Dirichlet rows are not shifts: best-case alignment still mismatches.
    double worst_best_mismatch = 1e300;
    for (std::size_t k = 1; k < dir_rows.size(); ++k) {
        double best = 1e300;
        for (int di = 0; di < n; ++di)
            for (int dj = 0; dj < n; ++dj) {
                const double d = norm2(dir_rows[k] - circular_shift(dir_rows[0], di, dj)) / norm2(dir_rows[k]);
                best = std::min(best, d);
            }
        worst_best_mismatch = std::min(worst_best_mismatch, best);
    }

    for (std::size_t k = 0; k < probes.size(); ++k) {
        // log-magnitude heatmaps, the standard view of these rows
        auto log_map = [](const Field& f) {
            Field out(f.shape());
            for (std::int64_t i = 0; i < f.size(); ++i) out[i] = std::log10(std::abs(f[i]) + 1e-16);
            return out;
        };
        io::write_pgm(dir + "/row_periodic_" + std::to_string(k) + ".pgm", log_map(per_rows[k]), false);
        io::write_pgm(dir + "/row_dirichlet_" + std::to_string(k) + ".pgm", log_map(dir_rows[k]), false);
    }

    res.metrics.push_back(metric("periodic_shift_deviation", shift_dev, 1e-10));
    res.metrics.push_back(metric("dirichlet_shift_mismatch", worst_best_mismatch, 0.1, false));
    res.summary = {{"periodic_shift_deviation", shift_dev},
                   {"dirichlet_shift_mismatch", worst_best_mismatch},
                   {"probes", probes.size()}};
    return res;
}

}  // namespace

PresetResult run_preset(const std::string& name, const std::string& out_root, int jobs) {
    const Preset& preset = find_preset(name);
    const std::string dir = (fs::path(out_root) / "presets" / name).string();
    fs::create_directories(dir);

    PresetResult res;
    if (name == "poisson_periodic_n32_ci" || name == "poisson_periodic_n32_extended" ||
        name == "poisson_periodic_n128_extended") {
        res = run_poisson_periodic_ci(preset, dir, jobs);
    } else if (name == "poisson_dirichlet_cnn_vs_lord_ci" || name == "poisson_dirichlet_n32_extended") {
        res = run_poisson_dirichlet_cnn_vs_lord(preset, dir, jobs);
    } else if (name == "ns_liddriven_n32_ci" || name == "ns_periodic_n32_ci" ||
               name == "ns_liddriven_n64_extended" || name == "ns_periodic_n64_extended") {
        res = run_ns_ci(preset, dir, jobs);
    } else if (name == "entanglement_rows") {
        res = run_entanglement(preset, dir, jobs);
    } else {
        throw ConfigError("preset '" + name + "' has no runner");
    }

    res.passed = true;
    for (const auto& m : res.metrics) res.passed = res.passed && m.pass;

    json report;
    report["preset"] = res.name;
    report["scale"] = preset.scale;
    report["passed"] = res.passed;
    json metrics = json::array();
    for (const auto& m : res.metrics)
        metrics.push_back({{"name", m.name},
                           {"value", m.value},
                           {"threshold", m.threshold},
                           {"relation", m.less_equal ? "<=" : ">="},
                           {"pass", m.pass}});
    report["metrics"] = metrics;
    report["summary"] = res.summary;
    io::write_json_file(dir + "/report.json", report);
    return res;
}

}  // namespace lordnet::exp
