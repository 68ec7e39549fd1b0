#include "lordnet/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "lordnet/eval.hpp"
#include "lordnet/experiments.hpp"
#include "lordnet/io.hpp"
#include "lordnet/rng.hpp"

namespace lordnet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string sample_name(const char* prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%04d.ldnf", prefix, i);
    return buf;
}

Field gen_input(const RunConfig& cfg, int i, std::uint64_t seed_base) {
    rf::GrfSpec g = cfg.grf;
    g.seed = Rng::derive(seed_base, static_cast<std::uint64_t>(i));
    Field f = rf::sample_grf_on_grid(g, cfg.problem.grid.n);
    if (msr::is_poisson(cfg.problem.kind) && cfg.problem.grid.periodic()) f = mean_project(f);
    return f;
}

}  // namespace

int cmd_gen(const RunConfig& cfg, bool force) {
    const fs::path dir = fs::path(cfg.output_dir) / "dataset";
    if (fs::exists(dir) && !fs::is_empty(dir) && !force) {
        std::cerr << "gen: output '" << dir.string() << "' exists; pass --force to overwrite\n";
        return kConfigError;
    }
    fs::create_directories(dir);

    const bool poisson = msr::is_poisson(cfg.problem.kind);
    json files = json::array();
    for (int i = 0; i < cfg.gen_count; ++i) {
        Field input = gen_input(cfg, i, cfg.seed_train);
        const std::string in_name = sample_name(poisson ? "forcing" : "omega0", i);
        io::write_field((dir / in_name).string(), input);
        json entry = {{"input", in_name}, {"seed_stream", i}};
        if (cfg.gen_targets) {
            if (!poisson) throw ConfigError("gen: targets are generated for poisson kinds only; use solve");
            Field u = fdm::poisson_solve(input, cfg.problem.grid, cfg.problem.cg_tol);
            const std::string t_name = sample_name("solution", i);
            io::write_field((dir / t_name).string(), u);
            entry["target"] = t_name;
        }
        files.push_back(entry);
    }

    json manifest;
    manifest["kind"] = msr::kind_name(cfg.problem.kind);
    manifest["count"] = cfg.gen_count;
    manifest["seed"] = cfg.seed_train;
    manifest["grf"] = {{"amplitude", cfg.grf.amplitude}, {"shift", cfg.grf.shift}, {"exponent", cfg.grf.exponent}};
    manifest["grid_n"] = cfg.problem.grid.n;
    manifest["config"] = cfg.raw;
    manifest["files"] = files;
    io::write_json_file((dir / "manifest.json").string(), manifest);
    std::cout << "gen: wrote " << cfg.gen_count << " samples to " << dir.string() << "\n";
    return kOk;
}

int cmd_solve(const RunConfig& cfg) {
    const fs::path dataset = fs::path(cfg.output_dir) / "dataset";
    const fs::path out = fs::path(cfg.output_dir) / "solutions";
    json manifest = io::read_json_file((dataset / "manifest.json").string());
    fs::create_directories(out);

    const bool poisson = msr::is_poisson(cfg.problem.kind);
    bool all_ok = true;
    json audits = json::array();
    for (const auto& entry : manifest.at("files")) {
        const std::string in_name = entry.at("input").get<std::string>();
        Field input = io::read_field((dataset / in_name).string());
        if (poisson) {
            Field u = fdm::poisson_solve(input, cfg.problem.grid, cfg.problem.cg_tol);
            // residual audit: || -lap_h u - f || on the equation set
            Field r = fdm::apply_neg_laplacian(u, cfg.problem.grid);
            Field f_eq = cfg.problem.grid.periodic() ? mean_project(input) : input;
            double max_r = 0.0;
            if (cfg.problem.grid.periodic()) {
                max_r = max_abs(r - f_eq);
            } else {
                max_r = max_abs(crop_interior(r) - crop_interior(f_eq));
            }
            const std::string out_name = "solution_" + in_name;
            io::write_field((out / out_name).string(), u);
            std::cout << "solve: " << in_name << " max_residual " << max_r << "\n";
            audits.push_back({{"input", in_name}, {"output", out_name}, {"max_residual", max_r}});
        } else {
            fdm::NsParams p = cfg.problem.ns;
            p.steps = cfg.eval_horizon;
            if (auto warn = p.stability_warning(cfg.problem.grid)) std::cerr << "solve: " << *warn << "\n";
            try {
                std::vector<Field> psis = fdm::ns_trajectory(input, cfg.problem.grid, p, cfg.problem.cg_tol);
                const std::string base = in_name.substr(0, in_name.find('.'));
                for (std::size_t t = 0; t < psis.size(); ++t) {
                    char buf[32];
                    std::snprintf(buf, sizeof(buf), "_t%05zu.ldnf", t);
                    io::write_field((out / (base + buf)).string(), psis[t]);
                }
                // one-step residual audit between the last two states
                Tape tape;
                const int np = psis.size() >= 2 ? static_cast<int>(psis.size()) - 2 : 0;
                Field pred = cfg.problem.grid.periodic() ? psis.back() : crop_interior(psis.back());
                DiffValue r = msr::ns_residual(psis[static_cast<std::size_t>(np)], tape.input(pred), cfg.problem);
                const double max_r = max_abs(r.value());
                std::cout << "solve: " << in_name << " steps " << p.steps << " max_residual " << max_r << "\n";
                audits.push_back({{"input", in_name}, {"steps", p.steps}, {"max_residual", max_r}});
            } catch (const NumericError& e) {
                std::cerr << "solve: " << in_name << " failed: " << e.what() << "\n";
                audits.push_back({{"input", in_name}, {"error", e.what()}});
                all_ok = false;
            }
        }
    }
    json audit;
    audit["samples"] = audits;
    io::write_json_file((out / "audit.json").string(), audit);
    return all_ok ? kOk : kNumericalError;
}

int cmd_train(const RunConfig& cfg) {
    RunConfig c = cfg;
    std::unique_ptr<ModelIface> model;
    if (c.arch == "cnn") {
        if (!msr::is_poisson(c.problem.kind))
            throw ConfigError("train: the cnn baseline applies to poisson kinds");
        model = std::make_unique<cnn::CnnModel>(cnn::build_cnn(c.cnncfg));
    } else {
        model = std::make_unique<net::Network>(net::build_network(c.netcfg));
    }
    std::cout << "train: " << c.arch << " with " << model->params().total_entries() << " parameters, "
              << c.traincfg.max_iters << " iterations\n";
    train::TrainResult res = train::train(*model, c.traincfg);

    const fs::path dir(c.output_dir);
    io::save_checkpoint((dir / "checkpoint").string(), model->params(), c.raw);
    std::vector<io::CurvePoint> curve;
    for (const auto& p : res.curve) curve.push_back({p.iter, p.lr, p.loss});
    io::write_loss_curve((dir / "loss_curve.csv").string(), curve);

    json manifest = {{"initial_loss", res.initial_loss},
                     {"final_loss", res.final_loss},
                     {"iterations", res.iterations_run},
                     {"diverged", res.diverged},
                     {"parameters", model->params().total_entries()},
                     {"config", c.raw}};
    io::write_json_file((dir / "train_manifest.json").string(), manifest);

    if (res.diverged) {
        std::cerr << "train: diverged at iteration " << res.iterations_run
                  << "; last good checkpoint written\n";
        return kNumericalError;
    }
    std::cout << "train: loss " << res.initial_loss << " -> " << res.final_loss << "\n";
    return kOk;
}

int cmd_eval(const RunConfig& cfg, const std::string& checkpoint_dir, bool use_fdm_wrapper) {
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    const bool poisson = msr::is_poisson(cfg.problem.kind);
    const bool gauge = cfg.problem.grid.periodic();

    json report;
    eval::EvalReport rep;
    double timing_ms = 0.0;

    if (poisson) {
        std::unique_ptr<ModelIface> model;
        if (cfg.arch == "cnn")
            model = std::make_unique<cnn::CnnModel>(cnn::build_cnn(cfg.cnncfg));
        else
            model = std::make_unique<net::Network>(net::build_network(cfg.netcfg));
        if (!checkpoint_dir.empty()) io::load_checkpoint(checkpoint_dir, model->params());
        rep = eval::evaluate_poisson(*model, cfg.problem, cfg.grf, cfg.eval_samples, cfg.seed_test);
        Field probe = gen_input(cfg, 0, cfg.seed_test);
        Field x = cfg.problem.grid.periodic() ? probe : crop_interior(probe);
        timing_ms = eval::time_inference_ms([&] { (void)predict(*model, x); }, cfg.timing_reps);
    } else {
        const int warm_steps = static_cast<int>(std::lround(cfg.warm_start_seconds / cfg.problem.ns.dt));
        auto trajs = eval::make_test_trajectories(cfg.problem, cfg.grf, cfg.eval_samples, cfg.eval_horizon,
                                                  warm_steps, cfg.seed_test);
        eval::StepModel step;
        std::unique_ptr<net::Network> model;
        if (use_fdm_wrapper) {
            step = eval::fdm_onestep_model(cfg.problem);
        } else {
            model = std::make_unique<net::Network>(net::build_network(cfg.netcfg));
            if (!checkpoint_dir.empty()) io::load_checkpoint(checkpoint_dir, model->params());
            step = eval::network_step_model(*model, cfg.problem);
        }
        rep = cfg.eval_protocol == "rollout" ? eval::evaluate_rollout(step, trajs, gauge)
                                             : eval::evaluate_one_step(step, trajs, gauge, cfg.eval_stride);
        timing_ms = eval::time_inference_ms([&] { (void)step.step(trajs.front().psis.front()); },
                                            cfg.timing_reps);
        if (!rep.curves.empty()) {
            json curves = json::array();
            for (const auto& c : rep.curves) curves.push_back(c);
            io::write_json_file((dir / "error_curves.json").string(), curves);
        }
    }

    // per-sample CSV
    {
        std::string csv = "sample,error\n";
        for (std::size_t i = 0; i < rep.per_sample.size(); ++i)
            csv += std::to_string(i) + "," + std::to_string(rep.per_sample[i]) + "\n";
        std::ofstream out((dir / "per_sample.csv").string());
        out << csv;
    }

    report["protocol"] = rep.protocol;
    report["horizon"] = rep.horizon;
    report["mean_error"] = rep.mean_error;
    report["std_error"] = rep.std_error;
    report["samples"] = rep.per_sample.size();
    report["median_inference_ms"] = timing_ms;
    report["model"] = use_fdm_wrapper ? "fdm" : cfg.arch;
    report["config"] = cfg.raw;
    io::write_json_file((dir / "eval_report.json").string(), report);
    std::cout << "eval: mean error " << rep.mean_error << " +- " << rep.std_error << " over "
              << rep.per_sample.size() << " samples; median inference " << timing_ms << " ms\n";
    return kOk;
}

int cmd_gradcheck(int num_seeds, std::uint64_t seed) {
    auto entries = exp::run_gradcheck_suite(num_seeds, seed);
    bool ok = true;
    for (const auto& e : entries) {
        const bool pass = e.max_dev < 1e-5;
        ok = ok && pass;
        std::cout << (pass ? "  ok   " : "  FAIL ") << e.name << "  max_dev " << e.max_dev << "\n";
    }
    std::cout << "gradcheck: " << entries.size() << " checks, " << num_seeds << " seeds each: "
              << (ok ? "pass" : "FAIL") << "\n";
    return ok ? kOk : kNumericalError;
}

int cmd_render(const std::string& field_file, const std::string& out_path, const std::string& format) {
    Field f = io::read_field(field_file);
    if (format == "csv") {
        io::write_csv(out_path, f);
    } else if (format == "p2" || format == "p5") {
        io::write_pgm(out_path, f, format == "p5");
    } else {
        throw ConfigError("render: format must be p2, p5 or csv");
    }
    std::cout << "render: wrote " << out_path << "\n";
    return kOk;
}

int cmd_experiments(const std::string& preset_name, const std::string& out_root, int jobs) {
    if (preset_name == "list") {
        for (const auto& p : exp::presets())
            std::cout << p.name << "  [" << p.scale << "]  " << p.description << "\n";
        return kOk;
    }
    exp::PresetResult res = exp::run_preset(preset_name, out_root, jobs);
    for (const auto& m : res.metrics)
        std::cout << (m.pass ? "  ok   " : "  FAIL ") << m.name << " = " << m.value
                  << (m.less_equal ? " <= " : " >= ") << m.threshold << "\n";
    std::cout << "preset " << res.name << ": " << (res.passed ? "pass" : "FAIL") << "\n";
    return res.passed ? kOk : kAcceptanceFailure;
}

}  // namespace lordnet::cli
