#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lordnet/cli.hpp"
#include "lordnet/io.hpp"

using namespace lordnet;

namespace {

RunConfig load_config(const std::string& path, std::uint64_t seed, bool has_seed, int jobs) {
    RunConfig cfg = parse_run_config(io::read_json_file(path));
    if (has_seed) {
        cfg.seed_train = seed;
        cfg.traincfg.seed = seed;
    }
    cfg.traincfg.jobs = jobs;
    if (const char* env = std::getenv("LORDNET_OUT")) cfg.output_dir = env;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lordnet: physics-constrained neural solvers for discretized PDEs"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    bool has_seed = false;
    int jobs = 0;
    bool force = false;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* opt = sub->add_option("--config", config_path, "JSON run configuration");
        if (needs_config) opt->required();
        sub->add_option("--seed", seed, "override the training seed")->each([&](const std::string&) {
            has_seed = true;
        });
        sub->add_option("--jobs", jobs, "worker threads for sample-level parallelism");
        sub->add_flag("--force", force, "overwrite existing outputs");
    };

    auto* gen = app.add_subcommand("gen", "generate dataset files");
    add_common(gen, true);
    auto* solve = app.add_subcommand("solve", "run the reference solver over a dataset");
    add_common(solve, true);
    auto* tr = app.add_subcommand("train", "train the configured model");
    add_common(tr, true);

    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint or the solver floor");
    add_common(ev, true);
    std::string checkpoint;
    bool use_fdm = false;
    ev->add_option("--checkpoint", checkpoint, "checkpoint directory to load");
    ev->add_flag("--fdm", use_fdm, "evaluate the solver wrapper instead of a network");

    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient audit");
    int gc_seeds = 10;
    std::uint64_t gc_seed = 2024;
    gc->add_option("--seeds", gc_seeds, "number of random seeds per check");
    gc->add_option("--seed", gc_seed, "base seed");

    auto* rend = app.add_subcommand("render", "render an LDNF field to PGM or CSV");
    std::string in_file, out_file, format = "p2";
    rend->add_option("input", in_file, "LDNF field file")->required();
    rend->add_option("output", out_file, "output path")->required();
    rend->add_option("--format", format, "p2 | p5 | csv");

    auto* ex = app.add_subcommand("experiments", "run a named preset ('list' to enumerate)");
    std::string preset = "list";
    std::string out_root = "out";
    ex->add_option("name", preset, "preset name or 'list'");
    ex->add_option("--out", out_root, "output root directory");
    ex->add_option("--jobs", jobs, "worker threads");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cli::cmd_gen(load_config(config_path, seed, has_seed, jobs), force);
        if (solve->parsed()) return cli::cmd_solve(load_config(config_path, seed, has_seed, jobs));
        if (tr->parsed()) return cli::cmd_train(load_config(config_path, seed, has_seed, jobs));
        if (ev->parsed())
            return cli::cmd_eval(load_config(config_path, seed, has_seed, jobs), checkpoint, use_fdm);
        if (gc->parsed()) return cli::cmd_gradcheck(gc_seeds, gc_seed);
        if (rend->parsed()) return cli::cmd_render(in_file, out_file, format);
        if (ex->parsed()) {
            if (const char* env = std::getenv("LORDNET_OUT")) out_root = env;
            return cli::cmd_experiments(preset, out_root, jobs);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cli::kConfigError;
    } catch (const ShapeError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cli::kConfigError;
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return cli::kNumericalError;
    }
    return cli::kOk;
}
