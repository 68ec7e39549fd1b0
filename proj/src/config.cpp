#include "lordnet/config.hpp"

#include <cmath>

#include "lordnet/io.hpp"

namespace lordnet {

using nlohmann::json;

json default_config_json(msr::ResidualKind kind, int n) {
    json j;
    j["problem"] = {{"kind", msr::kind_name(kind)}, {"cg_tol", 1e-10}};
    switch (kind) {
        case msr::ResidualKind::ns_liddriven:
            j["problem"]["reynolds"] = 1000.0;
            j["problem"]["dt"] = 1e-2;
            j["problem"]["lid_speed"] = 1.0;
            j["problem"]["warm_start_seconds"] = 1.98;
            j["problem"]["grf"] = {{"amplitude", 512.0}, {"shift", 64.0}, {"exponent", 4.0}};
            break;
        case msr::ResidualKind::ns_periodic:
            j["problem"]["reynolds"] = 1000.0;
            j["problem"]["dt"] = 1e-2;
            j["problem"]["grf"] = {{"amplitude", 512.0}, {"shift", 64.0}, {"exponent", 4.0}};
            break;
        default:
            j["problem"]["grf"] = {{"amplitude", std::pow(7.0, 1.5)}, {"shift", 49.0}, {"exponent", 2.5}};
            break;
    }
    j["grid"] = {{"n", n}};
    if (msr::is_poisson(kind)) {
        j["network"] = {{"arch", "lord"}, {"channels", 16}, {"layers", 2}, {"rank", 1}};
        j["train"] = {{"loss", "msr"},      {"lr0", 1e-3},     {"decay_factor", 0.8},
                      {"decay_every", 2000}, {"batch", 16},     {"max_iters", 4000},
                      {"dataset_source", "sampled_initials"}, {"log_every", 100}};
        j["eval"] = {{"samples", 100}, {"protocol", "one_step"}, {"timing_reps", 100}};
    } else {
        j["network"] = {{"arch", "lord"}, {"channels", 32}, {"layers", 2}, {"rank", 1},
                        {"hidden", json::array({128, 64})}};
        j["train"] = {{"loss", "msr"},     {"lr0", 1e-3},   {"decay_factor", 0.9},
                      {"decay_every", 1000}, {"batch", 8},    {"max_iters", 2000},
                      {"dataset_source", "pool"}, {"state_count", 24}, {"log_every", 50},
                      {"pool", {{"size", 64}, {"refresh_period", 10}, {"refresh_fraction", 0.25},
                                {"reinit_period", 40}}}};
        j["eval"] = {{"samples", 8}, {"protocol", "rollout"}, {"horizon", 100}, {"stride", 1},
                     {"timing_reps", 100}};
    }
    j["seeds"] = {{"train", 1}, {"test", 900001}, {"init", 7}};
    j["gen"] = {{"count", 16}, {"targets", false}};
    j["output_dir"] = "out";
    return j;
}

namespace {

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

}  // namespace

RunConfig parse_run_config(const json& j) {
    io::require_keys(j, {"problem", "grid", "network", "train", "eval", "seeds", "gen", "output_dir"},
                     "config");
    if (!j.contains("problem") || !j.contains("grid")) throw ConfigError("config: problem and grid are required");

    RunConfig cfg;
    cfg.raw = j;

    // grid
    io::require_keys(j.at("grid"), {"n"}, "config.grid");
    const int n = get_or<int>(j.at("grid"), "n", 32);

    // problem
    const json& jp = j.at("problem");
    io::require_keys(jp, {"kind", "reynolds", "dt", "lid_speed", "cg_tol", "warm_start_seconds", "grf"},
                     "config.problem");
    const auto kind = msr::kind_from_name(get_or<std::string>(jp, "kind", "poisson_periodic"));
    cfg.problem.kind = kind;
    switch (kind) {
        case msr::ResidualKind::poisson_periodic:
        case msr::ResidualKind::ns_periodic:
            cfg.problem.grid = fdm::GridSpec::make_periodic(n);
            break;
        case msr::ResidualKind::poisson_dirichlet:
            cfg.problem.grid = fdm::GridSpec::make_dirichlet(n);
            break;
        case msr::ResidualKind::ns_liddriven:
            cfg.problem.grid = fdm::GridSpec::make_lid_driven(n, get_or<double>(jp, "lid_speed", 1.0));
            break;
    }
    cfg.problem.cg_tol = get_or<double>(jp, "cg_tol", fdm::kDefaultCgTol);
    cfg.problem.ns.reynolds = get_or<double>(jp, "reynolds", 1000.0);
    cfg.problem.ns.dt = get_or<double>(jp, "dt", 1e-2);
    cfg.warm_start_seconds = get_or<double>(jp, "warm_start_seconds", 0.0);

    const bool poisson = msr::is_poisson(kind);
    // the spectral sampler needs a power-of-two resolution covering the grid
    int sampler_n = 4;
    while (sampler_n < n) sampler_n *= 2;
    cfg.grf = poisson ? rf::GrfSpec::poisson_forcing(sampler_n, 0) : rf::GrfSpec::ns_vorticity(sampler_n, 0);
    if (jp.contains("grf")) {
        io::require_keys(jp.at("grf"), {"amplitude", "shift", "exponent"}, "config.problem.grf");
        cfg.grf.amplitude = get_or<double>(jp.at("grf"), "amplitude", cfg.grf.amplitude);
        cfg.grf.shift = get_or<double>(jp.at("grf"), "shift", cfg.grf.shift);
        cfg.grf.exponent = get_or<double>(jp.at("grf"), "exponent", cfg.grf.exponent);
    }
    cfg.problem.validate();

    // seeds
    if (j.contains("seeds")) {
        io::require_keys(j.at("seeds"), {"train", "test", "init"}, "config.seeds");
        cfg.seed_train = get_or<std::uint64_t>(j.at("seeds"), "train", cfg.seed_train);
        cfg.seed_test = get_or<std::uint64_t>(j.at("seeds"), "test", cfg.seed_test);
        cfg.seed_init = get_or<std::uint64_t>(j.at("seeds"), "init", cfg.seed_init);
    }

    // network
    const int extent = cfg.problem.prediction_extent();
    cfg.netcfg.variant = poisson ? net::Variant::poisson_linear : net::Variant::ns_lord;
    cfg.netcfg.height = extent;
    cfg.netcfg.width = extent;
    cfg.netcfg.channels = poisson ? 16 : 64;
    cfg.netcfg.layers = 2;
    cfg.netcfg.hidden = {256, 128};
    cfg.netcfg.init_seed = cfg.seed_init;
    cfg.cnncfg.height = extent;
    cfg.cnncfg.width = extent;
    cfg.cnncfg.boundary =
        cfg.problem.grid.periodic() ? BoundaryMode::periodic_wrap : BoundaryMode::zero_pad;
    cfg.cnncfg.init_seed = cfg.seed_init;
    if (j.contains("network")) {
        const json& jn = j.at("network");
        io::require_keys(jn, {"arch", "channels", "layers", "rank", "hidden", "module_order"},
                         "config.network");
        cfg.arch = get_or<std::string>(jn, "arch", "lord");
        if (cfg.arch != "lord" && cfg.arch != "cnn")
            throw ConfigError("config.network.arch must be 'lord' or 'cnn'");
        cfg.netcfg.channels = get_or<int>(jn, "channels", cfg.netcfg.channels);
        cfg.netcfg.layers = get_or<int>(jn, "layers", cfg.netcfg.layers);
        cfg.netcfg.rank = get_or<int>(jn, "rank", cfg.netcfg.rank);
        if (jn.contains("hidden")) cfg.netcfg.hidden = jn.at("hidden").get<std::vector<int>>();
        const std::string order = get_or<std::string>(jn, "module_order", "embed_lord_mix");
        if (order == "embed_lord_mix") cfg.netcfg.order = net::ModuleOrder::embed_lord_mix;
        else if (order == "lord_embed_mix") cfg.netcfg.order = net::ModuleOrder::lord_embed_mix;
        else throw ConfigError("config.network.module_order: unknown value '" + order + "'");
        cfg.cnncfg.channels = cfg.netcfg.channels;
    }
    if (!poisson && static_cast<int>(cfg.netcfg.hidden.size()) != cfg.netcfg.layers)
        cfg.netcfg.hidden.resize(static_cast<std::size_t>(cfg.netcfg.layers),
                                 cfg.netcfg.hidden.empty() ? 128 : cfg.netcfg.hidden.back());

    // train
    cfg.traincfg.problem = cfg.problem;
    cfg.traincfg.grf = cfg.grf;
    cfg.traincfg.seed = cfg.seed_train;
    cfg.traincfg.warm_start_seconds = cfg.warm_start_seconds;
    if (j.contains("train")) {
        const json& jt = j.at("train");
        io::require_keys(jt,
                         {"loss", "lr0", "decay_factor", "decay_every", "batch", "max_iters",
                          "dataset_source", "state_count", "log_every", "divergence_limit", "pool"},
                         "config.train");
        cfg.traincfg.loss = train::loss_from_name(get_or<std::string>(jt, "loss", "msr"));
        cfg.traincfg.lr0 = get_or<double>(jt, "lr0", cfg.traincfg.lr0);
        cfg.traincfg.decay_factor = get_or<double>(jt, "decay_factor", cfg.traincfg.decay_factor);
        cfg.traincfg.decay_every = get_or<int>(jt, "decay_every", cfg.traincfg.decay_every);
        cfg.traincfg.batch = get_or<int>(jt, "batch", cfg.traincfg.batch);
        cfg.traincfg.max_iters = get_or<int>(jt, "max_iters", cfg.traincfg.max_iters);
        cfg.traincfg.source =
            train::source_from_name(get_or<std::string>(jt, "dataset_source", "sampled_initials"));
        cfg.traincfg.state_count = get_or<int>(jt, "state_count", cfg.traincfg.state_count);
        cfg.traincfg.log_every = get_or<int>(jt, "log_every", cfg.traincfg.log_every);
        cfg.traincfg.divergence_limit = get_or<double>(jt, "divergence_limit", cfg.traincfg.divergence_limit);
        if (jt.contains("pool")) {
            const json& jpool = jt.at("pool");
            io::require_keys(jpool, {"size", "refresh_period", "refresh_fraction", "reinit_period"},
                             "config.train.pool");
            cfg.traincfg.pool.size = get_or<int>(jpool, "size", cfg.traincfg.pool.size);
            cfg.traincfg.pool.refresh_period =
                get_or<int>(jpool, "refresh_period", cfg.traincfg.pool.refresh_period);
            cfg.traincfg.pool.refresh_fraction =
                get_or<double>(jpool, "refresh_fraction", cfg.traincfg.pool.refresh_fraction);
            cfg.traincfg.pool.reinit_period =
                get_or<int>(jpool, "reinit_period", cfg.traincfg.pool.reinit_period);
        }
    }

    // eval
    if (j.contains("eval")) {
        const json& je = j.at("eval");
        io::require_keys(je, {"samples", "protocol", "horizon", "stride", "timing_reps"}, "config.eval");
        cfg.eval_samples = get_or<int>(je, "samples", cfg.eval_samples);
        cfg.eval_protocol = get_or<std::string>(je, "protocol", cfg.eval_protocol);
        if (cfg.eval_protocol != "one_step" && cfg.eval_protocol != "rollout")
            throw ConfigError("config.eval.protocol must be 'one_step' or 'rollout'");
        cfg.eval_horizon = get_or<int>(je, "horizon", cfg.eval_horizon);
        cfg.eval_stride = get_or<int>(je, "stride", cfg.eval_stride);
        cfg.timing_reps = get_or<int>(je, "timing_reps", cfg.timing_reps);
    }

    // gen
    if (j.contains("gen")) {
        io::require_keys(j.at("gen"), {"count", "targets"}, "config.gen");
        cfg.gen_count = get_or<int>(j.at("gen"), "count", cfg.gen_count);
        cfg.gen_targets = get_or<bool>(j.at("gen"), "targets", cfg.gen_targets);
    }

    cfg.output_dir = get_or<std::string>(j, "output_dir", cfg.output_dir);
    return cfg;
}

}  // namespace lordnet
