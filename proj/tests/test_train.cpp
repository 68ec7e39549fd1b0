#include <doctest.h>

#include <cmath>

#include "lordnet/eval.hpp"
#include "lordnet/net.hpp"
#include "lordnet/train.hpp"
#include "support/oracles.hpp"

using namespace lordnet;
using lordnet::train::AdamState;
using lordnet::train::DataPool;
using lordnet::train::DataSource;
using lordnet::train::LossKind;
using lordnet::train::PoolConfig;
using lordnet::train::TrainConfig;
using lordnet::train::TrainResult;
using lordnet::train::adam_step;
using lordnet::train::make_initial_states;
using lordnet::train::pool_step;

namespace {

TrainConfig poisson_n3_config() {
    TrainConfig cfg;
    cfg.problem.kind = msr::ResidualKind::poisson_dirichlet;
    cfg.problem.grid = fdm::GridSpec::make_dirichlet(4);  // 2x2 interior
    cfg.grf = rf::GrfSpec::poisson_forcing(4, 0);
    cfg.loss = LossKind::msr;
    cfg.batch = 8;
    cfg.seed = 3;
    return cfg;
}

net::Network tiny_poisson_net(int extent, std::uint64_t seed) {
    net::NetworkConfig ncfg;
    ncfg.variant = net::Variant::poisson_linear;
    ncfg.channels = 2;
    ncfg.layers = 1;
    ncfg.rank = 1;
    ncfg.height = ncfg.width = extent;
    ncfg.init_seed = seed;
    return net::build_network(ncfg);
}

}  // namespace

TEST_CASE("adam: zero gradients leave parameters unchanged") {
    ParamSet p;
    p.add("w", oracles::random_field(Shape{3, 3}, 1));
    Field before = p.field(0);
    AdamState st = AdamState::init(p);
    std::vector<Field> grads{Field(Shape{3, 3})};
    adam_step(p, grads, st, 1e-3);
    CHECK(p.field(0).raw() == before.raw());
    CHECK(st.t == 1);
}

TEST_CASE("adam: first-step magnitude is lr * sign(g) for large gradients") {
    ParamSet p;
    p.add("w", Field(Shape{2}, std::vector<double>{1.0, -1.0}));
    AdamState st = AdamState::init(p);
    std::vector<Field> grads{Field(Shape{2}, std::vector<double>{50.0, -0.5})};
    adam_step(p, grads, st, 0.1);
    CHECK(p.field(0)[0] == doctest::Approx(1.0 - 0.1).epsilon(1e-6));
    CHECK(p.field(0)[1] == doctest::Approx(-1.0 + 0.1).epsilon(1e-6));
}

TEST_CASE("adam: non-finite gradient aborts with a diagnostic") {
    ParamSet p;
    p.add("w", Field(Shape{1}, 1.0));
    AdamState st = AdamState::init(p);
    std::vector<Field> grads{Field(Shape{1}, std::vector<double>{std::nan("")})};
    CHECK_THROWS_AS(adam_step(p, grads, st, 1e-3), NumericError);
}

TEST_CASE("adam minimizes a scalar quadratic") {
    ParamSet p;
    p.add("x", Field(Shape{1}, 1.0));
    AdamState st = AdamState::init(p);
    for (int i = 0; i < 1000; ++i) {
        std::vector<Field> grads{Field(Shape{1}, std::vector<double>{2.0 * p.field(0)[0]})};
        adam_step(p, grads, st, 0.1);
    }
    CHECK(std::abs(p.field(0)[0]) < 1e-3);
}

TEST_CASE("schedule: lr after k decays equals lr0 * factor^k exactly") {
    TrainConfig cfg = poisson_n3_config();
    cfg.lr0 = 1e-3;
    cfg.decay_factor = 0.8;
    cfg.decay_every = 5;
    cfg.max_iters = 26;
    cfg.log_every = 1;
    net::Network model = tiny_poisson_net(2, 1);
    TrainResult res = train::train(model, cfg);
    double expect = cfg.lr0;
    for (const auto& pt : res.curve) {
        double want = cfg.lr0;
        for (int k = 0; k < pt.iter / cfg.decay_every; ++k) want *= cfg.decay_factor;
        CHECK(pt.lr == want);
    }
    (void)expect;
}

TEST_CASE("training a linear network on the one-point Dirichlet problem reaches machine-level loss") {
    // n=3: a single interior unknown; the optimal linear map is exactly
    // representable, so the residual loss can be driven to round-off.
    TrainConfig cfg = poisson_n3_config();
    cfg.problem.grid = fdm::GridSpec::make_dirichlet(3);
    cfg.grf = rf::GrfSpec::poisson_forcing(4, 0);
    cfg.lr0 = 0.05;
    cfg.decay_factor = 0.4;
    cfg.decay_every = 400;
    cfg.max_iters = 6000;
    cfg.batch = 8;
    net::Network model = tiny_poisson_net(1, 2);
    TrainResult res = train::train(model, cfg);
    CHECK_FALSE(res.diverged);
    CHECK(res.final_loss < 1e-12);
}

TEST_CASE("loss at iteration 0 equals an independent recomputation") {
    TrainConfig cfg = poisson_n3_config();
    cfg.max_iters = 1;
    cfg.log_every = 1;
    net::Network model = tiny_poisson_net(2, 7);
    net::Network fresh = tiny_poisson_net(2, 7);
    TrainResult res = train::train(model, cfg);

    // recompute the iteration-0 batch loss by hand
    const std::uint64_t draw_seed = Rng::derive(cfg.seed, 0x111);
    double want = 0.0;
    for (int i = 0; i < cfg.batch; ++i) {
        rf::GrfSpec g = cfg.grf;
        g.seed = Rng::derive(draw_seed, static_cast<std::uint64_t>(i));
        Field f = crop_interior(rf::sample_grf(g));
        Tape t;
        std::vector<DiffValue> bound = bind_params(t, fresh.params());
        DiffValue u = fresh.forward(t, bound, t.input(f));
        want += msr::msr_loss(msr::poisson_residual(u, f, cfg.problem)).value()[0];
    }
    want /= cfg.batch;
    CHECK(res.initial_loss == want);
}

TEST_CASE("max_iters=0 leaves the model at initialization") {
    TrainConfig cfg = poisson_n3_config();
    cfg.max_iters = 0;
    net::Network model = tiny_poisson_net(2, 9);
    net::Network fresh = tiny_poisson_net(2, 9);
    TrainResult res = train::train(model, cfg);
    CHECK(res.iterations_run == 0);
    for (int i = 0; i < model.params().size(); ++i)
        CHECK(model.params().field(i).raw() == fresh.params().field(i).raw());
}

TEST_CASE("full-run determinism: identical config gives an identical loss curve") {
    auto run = [] {
        TrainConfig cfg = poisson_n3_config();
        cfg.max_iters = 40;
        cfg.log_every = 10;
        cfg.jobs = 2;
        net::Network model = tiny_poisson_net(2, 11);
        return train::train(model, cfg);
    };
    TrainResult a = run();
    TrainResult b = run();
    REQUIRE(a.curve.size() == b.curve.size());
    for (std::size_t i = 0; i < a.curve.size(); ++i) {
        CHECK(a.curve[i].loss == b.curve[i].loss);
        CHECK(a.curve[i].lr == b.curve[i].lr);
    }
}

TEST_CASE("divergence aborts and rolls back to the last good iterate") {
    TrainConfig cfg = poisson_n3_config();
    cfg.lr0 = 1e12;  // blow it up
    cfg.divergence_limit = 1e6;
    cfg.max_iters = 50;
    net::Network model = tiny_poisson_net(2, 13);
    TrainResult res = train::train(model, cfg);
    CHECK(res.diverged);
    for (int i = 0; i < model.params().size(); ++i) CHECK(model.params().field(i).all_finite());
}

TEST_CASE("config validation: the MSR path cannot read solver targets") {
    TrainConfig cfg = poisson_n3_config();
    cfg.loss = LossKind::msr;
    cfg.source = DataSource::fdm_trajectories;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    TrainConfig cfg2 = poisson_n3_config();
    cfg2.loss = LossKind::mse;
    cfg2.source = DataSource::sampled_initials;
    CHECK_THROWS_AS(cfg2.validate(), ConfigError);

    TrainConfig cfg3 = poisson_n3_config();
    cfg3.source = DataSource::pool;
    CHECK_THROWS_AS(cfg3.validate(), ConfigError);
}

TEST_CASE("mse training on solver pairs runs and improves") {
    TrainConfig cfg = poisson_n3_config();
    cfg.loss = LossKind::mse;
    cfg.source = DataSource::fdm_trajectories;
    cfg.state_count = 16;
    cfg.max_iters = 300;
    cfg.lr0 = 1e-2;
    cfg.decay_every = 100;
    net::Network model = tiny_poisson_net(2, 15);
    TrainResult res = train::train(model, cfg);
    CHECK_FALSE(res.diverged);
    CHECK(res.final_loss < res.initial_loss);
}

TEST_CASE("pool_step bookkeeping") {
    PoolConfig pcfg;
    pcfg.size = 8;
    pcfg.refresh_fraction = 0.25;
    pcfg.reinit_period = 3;

    DataPool pool;
    for (int i = 0; i < pcfg.size; ++i)
        pool.entries.push_back({Field(Shape{1, 4, 4}, static_cast<double>(i)), 0});

    SUBCASE("refresh fraction 0 leaves the pool unchanged") {
        PoolConfig none = pcfg;
        none.refresh_fraction = 0.0;
        DataPool copy = pool;
        pool_step(copy, none, [](const Field& f) { return f * 2.0; },
                  [] { return Field(Shape{1, 4, 4}); }, 0);
        for (int i = 0; i < none.size; ++i)
            CHECK(copy.entries[static_cast<std::size_t>(i)].state.raw() ==
                  pool.entries[static_cast<std::size_t>(i)].state.raw());
    }

    SUBCASE("ages stay below reinit_period") {
        int fresh_calls = 0;
        for (std::uint64_t round = 0; round < 40; ++round)
            pool_step(pool, pcfg, [](const Field& f) { return f; },
                      [&] {
                          ++fresh_calls;
                          return Field(Shape{1, 4, 4}, -1.0);
                      },
                      round);
        for (const auto& e : pool.entries) CHECK(e.age < pcfg.reinit_period);
        CHECK(fresh_calls > 0);
    }
}

TEST_CASE("pool entries driven by the solver remain valid trajectory states") {
    msr::ResidualSpec spec;
    spec.kind = msr::ResidualKind::ns_liddriven;
    spec.grid = fdm::GridSpec::make_lid_driven(16, 1.0);
    spec.ns = {500.0, 1e-3, 1};
    spec.cg_tol = 1e-12;

    std::vector<Field> states = make_initial_states(spec, rf::GrfSpec::ns_vorticity(16, 5), 4, 3, 99);
    REQUIRE(states.size() == 4);
    for (const Field& psi : states) CHECK(psi.all_finite());

    PoolConfig pcfg;
    pcfg.size = 4;
    pcfg.refresh_fraction = 0.5;
    pcfg.reinit_period = 10;
    DataPool pool;
    for (const Field& psi : states) pool.entries.push_back({psi, 0});

    eval::StepModel fdm_step = eval::fdm_onestep_model(spec);
    std::uint64_t fresh_counter = 0;
    for (std::uint64_t round = 0; round < 4; ++round)
        pool_step(pool, pcfg, fdm_step.step,
                  [&] {
                      return make_initial_states(spec, rf::GrfSpec::ns_vorticity(16, 5), 1, 3,
                                                 Rng::derive(7, fresh_counter++))
                          .front();
                  },
                  round);

    // every entry is still on a solver trajectory: stepping it once yields a
    // near-zero of the discretized residual
    for (const auto& e : pool.entries) {
        Field next = fdm_step.step(e.state);
        Tape t;
        DiffValue r = msr::ns_residual(e.state, t.input(crop_interior(next)), spec);
        CHECK(max_abs(r.value()) < 1e-6);
    }
}
