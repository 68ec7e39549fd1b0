#include <doctest.h>

#include <cmath>

#include "lordnet/eval.hpp"
#include "lordnet/net.hpp"
#include "support/oracles.hpp"

using namespace lordnet;
using namespace lordnet::eval;

namespace {

msr::ResidualSpec lid_spec(int n) {
    msr::ResidualSpec s;
    s.kind = msr::ResidualKind::ns_liddriven;
    s.grid = fdm::GridSpec::make_lid_driven(n, 1.0);
    s.ns = {500.0, 1e-3, 1};
    s.cg_tol = 1e-11;
    return s;
}

}  // namespace

TEST_CASE("relative_error basics and the degenerate case") {
    Field t = oracles::random_field(Shape{1, 4, 4}, 1);
    CHECK(relative_error(t, t) == 0.0);
    CHECK(relative_error(t * 2.0, t) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(relative_error(Field(t.shape()), t) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS((void)relative_error(t, Field(t.shape())), NumericError);

    // gauge fixing removes a shared constant
    Field shifted(t.shape());
    for (std::int64_t i = 0; i < t.size(); ++i) shifted[i] = t[i] + 5.0;
    CHECK(relative_error(shifted, t, true) < 1e-12);
}

TEST_CASE("rollout: zero steps, composition, failure reporting") {
    StepModel doubler{"double", [](const Field& f) { return f * 2.0; }};
    Field x0 = oracles::random_field(Shape{1, 3, 3}, 2);

    std::vector<Field> r0 = rollout(doubler, x0, 0);
    CHECK(r0.size() == 1);
    CHECK(max_abs(r0[0] - x0) == 0.0);

    std::vector<Field> r4 = rollout(doubler, x0, 4);
    std::vector<Field> r2 = rollout(doubler, x0, 2);
    std::vector<Field> r2b = rollout(doubler, r2.back(), 2);
    CHECK(max_abs(r4.back() - r2b.back()) == 0.0);

    StepModel nan_model{"nan", [](const Field& f) {
                            Field g = f;
                            g[0] = std::nan("");
                            return g;
                        }};
    CHECK_THROWS_AS((void)rollout(nan_model, x0, 3), NumericError);
}

TEST_CASE("fdm replay reproduces the reference trajectory bit-exactly") {
    msr::ResidualSpec spec = lid_spec(12);
    auto trajs = make_test_trajectories(spec, rf::GrfSpec::ns_vorticity(16, 4), 1, 6, 2, 1001);
    REQUIRE(trajs.size() == 1);
    const auto& traj = trajs[0];

    StepModel replay = fdm_replay_model(traj.omega_start, spec);
    std::vector<Field> pred = rollout(replay, traj.psis.front(), 6);
    for (std::size_t t = 0; t < pred.size(); ++t) CHECK(pred[t].raw() == traj.psis[t].raw());
}

TEST_CASE("the stateless solver wrapper sits at the metric floor") {
    msr::ResidualSpec spec = lid_spec(12);
    auto trajs = make_test_trajectories(spec, rf::GrfSpec::ns_vorticity(16, 5), 2, 8, 2, 1002);
    StepModel one = fdm_onestep_model(spec);
    EvalReport rep = evaluate_one_step(one, trajs, false);
    CHECK(rep.mean_error < 10.0 * spec.cg_tol * 1e2);  // tol * problem scale
    CHECK(rep.per_sample.size() == 2);
}

TEST_CASE("constant-zero model scores error 1") {
    msr::ResidualSpec spec = lid_spec(12);
    auto trajs = make_test_trajectories(spec, rf::GrfSpec::ns_vorticity(16, 6), 1, 3, 2, 1003);
    StepModel zero{"zero", [](const Field& f) { return Field(f.shape()); }};
    EvalReport rep = evaluate_rollout(zero, trajs, false);
    for (double e : rep.per_sample) CHECK(e == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("evaluation reports are identical across reruns") {
    msr::ResidualSpec spec = lid_spec(12);
    auto run = [&] {
        auto trajs = make_test_trajectories(spec, rf::GrfSpec::ns_vorticity(16, 7), 2, 4, 1, 1004);
        StepModel one = fdm_onestep_model(spec);
        return evaluate_one_step(one, trajs, false);
    };
    EvalReport a = run();
    EvalReport b = run();
    CHECK(a.per_sample == b.per_sample);
}

TEST_CASE("network step model crops, pads and gauge-fixes") {
    msr::ResidualSpec spec = lid_spec(8);
    net::NetworkConfig cfg;
    cfg.variant = net::Variant::ns_lord;
    cfg.channels = 4;
    cfg.layers = 1;
    cfg.rank = 1;
    cfg.height = cfg.width = 6;
    cfg.hidden = {5};
    net::Network model = net::build_network(cfg);

    StepModel step = network_step_model(model, spec);
    Field psi(Shape{1, 8, 8});
    Rng rng(8);
    for (int i = 1; i < 7; ++i)
        for (int j = 1; j < 7; ++j) psi.at(0, i, j) = rng.normal();
    Field next = step.step(psi);
    CHECK(next.shape() == psi.shape());
    // the frozen boundary stays zero
    for (int i = 0; i < 8; ++i) {
        CHECK(next.at(0, i, 0) == 0.0);
        CHECK(next.at(0, i, 7) == 0.0);
        CHECK(next.at(0, 0, i) == 0.0);
        CHECK(next.at(0, 7, i) == 0.0);
    }

    // periodic wrapper output is gauge-fixed to zero mean
    msr::ResidualSpec per;
    per.kind = msr::ResidualKind::ns_periodic;
    per.grid = fdm::GridSpec::make_periodic(6);
    per.ns = {500.0, 1e-3, 1};
    StepModel pstep = network_step_model(model, per);
    Field state = oracles::random_field(Shape{1, 6, 6}, 9);
    CHECK(std::abs(mean(pstep.step(state))) < 1e-14);
}

TEST_CASE("inference timing returns a positive median") {
    double ms = time_inference_ms([] {
        volatile double acc = 0.0;
        for (int i = 0; i < 1000; ++i) acc = acc + std::sqrt(static_cast<double>(i));
    }, 21);
    CHECK(ms >= 0.0);
}
