#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "rsma/unfold.hpp"

using namespace rsma;
using doctest::Approx;

namespace {

double max_diff(const Iterate& a, const Iterate& b) {
    return std::max(testing::max_abs_diff(a.beams, b.beams), (a.rc.rc - b.rc.rc).cwiseAbs().maxCoeff());
}

} // namespace

TEST_CASE("environment vector") {
    ProblemInstance inst = testing::random_instance(3, 4, 1);
    inst.weights << 0.5, 0.3, 0.2;
    inst.p0 = 0.1;
    inst.power_budget = 1.0;
    RVector expected(5);
    expected << 0.5, 0.3, 0.2, 0.1, 1.0;
    CHECK(env_vector(inst) == expected);

    ProblemInstance other = inst;
    other.channels = testing::random_instance(3, 4, 2).channels;
    CHECK(env_vector(other) == expected);
}

TEST_CASE("parameter shapes and flattening") {
    CHECK(LayerParams::flat_size(3) == 5 + 15 + 12);
    const NetworkParams p = init_params(3, 4, 9, InitScheme::random_small);
    CHECK(p.num_layers() == 4);
    CHECK(p.flat_size() == 4 * LayerParams::flat_size(3));
    const RVector flat = p.flatten();
    const NetworkParams q = NetworkParams::unflatten(flat, 3, 4, p.lambda);
    CHECK(q.flatten() == flat);
    CHECK(q.layers[2].eta == p.layers[2].eta);
    CHECK(q.layers[1].w == p.layers[1].w);
    CHECK_THROWS_AS(NetworkParams::unflatten(flat.head(flat.size() - 1), 3, 4, 1.0), DimensionError);
}

TEST_CASE("random_small init") {
    const NetworkParams a = init_params(3, 8, 5, InitScheme::random_small);
    const NetworkParams b = init_params(3, 8, 5, InitScheme::random_small);
    CHECK(a.flatten() == b.flatten());
    CHECK(a.flatten().cwiseAbs().maxCoeff() < 0.1);
    CHECK(init_params(3, 8, 6, InitScheme::random_small).flatten() != a.flatten());
}

TEST_CASE("zero layer only projects") {
    const ProblemInstance inst = testing::random_instance(3, 5, 2);
    const Iterate start = initial_point(inst, 4);
    const Iterate out = layer_forward(start, LayerParams::zeros(3), inst, 1.0);
    CHECK(testing::max_abs_diff(out.beams, start.beams) <= 1e-14);
    CHECK((out.rc.rc - start.rc.rc).cwiseAbs().maxCoeff() <= 1e-14);

    const ForwardTrace trace = network_forward(inst, NetworkParams{{LayerParams::zeros(3)}, 1.0}, 4);
    REQUIRE(trace.layers.size() == 1);
    CHECK(testing::max_abs_diff(trace.layers[0].beams, start.beams) <= 1e-14);
}

TEST_CASE("pgd_mimic layer equals one pgd iteration") {
    for (int t = 0; t < 5; ++t) {
        const ProblemInstance inst = testing::random_instance(3, 6, 30 + t);
        SolverOptions opts = SolverOptions::pgd_defaults(3);
        opts.steps = StepSizes::uniform(3, 0.02);
        opts.steps.alpha_v(1) = 0.01;
        opts.steps.alpha_v0 = 0.03;
        opts.lambda = 1.7;
        opts.max_iters = 1;
        opts.seed = t;
        const Solution s = solve_pgd(inst, opts);
        const NetworkParams p = init_params(3, 1, 0, InitScheme::pgd_mimic, opts.steps, opts.lambda);
        const Iterate out = layer_forward(initial_point(inst, t), p.layers[0], inst, p.lambda);
        CHECK(max_diff(out, Iterate{s.beams, s.rc}) <= 1e-12);
    }
}

TEST_CASE("pgd_mimic network follows pgd iterates") {
    const ProblemInstance inst = testing::random_instance(3, 12, 7);
    SolverOptions opts = SolverOptions::pgd_defaults(3);
    opts.steps = StepSizes::uniform(3, 0.03);
    opts.step_decay = 0.9;
    opts.max_iters = 6;
    opts.tol = 1e-300;
    opts.keep_iterates = true;
    opts.seed = 3;
    const Solution s = solve_pgd(inst, opts);
    const NetworkParams p = init_params(3, 6, 0, InitScheme::pgd_mimic, opts.steps, opts.lambda, opts.step_decay);
    const ForwardTrace trace = network_forward(inst, p, 3);
    REQUIRE(s.trace.iterates.size() == 6);
    for (int n = 0; n < 6; ++n) {
        CHECK(max_diff(Iterate{trace.layers[n].beams, trace.layers[n].rc}, s.trace.iterates[n]) <= 1e-12);
        CHECK(trace.layers[n].wsr_hat == Approx(s.trace.wsr_per_iter[n]).epsilon(1e-12));
    }
}

TEST_CASE("bilinear rescaling leaves the layer unchanged") {
    const ProblemInstance inst = testing::random_instance(3, 4, 12);
    const Iterate start = initial_point(inst, 1);
    const NetworkParams p = init_params(3, 1, 8, InitScheme::random_small);
    LayerParams scaled = p.layers[0];
    for (double c : {-2.0, 0.5, 7.0}) {
        scaled = p.layers[0];
        scaled.w.row(1) *= c;
        scaled.eta.row(1) /= c;
        const Iterate a = layer_forward(start, p.layers[0], inst, 1.0);
        const Iterate b = layer_forward(start, scaled, inst, 1.0);
        CHECK(max_diff(a, b) <= 1e-12);
    }
}

TEST_CASE("forward traces are deterministic and feasible") {
    const ProblemInstance inst = testing::random_instance(3, 12, 13);
    const NetworkParams p = init_params(3, 5, 1, InitScheme::random_small);
    const ForwardTrace a = network_forward(inst, p, 99);
    const ForwardTrace b = network_forward(inst, p, 99);
    for (int n = 0; n < 5; ++n) {
        CHECK(a.layers[n].wsr_hat == b.layers[n].wsr_hat);
        CHECK(check_feasibility(inst, a.layers[n].beams, a.layers[n].rc, 1e-9).all());
        CHECK(a.layers[n].wsr_hat == Approx(wsr(inst, a.layers[n].beams, a.layers[n].rc)).epsilon(1e-15));
    }
    CHECK(a.final_wsr() == a.layers.back().wsr_hat);
}

TEST_CASE("shape mismatch") {
    const ProblemInstance inst = testing::random_instance(2, 3, 1);
    CHECK_THROWS_AS(network_forward(inst, init_params(3, 2, 0, InitScheme::random_small), 0), DimensionError);
}

TEST_CASE("batch loss") {
    ForwardTrace t;
    t.layers.resize(1);
    t.layers[0].wsr_hat = 1.0;
    std::vector<ForwardTrace> traces{t};
    std::vector<double> labels{2.0};
    CHECK(batch_loss(traces, labels) == 1.0);
    labels[0] = 1.0;
    CHECK(batch_loss(traces, labels) == 0.0);

    // Two layers, one unit of shortfall on each: (log2 2 + log2 3) / 2.
    t.layers.resize(2);
    t.layers[0].wsr_hat = 1.0;
    t.layers[1].wsr_hat = 1.0;
    traces = {t};
    labels = {2.0};
    CHECK(batch_loss(traces, labels) == Approx((1.0 + std::log2(3.0)) / 2.0).epsilon(1e-15));
    CHECK_THROWS(batch_loss(std::vector<ForwardTrace>{}, std::vector<double>{}));
}

TEST_CASE("params json round trip") {
    const NetworkParams p = init_params(2, 3, 4, InitScheme::random_small, {}, 1.25);
    const NetworkParams q = params_from_json(params_to_json(p));
    CHECK(q.flatten() == p.flatten());
    CHECK(q.lambda == 1.25);
    CHECK(params_to_json(q) == params_to_json(p));

    std::string text = params_to_json(p);
    const auto pos = text.find("\"version\": \"1\"");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 14, "\"version\": \"9\"");
    CHECK_THROWS_WITH_AS(params_from_json(text), doctest::Contains("version"), std::runtime_error);
    CHECK_THROWS_AS(params_from_json("{ not json"), std::runtime_error);
}
