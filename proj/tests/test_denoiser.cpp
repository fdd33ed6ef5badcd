#include "doctest.h"
#include "support.hpp"

#include "dnpg/errors.hpp"

using namespace dnpg;
using support::v1;

namespace {

DenoiserArch tiny_arch(Activation act) {
    DenoiserArch a;
    a.dim = 2;
    a.conditions = 3;
    a.time_steps = 50;
    a.hidden = {2, 2};
    a.time_frequencies = 2;
    a.embedding_width = 2;
    a.activation = act;
    return a;
}

TrainingBatch fixed_batch(const DenoiserArch& arch, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    TrainingBatch b;
    b.z0.resize(arch.dim, static_cast<Eigen::Index>(n));
    b.eps.resize(arch.dim, static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        b.z0.col(static_cast<Eigen::Index>(i)) = rng.normal_vector(arch.dim);
        b.eps.col(static_cast<Eigen::Index>(i)) = rng.normal_vector(arch.dim);
        b.t.push_back(1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(arch.time_steps))));
        b.c.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(arch.conditions))));
    }
    return b;
}

} // namespace

TEST_CASE("zero parameters predict zero noise") {
    DenoiserArch a = tiny_arch(Activation::Silu);
    const auto params = DenoiserParams::zeros(a);
    CHECK(eps_theta(params, Vec::Constant(2, 0.3), 7, 1) == Vec::Zero(2));

    const auto s = make_linear_schedule(a.time_steps, 1e-4, 0.02);
    const auto batch = fixed_batch(a, 16, 3);
    const auto lg = loss_and_grad(params, batch, s);
    CHECK(lg.loss == doctest::Approx(batch.eps.squaredNorm() / 16).epsilon(1e-14));
    CHECK(lg.grads.biases.back().norm() > 0.0);
}

TEST_CASE("forward pass is deterministic") {
    const auto params = DenoiserParams::initialize(tiny_arch(Activation::Tanh), 5);
    const Vec z = Vec::Constant(2, -0.4);
    CHECK(eps_theta(params, z, 13, 2) == eps_theta(params, z, 13, 2));
    const auto again = DenoiserParams::initialize(tiny_arch(Activation::Tanh), 5);
    CHECK(again.tensors.flatten() == params.tensors.flatten());
}

TEST_CASE("analytic gradient matches finite differences") {
    for (auto act : {Activation::Silu, Activation::Tanh}) {
        CAPTURE(static_cast<int>(act));
        const DenoiserArch a = tiny_arch(act);
        const auto s = make_linear_schedule(a.time_steps, 1e-4, 0.02);
        const auto params = DenoiserParams::initialize(a, 11);
        const auto batch = fixed_batch(a, 12, 21);
        const auto analytic = loss_and_grad(params, batch, s).grads.flatten();
        const auto flat = params.tensors.flatten();
        REQUIRE(analytic.size() == flat.size());
        for (std::size_t i = 0; i < flat.size(); ++i) {
            auto plus = flat, minus = flat;
            const float h = std::max(1e-4f * std::abs(flat[i]), 1e-4f);
            plus[i] = flat[i] + h;
            minus[i] = flat[i] - h;
            DenoiserParams pp = params, pm = params;
            pp.tensors.assign(plus);
            pm.tensors.assign(minus);
            const double step = static_cast<double>(plus[i]) - static_cast<double>(minus[i]);
            const double fd = (loss_and_grad(pp, batch, s).loss - loss_and_grad(pm, batch, s).loss) / step;
            CAPTURE(i);
            CHECK(std::abs(fd - analytic[i]) <= 1e-3 * std::max({std::abs(fd), std::abs(analytic[i]), 1e-5}));
        }
    }
}

TEST_CASE("duplicating a batch leaves loss and gradient unchanged") {
    const DenoiserArch a = tiny_arch(Activation::Silu);
    const auto s = make_linear_schedule(a.time_steps, 1e-4, 0.02);
    const auto params = DenoiserParams::initialize(a, 2);
    const auto b = fixed_batch(a, 8, 4);
    TrainingBatch d;
    d.z0.resize(2, 16);
    d.eps.resize(2, 16);
    d.z0 << b.z0, b.z0;
    d.eps << b.eps, b.eps;
    d.t = b.t;
    d.t.insert(d.t.end(), b.t.begin(), b.t.end());
    d.c = b.c;
    d.c.insert(d.c.end(), b.c.begin(), b.c.end());
    const auto x = loss_and_grad(params, b, s), y = loss_and_grad(params, d, s);
    CHECK(y.loss == doctest::Approx(x.loss).epsilon(1e-13));
    const auto gx = x.grads.flatten(), gy = y.grads.flatten();
    for (std::size_t i = 0; i < gx.size(); ++i) CHECK(std::abs(gx[i] - gy[i]) <= 1e-13 * (1 + std::abs(gx[i])));
}

TEST_CASE("unconditional fraction of training batches") {
    const auto world = support::two_condition_1d();
    const auto s = support::standard_schedule();
    Rng rng(8);
    auto phi_count = [&](double p, std::size_t n) {
        const auto b = draw_training_batch(world, s, rng, n, p);
        return static_cast<double>(std::count(b.c.begin(), b.c.end(), kPhi));
    };
    CHECK(phi_count(1.0, 1000) == 1000);
    CHECK(phi_count(0.0, 1000) == 0);
    const double frac = phi_count(0.1, 100000) / 100000;
    CHECK(frac >= 0.094);
    CHECK(frac <= 0.106);
    const auto b = draw_training_batch(world, s, rng, 500, 0.1);
    for (int t : b.t) {
        CHECK(t >= 1);
        CHECK(t <= 1000);
    }
}

TEST_CASE("full-batch gradient descent does not increase the loss") {
    const DenoiserArch a = tiny_arch(Activation::Tanh);
    const auto s = make_linear_schedule(a.time_steps, 1e-4, 0.02);
    auto params = DenoiserParams::initialize(a, 6);
    const auto batch = fixed_batch(a, 32, 10);
    double prev = loss_and_grad(params, batch, s).loss;
    for (int k = 0; k < 100; ++k) {
        const auto lg = loss_and_grad(params, batch, s);
        auto flat = params.tensors.flatten();
        const auto g = lg.grads.flatten();
        for (std::size_t i = 0; i < flat.size(); ++i) flat[i] -= static_cast<float>(1e-3 * g[i]);
        params.tensors.assign(flat);
        const double now = loss_and_grad(params, batch, s).loss;
        CHECK(now <= prev * (1 + 1e-9));
        prev = now;
    }
}

TEST_CASE("training is reproducible and zero steps is a no-op") {
    const auto world = support::two_condition_1d();
    const auto s = support::standard_schedule();
    DenoiserArch a;
    a.dim = 1;
    a.conditions = world.condition_count();
    a.hidden = {16, 16};
    const auto init = DenoiserParams::initialize(a, 1);
    TrainConfig tc;
    tc.steps = 0;
    CHECK(train(init, world, s, tc).params.tensors.flatten() == init.tensors.flatten());
    tc.steps = 50;
    tc.batch_size = 32;
    tc.seed = 77;
    const auto r1 = train(init, world, s, tc), r2 = train(init, world, s, tc);
    CHECK(r1.params.tensors.flatten() == r2.params.tensors.flatten());
    CHECK(r1.losses == r2.losses);
    CHECK(r1.losses.size() == 50);
}

TEST_CASE("a denoiser learns a single Gaussian") {
    const auto world = support::gaussian_world(1, 0.5, 0.5);
    const auto s = support::standard_schedule();
    DenoiserArch a;
    a.dim = 1;
    a.conditions = world.condition_count();
    a.hidden = {64, 64};
    TrainConfig tc;
    tc.steps = 20000;
    tc.batch_size = 64;
    tc.learning_rate = 2e-3;
    tc.final_learning_rate = 1e-4;
    tc.seed = 3;
    const auto r = train(DenoiserParams::initialize(a, 4), world, s, tc);
    for (int c = 0; c < world.condition_count(); ++c) CHECK(heldout_eps_mse(r.params, world, s, c, 4000, 99) <= 0.05);
}

TEST_CASE("non-finite parameters are reported as a numerical failure") {
    const DenoiserArch a = tiny_arch(Activation::Silu);
    const auto s = make_linear_schedule(a.time_steps, 1e-4, 0.02);
    auto params = DenoiserParams::initialize(a, 1);
    auto flat = params.tensors.flatten();
    flat[0] = std::numeric_limits<float>::quiet_NaN();
    params.tensors.assign(flat);
    CHECK_FALSE(params.all_finite());
    CHECK_THROWS_AS(loss_and_grad(params, fixed_batch(a, 4, 1), s), NumericalError);
}

TEST_CASE("architecture validation") {
    DenoiserArch a = tiny_arch(Activation::Silu);
    a.hidden = {};
    CHECK_THROWS(a.validate());
    a = tiny_arch(Activation::Silu);
    a.dim = 0;
    CHECK_THROWS(a.validate());
}
