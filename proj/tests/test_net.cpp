#include <doctest.h>

#include <cmath>

#include "silab/errors.hpp"
#include "silab/kernels.hpp"
#include "silab/net.hpp"
#include "silab/objectives.hpp"
#include "silab/trace_io.hpp"

using namespace silab;
using namespace silab::net;

TEST_CASE("dataset generation") {
    const auto spec = tiny_dataset_spec();
    const auto a = make_dataset(spec);
    const auto b = make_dataset(spec);
    CHECK(a.train_x == b.train_x);  // identical bytes from identical spec+seed
    CHECK(a.train_y == b.train_y);
    CHECK(a.test_x == b.test_x);

    // every class present
    std::vector<int> seen(spec.classes, 0);
    for (auto y : a.train_y) seen[y] = 1;
    for (int s : seen) CHECK(s == 1);

    auto other = spec;
    other.seed += 1;
    CHECK(make_dataset(other).train_x != a.train_x);

    DatasetSpec degenerate;
    degenerate.classes = 10;
    degenerate.n_train = 5;
    CHECK_THROWS_AS(make_dataset(degenerate), DomainError);
}

TEST_CASE("net objective basics") {
    auto obj = tiny_objective();
    CHECK(obj->dim() == tiny_net_spec().trainable_dim());
    CHECK(obj->has_labels());
    CHECK(obj->train_size() == 96);

    const auto x = obj->init_params(5);
    std::vector<std::size_t> batch;
    for (std::size_t i = 0; i < 16; ++i) batch.push_back(i);

    SUBCASE("eval populates the derived fields") {
        const auto ev = obj->eval(x, batch);
        CHECK(std::isfinite(ev.value));
        CHECK(ev.value > 0.0);
        CHECK(ev.gradient.size() == obj->dim());
        CHECK(ev.eff_grad_norm == doctest::Approx(ev.rho * ev.grad_norm).epsilon(1e-15));
        CHECK(ev.train_error >= 0.0);
        CHECK(ev.train_error <= 1.0);
    }
    SUBCASE("batches below 2 are rejected") {
        const std::vector<std::size_t> tiny_batch = {0};
        CHECK_THROWS_AS(obj->eval(x, tiny_batch), DomainError);
    }
    SUBCASE("scale invariance of the loss and logits") {
        const auto base = obj->eval(x, batch);
        for (double c : {0.5, 2.0, 10.0}) {
            std::vector<double> cx(x);
            kernels::ops().scale(cx.data(), c, cx.size());
            const auto scaled = obj->eval(cx, batch);
            CHECK(std::abs(scaled.value - base.value) < 1e-9 * (1.0 + std::abs(base.value)));
            CHECK(scaled.eff_grad_norm ==
                  doctest::Approx(base.eff_grad_norm).epsilon(1e-8));
        }
    }
    SUBCASE("gradient orthogonal to the parameter vector") {
        const auto ev = obj->eval(x, batch);
        const double dot = kernels::ops().dot(ev.gradient.data(), x.data(), x.size());
        CHECK(std::abs(dot) < 1e-9 * ev.grad_norm * ev.rho);
    }
    SUBCASE("analytic gradient matches finite differences") {
        CHECK(objectives::max_rel_fd_error(*obj, x, batch, 24, 9, 1e-5) < 1e-4);
    }
    SUBCASE("registry exposure") {
        ensure_builtin_objectives();
        auto via_registry = objectives::make_objective("si-net:tiny");
        CHECK(via_registry->dim() == obj->dim());
    }
}

TEST_CASE("relu variant evaluates and stays scale-invariant") {
    auto spec = tiny_net_spec();
    spec.act = NetSpec::Act::Relu;
    auto data = std::make_shared<const Dataset>(make_dataset(tiny_dataset_spec()));
    SiNetObjective obj(spec, data, 32);
    const auto x = obj.init_params(5);
    std::vector<std::size_t> batch;
    for (std::size_t i = 0; i < 16; ++i) batch.push_back(i);
    const auto base = obj.eval(x, batch);
    std::vector<double> cx(x);
    kernels::ops().scale(cx.data(), 3.0, cx.size());
    const auto scaled = obj.eval(cx, batch);
    CHECK(std::abs(scaled.value - base.value) < 1e-9 * (1.0 + std::abs(base.value)));
}

TEST_CASE("training wrapper") {
    auto obj = tiny_objective();
    dynamics::OptimizerConfig cfg;
    cfg.family = dynamics::Family::Sgd;
    cfg.eta = 0.5;
    cfg.lambda = 1e-3;
    cfg.batch = 32;
    cfg.steps = 120;
    cfg.seed = 11;
    const auto x0 = obj->init_params(4);
    const std::vector<std::size_t> cks = {0, 60};
    const auto res = train(*obj, cfg, x0, cks, 1);

    CHECK(res.trajectory.records.size() == 120);
    CHECK_FALSE(res.trajectory.truncated);
    REQUIRE(res.trajectory.checkpoints.size() == 2);
    CHECK(res.trajectory.checkpoints[1].step == 60);
    CHECK(!res.epochs.empty());
    for (const auto& m : res.epochs) {
        CHECK(m.train_error >= 0.0);
        CHECK(m.test_error >= 0.0);
    }
    // separable blobs: a short run already beats random guessing
    CHECK(res.epochs.back().train_error < 0.6);
}

TEST_CASE("checkpoint similarity") {
    auto obj = tiny_objective();
    dynamics::OptimizerConfig cfg;
    cfg.family = dynamics::Family::Sgd;
    cfg.eta = 0.5;
    cfg.lambda = 1e-3;
    cfg.batch = 32;
    cfg.steps = 200;
    cfg.seed = 12;
    const auto x0 = obj->init_params(21);
    const std::vector<std::size_t> cks = {0, 100, 199};
    const auto res = train(*obj, cfg, x0, cks, 0);
    REQUIRE(res.trajectory.checkpoints.size() == 3);

    const auto& anchor = res.trajectory.checkpoints[1];
    const auto rows = checkpoint_similarity(*obj, anchor,
                                            std::span(res.trajectory.checkpoints.data(), 3));
    REQUIRE(rows.size() == 3);
    // anchor vs itself: cosine 1, ensemble error equals the single error
    CHECK(rows[1].cosine_sim == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rows[1].ensemble_err == rows[1].single_err);
    // farther checkpoints are less aligned than the anchor itself
    CHECK(rows[0].cosine_sim < 1.0);
    CHECK(rows[2].cosine_sim < 1.0);

    dynamics::Checkpoint wrong;
    wrong.x.assign(3, 0.0);
    CHECK_THROWS_AS(checkpoint_similarity(*obj, wrong, std::span(&wrong, 1)), DomainError);
}

TEST_CASE("checkpoint io with the netspec hash") {
    const auto spec = tiny_net_spec();
    dynamics::Checkpoint ck;
    ck.step = 17;
    ck.x = {1.5, -2.25, 1e-17};
    ck.test_error = 0.125;
    const auto path = std::filesystem::temp_directory_path() / "silab_ck_test.txt";
    io::write_checkpoint(path, ck, spec.hash());
    std::string hash;
    const auto back = io::read_checkpoint(path, &hash);
    CHECK(back.step == 17);
    CHECK(back.x == ck.x);  // exact round-trip
    CHECK(back.test_error == 0.125);
    CHECK(hash == spec.hash());
    std::filesystem::remove(path);
}
