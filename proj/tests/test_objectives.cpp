#include <doctest.h>

#include <cmath>
#include <vector>

#include "silab/errors.hpp"
#include "silab/objectives.hpp"
#include "silab/rng.hpp"

using namespace silab;
using objectives::ToyRational;

TEST_CASE("toy rational closed form") {
    ToyRational toy;

    SUBCASE("minimum along x = 0") {
        const auto ev = toy.eval(std::vector<double>{0.0, 1.0});
        CHECK(ev.value == 0.0);
        CHECK(ev.gradient[0] == 0.0);
        CHECK(ev.gradient[1] == 0.0);
        CHECK(ev.rho == 1.0);
    }
    SUBCASE("hand-differentiated point (1,1)") {
        const auto ev = toy.eval(std::vector<double>{1.0, 1.0});
        CHECK(ev.value == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(ev.gradient[0] == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(ev.gradient[1] == doctest::Approx(-0.5).epsilon(1e-15));
        CHECK(ev.eff_grad_norm == doctest::Approx(1.0).epsilon(1e-15));
        // gradient is orthogonal to the iterate
        CHECK(std::abs(ev.gradient[0] * 1.0 + ev.gradient[1] * 1.0) < 1e-15);
    }
    SUBCASE("scaling by c = 7.3") {
        const double c = 7.3;
        const auto base = toy.eval(std::vector<double>{0.4, -1.2});
        const auto scaled = toy.eval(std::vector<double>{0.4 * c, -1.2 * c});
        CHECK(scaled.value == doctest::Approx(base.value).epsilon(1e-14));
        CHECK(c * scaled.gradient[0] == doctest::Approx(base.gradient[0]).epsilon(1e-13));
        CHECK(c * scaled.gradient[1] == doctest::Approx(base.gradient[1]).epsilon(1e-13));
        CHECK(scaled.eff_grad_norm == doctest::Approx(base.eff_grad_norm).epsilon(1e-13));
    }
    SUBCASE("origin is a domain error") {
        CHECK_THROWS_AS(toy.eval(std::vector<double>{0.0, 0.0}), DomainError);
    }
}

TEST_CASE("gradient matches central finite differences") {
    ToyRational toy;
    Rng rng(3);
    for (int i = 0; i < 10; ++i) {
        std::vector<double> x = {rng.normal(), rng.normal()};
        if (x[0] * x[0] + x[1] * x[1] < 1e-3) continue;
        CHECK(objectives::max_rel_fd_error(toy, x, {}, 0, 1, 1e-6) < 1e-6);
    }
}

TEST_CASE("certification") {
    ToyRational toy;
    const auto orth = objectives::certify_orthogonality(toy, 100, 11, 1e-12);
    CHECK(orth.pass);
    CHECK(orth.max_abs_cos < 1e-12);

    const std::vector<double> scales = {0.5, 2.0, 10.0, 1.0};
    const auto hom = objectives::certify_inverse_homogeneity(toy, scales, 100, 12, 1e-12);
    CHECK(hom.pass);

    objectives::Quadratic quad(3);
    CHECK_FALSE(objectives::certify_orthogonality(quad, 50, 13, 1e-6).pass);
    CHECK_FALSE(objectives::certify_inverse_homogeneity(quad, scales, 50, 14, 1e-6).pass);

    CHECK_THROWS_AS(objectives::certify_orthogonality(toy, 0, 1, 1e-12), DomainError);
    const std::vector<double> bad_scales = {-1.0};
    CHECK_THROWS_AS(objectives::certify_inverse_homogeneity(toy, bad_scales, 10, 1, 1e-12),
                    DomainError);
}

TEST_CASE("registry") {
    auto toy = objectives::make_objective("toy-rational");
    CHECK(toy->dim() == 2);
    CHECK_THROWS_AS(objectives::make_objective("no-such-objective"), ConfigError);
    objectives::register_objective("custom-quadratic", [] {
        return std::make_shared<const objectives::Quadratic>(5);
    });
    CHECK(objectives::make_objective("custom-quadratic")->dim() == 5);
}
