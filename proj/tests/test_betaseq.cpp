#include <doctest.h>

#include <cmath>

#include "silab/betaseq.hpp"
#include "silab/errors.hpp"

using namespace silab;
using namespace silab::betaseq;

TEST_CASE("determined iteration") {
    SUBCASE("beta = 0 is exactly geometric") {
        const auto trace = iterate_det({0.1, 0.0, 4.0}, 30);
        double expect = 4.0;
        for (double v : trace.x) {
            CHECK(v == expect);
            expect *= 0.9;
        }
        CHECK(trace.stationary == 0.0);
    }
    SUBCASE("stationary start stays put") {
        const double xstar = std::sqrt(1.0 / 0.1);
        const auto trace = iterate_det({0.1, 1.0, xstar}, 100);
        for (double v : trace.x) CHECK(v == doctest::Approx(xstar).epsilon(1e-13));
    }
    SUBCASE("monotone decrease toward sqrt(10), never crossing") {
        const auto trace = iterate_det({0.1, 1.0, 10.0}, 400);
        const double xstar = std::sqrt(10.0);
        for (std::size_t t = 0; t + 1 < trace.x.size(); ++t) {
            CHECK(trace.x[t + 1] < trace.x[t]);
            CHECK(trace.x[t + 1] > xstar * (1.0 - 1e-12));
        }
        CHECK(trace.x.back() == doctest::Approx(xstar).epsilon(1e-6));
    }
    SUBCASE("parameter validation") {
        CHECK_THROWS_AS(iterate_det({0.6, 1.0, 1.0}, 5), DomainError);
        CHECK_THROWS_AS(iterate_det({0.1, 1.0, 0.0}, 5), DomainError);
        CHECK_THROWS_AS(iterate_det({0.1, -1.0, 1.0}, 5), DomainError);
    }
}

TEST_CASE("gamma map landmarks at alpha = 0.1") {
    CHECK(gamma_map(1.0, 0.1) == 1.0);
    CHECK(gamma_map(1.0 / 3.0, 0.1) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(gamma_map(1.0 / 9.0, 0.1) == doctest::Approx(1.0).epsilon(1e-15));
    // derivative at the fixed point: phi'(1) = 1 - 2 alpha
    const double h = 1e-7;
    const double dphi = (gamma_map(1.0 + h, 0.25) - gamma_map(1.0 - h, 0.25)) / (2.0 * h);
    CHECK(dphi == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("gamma properties on a dense grid") {
    std::vector<double> grid;
    for (int i = 1; i <= 4000; ++i) grid.push_back(2.0 * i / 4000.0);
    for (double alpha : {0.05, 0.1, 0.25, 0.4, 0.49}) {
        const auto rep = check_gamma_properties(alpha, grid);
        CAPTURE(alpha);
        CHECK(rep.all_pass);
        // ordering alpha/(1-alpha) < sqrt(alpha/(1-alpha)) < 2 sqrt(alpha(1-alpha)) < 1
        CHECK(rep.pre_stationary < rep.argmin);
        CHECK(rep.argmin < rep.min_value);
        CHECK(rep.min_value < 1.0);
    }
}

TEST_CASE("determined convergence bounds") {
    SUBCASE("upper bound tight for beta = 0") {
        const auto check = det_convergence_bounds({0.2, 0.0, 5.0}, 200);
        CHECK(check.pass);
    }
    SUBCASE("strict sandwich for beta > 0") {
        const auto check = det_convergence_bounds({0.1, 1.0, 10.0}, 500);
        CHECK(check.pass);
    }
    SUBCASE("degenerate equality at the stationary point") {
        const double xstar = std::sqrt(2.0 / 0.1);
        const auto check = det_convergence_bounds({0.1, 2.0, xstar}, 50);
        CHECK(check.pass);
    }
}

TEST_CASE("undetermined bounding runs") {
    SUBCASE("degenerate sampler coincides with the lower trace") {
        BetaUndetParams p;
        p.alpha = 0.1;
        p.a = p.b = 2.0;
        p.x0 = 8.0;
        p.sampler = SamplerKind::Uniform;
        p.seed = 1;
        const auto res = undet_bounding_runs(p, 100);
        CHECK(res.lower_ok);
        CHECK(res.upper_ok);
        for (std::size_t t = 0; t < res.trace.x.size(); ++t)
            CHECK(res.trace.x[t] == res.lower.x[t]);
    }
    SUBCASE("strengthened condition holds for the reference setting") {
        BetaUndetParams p;
        p.alpha = 0.1;
        p.a = 1.0;
        p.b = 10.0;
        p.x0 = 15.0;
        p.sampler = SamplerKind::Uniform;
        p.seed = 7;
        const auto res = undet_bounding_runs(p, 1000);
        CHECK(res.remark_all_t);  // 0.1111 * sqrt(10) <= 1 and x0 > sqrt(100)
        CHECK(res.lower_ok);
        CHECK(res.upper_ok);
    }
    SUBCASE("adversarial alternation stays sandwiched") {
        BetaUndetParams p;
        p.alpha = 0.15;
        p.a = 0.5;
        p.b = 3.0;
        p.x0 = 9.0;
        p.sampler = SamplerKind::AdversarialExtremes;
        p.seed = 3;
        const auto res = undet_bounding_runs(p, 1000);
        CHECK(res.lower_ok);
        CHECK(res.upper_ok);
    }
    SUBCASE("user series out of range is rejected") {
        BetaUndetParams p;
        p.alpha = 0.1;
        p.a = 1.0;
        p.b = 2.0;
        p.x0 = 5.0;
        p.sampler = SamplerKind::UserSeries;
        p.user_series = {1.5, 2.5};
        CHECK_THROWS_AS(make_beta_series(p, 2), DomainError);
    }
}

TEST_CASE("interval convergence") {
    SUBCASE("reference setting enters [sqrt(10), 10] and stays") {
        BetaUndetParams p;
        p.alpha = 0.1;
        p.a = 1.0;
        p.b = 10.0;
        p.x0 = 20.0;
        p.sampler = SamplerKind::Uniform;
        p.seed = 21;
        const auto res = interval_convergence(p, 4000);
        CHECK(res.condition_ok);
        CHECK(res.lo == doctest::Approx(std::sqrt(10.0)).epsilon(1e-15));
        CHECK(res.hi == doctest::Approx(10.0).epsilon(1e-15));
        REQUIRE(res.entry_time.has_value());
        CHECK(res.post_entry_exits == 0);
        CHECK(res.envelopes_ok);
    }
    SUBCASE("a = b collapses to the stationary point") {
        BetaUndetParams p;
        p.alpha = 0.2;
        p.a = p.b = 4.0;
        p.x0 = 12.0;
        p.sampler = SamplerKind::Uniform;
        p.seed = 5;
        const auto res = interval_convergence(p, 2000);
        CHECK(res.lo == res.hi);
        REQUIRE(res.entry_time.has_value());
        CHECK(res.post_entry_exits == 0);
    }
    SUBCASE("doubling alpha roughly halves the entry time") {
        auto entry = [](double alpha) {
            BetaUndetParams p;
            p.alpha = alpha;
            p.a = 1.0;
            p.b = 4.0;
            p.x0 = 50.0;
            p.sampler = SamplerKind::Uniform;
            p.seed = 9;
            return static_cast<double>(*interval_convergence(p, 20000).entry_time);
        };
        const double t1 = entry(0.02);
        const double t2 = entry(0.04);
        CHECK(t1 / t2 > 1.5);
        CHECK(t1 / t2 < 2.7);
    }
}

TEST_CASE("moving-average diagnostics") {
    std::vector<double> g = {1.0, 1.0, 1.0, 1.0};
    const auto ratio = ema_sq_ratio(g, 0.9);
    for (double r : ratio) CHECK(r == doctest::Approx(1.0).epsilon(1e-12));

    const auto approx = norm_sq_from_ema(4.0, 0.5, 0.02, g);
    CHECK(approx.size() == g.size() + 1);
    CHECK(approx[0] == 4.0);
}
