#include <doctest.h>

#include <cmath>

#include "silab/dynamics.hpp"
#include "silab/errors.hpp"
#include "silab/jump.hpp"
#include "silab/objectives.hpp"

using namespace silab;
using namespace silab::jump;

namespace {

dynamics::Trajectory trace_with_cos(const std::vector<double>& cos_dist) {
    dynamics::Trajectory traj;
    traj.config.eta = 1.0;
    traj.config.lambda = 0.01;
    traj.config.steps = cos_dist.size();
    for (std::size_t t = 0; t < cos_dist.size(); ++t) {
        dynamics::TraceRecord r;
        r.step = t;
        r.rho = 1.0;
        r.cos_dist = cos_dist[t];
        traj.records.push_back(r);
    }
    return traj;
}

} // namespace

TEST_CASE("jump detection") {
    SUBCASE("flat trace has no events") {
        const auto traj = trace_with_cos(std::vector<double>(100, 0.0));
        CHECK(detect_jumps(traj, 0.1).empty());
    }
    SUBCASE("threshold above the range gives no events") {
        std::vector<double> cd(100, 0.0);
        cd[50] = 0.05;
        const auto traj = trace_with_cos(cd);
        CHECK(detect_jumps(traj, 0.1).empty());
    }
    SUBCASE("debounce merges an episode, keeping the first step") {
        std::vector<double> cd(100, 0.0);
        cd[10] = cd[12] = cd[14] = 0.5;  // one episode
        cd[40] = 0.5;                    // separate episode
        const auto traj = trace_with_cos(cd);
        const auto events = detect_jumps(traj, 0.1, 5);
        REQUIRE(events.size() == 2);
        CHECK(events[0].step == 10);
        CHECK(events[1].step == 40);
        // without debounce every exceedance is its own event
        CHECK(detect_jumps(traj, 0.1, 0).size() == 4);
    }
    SUBCASE("delta must be positive") {
        const auto traj = trace_with_cos({0.0});
        CHECK_THROWS_AS(detect_jumps(traj, 0.0), DomainError);
    }
}

TEST_CASE("jump thresholds") {
    SUBCASE("worked value") {
        const auto th = jump_thresholds(0.01, 1e-4, GradientBounds::constant(0.5, 1.0), 0.005);
        CHECK(th.possible == doctest::Approx(0.1).epsilon(1e-15));
        CHECK(th.guaranteed == doctest::Approx(0.05).epsilon(1e-15));
        CHECK_FALSE(th.large_delta_warning);
    }
    SUBCASE("degenerate bounds collapse the pair") {
        const auto th = jump_thresholds(0.01, 1e-4, GradientBounds::constant(1.0, 1.0), 0.005);
        CHECK(th.possible == th.guaranteed);
    }
    SUBCASE("warning for large delta, error for non-positive") {
        CHECK(jump_thresholds(0.01, 1e-4, GradientBounds::constant(0.5, 1.0), 0.2)
                  .large_delta_warning);
        CHECK_THROWS_AS(jump_thresholds(0.01, 1e-4, GradientBounds::constant(0.5, 1.0), 0.0),
                        DomainError);
    }
    SUBCASE("exact forms bracket the approximate ones") {
        const auto ex = exact_jump_thresholds(0.01, 0.001, 0.5, 1.0, 1e-4);
        const auto ap = jump_thresholds(0.01, 0.001, GradientBounds::constant(0.5, 1.0), 1e-4);
        CHECK(ex.no_jump_above > ap.possible);          // 1/(1-eta lambda) factor
        CHECK(ex.jump_below < ap.guaranteed * 1.001);   // s(delta) > 2 delta
    }
}

TEST_CASE("jump time bounds") {
    SUBCASE("worked example: t_min only") {
        const auto b = jump_time_bounds(5.0, 0.01, 0.001, 0.5, 1.0, 1e-5);
        CHECK(b.t_min_applicable);
        CHECK_FALSE(b.t_max_applicable);  // delta >= eta lambda (ell/L)^2
        CHECK(b.t_min == doctest::Approx(31118.2).epsilon(1e-3));
    }
    SUBCASE("already below the possible threshold gives t_min = 0") {
        const auto b = jump_time_bounds(0.5, 0.01, 0.001, 0.5, 1.0, 1e-5);
        CHECK(b.t_min_applicable);
        CHECK(b.t_min == 0.0);
    }
    SUBCASE("halving the product roughly halves the bound") {
        const auto b1 = jump_time_bounds(5.0, 0.01, 0.001, 0.5, 1.0, 1e-5);
        // same ratio eta/lambda preserved under the rescaling map, doubled product
        const auto b2 = jump_time_bounds(5.0, 0.01 * std::sqrt(2.0), 0.001 * std::sqrt(2.0),
                                         0.5, 1.0, 1e-5);
        CHECK(b2.t_min < 0.75 * b1.t_min);
        CHECK(b2.t_min > 0.3 * b1.t_min);
    }
}

TEST_CASE("equilibrium band") {
    SUBCASE("worked values") {
        const auto band = equilibrium_band(0.01, 0.001, 0.5, 1.0);
        CHECK(band.kappa == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));
        CHECK(band.lo == doctest::Approx(1.1180339887).epsilon(1e-9));
        CHECK(band.hi == doctest::Approx(2.2360679775).epsilon(1e-9));
        CHECK(band.condition_ok);  // 2e-5 <= 0.5
        // eff-lr band is the image of the rho^2 band
        CHECK(band.elr_lo == doctest::Approx(0.01 / band.hi).epsilon(1e-12));
        CHECK(band.elr_hi == doctest::Approx(0.01 / band.lo).epsilon(1e-12));
    }
    SUBCASE("degenerate bounds collapse to a point") {
        const auto band = equilibrium_band(0.01, 0.001, 1.0, 1.0);
        CHECK(band.lo == band.hi);
    }
    SUBCASE("lambda = 0 is an explicit error") {
        CHECK_THROWS_AS(equilibrium_band(0.01, 0.0, 0.5, 1.0), DomainError);
    }
    SUBCASE("violated condition flags and reports the relaxed bound") {
        const auto band = equilibrium_band(0.4, 1.0, 0.1, 1.0);  // 2*0.4*1 = 0.8 > 0.1
        CHECK_FALSE(band.condition_ok);
        CHECK(band.relaxed_upper > band.hi);
    }
}

TEST_CASE("envelope fitting") {
    SUBCASE("constant series") {
        dynamics::Trajectory traj;
        traj.config.eta = 1.0;
        for (std::size_t t = 0; t < 50; ++t) {
            dynamics::TraceRecord r;
            r.step = t;
            r.rho = 1.0;
            r.eff_grad_norm = 0.7;
            traj.records.push_back(r);
        }
        const auto b = fit_envelopes(traj, 0, 49, EnvelopeFamily::Constant);
        CHECK(b.c_lower == 0.7);
        CHECK(b.c_upper == 0.7);
    }
    SUBCASE("exact family member is recovered") {
        dynamics::Trajectory traj;
        traj.config.eta = 1.0;
        const double t0 = 3.0;
        for (std::size_t t = 10; t <= 200; ++t) {
            dynamics::TraceRecord r;
            r.step = t;
            r.rho = 1.0;
            r.eff_grad_norm = 1.0 / (static_cast<double>(t) - t0);
            traj.records.push_back(r);
        }
        const auto b = fit_envelopes(traj, 10, 200, EnvelopeFamily::InvLinear);
        CHECK(b.c_lower == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(b.c_upper == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(b.t0 == doctest::Approx(t0).epsilon(1e-3));
    }
    SUBCASE("empty window is an error") {
        dynamics::Trajectory traj;
        CHECK_THROWS_AS(fit_envelopes(traj, 0, 10, EnvelopeFamily::Constant), DomainError);
    }
}

TEST_CASE("phase segmentation basics") {
    SUBCASE("no jumps yields a single unlabeled segment") {
        objectives::ToyRational toy;
        dynamics::OptimizerConfig cfg;
        cfg.eta = 1.0;
        cfg.lambda = 0.0;
        cfg.steps = 2000;
        const std::vector<double> x0 = {0.01, 1.0};
        const auto traj = dynamics::run(toy, cfg, x0);
        const auto seg = segment_phases(traj, {});
        CHECK(seg.single_segment);
        CHECK(seg.periods.empty());
    }
    SUBCASE("toy periodic run produces ordered periods") {
        objectives::ToyRational toy;
        dynamics::OptimizerConfig cfg;
        cfg.eta = 1.0;
        cfg.lambda = 0.01;
        cfg.steps = 20000;
        const std::vector<double> x0 = {0.01, 1.0};
        const auto traj = dynamics::run(toy, cfg, x0);
        const auto seg = segment_phases(traj, {});
        REQUIRE(seg.periods.size() >= 2);
        for (const auto& p : seg.periods) {
            REQUIRE(p.phases.size() == 3);
            CHECK(p.phases[0].phase == Phase::A);
            CHECK(p.phases[1].phase == Phase::B);
            CHECK(p.phases[2].phase == Phase::C);
            CHECK(p.phases[0].begin == p.begin);
            CHECK(p.phases[2].end == p.end);
            CHECK(p.phases[0].end < p.phases[1].end);
            CHECK(p.end == p.terminating_jump.step);
        }
    }
}

TEST_CASE("period frequency report") {
    objectives::ToyRational toy;
    std::vector<dynamics::Trajectory> sweep;
    for (double lambda : {5e-3, 1e-2, 2e-2}) {
        dynamics::OptimizerConfig cfg;
        cfg.eta = 1.0;
        cfg.lambda = lambda;
        cfg.steps = 30000;
        const std::vector<double> x0 = {0.01, 1.0};
        sweep.push_back(dynamics::run(toy, cfg, x0));
    }
    const auto rep = period_frequency_report(sweep, 0.1);
    REQUIRE(rep.rows.size() == 3);
    for (const auto& row : rep.rows) CHECK(row.included);
    CHECK(rep.strictly_decreasing);

    CHECK_THROWS_AS(period_frequency_report(std::span(sweep.data(), 2), 0.1), DomainError);
}
