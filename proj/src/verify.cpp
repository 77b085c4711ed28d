#include "silab/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

#include "silab/betaseq.hpp"
#include "silab/dynamics.hpp"
#include "silab/errors.hpp"
#include "silab/jump.hpp"
#include "silab/kernels.hpp"
#include "silab/net.hpp"
#include "silab/objectives.hpp"
#include "silab/rng.hpp"
#include "silab/trace_io.hpp"

namespace silab::verify {

namespace {

using dynamics::OptimizerConfig;
using dynamics::Trajectory;

std::string num(double v) { return io::format_double(v); }

void add(SuiteResult& suite, const std::string& name, bool pass, const std::string& detail) {
    suite.checks.push_back({name, pass, detail});
}

// The toy run everything downstream leans on (cached per lambda).
const Trajectory& appendix_e_run(double lambda) {
    static std::map<double, Trajectory> cache;
    auto it = cache.find(lambda);
    if (it == cache.end()) {
        objectives::ToyRational toy;
        OptimizerConfig cfg;
        cfg.family = dynamics::Family::Gd;
        cfg.eta = 1.0;
        cfg.lambda = lambda;
        cfg.steps = 20000;
        const std::vector<double> x0 = {0.01, 1.0};
        it = cache.emplace(lambda, dynamics::run(toy, cfg, x0)).first;
    }
    return it->second;
}

} // namespace

// ---------------------------------------------------------------------------
// Monte-Carlo batteries

McResult threshold_soundness_mc(std::size_t trials, std::uint64_t seed) {
    McResult mc;
    mc.trials = trials;
    Rng rng(seed);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const double eta = std::pow(10.0, rng.uniform(-3.0, -1.0));
        const double el = std::pow(10.0, rng.uniform(-5.0, -3.0));  // eta*lambda
        const double lambda = el / eta;
        const double ell = rng.uniform(0.2, 1.0);
        const double L = ell * rng.uniform(1.2, 4.0);
        // delta well below eta*lambda*(ell/L)^2 puts both thresholds above the band
        const double delta = el * (ell / L) * (ell / L) * std::pow(10.0, rng.uniform(-2.0, -0.5));
        const auto th = jump::exact_jump_thresholds(eta, lambda, ell, L, delta);
        const double rho0_sq = th.no_jump_above * rng.uniform(1.5, 3.0);
        const std::size_t steps = 3 * static_cast<std::size_t>(1.0 / el) + 2000;

        const auto dyn = dynamics::simulate_norm_dynamics(
            eta, lambda, rho0_sq, ell, L, betaseq::SamplerKind::Uniform, rng.next_u64(), steps);
        for (std::size_t t = 0; t < steps; ++t) {
            const bool jumped = dyn.cos_dist[t] > delta;
            if (jumped && dyn.rho_sq[t] >= th.no_jump_above) {
                ++mc.failures;
                mc.witness = "trial " + std::to_string(trial) + " step " + std::to_string(t) +
                             ": jump at rho_sq " + num(dyn.rho_sq[t]) + " above " +
                             num(th.no_jump_above);
                break;
            }
            if (!jumped && dyn.rho_sq[t] < th.jump_below) {
                ++mc.failures;
                mc.witness = "trial " + std::to_string(trial) + " step " + std::to_string(t) +
                             ": no jump at rho_sq " + num(dyn.rho_sq[t]) + " below " +
                             num(th.jump_below);
                break;
            }
        }
    }
    return mc;
}

McResult bracketing_mc(std::size_t trials, std::uint64_t seed) {
    McResult mc;
    mc.trials = trials;
    Rng rng(seed);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const double eta = std::pow(10.0, rng.uniform(-3.0, -1.0));
        const double el = std::pow(10.0, rng.uniform(-5.0, -3.5));
        const double lambda = el / eta;
        const double ell = rng.uniform(0.4, 0.9);
        const double L = ell * rng.uniform(1.1, 1.8);
        // both branch preconditions with margin: delta << el (ell/L)^2
        const double delta = el * (ell / L) * (ell / L) * std::pow(10.0, rng.uniform(-2.0, -1.0));
        const double kappa = std::sqrt(eta / (2.0 * lambda));
        const double rho0_sq = kappa * L * rng.uniform(2.0, 5.0);

        const auto bounds = jump::jump_time_bounds(rho0_sq, eta, lambda, ell, L, delta);
        if (!bounds.t_min_applicable || !bounds.t_max_applicable) {
            ++mc.failures;
            mc.witness = "trial " + std::to_string(trial) + ": preconditions not met";
            continue;
        }
        const std::size_t budget = static_cast<std::size_t>(bounds.t_max) + 1000;
        const auto dyn = dynamics::simulate_norm_dynamics(
            eta, lambda, rho0_sq, ell, L, betaseq::SamplerKind::Uniform, rng.next_u64(), budget);
        std::size_t first_jump = budget;
        for (std::size_t t = 0; t < budget; ++t) {
            if (dyn.cos_dist[t] > delta) {
                first_jump = t;
                break;
            }
        }
        const double T = static_cast<double>(first_jump);
        if (!(bounds.t_min <= T && T <= bounds.t_max)) {
            ++mc.failures;
            mc.witness = "trial " + std::to_string(trial) + ": T=" + num(T) + " outside [" +
                         num(bounds.t_min) + ", " + num(bounds.t_max) + "]";
        }
    }
    return mc;
}

McResult lemma_a1_mc(std::size_t trials, std::uint64_t seed) {
    McResult mc;
    mc.trials = trials;
    Rng rng(seed);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        betaseq::BetaDetParams params;
        params.alpha = rng.uniform(0.02, 0.45);
        params.beta = std::pow(10.0, rng.uniform(-2.0, 2.0));
        const double xstar = std::sqrt(params.beta / params.alpha);
        params.x0 = xstar * rng.uniform(1.05, 20.0);
        const auto check = betaseq::det_convergence_bounds(params, 500);
        if (!check.pass) {
            ++mc.failures;
            mc.witness = "trial " + std::to_string(trial) + ": bound violated at step " +
                         std::to_string(check.witness_step.value_or(0));
        }
    }
    return mc;
}

McResult lemma_a2_mc(std::size_t trials, std::uint64_t seed) {
    McResult mc;
    mc.trials = trials;
    Rng rng(seed);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        betaseq::BetaUndetParams params;
        params.alpha = rng.uniform(0.02, 0.45);
        params.a = std::pow(10.0, rng.uniform(-1.0, 1.0));
        params.b = params.a * rng.uniform(1.0, 10.0);
        params.x0 = std::sqrt(params.b / params.alpha) * rng.uniform(0.3, 5.0);
        params.sampler = (trial % 2 == 0) ? betaseq::SamplerKind::Uniform
                                          : betaseq::SamplerKind::AdversarialExtremes;
        params.seed = rng.next_u64();
        const auto res = betaseq::undet_bounding_runs(params, 400);
        if (!res.lower_ok || !res.upper_ok) {
            ++mc.failures;
            mc.witness = "trial " + std::to_string(trial) + ": sandwich broke at step " +
                         std::to_string(res.witness_step.value_or(0));
        }
    }
    return mc;
}

McResult prop_a5_mc(std::size_t trials, std::uint64_t seed) {
    McResult mc;
    mc.trials = trials;
    Rng rng(seed);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        betaseq::BetaUndetParams params;
        // Condition alpha/(1-alpha) sqrt(b) <= sqrt(a): draw until satisfied.
        for (;;) {
            params.alpha = rng.uniform(0.02, 0.3);
            params.a = std::pow(10.0, rng.uniform(-1.0, 1.0));
            params.b = params.a * rng.uniform(1.0, 10.0);
            const double lhs = params.alpha / (1.0 - params.alpha) * std::sqrt(params.b);
            if (lhs <= std::sqrt(params.a)) break;
        }
        params.x0 = std::sqrt(params.b / params.alpha) * rng.uniform(1.2, 4.0);
        params.sampler = (trial % 2 == 0) ? betaseq::SamplerKind::Uniform
                                          : betaseq::SamplerKind::AdversarialExtremes;
        params.seed = rng.next_u64();
        const std::size_t steps = static_cast<std::size_t>(60.0 / params.alpha) + 2000;
        const auto res = betaseq::interval_convergence(params, steps);
        if (!res.entry_time || res.post_entry_exits != 0 || !res.envelopes_ok) {
            ++mc.failures;
            mc.witness = "trial " + std::to_string(trial) + ": entry=" +
                         (res.entry_time ? std::to_string(*res.entry_time) : "never") +
                         " exits=" + std::to_string(res.post_entry_exits) +
                         (res.envelopes_ok ? "" : " envelope violated");
        }
    }
    return mc;
}

std::size_t t_min_crossing_oracle(double rho0_sq, double eta, double lambda, double ell,
                                  double L, double delta) {
    const double kappa = std::sqrt(eta / (2.0 * lambda));
    const double target = eta * L / std::sqrt(2.0 * delta);
    const double rate = 1.0 - 4.0 * eta * lambda;
    double env = rho0_sq;
    std::size_t t = 0;
    while (env > target) {
        env = kappa * ell + rate * (env - kappa * ell);
        ++t;
        if (t > 100000000) throw DomainError("t_min oracle: no crossing");
    }
    return t;
}

BandRun band_absorption_run(double eta, double lambda, double ell, double L, double rho0_sq,
                            std::size_t steps_after_entry, std::uint64_t seed) {
    const auto band = jump::equilibrium_band(eta, lambda, ell, L);
    BandRun out;
    Rng rng(seed);
    const double decay_sq = (1.0 - eta * lambda) * (1.0 - eta * lambda);
    double x = rho0_sq;
    // Entry scales as 1/(eta lambda); cap generously.
    const std::size_t entry_budget =
        static_cast<std::size_t>(40.0 / (eta * lambda)) + 1000;
    for (std::size_t t = 0; t <= entry_budget + steps_after_entry; ++t) {
        const bool inside = x >= band.lo && x <= band.hi;
        if (!out.entered && inside) {
            out.entered = true;
            out.entry_time = t;
        } else if (out.entered) {
            if (t > out.entry_time + steps_after_entry) break;
            if (!inside) ++out.exits_after_entry;
        }
        const double g = rng.uniform(ell, L);
        x = betaseq::det_step(x, decay_sq, (eta * g) * (eta * g));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Suites

namespace {

SuiteResult closed_forms_suite() {
    SuiteResult suite;
    suite.name = "closed-forms";
    objectives::ToyRational toy;

    {  // hand values of the toy objective
        const auto at01 = toy.eval(std::vector<double>{0.0, 1.0});
        const auto at11 = toy.eval(std::vector<double>{1.0, 1.0});
        bool ok = at01.value == 0.0 && at01.gradient[0] == 0.0 && at01.gradient[1] == 0.0;
        ok = ok && at11.value == 0.5 && std::abs(at11.gradient[0] - 0.5) < 1e-15 &&
             std::abs(at11.gradient[1] + 0.5) < 1e-15 && std::abs(at11.eff_grad_norm - 1.0) < 1e-15;
        const double c = 7.3;
        const auto scaled = toy.eval(std::vector<double>{c, c});
        ok = ok && std::abs(scaled.value - 0.5) < 1e-15 &&
             std::abs(c * scaled.gradient[0] - 0.5) < 1e-14;
        add(suite, "toy closed-form values", ok, "f(1,1)=" + num(at11.value));
        bool origin_throws = false;
        try {
            toy.eval(std::vector<double>{0.0, 0.0});
        } catch (const DomainError&) {
            origin_throws = true;
        }
        add(suite, "toy origin is a hard error", origin_throws, "");
    }
    {
        Rng rng(17);
        double worst = 0.0;
        for (int i = 0; i < 20; ++i) {
            std::vector<double> x = {rng.normal(), rng.normal()};
            if (x[0] * x[0] + x[1] * x[1] < 1e-3) continue;
            worst = std::max(worst, objectives::max_rel_fd_error(toy, x, {}, 0, 1, 1e-6));
        }
        add(suite, "toy gradient vs finite differences", worst < 1e-6, "max rel " + num(worst));
    }
    {
        const auto orth = objectives::certify_orthogonality(toy, 100, 5, 1e-12);
        add(suite, "toy orthogonality certification", orth.pass, "max |cos| " + num(orth.max_abs_cos));
        const std::vector<double> scales = {0.5, 2.0, 10.0};
        const auto hom = objectives::certify_inverse_homogeneity(toy, scales, 100, 6, 1e-12);
        add(suite, "toy inverse homogeneity certification", hom.pass,
            "value dev " + num(hom.max_value_dev) + ", grad dev " + num(hom.max_grad_dev));
        objectives::Quadratic quad(2);
        const auto bad = objectives::certify_orthogonality(quad, 50, 7, 1e-6);
        add(suite, "negative control fails certification", !bad.pass,
            "max |cos| " + num(bad.max_abs_cos));
    }
    {
        const auto& traj = appendix_e_run(0.01);  // online checks active inside run()
        const auto check = dynamics::verify_trace_closed_forms(traj);
        add(suite, "norm and cosine closed forms on a 2e4-step gd run", check.pass,
            "max rel norm err " + num(check.max_norm_rel_err) + ", max cos err " +
                num(check.max_cos_abs_err));

        auto corrupted = traj;
        corrupted.records[100].rho *= 1.0 + 1e-6;
        const auto bad = dynamics::verify_trace_closed_forms(corrupted);
        add(suite, "corrupted trace is caught with a witness step",
            !bad.pass && bad.witness_step.has_value(),
            bad.witness_step ? "witness step " + std::to_string(*bad.witness_step) : "no witness");
    }
    {
        const auto dyn = dynamics::simulate_norm_dynamics(0.5, 0.02, 4.0, 0.0, 0.0,
                                                          betaseq::SamplerKind::Uniform, 1, 50);
        const double rate = (1.0 - 0.5 * 0.02) * (1.0 - 0.5 * 0.02);
        bool ok = true;
        for (std::size_t t = 0; t + 1 < dyn.rho_sq.size(); ++t)
            ok = ok && dyn.rho_sq[t + 1] == dyn.rho_sq[t] * rate;
        add(suite, "zero gradient decays exactly geometrically", ok, "rate " + num(rate));

        const auto& free = appendix_e_run(0.0);
        bool mono = true;
        for (std::size_t t = 0; t + 1 < free.records.size(); ++t)
            mono = mono && free.records[t + 1].rho >= free.records[t].rho;
        add(suite, "lambda=0 norm never decreases", mono, "");
    }
    {
        objectives::ToyRational t2;
        OptimizerConfig cfg;
        cfg.eta = 1.0;
        cfg.lambda = 0.01;
        cfg.steps = 500;
        const std::vector<double> x0 = {0.01, 1.0};
        const auto a = dynamics::run(t2, cfg, x0);
        const auto b = dynamics::run(t2, cfg, x0);
        add(suite, "identical runs produce byte-identical traces",
            io::trace_to_csv(a) == io::trace_to_csv(b), "");
    }
    {  // kernels: both implementations agree
        Rng rng(23);
        double worst = 0.0;
        bool have_avx2 = kernels::avx2::available();
        if (have_avx2) {
            for (std::size_t n : {std::size_t{1}, std::size_t{7}, std::size_t{64},
                                  std::size_t{1003}}) {
                std::vector<double> x(n), y(n);
                for (auto& v : x) v = rng.normal();
                for (auto& v : y) v = rng.normal();
                const double ds = kernels::scalar::ops.dot(x.data(), y.data(), n);
                const double dv = kernels::avx2::ops.dot(x.data(), y.data(), n);
                worst = std::max(worst, std::abs(ds - dv) / (std::abs(ds) + 1e-30));
            }
        }
        add(suite, "simd and scalar kernels agree", worst < 1e-12,
            have_avx2 ? "max rel diff " + num(worst) : "avx2 unavailable, scalar only");
    }
    {  // si-net certification block
        auto obj = net::tiny_objective();
        const auto orth = objectives::certify_orthogonality(*obj, 50, 31, objectives::kNetTol);
        add(suite, "si-net orthogonality certification", orth.pass,
            "max |cos| " + num(orth.max_abs_cos));
        const std::vector<double> scales = {0.5, 2.0};
        const auto hom = objectives::certify_inverse_homogeneity(*obj, scales, 25, 32,
                                                                 objectives::kNetTol);
        add(suite, "si-net inverse homogeneity certification", hom.pass,
            "value dev " + num(hom.max_value_dev) + ", grad dev " + num(hom.max_grad_dev));

        const auto x = obj->init_params(77);
        std::vector<std::size_t> batch;
        for (std::size_t i = 0; i < 32; ++i) batch.push_back(i);
        const double fd = objectives::max_rel_fd_error(*obj, x, batch, 32, 78, 1e-5);
        add(suite, "si-net gradient vs finite differences", fd < 1e-4, "max rel " + num(fd));

        // Logit invariance to rescaling the whole trainable vector.
        std::vector<double> x10(x);
        kernels::ops().scale(x10.data(), 10.0, x10.size());
        const auto rows = std::span<const double>(obj->data().train_x)
                              .subspan(0, 16 * obj->spec().input_dim);
        const auto l1 = obj->logits(x, rows, 16);
        const auto l2 = obj->logits(x10, rows, 16);
        double worst = 0.0;
        for (std::size_t i = 0; i < l1.size(); ++i)
            worst = std::max(worst, std::abs(l1[i] - l2[i]) / (1.0 + std::abs(l1[i])));
        add(suite, "si-net logits invariant to x10 rescaling", worst < 1e-6,
            "max rel " + num(worst));

        // Frozen parameters and the online norm recursion during training.
        std::vector<double> frozen_before(obj->frozen_last_layer().begin(),
                                          obj->frozen_last_layer().end());
        OptimizerConfig cfg;
        cfg.family = dynamics::Family::Sgd;
        cfg.eta = 0.5;
        cfg.lambda = 1e-3;
        cfg.batch = 32;
        cfg.steps = 200;
        cfg.seed = 5;
        const auto trained = net::train(*obj, cfg, x, {}, 1);
        const bool frozen_ok = std::equal(frozen_before.begin(), frozen_before.end(),
                                          obj->frozen_last_layer().begin());
        add(suite, "frozen last layer is bit-identical after training",
            frozen_ok && !trained.trajectory.truncated, "");
    }
    return suite;
}

SuiteResult jump_theory_suite() {
    SuiteResult suite;
    suite.name = "jump-theory";

    {
        const auto mc = threshold_soundness_mc(50, 101);
        add(suite, "threshold soundness (50 synthetic configs)", mc.pass(),
            mc.pass() ? "50/50" : mc.witness);
    }
    {
        const auto mc = bracketing_mc(50, 102);
        add(suite, "jump-time bracketing (50 synthetic configs)", mc.pass(),
            mc.pass() ? "50/50" : mc.witness);
    }
    {
        const auto run = band_absorption_run(1.0, 5e-4, 1.0, std::sqrt(10.0), 200.0, 100000, 103);
        add(suite, "equilibrium band absorption (1e5 steps)",
            run.entered && run.exits_after_entry == 0,
            "entry " + std::to_string(run.entry_time) + ", exits " +
                std::to_string(run.exits_after_entry));
    }
    {
        const auto base = jump::equilibrium_band(0.01, 0.001, 0.5, 1.0);
        const double c = 3.0;
        const auto scaled = jump::equilibrium_band(c * c * 0.01, 0.001 / (c * c), 0.5, 1.0);
        const bool ok = std::abs(scaled.lo - c * c * base.lo) < 1e-12 * base.lo * c * c &&
                        std::abs(scaled.hi - c * c * base.hi) < 1e-12 * base.hi * c * c &&
                        std::abs(scaled.elr_lo - base.elr_lo) < 1e-15 &&
                        std::abs(scaled.elr_hi - base.elr_hi) < 1e-15;
        add(suite, "band scales as c^2, eff-lr band unchanged", ok,
            "band [" + num(base.lo) + ", " + num(base.hi) + "]");
    }
    {
        const auto bounds = jump::jump_time_bounds(5.0, 0.01, 0.001, 0.5, 1.0, 1e-5);
        const auto oracle = t_min_crossing_oracle(5.0, 0.01, 0.001, 0.5, 1.0, 1e-5);
        const bool ok = bounds.t_min_applicable &&
                        std::abs(bounds.t_min - static_cast<double>(oracle)) <= 1.0;
        add(suite, "worked t_min matches the crossing oracle within 1 step", ok,
            "t_min " + num(bounds.t_min) + " vs oracle " + std::to_string(oracle));
    }
    {
        // Envelope sandwich on a phase-B window of the toy periodic run.
        const auto& traj = appendix_e_run(0.01);
        const auto seg = jump::segment_phases(traj, {});
        bool ok = false;
        std::string detail = "no usable period";
        if (!seg.periods.empty() && seg.periods[0].phases.size() == 3) {
            const auto& b_phase = seg.periods[0].phases[1];
            const auto bounds =
                jump::fit_envelopes(traj, b_phase.begin, b_phase.end,
                                    jump::EnvelopeFamily::InvLinear);
            const auto env = jump::delta_envelopes(traj, bounds);
            ok = env.sandwich;
            detail = std::to_string(env.violations) + " violations over " +
                     std::to_string(env.steps.size()) + " steps";
        }
        add(suite, "delta_min/delta_max sandwich on a phase-B window", ok, detail);
    }
    {
        const auto th = jump::jump_thresholds(0.01, 1e-4, jump::GradientBounds::constant(1.0, 1.0),
                                              0.005);
        add(suite, "degenerate bounds give equal thresholds", th.possible == th.guaranteed,
            "threshold " + num(th.possible));
    }
    return suite;
}

SuiteResult beta_seq_suite() {
    SuiteResult suite;
    suite.name = "beta-seq";

    {
        std::vector<double> grid;
        for (int i = 1; i <= 10000; ++i) grid.push_back(2.0 * i / 10000.0);
        bool all = true;
        std::string detail;
        for (double alpha : {0.05, 0.1, 0.25, 0.4}) {
            const auto rep = betaseq::check_gamma_properties(alpha, grid);
            if (!rep.all_pass) {
                all = false;
                for (std::size_t i = 0; i < 7; ++i)
                    if (!rep.pass[i])
                        detail += "alpha " + num(alpha) + " prop " +
                                  std::string(1, static_cast<char>('a' + i)) + " at gamma " +
                                  num(rep.witness[i]) + "; ";
            }
        }
        add(suite, "gamma-map properties (a)-(g) on a 1e4 grid", all, detail);
    }
    {
        const double phi13 = betaseq::gamma_map(1.0 / 3.0, 0.1);
        const double phi19 = betaseq::gamma_map(1.0 / 9.0, 0.1);
        const bool ok = std::abs(phi13 - 0.6) < 1e-15 && std::abs(phi19 - 1.0) < 1e-15 &&
                        betaseq::gamma_map(1.0, 0.1) == 1.0;
        add(suite, "gamma-map landmark values at alpha=0.1", ok,
            "phi(1/3)=" + num(phi13) + ", phi(1/9)=" + num(phi19));
    }
    {
        const auto geo = betaseq::iterate_det({0.25, 0.0, 3.0}, 40);
        bool ok = true;
        double expect = 3.0;
        for (double v : geo.x) {
            ok = ok && v == expect;
            expect *= 0.75;
        }
        const auto stat = betaseq::iterate_det({0.1, 1.0, std::sqrt(10.0)}, 50);
        for (double v : stat.x) ok = ok && std::abs(v - std::sqrt(10.0)) < 1e-12;
        add(suite, "beta=0 geometric and stationary-start constant", ok, "");
    }
    {
        const auto mc = lemma_a1_mc(100, 201);
        add(suite, "determined-sequence sandwich (100 runs)", mc.pass(),
            mc.pass() ? "100/100" : mc.witness);
    }
    {
        // Monotone-above and no-hop implications on random runs.
        Rng rng(202);
        bool ok = true;
        std::string detail;
        for (int trial = 0; trial < 100 && ok; ++trial) {
            betaseq::BetaDetParams p;
            p.alpha = rng.uniform(0.02, 0.45);
            p.beta = std::pow(10.0, rng.uniform(-2.0, 2.0));
            p.x0 = std::sqrt(p.beta / p.alpha) * rng.uniform(0.05, 20.0);
            const auto trace = betaseq::iterate_det(p, 300);
            const double xstar = trace.stationary;
            const double hop_gate = p.alpha / (1.0 - p.alpha) * xstar;
            for (std::size_t t = 0; t + 1 < trace.x.size(); ++t) {
                const double cur = trace.x[t], nxt = trace.x[t + 1];
                if (!(nxt > 0.0)) { ok = false; detail = "positivity"; break; }
                if (cur > xstar * (1.0 + 1e-12) &&
                    !(nxt < cur && nxt > xstar * (1.0 - 1e-12))) {
                    ok = false;
                    detail = "monotone-above at t=" + std::to_string(t);
                    break;
                }
                if (nxt < xstar * (1.0 - 1e-12) && !(cur < hop_gate * (1.0 + 1e-12))) {
                    ok = false;
                    detail = "no-hop at t=" + std::to_string(t);
                    break;
                }
            }
        }
        add(suite, "positivity, monotone-above, no-hop on 100 runs", ok, detail);
    }
    {
        const auto mc = lemma_a2_mc(100, 203);
        add(suite, "undetermined bounding runs (100, uniform+adversarial)", mc.pass(),
            mc.pass() ? "100/100" : mc.witness);
    }
    {
        const auto mc = prop_a5_mc(100, 204);
        add(suite, "interval absorption and envelopes (100 runs)", mc.pass(),
            mc.pass() ? "100/100" : mc.witness);
    }
    {
        betaseq::BetaUndetParams fig;
        fig.alpha = 0.1;
        fig.a = 1.0;
        fig.b = 10.0;
        fig.x0 = 20.0;
        fig.sampler = betaseq::SamplerKind::Uniform;
        fig.seed = 205;
        const auto res = betaseq::interval_convergence(fig, 5000);
        const bool ok = res.condition_ok && res.entry_time && res.post_entry_exits == 0 &&
                        std::abs(res.lo - std::sqrt(10.0)) < 1e-15 && std::abs(res.hi - 10.0) < 1e-15;
        add(suite, "uniform-sampler run converges into [sqrt(10), 10] and stays", ok,
            res.entry_time ? "entry at " + std::to_string(*res.entry_time) : "no entry");
    }
    {
        // The norm recursion is the beta sequence bit-for-bit.
        const auto& traj = appendix_e_run(0.01);
        const double eta = 1.0, lambda = 0.01;
        const double decay_sq = (1.0 - eta * lambda) * (1.0 - eta * lambda);
        bool ok = true;
        std::size_t checked = 0;
        double x = traj.records[0].rho * traj.records[0].rho;
        for (std::size_t t = 0; t + 1 < traj.records.size() && checked < 5000; ++t, ++checked) {
            const double g = traj.records[t].eff_grad_norm;
            const double via_beta = betaseq::det_step(x, decay_sq, (eta * g) * (eta * g));
            const double via_dyn = dynamics::predicted_norm_sq(x, eta, lambda, g);
            if (via_beta != via_dyn) {
                ok = false;
                break;
            }
            const double measured =
                traj.records[t + 1].rho * traj.records[t + 1].rho;
            if (std::abs(measured - via_beta) > 1e-9 * via_beta) {
                ok = false;
                break;
            }
            x = measured;
        }
        add(suite, "beta-sequence step is the norm recursion bit-for-bit", ok,
            std::to_string(checked) + " transitions checked");
    }
    return suite;
}

SuiteResult rescaling_suite() {
    SuiteResult suite;
    suite.name = "rescaling";
    objectives::ToyRational toy;
    OptimizerConfig cfg;
    cfg.eta = 1.0;
    cfg.lambda = 0.01;
    cfg.steps = 200;
    const std::vector<double> x0 = {0.01, 1.0};

    {
        const auto rep = dynamics::rescaled_equivalence(toy, cfg, x0, 1.0, 200);
        add(suite, "c=1 rescaling is the identity", rep.max_rel_f_dev == 0.0,
            "max dev " + num(rep.max_rel_f_dev));
    }
    for (double c : {0.5, 2.0, 10.0}) {
        const auto rep = dynamics::rescaled_equivalence(toy, cfg, x0, c, 200);
        add(suite, "hyperparameter rescaling c=" + num(c),
            rep.max_rel_f_dev < 1e-8 && rep.max_rel_x_dev < 1e-8,
            "f dev " + num(rep.max_rel_f_dev) + ", x dev " + num(rep.max_rel_x_dev));
    }
    {
        // Fixed eta*lambda product, three ratios, matched inits.
        const double product = 1e-4;
        std::vector<dynamics::Trajectory> runs;
        double eta0 = 0.0;
        for (double ratio : {1e2, 1e4, 1e6}) {
            const double eta = std::sqrt(product * ratio);
            const double lambda = product / eta;
            if (eta0 == 0.0) eta0 = eta;
            const double c = std::sqrt(eta / eta0);
            OptimizerConfig pc;
            pc.eta = eta;
            pc.lambda = lambda;
            pc.steps = 300;
            std::vector<double> start = {0.01 * c, 1.0 * c};
            runs.push_back(dynamics::run(toy, pc, start));
        }
        double worst = 0.0;
        for (std::size_t t = 0; t < 300; ++t)
            for (std::size_t i = 1; i < runs.size(); ++i)
                worst = std::max(worst,
                                 std::abs(runs[i].records[t].loss - runs[0].records[t].loss) /
                                     (1.0 + std::abs(runs[0].records[t].loss)));
        add(suite, "fixed eta*lambda product: f-trajectories agree across ratios", worst < 1e-8,
            "max dev " + num(worst));
    }
    return suite;
}

SuiteResult periodicity_suite() {
    SuiteResult suite;
    suite.name = "periodicity";

    {
        const auto& traj = appendix_e_run(0.01);
        const auto seg = jump::segment_phases(traj, {});
        std::size_t ordered = 0;
        for (const auto& p : seg.periods) ordered += p.ordered_abc;
        add(suite, "toy periodic run shows >= 3 complete A->B->C periods",
            seg.periods.size() >= 3 && ordered == seg.periods.size(),
            std::to_string(seg.periods.size()) + " periods, " + std::to_string(ordered) +
                " ordered");
    }
    {
        const auto& traj = appendix_e_run(0.0);
        bool elr_mono = true;
        for (std::size_t t = 1; t + 1 < traj.records.size(); ++t)
            elr_mono = elr_mono && traj.records[t + 1].eff_lr <= traj.records[t].eff_lr;
        const double final_loss = traj.records.back().loss;
        const auto events = jump::detect_jumps(traj, 0.1);
        add(suite, "lambda=0 converges with monotone effective LR",
            elr_mono && final_loss < 1e-6 && events.empty(),
            "final loss " + num(final_loss));
    }
    {
        objectives::ToyRational toy;
        std::vector<dynamics::Trajectory> sweep;
        for (double lambda : {5e-3, 1e-2, 2e-2}) {
            OptimizerConfig cfg;
            cfg.eta = 1.0;
            cfg.lambda = lambda;
            cfg.steps = 40000;
            const std::vector<double> x0 = {0.01, 1.0};
            sweep.push_back(dynamics::run(toy, cfg, x0));
        }
        const auto rep = jump::period_frequency_report(sweep, 0.1);
        bool all_included = true;
        std::string detail;
        for (const auto& row : rep.rows) {
            all_included = all_included && row.included;
            detail += num(row.eta_lambda) + "->" + num(row.mean_period_len) + " ";
        }
        add(suite, "mean period length strictly decreases in eta*lambda",
            all_included && rep.strictly_decreasing, detail);
    }
    {
        // Sphere-projection ablation on the toy objective.
        objectives::ToyRational toy;
        OptimizerConfig cfg;
        cfg.eta = 1.0;
        cfg.lambda = 0.01;
        cfg.steps = 20000;
        cfg.family = dynamics::Family::Sphere;
        const std::vector<double> x0 = {0.01, 1.0};
        const auto projected = dynamics::run(toy, cfg, x0);
        const auto events = jump::detect_jumps(projected, 0.1);
        std::size_t late = 0;
        for (const auto& e : events) late += e.step > cfg.steps / 10;
        const auto& unprojected = appendix_e_run(0.01);
        const auto base_events = jump::detect_jumps(unprojected, 0.1);
        add(suite, "fixed-norm ablation suppresses jumps (toy)",
            late == 0 && base_events.size() >= 1,
            std::to_string(events.size()) + " projected events, " +
                std::to_string(base_events.size()) + " unprojected");
    }
    {
        // Momentum still destabilizes.
        objectives::ToyRational toy;
        OptimizerConfig cfg;
        cfg.family = dynamics::Family::Momentum;
        cfg.mu = 0.9;
        cfg.eta = 0.3;
        cfg.lambda = 0.01;
        cfg.steps = 20000;
        const std::vector<double> x0 = {0.01, 1.0};
        const auto traj = dynamics::run(toy, cfg, x0);
        const auto events = jump::detect_jumps(traj, 0.1);
        add(suite, "momentum run still shows jumps (toy)", !events.empty(),
            std::to_string(events.size()) + " events");
    }
    return suite;
}

} // namespace

std::vector<std::string> suite_names() {
    return {"closed-forms", "jump-theory", "beta-seq", "rescaling", "periodicity"};
}

SuiteResult run_suite(const std::string& name) {
    const auto t0 = std::chrono::steady_clock::now();
    SuiteResult result;
    if (name == "closed-forms") result = closed_forms_suite();
    else if (name == "jump-theory") result = jump_theory_suite();
    else if (name == "beta-seq") result = beta_seq_suite();
    else if (name == "rescaling") result = rescaling_suite();
    else if (name == "periodicity") result = periodicity_suite();
    else throw ConfigError("unknown verification suite: " + name);
    result.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

std::string report_text(std::span<const SuiteResult> results) {
    std::ostringstream out;
    for (const auto& suite : results) {
        out << "suite " << suite.name << ": " << (suite.pass() ? "PASS" : "FAIL") << " ("
            << suite.checks.size() << " checks, " << io::format_double(suite.runtime_s)
            << " s)\n";
        for (const auto& c : suite.checks) {
            out << "  [" << (c.pass ? "pass" : "FAIL") << "] " << c.name;
            if (!c.detail.empty()) out << " -- " << c.detail;
            out << "\n";
        }
    }
    return out.str();
}

std::string report_json(std::span<const SuiteResult> results) {
    nlohmann::ordered_json j;
    j["suites"] = nlohmann::ordered_json::array();
    for (const auto& suite : results) {
        nlohmann::ordered_json sj;
        sj["name"] = suite.name;
        sj["pass"] = suite.pass();
        sj["runtime_s"] = suite.runtime_s;
        sj["checks"] = nlohmann::ordered_json::array();
        for (const auto& c : suite.checks) {
            nlohmann::ordered_json cj;
            cj["name"] = c.name;
            cj["pass"] = c.pass;
            cj["detail"] = c.detail;
            sj["checks"].push_back(cj);
        }
        j["suites"].push_back(sj);
    }
    return j.dump(2) + "\n";
}

} // namespace silab::verify
