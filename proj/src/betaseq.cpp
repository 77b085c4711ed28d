#include "silab/betaseq.hpp"

#include <cmath>
#include <limits>

#include "silab/errors.hpp"
#include "silab/rng.hpp"

namespace silab::betaseq {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Slack for comparing two independently rounded float series.
constexpr double kRelSlack = 1e-12;

void validate_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 0.5))
        throw DomainError("beta sequence: alpha must lie in (0, 0.5)");
}

} // namespace

SequenceTrace iterate_det(const BetaDetParams& params, std::size_t steps) {
    validate_alpha(params.alpha);
    if (!(params.x0 > 0.0)) throw DomainError("beta sequence: x0 must be positive");
    if (params.beta < 0.0) throw DomainError("beta sequence: beta must be non-negative");

    SequenceTrace trace;
    trace.stationary = params.beta > 0.0 ? std::sqrt(params.beta / params.alpha) : 0.0;
    trace.x.reserve(steps + 1);
    const double one_minus_alpha = 1.0 - params.alpha;
    double x = params.x0;
    trace.x.push_back(x);
    for (std::size_t t = 0; t < steps; ++t) {
        x = det_step(x, one_minus_alpha, params.beta);
        trace.x.push_back(x);
    }
    if (trace.stationary > 0.0) {
        trace.gamma.reserve(trace.x.size());
        for (double v : trace.x) trace.gamma.push_back(v / trace.stationary);
    }
    return trace;
}

double gamma_map(double gamma, double alpha) {
    validate_alpha(alpha);
    if (!(gamma > 0.0)) throw DomainError("gamma_map: gamma must be positive");
    return (1.0 - alpha) * gamma + alpha / gamma;
}

GammaPropertyReport check_gamma_properties(double alpha, std::span<const double> grid) {
    validate_alpha(alpha);
    GammaPropertyReport rep;
    rep.pre_stationary = alpha / (1.0 - alpha);
    rep.argmin = std::sqrt(alpha / (1.0 - alpha));
    rep.min_value = 2.0 * std::sqrt(alpha * (1.0 - alpha));
    rep.pass.fill(true);
    rep.witness.fill(kNaN);

    // Grid spacing determines the dead zone around analytic breakpoints,
    // where strict inequalities legitimately degenerate.
    double spacing = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i)
        spacing = std::max(spacing, grid[i] - grid[i - 1]);
    const double guard = 2.0 * spacing + 1e-12;

    auto fail = [&](int prop, double gamma) {
        if (rep.pass[prop]) {
            rep.pass[prop] = false;
            rep.witness[prop] = gamma;
        }
    };

    double prev_gamma = kNaN, prev_phi = kNaN;
    for (double g : grid) {
        if (!(g > 0.0)) continue;
        const double phi = gamma_map(g, alpha);

        // (a) increasing below the stationary point
        if (g < 1.0 - guard && !(phi > g)) fail(0, g);
        // (b) decreasing above, staying above
        if (g > 1.0 + guard && !(phi < g && phi > 1.0)) fail(1, g);
        // (c) preimages of 1 are exactly alpha/(1-alpha) and 1
        if (std::abs(g - rep.pre_stationary) <= guard || std::abs(g - 1.0) <= guard) {
            // near a root: phi must be near 1
            if (std::abs(gamma_map(rep.pre_stationary, alpha) - 1.0) > 1e-12) fail(2, rep.pre_stationary);
            if (std::abs(gamma_map(1.0, alpha) - 1.0) > 1e-12) fail(2, 1.0);
        } else if (std::abs(phi - 1.0) < 1e-12) {
            fail(2, g);  // an extra preimage of 1
        }
        // (d) phi < 1 exactly on (alpha/(1-alpha), 1)
        const bool inside = g > rep.pre_stationary + guard && g < 1.0 - guard;
        const bool outside = g < rep.pre_stationary - guard || g > 1.0 + guard;
        if (inside && !(phi < 1.0)) fail(3, g);
        if (outside && !(phi > 1.0)) fail(3, g);
        // (e)/(f) monotonicity on the two sides of the argmin
        if (!std::isnan(prev_gamma)) {
            if (prev_gamma < rep.argmin - guard && g < rep.argmin - guard && !(phi < prev_phi))
                fail(4, g);
            if (prev_gamma > rep.argmin + guard && g > rep.argmin + guard && !(phi > prev_phi))
                fail(5, g);
        }
        // (g) global minimum value and its location
        if (phi < rep.min_value * (1.0 - kRelSlack)) fail(6, g);
        prev_gamma = g;
        prev_phi = phi;
    }
    if (std::abs(gamma_map(rep.argmin, alpha) - rep.min_value) > 1e-12 * rep.min_value)
        fail(6, rep.argmin);

    rep.all_pass = true;
    for (bool p : rep.pass) rep.all_pass = rep.all_pass && p;
    return rep;
}

BoundCheck det_convergence_bounds(const BetaDetParams& params, std::size_t steps) {
    const auto trace = iterate_det(params, steps);
    const double xstar = trace.stationary;
    if (!(params.x0 >= xstar))
        throw DomainError("det_convergence_bounds: requires x0 >= stationary point");

    BoundCheck check;
    check.pass = true;
    const double gap0 = params.x0 - xstar;
    double lo_pow = 1.0, hi_pow = 1.0;
    const double lo_rate = 1.0 - 2.0 * params.alpha;
    const double hi_rate = 1.0 - params.alpha;
    for (std::size_t t = 0; t < trace.x.size(); ++t) {
        const double diff = trace.x[t] - xstar;
        const double lo = lo_pow * gap0;
        const double hi = hi_pow * gap0;
        const double scale = std::max({std::abs(diff), std::abs(hi), 1e-300});
        const double viol = std::max(lo - diff, diff - hi) / scale;
        if (viol > kRelSlack) {
            check.pass = false;
            if (!check.witness_step) check.witness_step = t;
            check.worst_rel_violation = std::max(check.worst_rel_violation, viol);
        }
        lo_pow *= lo_rate;
        hi_pow *= hi_rate;
    }
    return check;
}

// ---------------------------------------------------------------------------

std::vector<double> make_beta_series(const BetaUndetParams& params, std::size_t steps) {
    validate_alpha(params.alpha);
    if (!(params.a >= 0.0 && params.a <= params.b))
        throw DomainError("beta sequence: need 0 <= a <= b");
    std::vector<double> betas(steps);
    Rng rng(params.seed);
    switch (params.sampler) {
        case SamplerKind::Uniform:
            for (auto& b : betas) b = rng.uniform(params.a, params.b);
            break;
        case SamplerKind::AdversarialExtremes:
            // Random runs of the two extremes; probes the worst cases of the
            // bounding lemmas harder than plain alternation.
            for (std::size_t t = 0; t < steps;) {
                const double v = (rng.next_u64() & 1) ? params.b : params.a;
                std::size_t run = 1 + rng.below(8);
                for (; run > 0 && t < steps; --run, ++t) betas[t] = v;
            }
            break;
        case SamplerKind::UserSeries:
            if (params.user_series.size() < steps)
                throw DomainError("beta sequence: user series shorter than run");
            for (std::size_t t = 0; t < steps; ++t) {
                betas[t] = params.user_series[t];
                if (betas[t] < params.a || betas[t] > params.b)
                    throw DomainError("beta sequence: user series leaves [a, b]");
            }
            break;
    }
    return betas;
}

namespace {

SequenceTrace run_series(double x0, double alpha, std::span<const double> betas) {
    SequenceTrace trace;
    trace.x.reserve(betas.size() + 1);
    const double one_minus_alpha = 1.0 - alpha;
    double x = x0;
    trace.x.push_back(x);
    for (double b : betas) {
        x = det_step(x, one_minus_alpha, b);
        trace.x.push_back(x);
    }
    return trace;
}

} // namespace

UndetBoundingResult undet_bounding_runs(const BetaUndetParams& params, std::size_t steps) {
    if (!(params.x0 > 0.0)) throw DomainError("beta sequence: x0 must be positive");
    const auto betas = make_beta_series(params, steps);

    UndetBoundingResult res;
    res.trace = run_series(params.x0, params.alpha, betas);
    res.lower = iterate_det({params.alpha, params.a, params.x0}, steps);
    res.upper = iterate_det({params.alpha, params.b, params.x0}, steps);

    res.lower_ok = true;
    for (std::size_t t = 0; t < res.trace.x.size(); ++t) {
        const double slack = kRelSlack * std::abs(res.trace.x[t]);
        if (res.lower.x[t] > res.trace.x[t] + slack) {
            res.lower_ok = false;
            if (!res.witness_step) res.witness_step = t;
            break;
        }
    }

    // Upper bound: valid on [0, T+1] where x stays above sqrt(b/(1-alpha)),
    // or everywhere under the strengthened condition.
    res.remark_all_t = params.alpha * std::sqrt(params.b) / (1.0 - params.alpha) <=
                           std::sqrt(params.a) &&
                       params.x0 > std::sqrt(params.b / params.alpha);
    std::size_t valid_until = res.trace.x.size() - 1;
    if (!res.remark_all_t) {
        const double floor = std::sqrt(params.b / (1.0 - params.alpha));
        std::size_t first_below = res.trace.x.size();
        for (std::size_t t = 0; t < res.trace.x.size(); ++t) {
            if (!(res.trace.x[t] > floor)) {
                first_below = t;
                break;
            }
        }
        // x_t > floor for t = 0..T gives the bound for t = 0..T+1
        valid_until = std::min(first_below, res.trace.x.size() - 1);
    }
    res.upper_valid_until = valid_until;
    res.upper_ok = true;
    for (std::size_t t = 0; t <= valid_until; ++t) {
        const double slack = kRelSlack * std::abs(res.upper.x[t]);
        if (res.trace.x[t] > res.upper.x[t] + slack) {
            res.upper_ok = false;
            if (!res.witness_step) res.witness_step = t;
            break;
        }
    }
    return res;
}

IntervalConvergence interval_convergence(const BetaUndetParams& params, std::size_t steps) {
    if (!(params.a > 0.0)) throw DomainError("interval_convergence: requires a > 0");
    const auto betas = make_beta_series(params, steps);
    const auto trace = run_series(params.x0, params.alpha, betas);

    IntervalConvergence res;
    res.lo = std::sqrt(params.a / params.alpha);
    res.hi = std::sqrt(params.b / params.alpha);
    res.condition_ok =
        params.alpha / (1.0 - params.alpha) * std::sqrt(params.b) <= std::sqrt(params.a);
    res.relaxed_upper = (1.0 - params.alpha) * res.lo + params.b / res.lo;

    const double lo_slack = res.lo * (1.0 - kRelSlack);
    const double hi_slack = res.hi * (1.0 + kRelSlack);
    for (std::size_t t = 0; t < trace.x.size(); ++t) {
        const bool inside = trace.x[t] >= lo_slack && trace.x[t] <= hi_slack;
        if (!res.entry_time && inside) res.entry_time = t;
        if (res.entry_time && t > *res.entry_time) {
            if (!inside) ++res.post_entry_exits;
            res.observed_max_after_entry = std::max(res.observed_max_after_entry, trace.x[t]);
        }
    }

    // Linear envelopes from the determined bounds, when starting above the band.
    res.envelopes_ok = true;
    if (params.x0 > res.hi) {
        double lo_pow = 1.0, hi_pow = 1.0;
        const double lo_rate = 1.0 - 2.0 * params.alpha;
        const double hi_rate = 1.0 - params.alpha;
        bool above = true;
        for (std::size_t t = 0; t < trace.x.size(); ++t) {
            const double lower_env = res.lo + lo_pow * (params.x0 - res.lo);
            if (trace.x[t] < lower_env * (1.0 - kRelSlack)) {
                res.envelopes_ok = false;
                if (!res.envelope_witness) res.envelope_witness = t;
            }
            above = above && trace.x[t] > res.hi;
            if (above) {
                const double upper_env = res.hi + hi_pow * (params.x0 - res.hi);
                if (trace.x[t] > upper_env * (1.0 + kRelSlack)) {
                    res.envelopes_ok = false;
                    if (!res.envelope_witness) res.envelope_witness = t;
                }
            }
            lo_pow *= lo_rate;
            hi_pow *= hi_rate;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------

std::vector<double> ema_sq_ratio(std::span<const double> g, double decay) {
    if (!(decay > 0.0 && decay < 1.0)) throw DomainError("ema_sq_ratio: decay must be in (0, 1)");
    std::vector<double> ratio;
    ratio.reserve(g.size());
    double acc = 0.0;     // sum of decay^{t-1-t'} g_{t'}^2
    double norm = 0.0;    // sum of decay powers, for bias correction
    for (double gt : g) {
        acc = decay * acc + gt * gt;
        norm = decay * norm + 1.0;
        const double ema = acc / norm;
        ratio.push_back(ema > 0.0 ? gt * gt / ema : std::numeric_limits<double>::quiet_NaN());
    }
    return ratio;
}

std::vector<double> norm_sq_from_ema(double rho0_sq, double eta, double lambda,
                                     std::span<const double> g) {
    const double d = (1.0 - eta * lambda) * (1.0 - eta * lambda);
    std::vector<double> out;
    out.reserve(g.size() + 1);
    out.push_back(rho0_sq);
    double decay_pow = 1.0;
    double acc = 0.0;
    for (double gt : g) {
        acc = d * acc + gt * gt;
        decay_pow *= d;
        // eta^2 * (1-d)/(1-d^t) * gbar^2 where gbar^2 is the bias-corrected EMA
        const double denom = 1.0 - decay_pow;
        const double ema_term = denom > 0.0 ? eta * eta * (1.0 - d) * acc / denom : 0.0;
        out.push_back(decay_pow * rho0_sq + ema_term);
    }
    return out;
}

} // namespace silab::betaseq
