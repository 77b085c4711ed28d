#include "silab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "silab/errors.hpp"
#include "silab/kernels.hpp"
#include "silab/rng.hpp"

namespace silab::dynamics {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kNormRelTol = 1e-9;
constexpr double kCosAbsTol = 1e-9;
} // namespace

const char* family_name(Family f) {
    switch (f) {
        case Family::Gd: return "gd";
        case Family::Sgd: return "sgd";
        case Family::Momentum: return "sgd-momentum";
        case Family::Adam: return "adam";
        case Family::Sphere: return "sphere-projected";
    }
    return "?";
}

Family family_from_name(const std::string& name) {
    if (name == "gd") return Family::Gd;
    if (name == "sgd") return Family::Sgd;
    if (name == "sgd-momentum" || name == "momentum") return Family::Momentum;
    if (name == "adam") return Family::Adam;
    if (name == "sphere-projected" || name == "sphere") return Family::Sphere;
    throw ConfigError("unknown optimizer family: " + name);
}

void OptimizerConfig::validate() const {
    if (!(eta > 0.0)) throw DomainError("config: eta must be positive");
    if (!(lambda >= 0.0)) throw DomainError("config: lambda must be non-negative");
    if (!(eta * lambda < 0.5)) throw DomainError("config: eta*lambda must stay below 0.5");
    if (!(mu >= 0.0 && mu < 1.0)) throw DomainError("config: momentum must lie in [0, 1)");
    if (steps == 0) throw DomainError("config: step budget must be positive");
    if (trace_thin == 0) throw DomainError("config: trace_thin must be >= 1");
}

double predicted_norm_sq(double rho_sq, double eta, double lambda, double eff_grad_norm) {
    if (!(rho_sq > 0.0)) throw DomainError("predicted_norm_sq: rho^2 must be positive");
    const double decay = 1.0 - eta * lambda;
    return betaseq::det_step(rho_sq, decay * decay, (eta * eff_grad_norm) * (eta * eff_grad_norm));
}

namespace {

double cosine_q(double rho_sq, double eta, double lambda, double eff_grad_norm) {
    if (!(rho_sq > 0.0)) throw DomainError("predicted_cosine: rho^2 must be positive");
    if (!(eta * lambda < 1.0)) throw DomainError("predicted_cosine: requires eta*lambda < 1");
    const double num = eta * eff_grad_norm;
    const double den = (1.0 - eta * lambda) * rho_sq;
    const double r = num / den;
    return r * r;
}

} // namespace

double predicted_cosine(double rho_sq, double eta, double lambda, double eff_grad_norm) {
    return 1.0 / std::sqrt(1.0 + cosine_q(rho_sq, eta, lambda, eff_grad_norm));
}

double predicted_cos_dist(double rho_sq, double eta, double lambda, double eff_grad_norm) {
    // 1 - (1+q)^{-1/2} = q / (sqrt(1+q) (sqrt(1+q) + 1)); no cancellation for small q.
    const double q = cosine_q(rho_sq, eta, lambda, eff_grad_norm);
    const double s = std::sqrt(1.0 + q);
    return q / (s * (s + 1.0));
}

std::vector<double> step(std::span<const double> x, const OptimizerConfig& config,
                         std::span<const double> grad, OptState& state) {
    const std::size_t n = x.size();
    const auto& k = kernels::ops();
    std::vector<double> out(x.begin(), x.end());
    const bool coupled = config.coupled_l2;
    const double shrink = coupled ? 1.0 : 1.0 - config.eta * config.lambda;

    // Accumulator input; weight decay folds in here only under coupled_l2.
    std::vector<double> gin;
    std::span<const double> g = grad;
    if (coupled && config.lambda > 0.0) {
        gin.assign(grad.begin(), grad.end());
        k.axpy(config.lambda, x.data(), gin.data(), n);
        g = gin;
    }

    switch (config.family) {
        case Family::Gd:
        case Family::Sgd:
        case Family::Sphere:
            k.axpby(-config.eta, g.data(), shrink, out.data(), n);
            break;
        case Family::Momentum: {
            if (state.velocity.size() != n) state.velocity.assign(n, 0.0);
            k.axpby(1.0, g.data(), config.mu, state.velocity.data(), n);
            k.axpby(-config.eta, state.velocity.data(), shrink, out.data(), n);
            break;
        }
        case Family::Adam: {
            if (state.m.size() != n) {
                state.m.assign(n, 0.0);
                state.v.assign(n, 0.0);
                state.t = 0;
            }
            ++state.t;
            const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
            const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
            for (std::size_t i = 0; i < n; ++i) {
                state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g[i];
                state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g[i] * g[i];
                const double mhat = state.m[i] / bc1;
                const double vhat = state.v[i] / bc2;
                out[i] = shrink * out[i] - config.eta * mhat / (std::sqrt(vhat) + config.eps);
            }
            break;
        }
    }
    return out;
}

std::vector<double> sphere_projected_step(std::span<const double> x,
                                          const OptimizerConfig& config,
                                          std::span<const double> grad, OptState& state,
                                          double target_norm) {
    if (!(target_norm > 0.0)) throw DomainError("sphere projection: target norm must be positive");
    auto out = step(x, config, grad, state);
    const double norm = std::sqrt(kernels::ops().nrm2_sq(out.data(), out.size()));
    if (!(norm > 0.0)) throw DomainError("sphere projection: zero-norm iterate");
    kernels::ops().scale(out.data(), target_norm / norm, out.size());
    return out;
}

namespace {

bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// 1 - cos via the normalized difference; exact identity, no cancellation.
double measured_cos_dist(std::span<const double> a, double na, std::span<const double> b,
                         double nb) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] / na - b[i] / nb;
        acc += d * d;
    }
    return 0.5 * acc;
}

class BatchSchedule {
public:
    BatchSchedule(std::size_t train_size, std::size_t batch, std::uint64_t seed)
        : n_(train_size), batch_(batch), rng_(seed ^ 0x5b7f1d8e23c9a6ebULL) {
        if (batch_ > 0 && batch_ <= n_) {
            perm_.resize(n_);
            for (std::size_t i = 0; i < n_; ++i) perm_[i] = i;
        }
    }

    // Empty span = full batch.
    std::span<const std::size_t> next() {
        if (perm_.empty()) return {};
        const std::size_t per_epoch = n_ / batch_;  // remainder dropped
        if (cursor_ >= per_epoch) cursor_ = 0;
        if (cursor_ == 0) shuffle();
        auto out = std::span<const std::size_t>(perm_).subspan(cursor_ * batch_, batch_);
        ++cursor_;
        return out;
    }

private:
    void shuffle() {
        for (std::size_t i = n_ - 1; i > 0; --i) {
            const std::size_t j = static_cast<std::size_t>(rng_.below(i + 1));
            std::swap(perm_[i], perm_[j]);
        }
    }

    std::size_t n_;
    std::size_t batch_;
    Rng rng_;
    std::vector<std::size_t> perm_;
    std::size_t cursor_ = 0;
};

} // namespace

Trajectory run(const objectives::Objective& objective, const OptimizerConfig& config,
               std::span<const double> x0, const RunOptions& options) {
    config.validate();
    if (x0.size() != objective.dim()) throw DomainError("run: x0 dimension mismatch");
    if (!all_finite(x0)) throw DomainError("run: x0 must be finite");

    const auto& k = kernels::ops();
    Trajectory traj;
    traj.config = config;
    traj.objective_id = options.objective_id;
    traj.records.reserve(config.steps / config.trace_thin + 1);

    std::vector<double> x(x0.begin(), x0.end());
    double rho = std::sqrt(k.nrm2_sq(x.data(), x.size()));
    if (!(rho > 0.0)) throw DomainError("run: x0 must have positive norm");

    const bool check = config.online_checks && !config.coupled_l2 &&
                       (config.family == Family::Gd || config.family == Family::Sgd);
    const double sphere_target = config.target_norm > 0.0 ? config.target_norm : rho;

    std::vector<std::size_t> want_ckpt = options.checkpoint_steps;
    std::sort(want_ckpt.begin(), want_ckpt.end());
    std::size_t ckpt_cursor = 0;

    BatchSchedule batches(objective.train_size(), config.batch, config.seed);
    OptState state;

    for (std::size_t t = 0; t < config.steps; ++t) {
        while (ckpt_cursor < want_ckpt.size() && want_ckpt[ckpt_cursor] == t) {
            traj.checkpoints.push_back({t, x, objective.test_error(x)});
            ++ckpt_cursor;
        }
        if (options.observe_every > 0 && t % options.observe_every == 0 && options.observer)
            options.observer(t, x);

        const auto batch = batches.next();
        objectives::GradientEval ev;
        try {
            ev = objective.eval(x, batch);
        } catch (const DomainError&) {
            traj.truncated = true;
            traj.divergence_step = t;
            break;
        }
        if (!std::isfinite(ev.value) || !all_finite(ev.gradient)) {
            traj.truncated = true;
            traj.divergence_step = t;
            break;
        }

        std::vector<double> next =
            config.family == Family::Sphere
                ? sphere_projected_step(x, config, ev.gradient, state, sphere_target)
                : step(x, config, ev.gradient, state);
        if (!all_finite(next)) {
            traj.truncated = true;
            traj.divergence_step = t;
            break;
        }

        const double next_rho = std::sqrt(k.nrm2_sq(next.data(), next.size()));
        if (!(next_rho > 0.0) || !std::isfinite(next_rho)) {
            traj.truncated = true;
            traj.divergence_step = t;
            break;
        }
        const double cos_dist = measured_cos_dist(x, rho, next, next_rho);

        if (check) {
            const double pred_rho_sq =
                predicted_norm_sq(rho * rho, config.eta, config.lambda, ev.eff_grad_norm);
            const double meas_rho_sq = next_rho * next_rho;
            if (std::abs(meas_rho_sq - pred_rho_sq) > kNormRelTol * pred_rho_sq)
                throw VerificationError("norm recursion check failed at step " + std::to_string(t));
            const double pred_cd =
                predicted_cos_dist(rho * rho, config.eta, config.lambda, ev.eff_grad_norm);
            if (std::abs(cos_dist - pred_cd) > kCosAbsTol)
                throw VerificationError("cosine closed form check failed at step " +
                                        std::to_string(t));
        }

        if (t % config.trace_thin == 0) {
            TraceRecord rec;
            rec.step = t;
            rec.loss = ev.value;
            rec.rho = rho;
            rec.grad_norm = ev.grad_norm;
            rec.eff_grad_norm = ev.eff_grad_norm;
            rec.eff_lr = config.eta / (rho * rho);
            rec.cos_dist = cos_dist;
            rec.train_error = ev.train_error;
            traj.records.push_back(rec);
        }

        x = std::move(next);
        rho = next_rho;
    }

    while (ckpt_cursor < want_ckpt.size() && want_ckpt[ckpt_cursor] <= config.steps &&
           !traj.truncated) {
        traj.checkpoints.push_back({want_ckpt[ckpt_cursor], x, objective.test_error(x)});
        ++ckpt_cursor;
    }
    traj.final_x = std::move(x);
    return traj;
}

RescaleReport rescaled_equivalence(const objectives::Objective& objective,
                                   const OptimizerConfig& config, std::span<const double> x0,
                                   double c, std::size_t horizon) {
    if (!(c > 0.0)) throw DomainError("rescaled_equivalence: c must be positive");
    if (config.family != Family::Gd && config.family != Family::Sgd)
        throw DomainError("rescaled_equivalence: stated for gd/sgd only");

    OptimizerConfig base = config;
    base.steps = horizon;
    OptimizerConfig scaled = base;
    scaled.eta = c * c * base.eta;
    scaled.lambda = base.lambda / (c * c);

    std::vector<double> x0s(x0.begin(), x0.end());
    kernels::ops().scale(x0s.data(), c, x0s.size());

    RunOptions opts;
    opts.checkpoint_steps.resize(horizon);
    for (std::size_t t = 0; t < horizon; ++t) opts.checkpoint_steps[t] = t;

    const auto a = run(objective, base, x0, opts);
    const auto b = run(objective, scaled, x0s, opts);

    RescaleReport rep;
    rep.truncated = a.truncated || b.truncated;
    rep.horizon = std::min(a.records.size(), b.records.size());
    rep.f_dev_series.reserve(rep.horizon);
    for (std::size_t t = 0; t < rep.horizon; ++t) {
        const double dev = std::abs(a.records[t].loss - b.records[t].loss) /
                           (1.0 + std::abs(a.records[t].loss));
        rep.f_dev_series.push_back(dev);
        rep.max_rel_f_dev = std::max(rep.max_rel_f_dev, dev);
    }
    const std::size_t pts = std::min({a.checkpoints.size(), b.checkpoints.size(),
                                      rep.horizon});
    for (std::size_t t = 0; t < pts; ++t) {
        const auto& xa = a.checkpoints[t].x;
        const auto& xb = b.checkpoints[t].x;
        double diff_sq = 0.0, ref_sq = 0.0;
        for (std::size_t i = 0; i < xa.size(); ++i) {
            const double d = xb[i] - c * xa[i];
            diff_sq += d * d;
            ref_sq += (c * xa[i]) * (c * xa[i]);
        }
        if (ref_sq > 0.0)
            rep.max_rel_x_dev = std::max(rep.max_rel_x_dev, std::sqrt(diff_sq / ref_sq));
    }
    return rep;
}

SyntheticDynamics simulate_norm_dynamics(double eta, double lambda, double rho0_sq, double ell,
                                         double L, betaseq::SamplerKind sampler,
                                         std::uint64_t seed, std::size_t steps) {
    if (!(rho0_sq > 0.0)) throw DomainError("simulate_norm_dynamics: rho0^2 must be positive");
    if (!(0.0 <= ell && ell <= L)) throw DomainError("simulate_norm_dynamics: need 0 <= ell <= L");

    SyntheticDynamics dyn;
    dyn.rho_sq.reserve(steps + 1);
    dyn.eff_grad.reserve(steps);
    dyn.cos_dist.reserve(steps);

    Rng rng(seed);
    const double decay = 1.0 - eta * lambda;
    const double decay_sq = decay * decay;
    double x = rho0_sq;
    dyn.rho_sq.push_back(x);
    for (std::size_t t = 0; t < steps; ++t) {
        double g;
        switch (sampler) {
            case betaseq::SamplerKind::Uniform: g = rng.uniform(ell, L); break;
            case betaseq::SamplerKind::AdversarialExtremes:
                g = (rng.next_u64() & 1) ? L : ell;
                break;
            default: throw DomainError("simulate_norm_dynamics: unsupported sampler");
        }
        dyn.eff_grad.push_back(g);
        dyn.cos_dist.push_back(predicted_cos_dist(x, eta, lambda, g));
        x = betaseq::det_step(x, decay_sq, (eta * g) * (eta * g));
        dyn.rho_sq.push_back(x);
    }
    return dyn;
}

Trajectory synthetic_trajectory(double eta, double lambda, double rho0_sq, double ell, double L,
                                betaseq::SamplerKind sampler, std::uint64_t seed,
                                std::size_t steps) {
    const auto dyn = simulate_norm_dynamics(eta, lambda, rho0_sq, ell, L, sampler, seed, steps);
    Trajectory traj;
    traj.config.eta = eta;
    traj.config.lambda = lambda;
    traj.config.steps = steps;
    traj.config.seed = seed;
    traj.objective_id = "synthetic";
    traj.records.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        TraceRecord rec;
        rec.step = t;
        rec.loss = kNaN;
        rec.rho = std::sqrt(dyn.rho_sq[t]);
        rec.eff_grad_norm = dyn.eff_grad[t];
        rec.grad_norm = rec.eff_grad_norm / rec.rho;
        rec.eff_lr = eta / dyn.rho_sq[t];
        rec.cos_dist = dyn.cos_dist[t];
        rec.train_error = kNaN;
        traj.records.push_back(rec);
    }
    return traj;
}

TraceCheck verify_trace_closed_forms(const Trajectory& traj) {
    TraceCheck check;
    const double eta = traj.config.eta;
    const double lambda = traj.config.lambda;
    for (std::size_t t = 0; t + 1 < traj.records.size(); ++t) {
        const auto& cur = traj.records[t];
        const auto& nxt = traj.records[t + 1];
        if (nxt.step != cur.step + 1) continue;  // thinned trace: only adjacent pairs checked
        const double pred = predicted_norm_sq(cur.rho * cur.rho, eta, lambda, cur.eff_grad_norm);
        const double meas = nxt.rho * nxt.rho;
        const double nerr = std::abs(meas - pred) / pred;
        const double cerr =
            std::abs(cur.cos_dist - predicted_cos_dist(cur.rho * cur.rho, eta, lambda,
                                                       cur.eff_grad_norm));
        check.max_norm_rel_err = std::max(check.max_norm_rel_err, nerr);
        check.max_cos_abs_err = std::max(check.max_cos_abs_err, cerr);
        if ((nerr > kNormRelTol || cerr > kCosAbsTol) && check.pass) {
            check.pass = false;
            check.witness_step = cur.step;
        }
    }
    return check;
}

} // namespace silab::dynamics
