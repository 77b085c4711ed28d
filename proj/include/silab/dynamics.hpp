#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "silab/betaseq.hpp"
#include "silab/objectives.hpp"

namespace silab::dynamics {

enum class Family { Gd, Sgd, Momentum, Adam, Sphere };

const char* family_name(Family f);
Family family_from_name(const std::string& name);

struct OptimizerConfig {
    double eta = 0.1;
    double lambda = 0.0;
    Family family = Family::Gd;
    double mu = 0.9;                                  // momentum coefficient
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;    // adam accumulators
    std::size_t steps = 0;
    std::size_t batch = 0;                            // 0 = full batch
    std::uint64_t seed = 0;
    double target_norm = 0.0;                         // sphere family; 0 = freeze at rho_0
    bool coupled_l2 = false;                          // decay inside the accumulator (exploration)
    std::size_t trace_thin = 1;                       // record every k-th step
    bool online_checks = true;

    void validate() const;  // throws DomainError
};

struct TraceRecord {
    std::size_t step = 0;
    double loss = 0.0;
    double rho = 0.0;            // |x_t|
    double grad_norm = 0.0;      // |grad f(x_t)|
    double eff_grad_norm = 0.0;  // rho * grad_norm
    double eff_lr = 0.0;         // eta / rho^2
    double cos_dist = 0.0;       // 1 - cos(x_t, x_{t+1})
    double train_error = 0.0;    // NaN for label-free objectives
};

struct Checkpoint {
    std::size_t step = 0;
    std::vector<double> x;
    double test_error = 0.0;
};

struct Trajectory {
    OptimizerConfig config;
    std::string objective_id;
    std::vector<TraceRecord> records;
    std::vector<Checkpoint> checkpoints;
    std::vector<double> final_x;
    bool truncated = false;
    std::size_t divergence_step = 0;  // meaningful when truncated
};

// Closed-form one-step predictions for the gd/sgd update.
double predicted_norm_sq(double rho_sq, double eta, double lambda, double eff_grad_norm);
double predicted_cosine(double rho_sq, double eta, double lambda, double eff_grad_norm);
// 1 - predicted_cosine, computed without cancellation.
double predicted_cos_dist(double rho_sq, double eta, double lambda, double eff_grad_norm);

struct OptState {
    std::vector<double> velocity;  // momentum
    std::vector<double> m, v;      // adam
    std::size_t t = 0;
};

/// One optimizer step: x <- (1 - eta lambda) x - eta * accum(grad).
/// Weight decay stays a multiplicative shrink of the iterate for every
/// family unless coupled_l2 moves it into the accumulator input.
std::vector<double> step(std::span<const double> x, const OptimizerConfig& config,
                         std::span<const double> grad, OptState& state);

/// step() followed by exact rescaling to |x| = target_norm.
std::vector<double> sphere_projected_step(std::span<const double> x,
                                          const OptimizerConfig& config,
                                          std::span<const double> grad, OptState& state,
                                          double target_norm);

struct RunOptions {
    std::vector<std::size_t> checkpoint_steps;
    std::string objective_id;
    // Invoked with the iterate x_t every `observe_every` steps (0 = never).
    std::function<void(std::size_t, std::span<const double>)> observer;
    std::size_t observe_every = 0;
};

/// Runs the full loop, recording every field of TraceRecord, capturing
/// checkpoints at the given steps, and verifying the norm/cosine closed
/// forms online for gd/sgd (relative 1e-9 / absolute 1e-9).
Trajectory run(const objectives::Objective& objective, const OptimizerConfig& config,
               std::span<const double> x0, const RunOptions& options = {});

struct RescaleReport {
    double max_rel_f_dev = 0.0;        // max_t |f - f'| / (1 + |f|)
    double max_rel_x_dev = 0.0;        // max_t |x' - c x| / (c |x|)
    std::vector<double> f_dev_series;  // per-step deviations
    std::size_t horizon = 0;           // compared prefix length
    bool truncated = false;            // a trajectory ended early
};

/// Compares (x0, eta, lambda) against (c x0, c^2 eta, lambda / c^2) over
/// `horizon` steps with a shared seed.
RescaleReport rescaled_equivalence(const objectives::Objective& objective,
                                   const OptimizerConfig& config, std::span<const double> x0,
                                   double c, std::size_t horizon);

// ---------------------------------------------------------------------------
// Synthetic norm dynamics: the exact recursion driven by a controlled
// effective-gradient series, no objective involved. The cosine series is the
// exact closed form.

struct SyntheticDynamics {
    std::vector<double> rho_sq;    // rho^2_0 .. rho^2_T
    std::vector<double> eff_grad;  // controlled series, one per transition
    std::vector<double> cos_dist;  // exact 1 - cos per transition
};

SyntheticDynamics simulate_norm_dynamics(double eta, double lambda, double rho0_sq, double ell,
                                         double L, betaseq::SamplerKind sampler,
                                         std::uint64_t seed, std::size_t steps);

/// Wraps synthetic dynamics in a Trajectory (loss and train_error NaN) so the
/// jump calculus can consume it.
Trajectory synthetic_trajectory(double eta, double lambda, double rho0_sq, double ell, double L,
                                betaseq::SamplerKind sampler, std::uint64_t seed,
                                std::size_t steps);

// Per-trace closed-form re-verification (used by the verify suites; a
// corrupted trace yields the witness step).
struct TraceCheck {
    bool pass = true;
    std::optional<std::size_t> witness_step;
    double max_norm_rel_err = 0.0;
    double max_cos_abs_err = 0.0;
};

TraceCheck verify_trace_closed_forms(const Trajectory& traj);

} // namespace silab::dynamics
