#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace silab::betaseq {

/// One step of x' = (1-alpha) x + beta / x, taking the decay factor
/// directly. The dynamics engine routes its norm recursion through this
/// function so that the two modules produce bit-identical sequences.
inline double det_step(double x, double one_minus_alpha, double beta) {
    return one_minus_alpha * x + beta / x;
}

struct BetaDetParams {
    double alpha = 0.0;  // in (0, 0.5)
    double beta = 0.0;   // >= 0
    double x0 = 0.0;     // > 0
};

struct SequenceTrace {
    std::vector<double> x;      // x_0 .. x_steps
    std::vector<double> gamma;  // x_t / x*, empty when beta = 0
    double stationary = 0.0;    // sqrt(beta/alpha), 0 for beta = 0
};

SequenceTrace iterate_det(const BetaDetParams& params, std::size_t steps);

/// gamma' = (1-alpha) gamma + alpha / gamma.
double gamma_map(double gamma, double alpha);

/// The seven facts about the gamma map, checked on a grid over (0, 2].
/// Grid points within one spacing of an analytic breakpoint are skipped
/// when testing strict inequalities around it.
struct GammaPropertyReport {
    std::array<bool, 7> pass{};          // a..g
    std::array<double, 7> witness{};     // offending gamma, NaN when passed
    bool all_pass = false;
    double pre_stationary = 0.0;         // alpha/(1-alpha)
    double argmin = 0.0;                 // sqrt(alpha/(1-alpha))
    double min_value = 0.0;              // 2 sqrt(alpha(1-alpha))
};

GammaPropertyReport check_gamma_properties(double alpha, std::span<const double> grid);

/// Per-step sandwich (1-2a)^t (x0-x*) <= x_t - x* <= (1-a)^t (x0-x*),
/// for x0 > x*.
struct BoundCheck {
    bool pass = false;
    std::optional<std::size_t> witness_step;
    double worst_rel_violation = 0.0;
};

BoundCheck det_convergence_bounds(const BetaDetParams& params, std::size_t steps);

// ---------------------------------------------------------------------------
// beta_t varying in [a, b]

enum class SamplerKind {
    Uniform,               // beta_t ~ U(a, b)
    AdversarialExtremes,   // beta_t in {a, b}, random or alternating
    UserSeries,            // caller-provided series
};

struct BetaUndetParams {
    double alpha = 0.0;
    double a = 0.0;
    double b = 0.0;
    double x0 = 0.0;
    SamplerKind sampler = SamplerKind::Uniform;
    std::uint64_t seed = 0;
    std::vector<double> user_series;  // used for SamplerKind::UserSeries
};

// Materializes the beta series for a run (deterministic in seed).
std::vector<double> make_beta_series(const BetaUndetParams& params, std::size_t steps);

struct UndetBoundingResult {
    SequenceTrace trace;
    SequenceTrace lower;               // beta = a throughout
    SequenceTrace upper;               // beta = b throughout
    bool lower_ok = false;             // x_{a,t} <= x_t for all t
    bool upper_ok = false;             // x_t <= x_{b,t} on the validity window
    std::size_t upper_valid_until = 0; // last index the upper bound was checked at
    bool remark_all_t = false;         // strengthened condition: valid for every t
    std::optional<std::size_t> witness_step;
};

UndetBoundingResult undet_bounding_runs(const BetaUndetParams& params, std::size_t steps);

struct IntervalConvergence {
    double lo = 0.0;                        // sqrt(a/alpha)
    double hi = 0.0;                        // sqrt(b/alpha)
    bool condition_ok = false;              // alpha/(1-alpha) sqrt(b) <= sqrt(a)
    std::optional<std::size_t> entry_time;  // first t with x_t in [lo, hi]
    std::size_t post_entry_exits = 0;
    bool envelopes_ok = false;              // linear envelopes when x0 > hi
    std::optional<std::size_t> envelope_witness;
    double relaxed_upper = 0.0;             // (1-alpha) lo + b / lo, reported when condition fails
    double observed_max_after_entry = 0.0;
};

IntervalConvergence interval_convergence(const BetaUndetParams& params, std::size_t steps);

// ---------------------------------------------------------------------------
// Moving-average diagnostics (report-only)

/// Bias-corrected EMA of g^2 with the given decay; returns the per-step
/// ratio g_t^2 / ema_t. No assertion is attached to this quantity.
std::vector<double> ema_sq_ratio(std::span<const double> g, double decay);

/// Reconstructs the norm series from the EMA closed form:
/// (1-el)^{2t} rho0^2 + eta^2 (1-d) / (1-d^t) * sum d^{t-1-t'} g^2,
/// with d = (1-eta*lambda)^2. Diagnostic companion to the exact recursion.
std::vector<double> norm_sq_from_ema(double rho0_sq, double eta, double lambda,
                                     std::span<const double> g);

} // namespace silab::betaseq
