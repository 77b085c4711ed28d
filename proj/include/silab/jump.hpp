#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "silab/dynamics.hpp"

namespace silab::jump {

enum class EnvelopeFamily { Constant, InvLinear, InvSquare };

/// Effective-gradient envelopes lower(t) <= g~_t <= upper(t), either
/// constants or c / (t - t0)^p, valid on [t_valid, t_end].
struct GradientBounds {
    EnvelopeFamily family = EnvelopeFamily::Constant;
    double c_lower = 0.0;
    double c_upper = 0.0;
    double t0 = 0.0;
    std::size_t t_valid = 0;
    std::size_t t_end = 0;

    double lower(double t) const;
    double upper(double t) const;
    // Window-wide extremes: min of lower(t), max of upper(t) over the window.
    double min_lower() const;
    double max_upper() const;

    static GradientBounds constant(double ell, double L);
};

struct JumpEvent {
    std::size_t step = 0;    // first step of the episode
    double cos_dist = 0.0;   // value at that step
    double delta = 0.0;      // threshold that was crossed
    double rho_sq = 0.0;     // at the event step
};

/// All steps with 1 - cos > delta; exceedances within `debounce` steps of
/// the previous one merge into a single event (first step kept).
std::vector<JumpEvent> detect_jumps(const dynamics::Trajectory& traj, double delta,
                                    std::size_t debounce = 5);

struct Thresholds {
    double possible = 0.0;    // eta L / sqrt(2 delta): below this a jump can happen
    double guaranteed = 0.0;  // eta ell / sqrt(2 delta): below this a jump must happen
    bool large_delta_warning = false;  // delta >= 0.1
};

Thresholds jump_thresholds(double eta, double lambda, const GradientBounds& bounds,
                           double delta);

/// Exact threshold forms. A jump at step t means
/// eta^2 g~^2 / ((1-eta lambda)^2 rho^4) > (1-delta)^{-2} - 1, so:
///  - rho^2 >= eta L / ((1-eta lambda) sqrt(2 delta))    => no jump possible;
///  - rho^2 <  eta ell / ((1-eta lambda) sqrt(s(delta))) => jump guaranteed,
/// with s(delta) = (1-delta)^{-2} - 1.
struct ExactThresholds {
    double no_jump_above = 0.0;
    double jump_below = 0.0;
};

ExactThresholds exact_jump_thresholds(double eta, double lambda, double ell, double L,
                                      double delta);

struct JumpTimeBounds {
    double t_min = std::numeric_limits<double>::quiet_NaN();
    double t_max = std::numeric_limits<double>::quiet_NaN();
    bool t_min_applicable = false;
    bool t_max_applicable = false;
};

/// Earliest / latest step at which a delta-jump can first occur, from the
/// linear envelopes of the norm recursion. Each branch is reported only when
/// its own precondition holds.
JumpTimeBounds jump_time_bounds(double rho0_sq, double eta, double lambda, double ell,
                                double L, double delta);

struct EquilibriumBand {
    double kappa = 0.0;        // sqrt(eta / (2 lambda))
    double lo = 0.0;           // kappa * ell, for rho^2
    double hi = 0.0;           // kappa * L
    double elr_lo = 0.0;       // sqrt(2 eta lambda) / L, for eta~
    double elr_hi = 0.0;       // sqrt(2 eta lambda) / ell
    bool condition_ok = false; // 2 eta lambda L <= ell
    double relaxed_upper = 0.0;  // (1 - eta lambda)^2 kappa ell + eta^2 L^2 / (kappa ell)
};

EquilibriumBand equilibrium_band(double eta, double lambda, double ell, double L);

/// Tightest envelope pair of the family bounding g~_t on records with steps
/// in [t_begin, t_end]; the gap log upper(t) - log lower(t) is minimized by a
/// 1-d search over the pole t0 (closed-form constants given t0).
GradientBounds fit_envelopes(const dynamics::Trajectory& traj, std::size_t t_begin,
                             std::size_t t_end, EnvelopeFamily family);

/// delta_min(t) = eta^2 lower(t)^2 / (2 rho_t^4) and the matching upper
/// curve, against the observed cosine distance on the validity window.
struct DeltaEnvelopes {
    std::vector<std::size_t> steps;
    std::vector<double> cos_dist;
    std::vector<double> delta_min;
    std::vector<double> delta_max;
    std::size_t violations = 0;  // steps where the sandwich fails
    bool sandwich = false;
};

DeltaEnvelopes delta_envelopes(const dynamics::Trajectory& traj, const GradientBounds& bounds);

// ---------------------------------------------------------------------------
// Period / phase segmentation

enum class Phase { A, B, C, Unclassified };

struct PhaseRange {
    Phase phase = Phase::Unclassified;
    std::size_t begin = 0;  // steps, inclusive
    std::size_t end = 0;
};

struct PeriodSummary {
    std::size_t index = 0;
    std::size_t begin = 0;
    std::size_t end = 0;  // step of the terminating jump
    std::vector<PhaseRange> phases;
    JumpEvent terminating_jump;
    double min_rho_sq = 0.0;
    double max_rho_sq = 0.0;
    double min_loss = 0.0;
    bool ordered_abc = false;  // A->B->C present, with the loss cross-check
    // Steps by which the smoothed-loss rise precedes the rho^2 trough
    // (reported, not asserted).
    long loss_rise_lead = 0;
};

struct SegmentationOptions {
    double delta = 0.1;
    std::size_t debounce = 5;
    double smoothing_frac = 0.02;   // centered MA window as a fraction of period length
    double err_threshold = 0.005;   // near-zero train error, labeled objectives
    double loss_quantile = 0.10;    // label-free fallback threshold
};

struct Segmentation {
    std::vector<PeriodSummary> periods;  // complete periods only
    std::vector<JumpEvent> events;
    bool single_segment = false;  // no jumps: one unlabeled span
};

Segmentation segment_phases(const dynamics::Trajectory& traj,
                            const SegmentationOptions& options = {});

// ---------------------------------------------------------------------------

struct FrequencyRow {
    double eta_lambda = 0.0;
    double mean_period_len = 0.0;
    std::size_t n_periods = 0;
    bool included = false;
    std::string note;
};

struct FrequencyReport {
    std::vector<FrequencyRow> rows;  // sorted by eta*lambda
    bool strictly_decreasing = false;
};

/// Mean inter-jump interval per trajectory; rows with fewer than two
/// complete periods are excluded with a note.
FrequencyReport period_frequency_report(std::span<const dynamics::Trajectory> sweep,
                                        double delta, std::size_t debounce = 5);

} // namespace silab::jump
