#include "silab/jump.hpp"

#include <algorithm>
#include <cmath>

#include "silab/errors.hpp"

namespace silab::jump {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double envelope_value(EnvelopeFamily family, double c, double t0, double t) {
    switch (family) {
        case EnvelopeFamily::Constant: return c;
        case EnvelopeFamily::InvLinear: return c / (t - t0);
        case EnvelopeFamily::InvSquare: return c / ((t - t0) * (t - t0));
    }
    return kNaN;
}
} // namespace

double GradientBounds::lower(double t) const { return envelope_value(family, c_lower, t0, t); }
double GradientBounds::upper(double t) const { return envelope_value(family, c_upper, t0, t); }

double GradientBounds::min_lower() const {
    // Both inv families decay over the window (pole precedes it).
    if (family == EnvelopeFamily::Constant) return c_lower;
    return lower(static_cast<double>(t_end));
}

double GradientBounds::max_upper() const {
    if (family == EnvelopeFamily::Constant) return c_upper;
    return upper(static_cast<double>(t_valid));
}

GradientBounds GradientBounds::constant(double ell, double L) {
    if (!(0.0 <= ell && ell <= L)) throw DomainError("gradient bounds: need 0 <= ell <= L");
    GradientBounds b;
    b.family = EnvelopeFamily::Constant;
    b.c_lower = ell;
    b.c_upper = L;
    return b;
}

std::vector<JumpEvent> detect_jumps(const dynamics::Trajectory& traj, double delta,
                                    std::size_t debounce) {
    if (!(delta > 0.0)) throw DomainError("detect_jumps: delta must be positive");
    std::vector<JumpEvent> events;
    bool open = false;
    std::size_t last_exceed = 0;
    for (const auto& rec : traj.records) {
        if (rec.cos_dist > delta) {
            if (!open || rec.step > last_exceed + debounce) {
                events.push_back({rec.step, rec.cos_dist, delta, rec.rho * rec.rho});
                open = true;
            }
            last_exceed = rec.step;
        }
    }
    return events;
}

Thresholds jump_thresholds(double eta, double lambda, const GradientBounds& bounds,
                           double delta) {
    if (!(delta > 0.0)) throw DomainError("jump_thresholds: delta must be positive");
    if (!(eta > 0.0) || !(lambda >= 0.0) || !(eta * lambda < 0.5))
        throw DomainError("jump_thresholds: requires eta > 0 and eta*lambda < 0.5");
    Thresholds th;
    const double root = std::sqrt(2.0 * delta);
    th.possible = eta * bounds.max_upper() / root;
    th.guaranteed = eta * bounds.min_lower() / root;
    th.large_delta_warning = delta >= 0.1;
    return th;
}

ExactThresholds exact_jump_thresholds(double eta, double lambda, double ell, double L,
                                      double delta) {
    if (!(delta > 0.0 && delta < 1.0))
        throw DomainError("exact_jump_thresholds: delta must lie in (0, 1)");
    if (!(0.0 <= ell && ell <= L)) throw DomainError("exact_jump_thresholds: need 0 <= ell <= L");
    const double decay = 1.0 - eta * lambda;
    const double s = 1.0 / ((1.0 - delta) * (1.0 - delta)) - 1.0;  // exact jump level for q
    ExactThresholds th;
    th.no_jump_above = eta * L / (decay * std::sqrt(2.0 * delta));
    th.jump_below = eta * ell / (decay * std::sqrt(s));
    return th;
}

JumpTimeBounds jump_time_bounds(double rho0_sq, double eta, double lambda, double ell,
                                double L, double delta) {
    if (!(delta > 0.0)) throw DomainError("jump_time_bounds: delta must be positive");
    if (!(0.0 <= ell && ell <= L && L > 0.0))
        throw DomainError("jump_time_bounds: need 0 <= ell <= L, L > 0");
    if (!(lambda > 0.0)) throw DomainError("jump_time_bounds: requires lambda > 0");

    const double kappa = std::sqrt(eta / (2.0 * lambda));
    const double el = eta * lambda;
    const double root = std::sqrt(2.0 * delta);
    JumpTimeBounds out;

    // Minimal time: lower envelope with rate (1 - 4 eta lambda) must reach
    // the possible-threshold eta L / sqrt(2 delta).
    const bool min_delta_ok = ell > 0.0 ? delta < el * (L / ell) * (L / ell) : true;
    if (rho0_sq > kappa * ell && min_delta_ok && 1.0 - 4.0 * el > 0.0) {
        out.t_min_applicable = true;
        const double target = eta * L / root;
        if (rho0_sq <= target) {
            out.t_min = 0.0;
        } else {
            out.t_min = std::max(0.0, (std::log(rho0_sq - kappa * ell) -
                                       std::log(target - kappa * ell)) /
                                          (-std::log(1.0 - 4.0 * el)));
        }
    }

    // Maximal time: upper envelope with rate (1 - 2 eta lambda) must reach
    // the guaranteed-threshold eta ell / sqrt(2 delta).
    const bool max_delta_ok = L > 0.0 && delta < el * (ell / L) * (ell / L);
    if (rho0_sq > kappa * L && max_delta_ok) {
        out.t_max_applicable = true;
        const double target = eta * ell / root;
        if (rho0_sq <= target) {
            out.t_max = 0.0;
        } else {
            out.t_max = std::max(0.0, (std::log(rho0_sq - kappa * L) -
                                       std::log(target - kappa * L)) /
                                          (-std::log(1.0 - 2.0 * el)));
        }
    }
    return out;
}

EquilibriumBand equilibrium_band(double eta, double lambda, double ell, double L) {
    if (!(lambda > 0.0))
        throw DomainError("equilibrium_band: undefined for lambda = 0 (kappa diverges)");
    if (!(eta > 0.0)) throw DomainError("equilibrium_band: eta must be positive");
    if (!(0.0 <= ell && ell <= L)) throw DomainError("equilibrium_band: need 0 <= ell <= L");

    EquilibriumBand band;
    band.kappa = std::sqrt(eta / (2.0 * lambda));
    band.lo = band.kappa * ell;
    band.hi = band.kappa * L;
    const double root = std::sqrt(2.0 * eta * lambda);
    band.elr_lo = L > 0.0 ? root / L : kNaN;
    band.elr_hi = ell > 0.0 ? root / ell : std::numeric_limits<double>::infinity();
    band.condition_ok = 2.0 * eta * lambda * L <= ell;
    const double decay = 1.0 - eta * lambda;
    band.relaxed_upper = band.lo > 0.0
                             ? decay * decay * band.lo + eta * eta * L * L / band.lo
                             : std::numeric_limits<double>::infinity();
    return band;
}

// ---------------------------------------------------------------------------

namespace {

struct WindowData {
    std::vector<double> t;  // steps as doubles
    std::vector<double> g;  // effective gradient norms
};

WindowData collect_window(const dynamics::Trajectory& traj, std::size_t t_begin,
                          std::size_t t_end) {
    WindowData w;
    for (const auto& rec : traj.records) {
        if (rec.step < t_begin || rec.step > t_end) continue;
        w.t.push_back(static_cast<double>(rec.step));
        w.g.push_back(rec.eff_grad_norm);
    }
    return w;
}

// Closed-form constants for a given pole; returns the log gap.
double envelope_gap(const WindowData& w, EnvelopeFamily family, double t0, double& c_lo,
                    double& c_hi) {
    const double p = family == EnvelopeFamily::InvSquare ? 2.0 : 1.0;
    c_lo = std::numeric_limits<double>::infinity();
    c_hi = 0.0;
    for (std::size_t i = 0; i < w.t.size(); ++i) {
        const double weight = std::pow(w.t[i] - t0, p);
        const double prod = w.g[i] * weight;
        c_lo = std::min(c_lo, prod);
        c_hi = std::max(c_hi, prod);
    }
    if (!(c_hi > 0.0)) return std::numeric_limits<double>::infinity();
    if (!(c_lo > 0.0)) return std::numeric_limits<double>::infinity();
    return std::log(c_hi / c_lo);
}

} // namespace

GradientBounds fit_envelopes(const dynamics::Trajectory& traj, std::size_t t_begin,
                             std::size_t t_end, EnvelopeFamily family) {
    const auto w = collect_window(traj, t_begin, t_end);
    if (w.t.empty()) throw DomainError("fit_envelopes: empty window");

    GradientBounds bounds;
    bounds.family = family;
    bounds.t_valid = t_begin;
    bounds.t_end = t_end;

    if (family == EnvelopeFamily::Constant) {
        bounds.c_lower = *std::min_element(w.g.begin(), w.g.end());
        bounds.c_upper = *std::max_element(w.g.begin(), w.g.end());
        return bounds;
    }

    for (double g : w.g)
        if (!(g > 0.0))
            throw DomainError("fit_envelopes: inverse families need positive gradients");

    // 1-d search over the pole; constants are closed-form given t0.
    const double span = std::max(1.0, static_cast<double>(t_end - t_begin));
    double lo = static_cast<double>(t_begin) - 16.0 * span;
    double hi = static_cast<double>(t_begin) - 1e-3;
    double best_t0 = lo, best_gap = std::numeric_limits<double>::infinity();
    for (int round = 0; round < 6; ++round) {
        const int grid = 64;
        for (int i = 0; i <= grid; ++i) {
            const double t0 = lo + (hi - lo) * i / grid;
            double c_lo, c_hi;
            const double gap = envelope_gap(w, family, t0, c_lo, c_hi);
            if (gap < best_gap) {
                best_gap = gap;
                best_t0 = t0;
            }
        }
        const double width = (hi - lo) / grid;
        lo = std::max(lo, best_t0 - 2.0 * width);
        hi = std::min(hi, best_t0 + 2.0 * width);
    }
    if (!std::isfinite(best_gap)) throw DomainError("fit_envelopes: no valid envelope in family");
    bounds.t0 = best_t0;
    envelope_gap(w, family, best_t0, bounds.c_lower, bounds.c_upper);
    return bounds;
}

DeltaEnvelopes delta_envelopes(const dynamics::Trajectory& traj, const GradientBounds& bounds) {
    DeltaEnvelopes out;
    const double eta = traj.config.eta;
    for (const auto& rec : traj.records) {
        if (rec.step < bounds.t_valid || rec.step > bounds.t_end) continue;
        const double t = static_cast<double>(rec.step);
        const double rho4 = rec.rho * rec.rho * rec.rho * rec.rho;
        const double dmin = eta * eta * bounds.lower(t) * bounds.lower(t) / (2.0 * rho4);
        const double dmax = eta * eta * bounds.upper(t) * bounds.upper(t) / (2.0 * rho4);
        out.steps.push_back(rec.step);
        out.cos_dist.push_back(rec.cos_dist);
        out.delta_min.push_back(dmin);
        out.delta_max.push_back(dmax);
        if (!(dmin <= rec.cos_dist && rec.cos_dist <= dmax)) ++out.violations;
    }
    out.sandwich = !out.steps.empty() && out.violations == 0;
    return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> moving_average(std::span<const double> v, std::size_t half) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(v.size() - 1, i + half);
        double acc = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) acc += v[j];
        out[i] = acc / static_cast<double>(hi - lo + 1);
    }
    return out;
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return kNaN;
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return i + 1 < v.size() ? v[i] * (1.0 - frac) + v[i + 1] * frac : v[i];
}

} // namespace

Segmentation segment_phases(const dynamics::Trajectory& traj, const SegmentationOptions& opt) {
    Segmentation seg;
    seg.events = detect_jumps(traj, opt.delta, opt.debounce);
    if (seg.events.size() < 2) {
        seg.single_segment = true;
        return seg;
    }

    // Map event steps to record indices.
    std::vector<std::size_t> event_idx;
    {
        std::size_t cursor = 0;
        for (const auto& ev : seg.events) {
            while (cursor < traj.records.size() && traj.records[cursor].step < ev.step) ++cursor;
            event_idx.push_back(cursor);
        }
    }

    const bool labeled = !traj.records.empty() && !std::isnan(traj.records.front().train_error);

    for (std::size_t p = 0; p + 1 < seg.events.size(); ++p) {
        const std::size_t begin_idx = event_idx[p] + 1;
        const std::size_t end_idx = event_idx[p + 1];
        if (begin_idx >= end_idx) continue;  // events collapsed onto adjacent records

        PeriodSummary period;
        period.index = seg.periods.size();
        period.begin = traj.records[begin_idx].step;
        period.end = traj.records[end_idx].step;
        period.terminating_jump = seg.events[p + 1];

        const std::size_t n = end_idx - begin_idx + 1;
        std::vector<double> rho_sq(n), loss(n), err(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& rec = traj.records[begin_idx + i];
            rho_sq[i] = rec.rho * rec.rho;
            loss[i] = rec.loss;
            err[i] = rec.train_error;
        }
        period.min_rho_sq = *std::min_element(rho_sq.begin(), rho_sq.end());
        period.max_rho_sq = *std::max_element(rho_sq.begin(), rho_sq.end());
        period.min_loss = *std::min_element(loss.begin(), loss.end());

        const std::size_t half =
            std::max<std::size_t>(1, static_cast<std::size_t>(opt.smoothing_frac * n / 2.0));
        const auto srho = moving_average(rho_sq, half);
        const auto sloss = moving_average(loss, half);

        // A ends at the smoothed rho^2 peak; C starts after the last smoothed
        // loss minimum of the descent.
        const std::size_t peak =
            std::max_element(srho.begin(), srho.end()) - srho.begin();
        std::size_t lmin = peak;
        if (peak + 1 < n) {
            lmin = peak + 1;
            for (std::size_t i = peak + 1; i < n; ++i)
                if (sloss[i] <= sloss[lmin]) lmin = i;
        }

        const bool geometry_ok = peak > 0 && peak + 1 < lmin && lmin + 1 <= n - 1;
        double low_mark;
        bool threshold_ok;
        if (labeled) {
            low_mark = opt.err_threshold;
            const auto serr = moving_average(err, half);
            threshold_ok = geometry_ok && serr[lmin] <= low_mark && serr[0] > low_mark;
        } else {
            low_mark = quantile(std::vector<double>(sloss.begin(), sloss.end()),
                                opt.loss_quantile);
            threshold_ok = geometry_ok && sloss[lmin] <= low_mark && sloss[0] > low_mark;
        }

        if (geometry_ok) {
            period.phases.push_back(
                {Phase::A, period.begin, traj.records[begin_idx + peak].step});
            period.phases.push_back({Phase::B, traj.records[begin_idx + peak + 1].step,
                                     traj.records[begin_idx + lmin].step});
            period.phases.push_back(
                {Phase::C, traj.records[begin_idx + lmin + 1].step, period.end});
            period.ordered_abc = threshold_ok;
            // Trough of smoothed rho^2 in the tail vs. the loss-rise onset.
            std::size_t trough = lmin;
            for (std::size_t i = lmin; i < n; ++i)
                if (srho[i] <= srho[trough]) trough = i;
            period.loss_rise_lead = static_cast<long>(trough) - static_cast<long>(lmin);
        } else {
            period.phases.push_back({Phase::Unclassified, period.begin, period.end});
            period.ordered_abc = false;
        }
        seg.periods.push_back(std::move(period));
    }
    return seg;
}

FrequencyReport period_frequency_report(std::span<const dynamics::Trajectory> sweep,
                                        double delta, std::size_t debounce) {
    if (sweep.size() < 3)
        throw DomainError("period_frequency_report: need at least 3 grid points");
    FrequencyReport rep;
    for (const auto& traj : sweep) {
        FrequencyRow row;
        row.eta_lambda = traj.config.eta * traj.config.lambda;
        const auto events = detect_jumps(traj, delta, debounce);
        row.n_periods = events.size() >= 2 ? events.size() - 1 : 0;
        if (row.n_periods >= 2) {
            double total = 0.0;
            for (std::size_t i = 0; i + 1 < events.size(); ++i)
                total += static_cast<double>(events[i + 1].step - events[i].step);
            row.mean_period_len = total / static_cast<double>(row.n_periods);
            row.included = true;
        } else {
            row.note = "fewer than 2 complete periods; excluded";
        }
        rep.rows.push_back(row);
    }
    std::sort(rep.rows.begin(), rep.rows.end(),
              [](const FrequencyRow& a, const FrequencyRow& b) {
                  return a.eta_lambda < b.eta_lambda;
              });
    rep.strictly_decreasing = true;
    const FrequencyRow* prev = nullptr;
    for (const auto& row : rep.rows) {
        if (!row.included) continue;
        if (prev && !(row.mean_period_len < prev->mean_period_len))
            rep.strictly_decreasing = false;
        prev = &row;
    }
    return rep;
}

} // namespace silab::jump
