#pragma once

#include <span>
#include <string>
#include <vector>

namespace silab::verify {

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;  // witness values on failure, headline numbers on success
};

struct SuiteResult {
    std::string name;
    std::vector<Check> checks;
    double runtime_s = 0.0;

    bool pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

/// Suites: closed-forms, jump-theory, beta-seq, rescaling, periodicity.
std::vector<std::string> suite_names();

SuiteResult run_suite(const std::string& name);  // ConfigError for unknown names

std::string report_text(std::span<const SuiteResult> results);
std::string report_json(std::span<const SuiteResult> results);

// ---------------------------------------------------------------------------
// Monte-Carlo batteries, shared with the acceptance suite.

struct McResult {
    std::size_t trials = 0;
    std::size_t failures = 0;
    std::string witness;
    bool pass() const { return trials > 0 && failures == 0; }
};

/// Synthetic dynamics with controlled effective gradients: no jump ever
/// occurs at rho^2 above the exact necessary threshold, and every step below
/// the exact sufficient threshold is a jump.
McResult threshold_soundness_mc(std::size_t trials, std::uint64_t seed);

/// Configs satisfying both jump-time preconditions: the first observed jump
/// step lies in [t_min, t_max].
McResult bracketing_mc(std::size_t trials, std::uint64_t seed);

/// Determined-sequence sandwich (lower/upper geometric rates).
McResult lemma_a1_mc(std::size_t trials, std::uint64_t seed);

/// Undetermined-sequence bounding runs, uniform and adversarial samplers.
McResult lemma_a2_mc(std::size_t trials, std::uint64_t seed);

/// Band absorption plus the linear entry envelopes.
McResult prop_a5_mc(std::size_t trials, std::uint64_t seed);

/// First crossing of the decaying envelope kl + (1-4el)^t (rho0^2 - kl)
/// below the possible-threshold; the discrete oracle for t_min.
std::size_t t_min_crossing_oracle(double rho0_sq, double eta, double lambda, double ell,
                                  double L, double delta);

struct BandRun {
    bool entered = false;
    std::size_t entry_time = 0;
    std::size_t exits_after_entry = 0;
};

/// Norm dynamics against the [kappa ell, kappa L] band with uniform
/// controlled gradients; checks `steps_after_entry` steps past first entry.
BandRun band_absorption_run(double eta, double lambda, double ell, double L, double rho0_sq,
                            std::size_t steps_after_entry, std::uint64_t seed);

} // namespace silab::verify
