#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace silab::objectives {

/// Value and gradient at a point, with the derived norm metrics:
/// rho = |x|, grad_norm = |grad|, eff_grad_norm = rho * grad_norm.
struct GradientEval {
    double value = 0.0;
    std::vector<double> gradient;
    double rho = 0.0;
    double grad_norm = 0.0;
    double eff_grad_norm = 0.0;
    double train_error = std::numeric_limits<double>::quiet_NaN();
};

// Populates the derived fields from x and the gradient.
GradientEval finish_eval(double value, std::vector<double> gradient, std::span<const double> x,
                         double train_error = std::numeric_limits<double>::quiet_NaN());

/// A differentiable objective. Implementations are immutable after
/// construction and safe to evaluate concurrently; stochastic objectives
/// take the minibatch as an explicit argument instead of holding RNG state.
class Objective {
public:
    virtual ~Objective() = default;

    virtual std::size_t dim() const = 0;

    /// Evaluate at x. `batch` holds train-set indices for stochastic
    /// objectives; an empty batch means full-batch evaluation.
    virtual GradientEval eval(std::span<const double> x,
                              std::span<const std::size_t> batch = {}) const = 0;

    /// Number of training examples; 0 for deterministic analytic objectives.
    virtual std::size_t train_size() const { return 0; }

    virtual bool has_labels() const { return false; }

    /// Misclassification rates; NaN when the objective has no labels.
    virtual double train_error(std::span<const double> /*x*/) const {
        return std::numeric_limits<double>::quiet_NaN();
    }
    virtual double test_error(std::span<const double> /*x*/) const {
        return std::numeric_limits<double>::quiet_NaN();
    }
};

/// f(x, y) = x^2 / (x^2 + y^2). Scale-invariant with an exact closed-form
/// gradient; the origin is a hard domain error.
class ToyRational final : public Objective {
public:
    std::size_t dim() const override { return 2; }
    GradientEval eval(std::span<const double> x,
                      std::span<const std::size_t> batch = {}) const override;
};

/// f(x) = 0.5 |x|^2 — deliberately NOT scale-invariant. Negative control
/// for the certification checks.
class Quadratic final : public Objective {
public:
    explicit Quadratic(std::size_t n = 2) : n_(n) {}
    std::size_t dim() const override { return n_; }
    GradientEval eval(std::span<const double> x,
                      std::span<const std::size_t> batch = {}) const override;

private:
    std::size_t n_;
};

// ---------------------------------------------------------------------------
// Scale-invariance certification

struct OrthogonalityReport {
    double max_abs_cos = 0.0;
    double tol = 0.0;
    std::size_t samples = 0;
    bool pass = false;
};

struct HomogeneityReport {
    double max_value_dev = 0.0;     // |f(ax) - f(x)| / (1 + |f(x)|)
    double max_grad_dev = 0.0;      // |a grad f(ax) - grad f(x)| / |grad f(x)|
    double max_effnorm_dev = 0.0;   // relative deviation of the effective gradient norm
    double tol = 0.0;
    bool pass = false;
};

/// Max |cos(grad f(x), x)| over `samples` standard-normal points
/// (norms below 1e-3 are rejected to stay clear of the origin).
OrthogonalityReport certify_orthogonality(const Objective& obj, std::size_t samples,
                                          std::uint64_t seed, double tol);

/// Checks f(ax) = f(x) and grad f(ax) = grad f(x) / a for every scale/sample pair.
HomogeneityReport certify_inverse_homogeneity(const Objective& obj,
                                              std::span<const double> scales,
                                              std::size_t samples, std::uint64_t seed,
                                              double tol);

// Certification tolerances: exact closed forms vs. finite-precision nets.
inline constexpr double kClosedFormTol = 1e-12;
inline constexpr double kNetTol = 1e-6;

/// Max relative deviation between the analytic gradient and central finite
/// differences with step h, over `n_coords` randomly chosen coordinates
/// (0 = all). The batch is held fixed across the probes.
double max_rel_fd_error(const Objective& obj, std::span<const double> x,
                        std::span<const std::size_t> batch, std::size_t n_coords,
                        std::uint64_t seed, double h);

// ---------------------------------------------------------------------------
// Registry

using ObjectiveFactory = std::function<std::shared_ptr<const Objective>()>;

void register_objective(const std::string& id, ObjectiveFactory factory);

/// Resolves "toy-rational", "quadratic", or "si-net:<spec-id>".
/// Throws ConfigError for unknown ids.
std::shared_ptr<const Objective> make_objective(const std::string& id);

std::vector<std::string> registered_objectives();

} // namespace silab::objectives
