#include "silab/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "silab/errors.hpp"
#include "silab/kernels.hpp"
#include "silab/rng.hpp"

namespace silab::objectives {

GradientEval finish_eval(double value, std::vector<double> gradient, std::span<const double> x,
                         double train_error) {
    GradientEval ev;
    ev.value = value;
    ev.gradient = std::move(gradient);
    ev.rho = std::sqrt(kernels::ops().nrm2_sq(x.data(), x.size()));
    ev.grad_norm = std::sqrt(kernels::ops().nrm2_sq(ev.gradient.data(), ev.gradient.size()));
    ev.eff_grad_norm = ev.rho * ev.grad_norm;
    ev.train_error = train_error;
    return ev;
}

GradientEval ToyRational::eval(std::span<const double> p, std::span<const std::size_t>) const {
    if (p.size() != 2) throw DomainError("toy-rational expects a 2-d point");
    const double x = p[0], y = p[1];
    const double r2 = x * x + y * y;
    if (r2 == 0.0) throw DomainError("toy-rational is singular at the origin");
    const double r4 = r2 * r2;
    const double value = x * x / r2;
    std::vector<double> grad = {2.0 * x * y * y / r4, -2.0 * x * x * y / r4};
    return finish_eval(value, std::move(grad), p);
}

GradientEval Quadratic::eval(std::span<const double> x, std::span<const std::size_t>) const {
    if (x.size() != n_) throw DomainError("quadratic: dimension mismatch");
    const double value = 0.5 * kernels::ops().nrm2_sq(x.data(), x.size());
    return finish_eval(value, std::vector<double>(x.begin(), x.end()), x);
}

namespace {

// Normal coordinates, rejecting near-origin draws.
std::vector<double> sample_point(Rng& rng, std::size_t dim) {
    std::vector<double> x(dim);
    for (;;) {
        for (auto& v : x) v = rng.normal();
        if (std::sqrt(kernels::ops().nrm2_sq(x.data(), x.size())) >= 1e-3) return x;
    }
}

// Fixed batch for stochastic objectives so that x and ax see the same data.
std::vector<std::size_t> sample_batch(Rng& rng, std::size_t train_size) {
    const std::size_t want = std::min<std::size_t>(64, train_size);
    std::vector<std::size_t> idx(want);
    for (auto& i : idx) i = static_cast<std::size_t>(rng.below(train_size));
    return idx;
}

} // namespace

OrthogonalityReport certify_orthogonality(const Objective& obj, std::size_t samples,
                                          std::uint64_t seed, double tol) {
    if (samples < 1) throw DomainError("certify_orthogonality: samples must be >= 1");
    Rng rng(seed);
    OrthogonalityReport rep;
    rep.tol = tol;
    rep.samples = samples;
    for (std::size_t s = 0; s < samples; ++s) {
        const auto x = sample_point(rng, obj.dim());
        std::vector<std::size_t> batch;
        if (obj.train_size() > 0) batch = sample_batch(rng, obj.train_size());
        const auto ev = obj.eval(x, batch);
        const double denom = ev.grad_norm * ev.rho;
        if (denom == 0.0) continue;  // zero gradient is trivially orthogonal
        const double c = std::abs(kernels::ops().dot(ev.gradient.data(), x.data(), x.size())) / denom;
        rep.max_abs_cos = std::max(rep.max_abs_cos, c);
    }
    rep.pass = rep.max_abs_cos < tol;
    return rep;
}

HomogeneityReport certify_inverse_homogeneity(const Objective& obj,
                                              std::span<const double> scales,
                                              std::size_t samples, std::uint64_t seed,
                                              double tol) {
    for (double a : scales)
        if (!(a > 0.0)) throw DomainError("certify_inverse_homogeneity: scales must be positive");
    Rng rng(seed);
    HomogeneityReport rep;
    rep.tol = tol;
    for (std::size_t s = 0; s < samples; ++s) {
        const auto x = sample_point(rng, obj.dim());
        std::vector<std::size_t> batch;
        if (obj.train_size() > 0) batch = sample_batch(rng, obj.train_size());
        const auto base = obj.eval(x, batch);
        for (double a : scales) {
            std::vector<double> ax(x);
            kernels::ops().scale(ax.data(), a, ax.size());
            const auto scaled = obj.eval(ax, batch);

            const double vdev = std::abs(scaled.value - base.value) / (1.0 + std::abs(base.value));
            rep.max_value_dev = std::max(rep.max_value_dev, vdev);

            // |a grad f(ax) - grad f(x)| relative to |grad f(x)|
            double diff_sq = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double d = a * scaled.gradient[i] - base.gradient[i];
                diff_sq += d * d;
            }
            if (base.grad_norm > 0.0) {
                rep.max_grad_dev = std::max(rep.max_grad_dev, std::sqrt(diff_sq) / base.grad_norm);
                const double edev =
                    std::abs(scaled.eff_grad_norm - base.eff_grad_norm) / base.eff_grad_norm;
                rep.max_effnorm_dev = std::max(rep.max_effnorm_dev, edev);
            }
        }
    }
    rep.pass = rep.max_value_dev <= tol && rep.max_grad_dev <= tol && rep.max_effnorm_dev <= tol;
    return rep;
}

double max_rel_fd_error(const Objective& obj, std::span<const double> x,
                        std::span<const std::size_t> batch, std::size_t n_coords,
                        std::uint64_t seed, double h) {
    const auto base = obj.eval(x, batch);
    std::vector<std::size_t> coords;
    if (n_coords == 0 || n_coords >= x.size()) {
        coords.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) coords[i] = i;
    } else {
        Rng rng(seed);
        for (std::size_t k = 0; k < n_coords; ++k)
            coords.push_back(static_cast<std::size_t>(rng.below(x.size())));
    }
    std::vector<double> probe(x.begin(), x.end());
    const double floor = 1e-9 * std::max(base.grad_norm, 1e-30);
    double worst = 0.0;
    for (std::size_t i : coords) {
        const double keep = probe[i];
        probe[i] = keep + h;
        const double fp = obj.eval(probe, batch).value;
        probe[i] = keep - h;
        const double fm = obj.eval(probe, batch).value;
        probe[i] = keep;
        const double fd = (fp - fm) / (2.0 * h);
        const double denom = std::max(std::abs(base.gradient[i]), floor);
        worst = std::max(worst, std::abs(fd - base.gradient[i]) / denom);
    }
    return worst;
}

// ---------------------------------------------------------------------------

namespace {

std::map<std::string, ObjectiveFactory>& registry() {
    static std::map<std::string, ObjectiveFactory> r;
    return r;
}

std::mutex& registry_mutex() {
    static std::mutex m;
    return m;
}

void ensure_builtins() {
    static std::once_flag once;
    std::call_once(once, [] {
        registry()["toy-rational"] = [] { return std::make_shared<const ToyRational>(); };
        registry()["quadratic"] = [] { return std::make_shared<const Quadratic>(2); };
    });
}

} // namespace

void register_objective(const std::string& id, ObjectiveFactory factory) {
    std::lock_guard lock(registry_mutex());
    registry()[id] = std::move(factory);
}

std::shared_ptr<const Objective> make_objective(const std::string& id) {
    ensure_builtins();
    std::lock_guard lock(registry_mutex());
    auto it = registry().find(id);
    if (it == registry().end()) throw ConfigError("unknown objective id: " + id);
    return it->second();
}

std::vector<std::string> registered_objectives() {
    ensure_builtins();
    std::lock_guard lock(registry_mutex());
    std::vector<std::string> ids;
    for (const auto& [id, _] : registry()) ids.push_back(id);
    return ids;
}

} // namespace silab::objectives
