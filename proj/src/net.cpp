#include "silab/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "silab/errors.hpp"
#include "silab/kernels.hpp"
#include "silab/rng.hpp"

namespace silab::net {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::size_t NetSpec::trainable_dim() const {
    std::size_t dim = 0, prev = input_dim;
    for (std::size_t w : hidden) {
        dim += w * prev;
        prev = w;
    }
    return dim;
}

void NetSpec::validate() const {
    if (input_dim < 1 || classes < 1 || hidden.empty())
        throw DomainError("net spec: widths must be >= 1");
    for (std::size_t w : hidden)
        if (w < 1) throw DomainError("net spec: widths must be >= 1");
    if (!(last_layer_norm > 0.0)) throw DomainError("net spec: last layer norm must be positive");
}

std::string NetSpec::hash() const {
    // FNV-1a over the spec fields; identifies a checkpoint's architecture.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    mix(input_dim);
    for (std::size_t w : hidden) mix(w);
    mix(classes);
    mix(static_cast<std::uint64_t>(act));
    mix(static_cast<std::uint64_t>(last_layer_norm * 1e6));
    mix(static_cast<std::uint64_t>(bn_eps * 1e18));
    mix(init_seed);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void DatasetSpec::validate() const {
    if (dim < 1 || classes < 1) throw DomainError("dataset spec: dim and classes must be >= 1");
    if (n_train < 2 * classes) throw DomainError("dataset spec: need n_train >= 2 * classes");
    if (!(spread > 0.0)) throw DomainError("dataset spec: spread must be positive");
}

Dataset make_dataset(const DatasetSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    Dataset ds;
    ds.dim = spec.dim;
    ds.classes = spec.classes;

    // Blob centers: random directions scaled to `separation`.
    std::vector<double> centers(spec.classes * spec.dim);
    for (std::size_t c = 0; c < spec.classes; ++c) {
        double* row = centers.data() + c * spec.dim;
        double nrm = 0.0;
        for (std::size_t i = 0; i < spec.dim; ++i) {
            row[i] = rng.normal();
            nrm += row[i] * row[i];
        }
        nrm = std::sqrt(nrm);
        for (std::size_t i = 0; i < spec.dim; ++i) row[i] *= spec.separation / nrm;
    }

    auto fill = [&](std::size_t n, std::vector<double>& xs, std::vector<std::size_t>& ys) {
        xs.resize(n * spec.dim);
        ys.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t y = i % spec.classes;  // every class present
            ys[i] = y;
            const double* c = centers.data() + y * spec.dim;
            double* row = xs.data() + i * spec.dim;
            for (std::size_t j = 0; j < spec.dim; ++j) row[j] = c[j] + spec.spread * rng.normal();
        }
    };
    fill(spec.n_train, ds.train_x, ds.train_y);
    fill(spec.n_test, ds.test_x, ds.test_y);
    return ds;
}

// ---------------------------------------------------------------------------

struct SiNetObjective::Forward {
    std::size_t batch = 0;
    std::vector<std::vector<double>> xhat;  // normalized pre-activations per layer [B, w]
    std::vector<std::vector<double>> act;   // activations per layer [B, w]
    std::vector<std::vector<double>> inv_std;  // per layer [w]
    std::vector<double> logits;             // [B, classes]
    std::vector<double> probs;              // [B, classes]
};

SiNetObjective::SiNetObjective(NetSpec spec, std::shared_ptr<const Dataset> data,
                               std::size_t eval_batch)
    : spec_(std::move(spec)), data_(std::move(data)), eval_batch_(eval_batch) {
    spec_.validate();
    if (data_->dim != spec_.input_dim || data_->classes != spec_.classes)
        throw DomainError("si-net: dataset does not match the net spec");
    if (eval_batch_ < 2) throw DomainError("si-net: evaluation batch must be >= 2");

    widths_.push_back(spec_.input_dim);
    for (std::size_t w : spec_.hidden) widths_.push_back(w);
    widths_.push_back(spec_.classes);

    std::size_t off = 0;
    for (std::size_t l = 0; l + 2 < widths_.size(); ++l) {
        layer_offsets_.push_back(off);
        off += widths_[l + 1] * widths_[l];
    }

    // Frozen last layer: standard normal entries rescaled to the configured
    // Frobenius norm.
    Rng rng(spec_.init_seed ^ 0x9d2c5680aa61c1f3ULL);
    const std::size_t h_last = widths_[widths_.size() - 2];
    last_layer_.resize(spec_.classes * h_last);
    for (auto& v : last_layer_) v = rng.normal();
    const double nrm = std::sqrt(kernels::ops().nrm2_sq(last_layer_.data(), last_layer_.size()));
    kernels::ops().scale(last_layer_.data(), spec_.last_layer_norm / nrm, last_layer_.size());
}

std::vector<double> SiNetObjective::init_params(std::uint64_t seed) const {
    Rng rng(seed);
    std::vector<double> x(dim());
    for (std::size_t l = 0; l + 2 < widths_.size(); ++l) {
        const std::size_t fan_in = widths_[l];
        const double sigma = 1.0 / std::sqrt(static_cast<double>(fan_in));
        double* w = x.data() + layer_offsets_[l];
        const std::size_t count = widths_[l + 1] * fan_in;
        for (std::size_t i = 0; i < count; ++i) w[i] = sigma * rng.normal();
    }
    return x;
}

void SiNetObjective::forward(std::span<const double> x, std::span<const double> rows,
                             std::size_t n, Forward& fwd) const {
    if (n < 2) throw DomainError("si-net: batch statistics need at least 2 examples");
    const auto& k = kernels::ops();
    const std::size_t n_layers = layer_offsets_.size();
    fwd.batch = n;
    fwd.xhat.assign(n_layers, {});
    fwd.act.assign(n_layers, {});
    fwd.inv_std.assign(n_layers, {});

    const double* in = rows.data();
    std::size_t in_w = widths_[0];
    for (std::size_t l = 0; l < n_layers; ++l) {
        const std::size_t out_w = widths_[l + 1];
        const double* W = x.data() + layer_offsets_[l];

        std::vector<double> z(n * out_w);
        for (std::size_t b = 0; b < n; ++b) {
            const double* xi = in + b * in_w;
            double* zo = z.data() + b * out_w;
            for (std::size_t j = 0; j < out_w; ++j) zo[j] = k.dot(xi, W + j * in_w, in_w);
        }

        // Batch statistics: zero mean, unit variance, no affine parameters.
        std::vector<double> mean(out_w, 0.0);
        for (std::size_t b = 0; b < n; ++b) k.axpy(1.0, z.data() + b * out_w, mean.data(), out_w);
        k.scale(mean.data(), 1.0 / static_cast<double>(n), out_w);
        std::vector<double> var(out_w, 0.0);
        for (std::size_t b = 0; b < n; ++b)
            k.sq_diff_acc(var.data(), z.data() + b * out_w, mean.data(), out_w);
        k.scale(var.data(), 1.0 / static_cast<double>(n), out_w);

        auto& inv_std = fwd.inv_std[l];
        inv_std.resize(out_w);
        for (std::size_t j = 0; j < out_w; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + spec_.bn_eps);

        auto& xhat = fwd.xhat[l];
        xhat.resize(n * out_w);
        for (std::size_t b = 0; b < n; ++b)
            k.normalize(z.data() + b * out_w, mean.data(), inv_std.data(),
                        xhat.data() + b * out_w, out_w);

        auto& act = fwd.act[l];
        act.resize(n * out_w);
        if (spec_.act == NetSpec::Act::Tanh) {
            for (std::size_t i = 0; i < act.size(); ++i) act[i] = std::tanh(xhat[i]);
        } else {
            for (std::size_t i = 0; i < act.size(); ++i) act[i] = xhat[i] > 0.0 ? xhat[i] : 0.0;
        }
        in = act.data();
        in_w = out_w;
    }

    // Frozen head.
    const std::size_t kcls = spec_.classes;
    fwd.logits.assign(n * kcls, 0.0);
    for (std::size_t b = 0; b < n; ++b) {
        const double* hi = in + b * in_w;
        double* lo = fwd.logits.data() + b * kcls;
        for (std::size_t c = 0; c < kcls; ++c) lo[c] = k.dot(hi, last_layer_.data() + c * in_w, in_w);
    }
    fwd.probs.resize(n * kcls);
    for (std::size_t b = 0; b < n; ++b) {
        const double* lo = fwd.logits.data() + b * kcls;
        double* p = fwd.probs.data() + b * kcls;
        double mx = lo[0];
        for (std::size_t c = 1; c < kcls; ++c) mx = std::max(mx, lo[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < kcls; ++c) sum += p[c] = std::exp(lo[c] - mx);
        for (std::size_t c = 0; c < kcls; ++c) p[c] /= sum;
    }
}

objectives::GradientEval SiNetObjective::eval(std::span<const double> x,
                                              std::span<const std::size_t> batch) const {
    if (x.size() != dim()) throw DomainError("si-net: parameter dimension mismatch");
    const auto& k = kernels::ops();

    // Gather the batch; empty means the full training set.
    std::vector<std::size_t> full;
    if (batch.empty()) {
        full.resize(data_->n_train());
        std::iota(full.begin(), full.end(), std::size_t{0});
        batch = full;
    }
    const std::size_t n = batch.size();
    std::vector<double> rows(n * spec_.input_dim);
    std::vector<std::size_t> labels(n);
    for (std::size_t b = 0; b < n; ++b) {
        const std::size_t idx = batch[b];
        if (idx >= data_->n_train()) throw DomainError("si-net: batch index out of range");
        std::copy_n(data_->train_x.data() + idx * spec_.input_dim, spec_.input_dim,
                    rows.data() + b * spec_.input_dim);
        labels[b] = data_->train_y[idx];
    }

    Forward fwd;
    forward(x, rows, n, fwd);

    const std::size_t kcls = spec_.classes;
    double loss = 0.0;
    std::size_t wrong = 0;
    for (std::size_t b = 0; b < n; ++b) {
        const double* p = fwd.probs.data() + b * kcls;
        loss -= std::log(std::max(p[labels[b]], 1e-300));
        std::size_t arg = 0;
        for (std::size_t c = 1; c < kcls; ++c)
            if (p[c] > p[arg]) arg = c;
        wrong += arg != labels[b];
    }
    loss /= static_cast<double>(n);
    const double batch_err = static_cast<double>(wrong) / static_cast<double>(n);

    // Backward pass.
    std::vector<double> grad(dim(), 0.0);
    const std::size_t n_layers = layer_offsets_.size();
    const std::size_t h_last = widths_[widths_.size() - 2];

    // d loss / d logits
    std::vector<double> dlog(fwd.probs);
    for (std::size_t b = 0; b < n; ++b) dlog[b * kcls + labels[b]] -= 1.0;
    k.scale(dlog.data(), 1.0 / static_cast<double>(n), dlog.size());

    // Through the frozen head into the last activations.
    std::vector<double> dact(n * h_last, 0.0);
    for (std::size_t b = 0; b < n; ++b) {
        double* da = dact.data() + b * h_last;
        const double* dl = dlog.data() + b * kcls;
        for (std::size_t c = 0; c < kcls; ++c) k.axpy(dl[c], last_layer_.data() + c * h_last, da, h_last);
    }

    for (std::size_t l = n_layers; l-- > 0;) {
        const std::size_t out_w = widths_[l + 1];
        const std::size_t in_w = widths_[l];
        const auto& xhat = fwd.xhat[l];
        const auto& act = fwd.act[l];
        const auto& inv_std = fwd.inv_std[l];

        // Activation derivative.
        std::vector<double> dxhat(n * out_w);
        if (spec_.act == NetSpec::Act::Tanh) {
            for (std::size_t i = 0; i < dxhat.size(); ++i)
                dxhat[i] = dact[i] * (1.0 - act[i] * act[i]);
        } else {
            for (std::size_t i = 0; i < dxhat.size(); ++i)
                dxhat[i] = xhat[i] > 0.0 ? dact[i] : 0.0;
        }

        // Normalization backward: dz = inv_std (dxhat - mean_b(dxhat) - xhat * mean_b(dxhat*xhat)).
        std::vector<double> s1(out_w, 0.0), s2(out_w, 0.0);
        for (std::size_t b = 0; b < n; ++b) {
            k.axpy(1.0, dxhat.data() + b * out_w, s1.data(), out_w);
            k.mul_acc(s2.data(), dxhat.data() + b * out_w, xhat.data() + b * out_w, out_w);
        }
        const double invn = 1.0 / static_cast<double>(n);
        k.scale(s1.data(), invn, out_w);
        k.scale(s2.data(), invn, out_w);

        std::vector<double> dz(n * out_w);
        for (std::size_t b = 0; b < n; ++b) {
            const double* dxh = dxhat.data() + b * out_w;
            const double* xh = xhat.data() + b * out_w;
            double* o = dz.data() + b * out_w;
            for (std::size_t j = 0; j < out_w; ++j)
                o[j] = inv_std[j] * (dxh[j] - s1[j] - xh[j] * s2[j]);
        }

        // Weight gradient and input gradient.
        const double* in = l == 0 ? rows.data() : fwd.act[l - 1].data();
        double* dW = grad.data() + layer_offsets_[l];
        for (std::size_t b = 0; b < n; ++b) {
            const double* xi = in + b * in_w;
            const double* dzb = dz.data() + b * out_w;
            for (std::size_t j = 0; j < out_w; ++j) k.axpy(dzb[j], xi, dW + j * in_w, in_w);
        }
        if (l > 0) {
            const double* W = x.data() + layer_offsets_[l];
            std::vector<double> din(n * in_w, 0.0);
            for (std::size_t b = 0; b < n; ++b) {
                const double* dzb = dz.data() + b * out_w;
                double* di = din.data() + b * in_w;
                for (std::size_t j = 0; j < out_w; ++j) k.axpy(dzb[j], W + j * in_w, di, in_w);
            }
            dact = std::move(din);
        }
    }

    return objectives::finish_eval(loss, std::move(grad), x, batch_err);
}

namespace {

// Misclassification over a labeled set, evaluated in fixed-size batches so
// the normalization statistics stay well defined.
double batched_error(const SiNetObjective& obj, std::span<const double> x,
                     std::span<const double> xs, std::span<const std::size_t> ys,
                     std::size_t dim, std::size_t classes, std::size_t batch) {
    const std::size_t n = ys.size();
    std::size_t wrong = 0, counted = 0;
    for (std::size_t start = 0; start + 2 <= n; start += batch) {
        const std::size_t m = std::min(batch, n - start);
        if (m < 2) break;
        const auto lo = obj.logits(x, xs.subspan(start * dim, m * dim), m);
        for (std::size_t b = 0; b < m; ++b) {
            const double* row = lo.data() + b * classes;
            std::size_t arg = 0;
            for (std::size_t c = 1; c < classes; ++c)
                if (row[c] > row[arg]) arg = c;
            wrong += arg != ys[start + b];
            ++counted;
        }
    }
    return counted > 0 ? static_cast<double>(wrong) / static_cast<double>(counted) : kNaN;
}

} // namespace

double SiNetObjective::train_error(std::span<const double> x) const {
    return batched_error(*this, x, data_->train_x, data_->train_y, spec_.input_dim,
                         spec_.classes, eval_batch_);
}

double SiNetObjective::test_error(std::span<const double> x) const {
    return batched_error(*this, x, data_->test_x, data_->test_y, spec_.input_dim, spec_.classes,
                         eval_batch_);
}

std::vector<double> SiNetObjective::test_probs(std::span<const double> x) const {
    const std::size_t n = data_->n_test();
    std::vector<double> probs(n * spec_.classes, kNaN);
    for (std::size_t start = 0; start + 2 <= n; start += eval_batch_) {
        const std::size_t m = std::min(eval_batch_, n - start);
        if (m < 2) break;
        Forward fwd;
        forward(x, std::span<const double>(data_->test_x).subspan(start * spec_.input_dim,
                                                                  m * spec_.input_dim),
                m, fwd);
        std::copy(fwd.probs.begin(), fwd.probs.end(), probs.begin() + start * spec_.classes);
    }
    return probs;
}

std::vector<double> SiNetObjective::logits(std::span<const double> x, std::span<const double> rows,
                                           std::size_t n_rows) const {
    Forward fwd;
    forward(x, rows, n_rows, fwd);
    return std::move(fwd.logits);
}

std::shared_ptr<const SiNetObjective> build(const NetSpec& spec,
                                            std::shared_ptr<const Dataset> data,
                                            const std::string& registry_id) {
    auto obj = std::make_shared<const SiNetObjective>(spec, std::move(data));
    if (!registry_id.empty())
        objectives::register_objective("si-net:" + registry_id, [obj] { return obj; });
    return obj;
}

TrainResult train(const SiNetObjective& objective, const dynamics::OptimizerConfig& config,
                  std::span<const double> x0, std::span<const std::size_t> checkpoint_steps,
                  std::size_t metrics_every_epochs) {
    const std::size_t batch = config.batch > 0 ? config.batch : objective.train_size();
    const std::size_t steps_per_epoch = std::max<std::size_t>(1, objective.train_size() / batch);

    TrainResult result;
    dynamics::RunOptions opts;
    opts.checkpoint_steps.assign(checkpoint_steps.begin(), checkpoint_steps.end());
    opts.objective_id = "si-net";
    opts.observe_every = steps_per_epoch * std::max<std::size_t>(1, metrics_every_epochs);
    opts.observer = [&](std::size_t step, std::span<const double> x) {
        EpochMetrics m;
        m.step = step;
        m.epoch = step / steps_per_epoch;
        m.train_error = objective.train_error(x);
        m.test_error = objective.test_error(x);
        result.epochs.push_back(m);
    };
    result.trajectory = dynamics::run(objective, config, x0, opts);
    return result;
}

NetSpec desk_net_spec() {
    NetSpec spec;
    spec.input_dim = 16;
    spec.hidden = {32, 32};
    spec.classes = 4;
    spec.act = NetSpec::Act::Tanh;
    spec.last_layer_norm = 10.0;
    spec.init_seed = 1;
    return spec;
}

DatasetSpec desk_dataset_spec() {
    DatasetSpec spec;
    spec.dim = 16;
    spec.classes = 4;
    spec.n_train = 512;
    spec.n_test = 512;
    spec.spread = 1.0;
    spec.separation = 4.0;
    spec.seed = 7;
    return spec;
}

dynamics::OptimizerConfig desk_optimizer() {
    dynamics::OptimizerConfig opt;
    opt.family = dynamics::Family::Sgd;
    opt.eta = 1.0;
    opt.lambda = 5e-3;
    opt.batch = 64;
    opt.steps = 60000;
    opt.seed = 3;
    return opt;
}

std::shared_ptr<const SiNetObjective> desk_objective() {
    static auto obj = std::make_shared<const SiNetObjective>(
        desk_net_spec(), std::make_shared<const Dataset>(make_dataset(desk_dataset_spec())));
    return obj;
}

NetSpec tiny_net_spec() {
    NetSpec spec;
    spec.input_dim = 6;
    spec.hidden = {8, 8};
    spec.classes = 3;
    spec.act = NetSpec::Act::Tanh;
    spec.last_layer_norm = 10.0;
    spec.init_seed = 2;
    return spec;
}

DatasetSpec tiny_dataset_spec() {
    DatasetSpec spec;
    spec.dim = 6;
    spec.classes = 3;
    spec.n_train = 96;
    spec.n_test = 96;
    spec.spread = 1.0;
    spec.separation = 4.0;
    spec.seed = 11;
    return spec;
}

std::shared_ptr<const SiNetObjective> tiny_objective() {
    static auto obj = std::make_shared<const SiNetObjective>(
        tiny_net_spec(), std::make_shared<const Dataset>(make_dataset(tiny_dataset_spec())), 32);
    return obj;
}

void ensure_builtin_objectives() {
    static const bool once = [] {
        objectives::register_objective("si-net:desk",
                                       [] { return std::shared_ptr<const objectives::Objective>(
                                                desk_objective()); });
        objectives::register_objective("si-net:tiny",
                                       [] { return std::shared_ptr<const objectives::Objective>(
                                                tiny_objective()); });
        return true;
    }();
    (void)once;
}

std::vector<SimilarityRow> checkpoint_similarity(const SiNetObjective& objective,
                                                 const dynamics::Checkpoint& anchor,
                                                 std::span<const dynamics::Checkpoint> others) {
    const auto& k = kernels::ops();
    if (anchor.x.size() != objective.dim())
        throw DomainError("checkpoint_similarity: anchor dimension mismatch");

    const auto anchor_probs = objective.test_probs(anchor.x);
    const double anchor_norm = std::sqrt(k.nrm2_sq(anchor.x.data(), anchor.x.size()));
    const auto& ys = objective.data().test_y;
    const std::size_t classes = objective.spec().classes;

    // The anchor's own error from its probabilities (matches eval batching).
    auto probs_error = [&](const std::vector<double>& probs) {
        std::size_t wrong = 0, counted = 0;
        for (std::size_t i = 0; i < ys.size(); ++i) {
            const double* row = probs.data() + i * classes;
            if (std::isnan(row[0])) continue;
            std::size_t arg = 0;
            for (std::size_t c = 1; c < classes; ++c)
                if (row[c] > row[arg]) arg = c;
            wrong += arg != ys[i];
            ++counted;
        }
        return static_cast<double>(wrong) / static_cast<double>(counted);
    };
    const double single_err = probs_error(anchor_probs);

    std::vector<SimilarityRow> rows;
    rows.reserve(others.size());
    for (const auto& ck : others) {
        if (ck.x.size() != anchor.x.size())
            throw DomainError("checkpoint_similarity: checkpoint dimension mismatch");
        SimilarityRow row;
        row.step = ck.step;
        const double nrm = std::sqrt(k.nrm2_sq(ck.x.data(), ck.x.size()));
        row.cosine_sim = k.dot(anchor.x.data(), ck.x.data(), ck.x.size()) / (anchor_norm * nrm);
        auto probs = objective.test_probs(ck.x);
        for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = 0.5 * (probs[i] + anchor_probs[i]);
        row.ensemble_err = probs_error(probs);
        row.single_err = single_err;
        rows.push_back(row);
    }
    return rows;
}

} // namespace silab::net
