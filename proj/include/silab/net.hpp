#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "silab/dynamics.hpp"
#include "silab/objectives.hpp"

namespace silab::net {

/// A fully scale-invariant MLP: every trainable linear map feeds a
/// batch-statistics normalization (zero mean, unit variance, no affine
/// parameters), the last linear map is frozen at a rescaled random draw
/// and excluded from the trainable vector. No bias terms anywhere.
struct NetSpec {
    std::size_t input_dim = 16;
    std::vector<std::size_t> hidden = {32, 32};
    std::size_t classes = 4;
    enum class Act { Tanh, Relu } act = Act::Tanh;
    double last_layer_norm = 10.0;  // Frobenius norm of the frozen last layer
    double bn_eps = 1e-12;
    std::uint64_t init_seed = 1;

    std::size_t trainable_dim() const;
    std::string hash() const;  // hex digest of the spec fields
    void validate() const;
};

struct DatasetSpec {
    std::size_t dim = 16;
    std::size_t classes = 4;
    std::size_t n_train = 512;
    std::size_t n_test = 512;
    double spread = 1.0;      // blob standard deviation
    double separation = 4.0;  // scale of the blob centers
    std::uint64_t seed = 7;

    void validate() const;
};

/// Gaussian blobs, deterministic in (spec, seed). Labels are assigned
/// round-robin so every class is present.
struct Dataset {
    std::size_t dim = 0;
    std::size_t classes = 0;
    std::vector<double> train_x;  // [n_train, dim] row-major
    std::vector<std::size_t> train_y;
    std::vector<double> test_x;
    std::vector<std::size_t> test_y;

    std::size_t n_train() const { return train_y.size(); }
    std::size_t n_test() const { return test_y.size(); }
};

Dataset make_dataset(const DatasetSpec& spec);

class SiNetObjective final : public objectives::Objective {
public:
    SiNetObjective(NetSpec spec, std::shared_ptr<const Dataset> data,
                   std::size_t eval_batch = 64);

    std::size_t dim() const override { return spec_.trainable_dim(); }
    objectives::GradientEval eval(std::span<const double> x,
                                  std::span<const std::size_t> batch = {}) const override;
    std::size_t train_size() const override { return data_->n_train(); }
    bool has_labels() const override { return true; }
    double train_error(std::span<const double> x) const override;
    double test_error(std::span<const double> x) const override;

    /// Per-example class probabilities over the test set, eval-batched:
    /// [n_test, classes] row-major.
    std::vector<double> test_probs(std::span<const double> x) const;

    /// Logits for arbitrary rows (treated as one normalization batch).
    std::vector<double> logits(std::span<const double> x, std::span<const double> rows,
                               std::size_t n_rows) const;

    std::vector<double> init_params(std::uint64_t seed) const;

    const NetSpec& spec() const { return spec_; }
    const Dataset& data() const { return *data_; }
    std::span<const double> frozen_last_layer() const { return last_layer_; }

private:
    struct Forward;  // per-call workspace
    void forward(std::span<const double> x, std::span<const double> rows, std::size_t n,
                 Forward& fwd) const;

    NetSpec spec_;
    std::shared_ptr<const Dataset> data_;
    std::size_t eval_batch_;
    std::vector<double> last_layer_;            // frozen [classes, h_last]
    std::vector<std::size_t> layer_offsets_;    // offsets of each W_l in the flat vector
    std::vector<std::size_t> widths_;           // input_dim, hidden..., classes
};

/// Builds the objective for the given spec/data and registers it under
/// "si-net:<id>" in the objective registry.
std::shared_ptr<const SiNetObjective> build(const NetSpec& spec,
                                            std::shared_ptr<const Dataset> data,
                                            const std::string& registry_id = {});

struct EpochMetrics {
    std::size_t epoch = 0;
    std::size_t step = 0;
    double train_error = 0.0;
    double test_error = 0.0;
};

struct TrainResult {
    dynamics::Trajectory trajectory;
    std::vector<EpochMetrics> epochs;
};

/// dynamics::run plus per-epoch train/test error and checkpoint capture.
TrainResult train(const SiNetObjective& objective, const dynamics::OptimizerConfig& config,
                  std::span<const double> x0, std::span<const std::size_t> checkpoint_steps = {},
                  std::size_t metrics_every_epochs = 1);

struct SimilarityRow {
    std::size_t step = 0;
    double cosine_sim = 0.0;
    double ensemble_err = 0.0;
    double single_err = 0.0;  // the anchor's own test error
};

/// Weight-space cosine and two-model ensemble test error (averaged
/// per-example probabilities) of each checkpoint against the anchor.
std::vector<SimilarityRow> checkpoint_similarity(const SiNetObjective& objective,
                                                 const dynamics::Checkpoint& anchor,
                                                 std::span<const dynamics::Checkpoint> others);

// ---------------------------------------------------------------------------
// Pinned setups, registered as "si-net:desk" and "si-net:tiny".

NetSpec desk_net_spec();
DatasetSpec desk_dataset_spec();
/// Optimizer setting under which the desk net shows consistent periods.
dynamics::OptimizerConfig desk_optimizer();
std::shared_ptr<const SiNetObjective> desk_objective();

NetSpec tiny_net_spec();
DatasetSpec tiny_dataset_spec();
std::shared_ptr<const SiNetObjective> tiny_objective();

void ensure_builtin_objectives();

} // namespace silab::net
