#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "adaptivefl/matrix.hpp"

namespace adaptivefl {

/// Architecture of the dense global model: layer_dims = (input features,
/// hidden widths..., output classes). Hidden layers use the rectifier,
/// the output layer a softmax. `tau` is the smallest admissible starting
/// pruning layer index; layers 1..tau are shared by every sub-model.
struct ModelSpec {
    std::vector<int> layer_dims;
    int tau = 2;

    int num_weight_layers() const { return static_cast<int>(layer_dims.size()) - 1; }
    int input_dim() const { return layer_dims.front(); }
    int num_classes() const { return layer_dims.back(); }

    /// Throws std::invalid_argument on a malformed spec.
    void validate() const;
};

struct DenseLayer {
    Matrix weights;             // out_dim x in_dim
    std::vector<double> bias;   // out_dim

    bool operator==(const DenseLayer&) const = default;
};

/// Per-layer weight matrices and bias vectors. Holds the global model and
/// every pruned sub-model. For pruned models a layer may consume fewer
/// inputs than the previous layer produces (the leading slice).
struct ParamSet {
    std::vector<DenseLayer> layers;

    std::int64_t scalar_count() const;
    bool same_shape(const ParamSet& o) const;
    bool operator==(const ParamSet&) const = default;
};

struct Batch {
    Matrix features;            // B x n1
    std::vector<int> labels;    // values in [0, classes)

    std::size_t size() const { return labels.size(); }
};

struct TrainConfig {
    double learning_rate = 0.01;
    double momentum = 0.5;
    int batch_size = 50;        // clipped to the shard size
    int local_epochs = 5;
    std::uint64_t seed = 0;
};

/// Fresh parameters for `spec`. Weights and biases of layer k are drawn
/// uniformly in +-sqrt(6 / (n_k + d_k)), layer by layer, weights row-major
/// first and then the bias; the same seed reproduces every bit.
ParamSet init_params(const ModelSpec& spec, std::uint64_t seed);

/// Class probabilities, one row per sample. Hidden layers apply the
/// rectifier; the output row is a softmax (rows sum to 1).
Matrix forward(const ParamSet& params, const Matrix& features);

/// Mean cross-entropy over the batch and its gradient, shaped like `params`.
std::pair<double, ParamSet> loss_and_grads(const ParamSet& params, const Batch& batch);

/// Mini-batch SGD with momentum over `cfg.local_epochs` passes of the shard.
/// The shard is reshuffled each epoch from cfg.seed; the final partial batch
/// is used, not dropped. Deterministic given (params, shard, cfg).
ParamSet local_train(const ParamSet& params, const Batch& shard, const TrainConfig& cfg);

/// Fraction of argmax-correct predictions; argmax ties resolve to the
/// lowest class index.
double evaluate(const ParamSet& params, const Batch& testset);

}  // namespace adaptivefl
