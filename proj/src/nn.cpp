#include "adaptivefl/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "adaptivefl/rng.hpp"

namespace adaptivefl {

void ModelSpec::validate() const {
    if (layer_dims.size() < 3)
        throw std::invalid_argument("ModelSpec: layer_dims needs at least 3 entries");
    for (int d : layer_dims)
        if (d < 1) throw std::invalid_argument("ModelSpec: all layer dims must be >= 1");
    if (tau < 1 || tau >= num_weight_layers())
        throw std::invalid_argument("ModelSpec: tau must satisfy 1 <= tau < number of weight layers");
}

std::int64_t ParamSet::scalar_count() const {
    std::int64_t n = 0;
    for (const auto& l : layers)
        n += static_cast<std::int64_t>(l.weights.size()) + static_cast<std::int64_t>(l.bias.size());
    return n;
}

bool ParamSet::same_shape(const ParamSet& o) const {
    if (layers.size() != o.layers.size()) return false;
    for (std::size_t k = 0; k < layers.size(); ++k)
        if (!layers[k].weights.same_shape(o.layers[k].weights) ||
            layers[k].bias.size() != o.layers[k].bias.size())
            return false;
    return true;
}

ParamSet init_params(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    ParamSet p;
    p.layers.reserve(spec.num_weight_layers());
    for (int k = 1; k <= spec.num_weight_layers(); ++k) {
        const int in = spec.layer_dims[k - 1];
        const int out = spec.layer_dims[k];
        const double bound = std::sqrt(6.0 / (in + out));
        DenseLayer layer;
        layer.weights = Matrix(out, in);
        for (std::size_t i = 0; i < layer.weights.size(); ++i)
            layer.weights.data()[i] = uniform_range(rng, -bound, bound);
        layer.bias.resize(out);
        for (double& b : layer.bias) b = uniform_range(rng, -bound, bound);
        p.layers.push_back(std::move(layer));
    }
    return p;
}

namespace {

// Softmax per row, max-shifted.
void softmax_rows(Matrix& z) {
    for (std::size_t r = 0; r < z.rows(); ++r) {
        double mx = z(r, 0);
        for (std::size_t c = 1; c < z.cols(); ++c) mx = std::max(mx, z(r, c));
        double sum = 0.0;
        for (std::size_t c = 0; c < z.cols(); ++c) {
            double e = std::exp(z(r, c) - mx);
            z(r, c) = e;
            sum += e;
        }
        for (std::size_t c = 0; c < z.cols(); ++c) z(r, c) /= sum;
    }
}

// One affine layer over the leading slice of the previous activation:
// z = a[:, :n_k] * W^T + b. A pruned layer may consume fewer inputs than
// the previous layer produced; the trailing activations are simply unused.
Matrix affine(const Matrix& a, const DenseLayer& layer) {
    const std::size_t in = layer.weights.cols();
    const std::size_t out = layer.weights.rows();
    Matrix z(a.rows(), out);
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t o = 0; o < out; ++o) {
            double s = layer.bias[o];
            for (std::size_t c = 0; c < in; ++c) s += layer.weights(o, c) * a(r, c);
            z(r, o) = s;
        }
    return z;
}

// Pre-activations z_k and activations a_k for every layer.
struct ForwardTrace {
    std::vector<Matrix> zs;    // per weight layer
    std::vector<Matrix> as;    // as[0] = input, as[k] = activation after layer k
};

ForwardTrace forward_trace(const ParamSet& params, const Matrix& features) {
    if (params.layers.empty()) throw std::invalid_argument("forward: empty ParamSet");
    if (features.cols() != params.layers.front().weights.cols())
        throw std::invalid_argument("forward: feature width " + std::to_string(features.cols()) +
                                    " does not match first layer input " +
                                    std::to_string(params.layers.front().weights.cols()));
    ForwardTrace t;
    t.as.push_back(features);
    for (std::size_t k = 0; k < params.layers.size(); ++k) {
        const auto& layer = params.layers[k];
        if (layer.weights.cols() > t.as.back().cols())
            throw std::invalid_argument("forward: layer " + std::to_string(k + 1) +
                                        " expects more inputs than available");
        if (layer.bias.size() != layer.weights.rows())
            throw std::invalid_argument("forward: bias/weight row mismatch at layer " +
                                        std::to_string(k + 1));
        Matrix z = affine(t.as.back(), layer);
        t.zs.push_back(z);
        if (k + 1 < params.layers.size()) {
            for (std::size_t i = 0; i < z.size(); ++i)
                z.data()[i] = z.data()[i] > 0.0 ? z.data()[i] : 0.0;
        } else {
            softmax_rows(z);
        }
        t.as.push_back(std::move(z));
    }
    return t;
}

double logsumexp_row(const Matrix& z, std::size_t r) {
    double mx = z(r, 0);
    for (std::size_t c = 1; c < z.cols(); ++c) mx = std::max(mx, z(r, c));
    double s = 0.0;
    for (std::size_t c = 0; c < z.cols(); ++c) s += std::exp(z(r, c) - mx);
    return mx + std::log(s);
}

}  // namespace

Matrix forward(const ParamSet& params, const Matrix& features) {
    return forward_trace(params, features).as.back();
}

std::pair<double, ParamSet> loss_and_grads(const ParamSet& params, const Batch& batch) {
    const std::size_t B = batch.size();
    if (B == 0) throw std::invalid_argument("loss_and_grads: empty batch");
    const std::size_t classes = params.layers.back().weights.rows();
    for (int y : batch.labels)
        if (y < 0 || static_cast<std::size_t>(y) >= classes)
            throw std::invalid_argument("loss_and_grads: label out of range");

    ForwardTrace t = forward_trace(params, batch.features);
    const Matrix& z_out = t.zs.back();
    const Matrix& probs = t.as.back();

    double loss = 0.0;
    for (std::size_t r = 0; r < B; ++r)
        loss += logsumexp_row(z_out, r) - z_out(r, static_cast<std::size_t>(batch.labels[r]));
    loss /= static_cast<double>(B);

    ParamSet grads;
    grads.layers.resize(params.layers.size());
    // delta at the softmax output: (p - onehot) / B
    Matrix delta = probs;
    for (std::size_t r = 0; r < B; ++r)
        delta(r, static_cast<std::size_t>(batch.labels[r])) -= 1.0;
    for (std::size_t i = 0; i < delta.size(); ++i) delta.data()[i] /= static_cast<double>(B);

    for (std::size_t k = params.layers.size(); k-- > 0;) {
        const auto& layer = params.layers[k];
        const Matrix& a_prev = t.as[k];
        const std::size_t in = layer.weights.cols();
        const std::size_t out = layer.weights.rows();

        DenseLayer g;
        g.weights = Matrix(out, in);
        g.bias.assign(out, 0.0);
        for (std::size_t r = 0; r < B; ++r)
            for (std::size_t o = 0; o < out; ++o) {
                const double d = delta(r, o);
                g.bias[o] += d;
                for (std::size_t c = 0; c < in; ++c) g.weights(o, c) += d * a_prev(r, c);
            }
        grads.layers[k] = std::move(g);

        if (k == 0) break;
        // Gradient w.r.t. the previous activation; only the consumed leading
        // slice receives signal, the unused tail stays zero.
        Matrix d_prev(B, a_prev.cols());
        for (std::size_t r = 0; r < B; ++r)
            for (std::size_t c = 0; c < in; ++c) {
                double s = 0.0;
                for (std::size_t o = 0; o < out; ++o) s += delta(r, o) * layer.weights(o, c);
                d_prev(r, c) = s;
            }
        const Matrix& z_prev = t.zs[k - 1];
        for (std::size_t r = 0; r < B; ++r)
            for (std::size_t c = 0; c < d_prev.cols(); ++c)
                if (z_prev(r, c) <= 0.0) d_prev(r, c) = 0.0;
        delta = std::move(d_prev);
    }
    return {loss, std::move(grads)};
}

ParamSet local_train(const ParamSet& params, const Batch& shard, const TrainConfig& cfg) {
    const std::size_t n = shard.size();
    if (n == 0) throw std::invalid_argument("local_train: empty shard");
    if (cfg.learning_rate < 0.0) throw std::invalid_argument("local_train: negative learning rate");
    if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
        throw std::invalid_argument("local_train: momentum must be in [0, 1)");
    if (cfg.batch_size < 1 || cfg.local_epochs < 1)
        throw std::invalid_argument("local_train: batch_size and local_epochs must be >= 1");

    const std::size_t bs = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n);
    ParamSet w = params;
    ParamSet vel;
    vel.layers.resize(w.layers.size());
    for (std::size_t k = 0; k < w.layers.size(); ++k) {
        vel.layers[k].weights = Matrix(w.layers[k].weights.rows(), w.layers[k].weights.cols());
        vel.layers[k].bias.assign(w.layers[k].bias.size(), 0.0);
    }

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
        shuffle_in_place(order, rng);
        for (std::size_t start = 0; start < n; start += bs) {
            const std::size_t cnt = std::min(bs, n - start);
            Batch mini;
            mini.features = Matrix(cnt, shard.features.cols());
            mini.labels.resize(cnt);
            for (std::size_t i = 0; i < cnt; ++i) {
                const std::size_t src = order[start + i];
                for (std::size_t c = 0; c < shard.features.cols(); ++c)
                    mini.features(i, c) = shard.features(src, c);
                mini.labels[i] = shard.labels[src];
            }
            auto [loss, grads] = loss_and_grads(w, mini);
            (void)loss;
            // v <- momentum * v + g;  w <- w - lr * v
            for (std::size_t k = 0; k < w.layers.size(); ++k) {
                auto& wl = w.layers[k];
                auto& vl = vel.layers[k];
                const auto& gl = grads.layers[k];
                for (std::size_t i = 0; i < wl.weights.size(); ++i) {
                    vl.weights.data()[i] = cfg.momentum * vl.weights.data()[i] + gl.weights.data()[i];
                    wl.weights.data()[i] -= cfg.learning_rate * vl.weights.data()[i];
                }
                for (std::size_t i = 0; i < wl.bias.size(); ++i) {
                    vl.bias[i] = cfg.momentum * vl.bias[i] + gl.bias[i];
                    wl.bias[i] -= cfg.learning_rate * vl.bias[i];
                }
            }
        }
    }
    return w;
}

double evaluate(const ParamSet& params, const Batch& testset) {
    if (testset.size() == 0) throw std::invalid_argument("evaluate: empty test set");
    Matrix probs = forward(params, testset.features);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < probs.rows(); ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < probs.cols(); ++c)
            if (probs(r, c) > probs(r, best)) best = c;
        if (best == static_cast<std::size_t>(testset.labels[r])) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(testset.size());
}

}  // namespace adaptivefl
