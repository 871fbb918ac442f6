#include "adaptivefl/aggregation.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace adaptivefl {

ParamSet aggregate(const ParamSet& global, const std::vector<ReturnedModel>& returned,
                   const ModelSpec& spec) {
    const std::size_t n_layers = global.layers.size();

    std::vector<std::size_t> order(returned.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return returned[a].client_id < returned[b].client_id;
    });

    for (const auto& rm : returned) {
        if (rm.data_size < 1)
            throw std::invalid_argument("aggregate: data_size must be >= 1");
        if (rm.params.layers.size() != n_layers)
            throw std::invalid_argument("aggregate: returned model layer count mismatch");
        for (int k = 1; k <= static_cast<int>(n_layers); ++k) {
            const auto& l = rm.params.layers[k - 1];
            const auto& g = global.layers[k - 1];
            // Shapes must equal the config applied to the spec and fit
            // inside the aggregation target.
            if (static_cast<int>(l.weights.rows()) != kept_rows(spec, rm.cfg, k) ||
                static_cast<int>(l.weights.cols()) != kept_cols(spec, rm.cfg, k) ||
                l.bias.size() != l.weights.rows())
                throw std::invalid_argument("aggregate: returned layer " + std::to_string(k) +
                                            " does not match its prune config");
            if (l.weights.rows() > g.weights.rows() || l.weights.cols() > g.weights.cols())
                throw std::invalid_argument("aggregate: returned layer " + std::to_string(k) +
                                            " exceeds the aggregation target");
        }
    }

    ParamSet out;
    out.layers.resize(n_layers);
    for (std::size_t k = 0; k < n_layers; ++k) {
        const auto& g = global.layers[k];
        Matrix wsum(g.weights.rows(), g.weights.cols());
        Matrix wcov(g.weights.rows(), g.weights.cols());
        std::vector<double> bsum(g.bias.size(), 0.0);
        std::vector<double> bcov(g.bias.size(), 0.0);

        for (std::size_t idx : order) {
            const auto& rm = returned[idx];
            const auto& l = rm.params.layers[k];
            const double d = static_cast<double>(rm.data_size);
            for (std::size_t r = 0; r < l.weights.rows(); ++r) {
                for (std::size_t c = 0; c < l.weights.cols(); ++c) {
                    wsum(r, c) += l.weights(r, c) * d;
                    wcov(r, c) += d;
                }
                bsum[r] += l.bias[r] * d;
                bcov[r] += d;
            }
        }

        DenseLayer merged;
        merged.weights = Matrix(g.weights.rows(), g.weights.cols());
        merged.bias.resize(g.bias.size());
        for (std::size_t r = 0; r < g.weights.rows(); ++r) {
            for (std::size_t c = 0; c < g.weights.cols(); ++c)
                merged.weights(r, c) = wcov(r, c) > 0.0 ? wsum(r, c) / wcov(r, c) : g.weights(r, c);
            merged.bias[r] = bcov[r] > 0.0 ? bsum[r] / bcov[r] : g.bias[r];
        }
        out.layers[k] = std::move(merged);
    }
    return out;
}

}  // namespace adaptivefl
