#pragma once

#include <cstdint>
#include <vector>

#include "adaptivefl/nn.hpp"
#include "adaptivefl/pruning.hpp"

namespace adaptivefl {

/// A locally trained sub-model handed back to the server.
struct ReturnedModel {
    ParamSet params;      // pruned shapes, per cfg
    PruneConfig cfg;
    std::int64_t data_size = 1;   // |d_c|
    int client_id = 0;
};

/// Heterogeneous model aggregation. Every global coordinate covered by at
/// least one returned slice becomes the data-size-weighted mean of the
/// covering values; uncovered coordinates keep their old global value.
/// Biases aggregate exactly like their weight rows. Clients are processed
/// in ascending client id so the summation order is reproducible.
ParamSet aggregate(const ParamSet& global, const std::vector<ReturnedModel>& returned,
                   const ModelSpec& spec);

}  // namespace adaptivefl
