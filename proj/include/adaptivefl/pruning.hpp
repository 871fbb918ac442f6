#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "adaptivefl/nn.hpp"

namespace adaptivefl {

enum class Level { S = 0, M = 1, L = 2 };

std::string level_name(Level level);

/// One pool entry: which slice of the global model a sub-model owns.
/// Layers 1..start_layer are kept at full width; beyond it the leading
/// ceil(dim * width_ratio) units of each dimension survive, except the
/// network input width and the output class count, which are never pruned.
struct PruneConfig {
    Level level = Level::L;
    int variant = 1;             // 1..p within the level; 1 is the largest
    double width_ratio = 1.0;    // in (0, 1]
    int start_layer = 1;         // layers <= start_layer stay full

    bool operator==(const PruneConfig&) const = default;
};

/// The ordered pool {m_Sp, ..., m_S1, m_Mp, ..., m_M1, m_L1} of 2p+1 prune
/// configs. Entry sizes strictly increase with the index; the last entry is
/// the identity config (width_ratio = 1), i.e. the global model itself.
struct ModelPool {
    std::vector<PruneConfig> entries;      // ascending size
    std::vector<std::int64_t> sizes;       // trainable scalars per entry
    std::map<Level, double> level_ratios;
    int p = 1;
    ModelSpec spec;                        // the dense spec the pool slices

    int count() const { return static_cast<int>(entries.size()); }
    int full_index() const { return count() - 1; }
    /// Pool index of a (level, variant) pair; variant 1 is the largest of
    /// its level.
    int index_of(Level level, int variant) const;
    std::string name(int index) const;     // "S_3", ..., "L_1"
};

/// Layer shapes for the parameter-count calculator. Covers convolutional
/// architectures the trainable engine does not implement.
struct ShapeLayer {
    enum class Kind { dense, conv3x3 };
    Kind kind = Kind::dense;
    int in_channels = 0;
    int out_channels = 0;
    bool prunable_in = true;
    bool prunable_out = true;
};

struct ShapeSpec {
    std::vector<ShapeLayer> layers;
    void validate() const;
};

/// Kept output/input units of weight layer k (1-based) under `cfg`.
int kept_rows(const ModelSpec& spec, const PruneConfig& cfg, int k);
int kept_cols(const ModelSpec& spec, const PruneConfig& cfg, int k);

/// Extracts the leading sub-slice of the global model selected by `cfg`.
/// Kept values are identical to the global's leading entries.
ParamSet prune_params(const ParamSet& global, const PruneConfig& cfg, const ModelSpec& spec);

/// Trainable scalar count (weights + biases) of the dense model `cfg`
/// selects from `spec`. Used for pool ordering, capacities and waste.
std::int64_t dense_param_count(const ModelSpec& spec, const PruneConfig& cfg);

/// Weight count of an arbitrary ShapeSpec under a prune setting; conv3x3
/// kernels contribute 9 weights per channel pair. Biases are not counted.
std::int64_t param_count(const ShapeSpec& shape, double width_ratio, int start_layer);
std::int64_t param_count(const ShapeSpec& shape, const PruneConfig& cfg);

/// Builds the 2p+1 entry pool from per-level width ratios (S and M; L is
/// the identity) and the p strictly decreasing start-layer indices.
/// Rejects ratios outside (0,1], start layers below spec.tau, and any
/// configuration whose entry sizes fail to strictly increase.
ModelPool build_pool(const ModelSpec& spec, const std::map<Level, double>& level_ratios,
                     const std::vector<int>& start_layers);

/// True when every coordinate kept by `a` is also kept by `b`.
bool is_subslice(const PruneConfig& a, const PruneConfig& b, const ModelSpec& spec);

/// Largest pool entry that is a sub-slice of `received` and fits within
/// `capacity`; `received` itself if it already fits. Throws when not even
/// the smallest admissible entry fits (scenario misconfiguration).
PruneConfig fit_to_budget(const PruneConfig& received, std::int64_t capacity,
                          const ModelPool& pool, const ModelSpec& spec);

/// Reads a ShapeSpec from its data-file form: one layer per line,
/// "kind in out prunable_in prunable_out", '#' comments allowed.
ShapeSpec load_shape_spec(const std::string& path);

}  // namespace adaptivefl
