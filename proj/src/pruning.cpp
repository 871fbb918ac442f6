#include "adaptivefl/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace adaptivefl {

std::string level_name(Level level) {
    switch (level) {
        case Level::S: return "S";
        case Level::M: return "M";
        case Level::L: return "L";
    }
    return "?";
}

int ModelPool::index_of(Level level, int variant) const {
    for (int i = 0; i < count(); ++i)
        if (entries[i].level == level && entries[i].variant == variant) return i;
    throw std::invalid_argument("ModelPool: no entry " + level_name(level) + "_" +
                                std::to_string(variant));
}

std::string ModelPool::name(int index) const {
    const auto& e = entries.at(index);
    return level_name(e.level) + "_" + std::to_string(e.variant);
}

void ShapeSpec::validate() const {
    if (layers.empty()) throw std::invalid_argument("ShapeSpec: no layers");
    if (layers.front().prunable_in)
        throw std::invalid_argument("ShapeSpec: first layer input must be non-prunable");
    if (layers.back().prunable_out)
        throw std::invalid_argument("ShapeSpec: last layer output must be non-prunable");
    for (const auto& l : layers)
        if (l.in_channels < 1 || l.out_channels < 1)
            throw std::invalid_argument("ShapeSpec: channel counts must be >= 1");
}

namespace {

// ceil(dim * ratio) with a guard against the product landing a hair above
// an exact integer; keeps at least one unit.
int scaled_dim(int dim, double ratio) {
    int kept = static_cast<int>(std::ceil(static_cast<double>(dim) * ratio - 1e-9));
    return std::max(1, std::min(kept, dim));
}

void check_config(const PruneConfig& cfg, const ModelSpec& spec) {
    if (cfg.width_ratio <= 0.0 || cfg.width_ratio > 1.0)
        throw std::invalid_argument("PruneConfig: width_ratio must be in (0, 1]");
    if (cfg.start_layer < spec.tau)
        throw std::invalid_argument("PruneConfig: start_layer below tau");
}

}  // namespace

int kept_rows(const ModelSpec& spec, const PruneConfig& cfg, int k) {
    const int d = spec.layer_dims[k];
    if (cfg.width_ratio >= 1.0 || k <= cfg.start_layer) return d;
    if (k == spec.num_weight_layers()) return d;   // output classes are fixed
    return scaled_dim(d, cfg.width_ratio);
}

int kept_cols(const ModelSpec& spec, const PruneConfig& cfg, int k) {
    const int n = spec.layer_dims[k - 1];
    if (cfg.width_ratio >= 1.0 || k <= cfg.start_layer) return n;
    if (k == 1) return n;                          // input features are fixed
    return scaled_dim(n, cfg.width_ratio);
}

ParamSet prune_params(const ParamSet& global, const PruneConfig& cfg, const ModelSpec& spec) {
    spec.validate();
    check_config(cfg, spec);
    if (static_cast<int>(global.layers.size()) != spec.num_weight_layers())
        throw std::invalid_argument("prune_params: global does not match spec layer count");

    ParamSet out;
    out.layers.resize(global.layers.size());
    for (int k = 1; k <= spec.num_weight_layers(); ++k) {
        const auto& src = global.layers[k - 1];
        if (static_cast<int>(src.weights.rows()) != spec.layer_dims[k] ||
            static_cast<int>(src.weights.cols()) != spec.layer_dims[k - 1])
            throw std::invalid_argument("prune_params: global layer " + std::to_string(k) +
                                        " shape does not match spec");
        const int rows = kept_rows(spec, cfg, k);
        const int cols = kept_cols(spec, cfg, k);
        DenseLayer dst;
        dst.weights = Matrix(rows, cols);
        dst.bias.resize(rows);
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) dst.weights(r, c) = src.weights(r, c);
            dst.bias[r] = src.bias[r];
        }
        out.layers[k - 1] = std::move(dst);
    }
    return out;
}

std::int64_t dense_param_count(const ModelSpec& spec, const PruneConfig& cfg) {
    check_config(cfg, spec);
    std::int64_t total = 0;
    for (int k = 1; k <= spec.num_weight_layers(); ++k) {
        const std::int64_t rows = kept_rows(spec, cfg, k);
        const std::int64_t cols = kept_cols(spec, cfg, k);
        total += rows * cols + rows;
    }
    return total;
}

std::int64_t param_count(const ShapeSpec& shape, double width_ratio, int start_layer) {
    shape.validate();
    if (width_ratio <= 0.0 || width_ratio > 1.0)
        throw std::invalid_argument("param_count: width_ratio must be in (0, 1]");
    std::int64_t total = 0;
    for (std::size_t i = 0; i < shape.layers.size(); ++i) {
        const auto& l = shape.layers[i];
        const int k = static_cast<int>(i) + 1;
        int in = l.in_channels;
        int out = l.out_channels;
        if (width_ratio < 1.0 && k > start_layer) {
            if (l.prunable_in) in = scaled_dim(in, width_ratio);
            if (l.prunable_out) out = scaled_dim(out, width_ratio);
        }
        const std::int64_t per_pair = l.kind == ShapeLayer::Kind::conv3x3 ? 9 : 1;
        total += static_cast<std::int64_t>(in) * out * per_pair;
    }
    return total;
}

std::int64_t param_count(const ShapeSpec& shape, const PruneConfig& cfg) {
    return param_count(shape, cfg.width_ratio, cfg.start_layer);
}

ModelPool build_pool(const ModelSpec& spec, const std::map<Level, double>& level_ratios,
                     const std::vector<int>& start_layers) {
    spec.validate();
    const int p = static_cast<int>(start_layers.size());
    if (p < 1) throw std::invalid_argument("build_pool: start_layers is empty");
    for (int i = 0; i + 1 < p; ++i)
        if (start_layers[i] <= start_layers[i + 1])
            throw std::invalid_argument("build_pool: start_layers must be strictly decreasing");
    for (int I : start_layers) {
        if (I < spec.tau) throw std::invalid_argument("build_pool: start layer below tau");
        if (I >= spec.num_weight_layers())
            throw std::invalid_argument("build_pool: start layer must leave at least one prunable layer");
    }
    for (Level lv : {Level::S, Level::M}) {
        auto it = level_ratios.find(lv);
        if (it == level_ratios.end())
            throw std::invalid_argument("build_pool: level_ratios must define " + level_name(lv));
        if (it->second <= 0.0 || it->second > 1.0)
            throw std::invalid_argument("build_pool: level_ratios[" + level_name(lv) +
                                        "] must be in (0, 1]");
    }
    if (auto it = level_ratios.find(Level::L); it != level_ratios.end() && it->second != 1.0)
        throw std::invalid_argument("build_pool: level_ratios[L] must be 1");

    ModelPool pool;
    pool.p = p;
    pool.spec = spec;
    pool.level_ratios = level_ratios;
    pool.level_ratios[Level::L] = 1.0;

    // Ascending size: S_p .. S_1, M_p .. M_1, L_1. Variant v uses
    // start_layers[v-1], so variant 1 carries the largest start layer.
    for (Level lv : {Level::S, Level::M})
        for (int v = p; v >= 1; --v)
            pool.entries.push_back({lv, v, pool.level_ratios.at(lv), start_layers[v - 1]});
    pool.entries.push_back({Level::L, 1, 1.0, spec.num_weight_layers()});

    for (const auto& e : pool.entries) pool.sizes.push_back(dense_param_count(spec, e));
    for (std::size_t i = 0; i + 1 < pool.sizes.size(); ++i)
        if (pool.sizes[i] >= pool.sizes[i + 1])
            throw std::invalid_argument("build_pool: entry sizes are not strictly increasing (" +
                                        pool.name(static_cast<int>(i)) + " vs " +
                                        pool.name(static_cast<int>(i) + 1) + ")");
    return pool;
}

bool is_subslice(const PruneConfig& a, const PruneConfig& b, const ModelSpec& spec) {
    for (int k = 1; k <= spec.num_weight_layers(); ++k)
        if (kept_rows(spec, a, k) > kept_rows(spec, b, k) ||
            kept_cols(spec, a, k) > kept_cols(spec, b, k))
            return false;
    return true;
}

PruneConfig fit_to_budget(const PruneConfig& received, std::int64_t capacity,
                          const ModelPool& pool, const ModelSpec& spec) {
    if (dense_param_count(spec, received) <= capacity) return received;
    for (int i = pool.count() - 1; i >= 0; --i) {
        if (pool.sizes[i] > capacity) continue;
        if (is_subslice(pool.entries[i], received, spec)) return pool.entries[i];
    }
    throw std::runtime_error("fit_to_budget: no pool entry fits capacity " +
                             std::to_string(capacity));
}

ShapeSpec load_shape_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_shape_spec: cannot open " + path);
    ShapeSpec shape;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string kind;
        if (!(ss >> kind)) continue;  // blank line
        ShapeLayer l;
        if (kind == "dense")
            l.kind = ShapeLayer::Kind::dense;
        else if (kind == "conv3x3")
            l.kind = ShapeLayer::Kind::conv3x3;
        else
            throw std::runtime_error("load_shape_spec: unknown layer kind '" + kind + "' at line " +
                                     std::to_string(lineno));
        int pin = 0, pout = 0;
        if (!(ss >> l.in_channels >> l.out_channels >> pin >> pout))
            throw std::runtime_error("load_shape_spec: malformed line " + std::to_string(lineno));
        l.prunable_in = pin != 0;
        l.prunable_out = pout != 0;
        std::string extra;
        if (ss >> extra)
            throw std::runtime_error("load_shape_spec: trailing tokens at line " +
                                     std::to_string(lineno));
        shape.layers.push_back(l);
    }
    shape.validate();
    return shape;
}

}  // namespace adaptivefl
