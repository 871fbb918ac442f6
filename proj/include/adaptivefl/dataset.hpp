#pragma once

#include <random>
#include <string>
#include <vector>

#include "adaptivefl/nn.hpp"

namespace adaptivefl {

struct Dataset {
    Matrix features;
    std::vector<int> labels;
    int n_classes = 0;

    std::size_t size() const { return labels.size(); }
};

/// Per-class cluster centers, one row per class, drawn from a unit normal.
Matrix synthetic_means(int classes, int features, std::mt19937_64& rng);

/// Balanced labeled samples around the given class means with isotropic
/// Gaussian noise of the given standard deviation.
Dataset make_synthetic(const Matrix& means, int samples, double cluster_std,
                       std::mt19937_64& rng);

Batch to_batch(const Dataset& d);
Batch subset_batch(const Dataset& d, const std::vector<int>& indices);

/// Text format: header "n_samples n_features n_classes", then one sample
/// per line as comma-separated reals followed by an integer label.
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& d, const std::string& path);

}  // namespace adaptivefl
