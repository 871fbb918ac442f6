#include "adaptivefl/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "adaptivefl/rng.hpp"

namespace adaptivefl {

namespace {

// Box-Muller, one value per call; a spare is deliberately not cached so the
// draw count per sample is fixed.
double standard_normal(std::mt19937_64& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
}

}  // namespace

Matrix synthetic_means(int classes, int features, std::mt19937_64& rng) {
    Matrix means(classes, features);
    for (std::size_t i = 0; i < means.size(); ++i) means.data()[i] = standard_normal(rng);
    return means;
}

Dataset make_synthetic(const Matrix& means, int samples, double cluster_std,
                       std::mt19937_64& rng) {
    const int classes = static_cast<int>(means.rows());
    const int features = static_cast<int>(means.cols());
    Dataset d;
    d.n_classes = classes;
    d.features = Matrix(samples, features);
    d.labels.resize(samples);
    for (int i = 0; i < samples; ++i) {
        const int y = i % classes;
        d.labels[i] = y;
        for (int f = 0; f < features; ++f)
            d.features(i, f) = means(y, f) + cluster_std * standard_normal(rng);
    }
    return d;
}

Batch to_batch(const Dataset& d) {
    return Batch{d.features, d.labels};
}

Batch subset_batch(const Dataset& d, const std::vector<int>& indices) {
    Batch b;
    b.features = Matrix(indices.size(), d.features.cols());
    b.labels.resize(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        for (std::size_t c = 0; c < d.features.cols(); ++c)
            b.features(i, c) = d.features(indices[i], c);
        b.labels[i] = d.labels[indices[i]];
    }
    return b;
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
    std::size_t n_samples = 0, n_features = 0;
    int n_classes = 0;
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("load_dataset: missing header");
    {
        std::istringstream hs(header);
        if (!(hs >> n_samples >> n_features >> n_classes))
            throw std::runtime_error("load_dataset: malformed header");
    }
    Dataset d;
    d.n_classes = n_classes;
    d.features = Matrix(n_samples, n_features);
    d.labels.resize(n_samples);
    std::string line;
    for (std::size_t i = 0; i < n_samples; ++i) {
        if (!std::getline(in, line))
            throw std::runtime_error("load_dataset: truncated at sample " + std::to_string(i));
        std::istringstream ls(line);
        std::string tok;
        for (std::size_t f = 0; f < n_features; ++f) {
            if (!std::getline(ls, tok, ','))
                throw std::runtime_error("load_dataset: short row " + std::to_string(i));
            d.features(i, f) = std::stod(tok);
        }
        if (!std::getline(ls, tok, ','))
            throw std::runtime_error("load_dataset: missing label at row " + std::to_string(i));
        d.labels[i] = std::stoi(tok);
        if (d.labels[i] < 0 || d.labels[i] >= n_classes)
            throw std::runtime_error("load_dataset: label out of range at row " + std::to_string(i));
    }
    return d;
}

void save_dataset(const Dataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_dataset: cannot open " + path);
    out << d.size() << " " << d.features.cols() << " " << d.n_classes << "\n";
    char buf[64];
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t f = 0; f < d.features.cols(); ++f) {
            std::snprintf(buf, sizeof buf, "%.17g", d.features(i, f));
            out << buf << ",";
        }
        out << d.labels[i] << "\n";
    }
}

}  // namespace adaptivefl
