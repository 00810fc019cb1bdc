#pragma once

#include <algorithm>
#include <cmath>

#include "tensor.hpp"

namespace opticnet {

/// Labeled image collection. Every image shares one (h, w, c) shape and is
/// stored as a single-sample tensor with values in [0, 1].
template <class T>
struct Dataset {
    std::vector<Tensor<T>> images;
    std::vector<int> labels;
    std::vector<std::string> class_names;
    std::string split_tag;

    int size() const { return static_cast<int>(images.size()); }
    int classes() const { return static_cast<int>(class_names.size()); }

    void validate() const {
        if (images.size() != labels.size()) {
            throw std::invalid_argument("dataset: " + std::to_string(images.size()) +
                                        " images but " + std::to_string(labels.size()) + " labels");
        }
        for (size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] < 0 || labels[i] >= classes()) {
                throw std::invalid_argument("dataset: label " + std::to_string(labels[i]) +
                                            " outside [0," + std::to_string(classes()) + ")");
            }
            if (!images[i].same_shape(images[0])) {
                throw std::invalid_argument("dataset: image " + std::to_string(i) + " has shape " +
                                            images[i].shape_str() + ", expected " +
                                            images[0].shape_str());
            }
        }
    }

    std::vector<int> per_class_counts() const {
        std::vector<int> counts(classes(), 0);
        for (int l : labels) ++counts[l];
        return counts;
    }
};

/// Stack the selected samples into one batch tensor plus a label list.
template <class T>
std::pair<Tensor<T>, std::vector<int>> make_batch(const Dataset<T>& ds,
                                                  const std::vector<int>& indices) {
    if (indices.empty()) throw std::invalid_argument("make_batch: empty index list");
    const Tensor<T>& first = ds.images[indices[0]];
    Tensor<T> batch(static_cast<int>(indices.size()), first.h(), first.w(), first.c());
    std::vector<int> labels(indices.size());
    const size_t per = first.size();
    for (size_t i = 0; i < indices.size(); ++i) {
        const Tensor<T>& img = ds.images[indices[i]];
        std::copy(img.data.begin(), img.data.end(), batch.data.begin() + i * per);
        labels[i] = ds.labels[indices[i]];
    }
    return {std::move(batch), std::move(labels)};
}

/// Class-separable synthetic images: each class is a sinusoidal band pattern
/// at a class-specific orientation and frequency, plus seeded uniform noise.
/// Deterministic for a seed.
template <class T>
Dataset<T> make_synthetic(int classes, int per_class, int h, int w, uint64_t seed) {
    if (classes < 2 || per_class < 1) {
        throw std::invalid_argument("make_synthetic: need classes >= 2 and per_class >= 1");
    }
    Dataset<T> ds;
    for (int k = 0; k < classes; ++k) ds.class_names.push_back("class" + std::to_string(k));
    ds.split_tag = "synthetic";

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<T> noise(T(-0.15), T(0.15));
    // small per-sample jitter: enough intra-class variation to make the task
    // non-trivial, small enough that class centroids stay informative
    std::uniform_real_distribution<T> phase_dist(T(-0.4), T(0.4));

    const T pi = T(3.14159265358979323846);
    for (int k = 0; k < classes; ++k) {
        const T angle = pi * T(k) / T(classes);
        const T dy = std::sin(angle), dx = std::cos(angle);
        const T freq = T(2) * pi * (T(2) + T(k % 3)) / T(std::min(h, w));
        for (int s = 0; s < per_class; ++s) {
            const T phase = phase_dist(rng);
            Tensor<T> img(1, h, w, 3);
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    T band = T(0.5) + T(0.35) * std::sin(freq * (dx * x + dy * y) + phase);
                    for (int c = 0; c < 3; ++c) {
                        T v = band + noise(rng);
                        img.at(0, y, x, c) = std::clamp(v, T(0), T(1));
                    }
                }
            }
            ds.images.push_back(std::move(img));
            ds.labels.push_back(k);
        }
    }
    return ds;
}

/// Deterministic stratified split: per class, shuffle and cut at
/// round(train_fraction * count). Both sides keep the full class list.
template <class T>
std::pair<Dataset<T>, Dataset<T>> split(const Dataset<T>& ds, double train_fraction,
                                        uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("split: train fraction must lie in (0, 1)");
    }
    ds.validate();
    Dataset<T> train, test;
    train.class_names = test.class_names = ds.class_names;
    train.split_tag = "train";
    test.split_tag = "test";

    std::mt19937_64 rng(seed);
    for (int k = 0; k < ds.classes(); ++k) {
        std::vector<int> idx;
        for (int i = 0; i < ds.size(); ++i)
            if (ds.labels[i] == k) idx.push_back(i);
        std::shuffle(idx.begin(), idx.end(), rng);
        int n_train = static_cast<int>(std::lround(train_fraction * idx.size()));
        if (n_train < 1 || n_train >= static_cast<int>(idx.size())) {
            throw std::invalid_argument("split: fraction " + std::to_string(train_fraction) +
                                        " empties class '" + ds.class_names[k] +
                                        "' on one side");
        }
        for (int i = 0; i < static_cast<int>(idx.size()); ++i) {
            Dataset<T>& side = i < n_train ? train : test;
            side.images.push_back(ds.images[idx[i]]);
            side.labels.push_back(k);
        }
    }
    return {std::move(train), std::move(test)};
}

/// Select a subset by index list (used for k-fold train/held-out assembly).
template <class T>
Dataset<T> subset(const Dataset<T>& ds, const std::vector<int>& indices, std::string tag) {
    Dataset<T> out;
    out.class_names = ds.class_names;
    out.split_tag = std::move(tag);
    for (int i : indices) {
        out.images.push_back(ds.images.at(i));
        out.labels.push_back(ds.labels.at(i));
    }
    return out;
}

}  // namespace opticnet
