#pragma once

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace opticnet {

/// K x K counts, row = true class, column = predicted class.
struct ConfusionMatrix {
    std::vector<std::string> labels;
    std::vector<long long> counts;  // row-major K x K

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::vector<std::string> lbls)
        : labels(std::move(lbls)), counts(labels.size() * labels.size(), 0) {
        if (labels.size() < 2) throw std::invalid_argument("confusion matrix: need K >= 2 classes");
    }

    int k() const { return static_cast<int>(labels.size()); }
    long long& at(int true_c, int pred_c) { return counts[true_c * k() + pred_c]; }
    long long at(int true_c, int pred_c) const { return counts[true_c * k() + pred_c]; }

    void record(int true_c, int pred_c) {
        if (true_c < 0 || true_c >= k() || pred_c < 0 || pred_c >= k()) {
            throw std::invalid_argument("confusion matrix: class index out of range");
        }
        ++at(true_c, pred_c);
    }

    long long total() const {
        long long n = 0;
        for (auto c : counts) n += c;
        return n;
    }

    long long row_sum(int i) const {
        long long s = 0;
        for (int j = 0; j < k(); ++j) s += at(i, j);
        return s;
    }

    long long col_sum(int j) const {
        long long s = 0;
        for (int i = 0; i < k(); ++i) s += at(i, j);
        return s;
    }

    void print(std::ostream& os) const {
        size_t w = 8;
        for (const auto& l : labels) w = std::max(w, l.size() + 2);
        os << std::setw(static_cast<int>(w)) << "true\\pred";
        for (const auto& l : labels) os << std::setw(static_cast<int>(w)) << l;
        os << "\n";
        for (int i = 0; i < k(); ++i) {
            os << std::setw(static_cast<int>(w)) << labels[i];
            for (int j = 0; j < k(); ++j) os << std::setw(static_cast<int>(w)) << at(i, j);
            os << "\n";
        }
    }
};

/// K x K non-negative misclassification weights with a zero diagonal,
/// indexed like the confusion matrix it scores.
struct PenaltyMatrix {
    std::vector<std::string> labels;
    std::vector<double> weights;  // row-major K x K

    PenaltyMatrix() = default;
    PenaltyMatrix(std::vector<std::string> lbls, std::vector<double> w)
        : labels(std::move(lbls)), weights(std::move(w)) {
        const size_t k = labels.size();
        if (k < 2 || weights.size() != k * k) {
            throw std::invalid_argument("penalty matrix: need K >= 2 and K*K weights");
        }
        for (size_t i = 0; i < k; ++i) {
            if (weights[i * k + i] != 0) {
                throw std::invalid_argument("penalty matrix: diagonal must be zero (class " +
                                            labels[i] + ")");
            }
        }
        for (double v : weights) {
            if (v < 0) throw std::invalid_argument("penalty matrix: negative weight");
        }
    }

    int k() const { return static_cast<int>(labels.size()); }
    double at(int true_c, int pred_c) const { return weights[true_c * k() + pred_c]; }

    /// Reorder rows/columns to a new label order (all labels must be present).
    PenaltyMatrix aligned_to(const std::vector<std::string>& order) const {
        if (order.size() != labels.size()) {
            throw std::invalid_argument("penalty matrix: class count mismatch during alignment");
        }
        std::vector<int> perm;
        for (const auto& name : order) {
            auto it = std::find(labels.begin(), labels.end(), name);
            if (it == labels.end()) {
                throw std::invalid_argument("penalty matrix: class '" + name + "' not found");
            }
            perm.push_back(static_cast<int>(it - labels.begin()));
        }
        std::vector<double> w(order.size() * order.size());
        for (size_t i = 0; i < order.size(); ++i)
            for (size_t j = 0; j < order.size(); ++j)
                w[i * order.size() + j] = at(perm[i], perm[j]);
        return PenaltyMatrix(order, std::move(w));
    }
};

/// The proposed OCT2017 penalty weights, class order (Normal, Drusen, CNV, DME):
/// predicting an urgent case (CNV, DME) as Normal carries the largest cost.
inline PenaltyMatrix default_oct2017_penalties() {
    return PenaltyMatrix({"NORMAL", "DRUSEN", "CNV", "DME"},
                         {0, 1, 1, 1,
                          1, 0, 1, 1,
                          4, 2, 0, 1,
                          4, 2, 1, 0});
}

/// Plain-text grid: header row of class names, then K rows of K weights.
inline PenaltyMatrix load_penalties(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("penalties: cannot open " + path);
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    std::vector<std::string> labels;
    for (std::string tok; hs >> tok;) labels.push_back(tok);
    std::vector<double> w;
    for (double v; in >> v;) w.push_back(v);
    return PenaltyMatrix(std::move(labels), std::move(w));
}

inline void save_penalties(const PenaltyMatrix& p, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("penalties: cannot write " + path);
    for (int j = 0; j < p.k(); ++j) os << (j ? " " : "") << p.labels[j];
    os << "\n";
    for (int i = 0; i < p.k(); ++i) {
        for (int j = 0; j < p.k(); ++j) os << (j ? " " : "") << p.at(i, j);
        os << "\n";
    }
}

namespace metrics_detail {
inline void require_nonempty(const ConfusionMatrix& cm) {
    if (cm.total() <= 0) throw std::invalid_argument("metrics: empty confusion matrix");
}
}  // namespace metrics_detail

/// trace / N.
inline double accuracy(const ConfusionMatrix& cm) {
    metrics_detail::require_nonempty(cm);
    long long tp = 0;
    for (int i = 0; i < cm.k(); ++i) tp += cm.at(i, i);
    return static_cast<double>(tp) / static_cast<double>(cm.total());
}

/// Macro-averaged recall: (1/K) sum TP / (TP + FN).
inline double sensitivity(const ConfusionMatrix& cm) {
    metrics_detail::require_nonempty(cm);
    double acc = 0;
    for (int i = 0; i < cm.k(); ++i) {
        long long support = cm.row_sum(i);
        if (support == 0) {
            throw std::invalid_argument("sensitivity: class '" + cm.labels[i] +
                                        "' has no true samples");
        }
        acc += static_cast<double>(cm.at(i, i)) / static_cast<double>(support);
    }
    return acc / cm.k();
}

/// Macro-averaged true-negative rate: (1/K) sum TN / (TN + FP).
inline double specificity(const ConfusionMatrix& cm) {
    metrics_detail::require_nonempty(cm);
    const long long n = cm.total();
    double acc = 0;
    for (int i = 0; i < cm.k(); ++i) {
        long long fp = cm.col_sum(i) - cm.at(i, i);
        long long tn = n - cm.row_sum(i) - fp;
        if (tn + fp == 0) {
            throw std::invalid_argument("specificity: class '" + cm.labels[i] +
                                        "' has no negative samples");
        }
        acc += static_cast<double>(tn) / static_cast<double>(tn + fp);
    }
    return acc / cm.k();
}

/// (1/N) sum W_ij X_ij, reported in percent.
inline double weighted_error(const ConfusionMatrix& cm, const PenaltyMatrix& penalties) {
    metrics_detail::require_nonempty(cm);
    if (penalties.k() != cm.k()) {
        throw std::invalid_argument("weighted_error: penalty matrix is " +
                                    std::to_string(penalties.k()) + "x" +
                                    std::to_string(penalties.k()) + " but confusion matrix is " +
                                    std::to_string(cm.k()) + "x" + std::to_string(cm.k()));
    }
    double acc = 0;
    for (int i = 0; i < cm.k(); ++i)
        for (int j = 0; j < cm.k(); ++j) acc += penalties.at(i, j) * cm.at(i, j);
    return 100.0 * acc / static_cast<double>(cm.total());
}

}  // namespace opticnet
