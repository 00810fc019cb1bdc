#pragma once

#include <algorithm>

#include "autodiff.hpp"

namespace opticnet {

/// Published training hyperparameters; input size and step cap are the only
/// knobs the desk-scale experiments change.
template <class T>
struct TrainConfig {
    int batch_size = 8;
    int epochs = 30;
    T lr = T(1e-4);
    T gamma = T(0.1);          // step decay on plateau
    int patience = 6;          // epochs without improvement before decay
    T lr_min = T(1e-8);
    T beta1 = T(0.90);
    T beta2 = T(0.99);
    T epsilon = T(1e-8);
    uint64_t seed = 0;
    long long max_steps = -1;  // optimizer-step cap; -1 = unlimited
    T stop_train_acc = T(-1);  // stop once an epoch reaches this; -1 = never

    void validate() const {
        if (!(gamma > T(0) && gamma < T(1))) throw std::invalid_argument("train config: 0 < gamma < 1 required");
        if (lr_min > lr) throw std::invalid_argument("train config: lr_min must not exceed lr");
        if (patience < 1) throw std::invalid_argument("train config: patience >= 1 required");
        if (batch_size < 1 || epochs < 0) throw std::invalid_argument("train config: bad batch size or epochs");
    }
};

/// Adam with bias correction. Moment buffers are keyed by position in the
/// parameter list, which must stay stable across steps.
template <class T>
class Adam {
public:
    Adam(T beta1 = T(0.90), T beta2 = T(0.99), T epsilon = T(1e-8))
        : beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

    void step(const std::vector<Variable<T>*>& params, T lr) {
        if (m_.empty()) {
            for (auto* p : params) {
                m_.push_back(Tensor<T>(p->value.n(), p->value.h(), p->value.w(), p->value.c()));
                v_.push_back(m_.back());
            }
        }
        if (m_.size() != params.size()) {
            throw std::invalid_argument("adam: parameter list changed size mid-run");
        }
        ++t_;
        const T bc1 = T(1) - std::pow(beta1_, T(t_));
        const T bc2 = T(1) - std::pow(beta2_, T(t_));
        for (size_t i = 0; i < params.size(); ++i) {
            Variable<T>& p = *params[i];
            check_same_shape(p.value, m_[i], "adam");
            for (size_t j = 0; j < p.value.size(); ++j) {
                T g = p.grad.data[j];
                m_[i].data[j] = beta1_ * m_[i].data[j] + (T(1) - beta1_) * g;
                v_[i].data[j] = beta2_ * v_[i].data[j] + (T(1) - beta2_) * g * g;
                T mhat = m_[i].data[j] / bc1;
                T vhat = v_[i].data[j] / bc2;
                p.value.data[j] -= lr * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

    long long timestep() const { return t_; }

private:
    T beta1_, beta2_, eps_;
    long long t_ = 0;
    std::vector<Tensor<T>> m_, v_;
};

/// Reduce-on-plateau: after `patience` consecutive epochs with no strict
/// improvement of the best validation loss, lr <- max(lr * gamma, lr_min).
template <class T>
class PlateauSchedule {
public:
    PlateauSchedule(T lr, T gamma, int patience, T lr_min)
        : lr_(lr), gamma_(gamma), patience_(patience), lr_min_(lr_min) {
        if (patience < 1) throw std::invalid_argument("plateau schedule: patience >= 1 required");
    }

    /// Call once per epoch with that epoch's validation loss; returns the lr
    /// to use from here on.
    T step(T val_loss) {
        if (!seen_any_) {
            seen_any_ = true;
            best_ = val_loss;
            since_ = 1;
        } else if (val_loss < best_) {
            best_ = val_loss;
            since_ = 0;
        } else {
            ++since_;
        }
        if (since_ >= patience_) {
            lr_ = std::max(lr_ * gamma_, lr_min_);
            since_ = 0;
        }
        return lr_;
    }

    T lr() const { return lr_; }
    T best() const { return best_; }

private:
    T lr_, gamma_;
    int patience_;
    T lr_min_;
    T best_ = std::numeric_limits<T>::infinity();
    int since_ = 0;
    bool seen_any_ = false;
};

/// k disjoint, size-balanced, seed-deterministic index folds.
inline std::vector<std::vector<int>> kfold_split(int n_samples, int k, uint64_t seed) {
    if (k < 1 || k > n_samples) {
        throw std::invalid_argument("kfold_split: need 1 <= k <= n_samples, got k=" +
                                    std::to_string(k) + " n=" + std::to_string(n_samples));
    }
    std::vector<int> idx(n_samples);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::vector<int>> folds(k);
    for (int i = 0; i < n_samples; ++i) folds[i % k].push_back(idx[i]);
    return folds;
}

}  // namespace opticnet
