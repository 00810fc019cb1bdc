#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>

#include "tensor.hpp"

namespace opticnet {

/// A trainable (or frozen) parameter. Lives outside any tape; gradients
/// accumulate into `grad` across backward passes until zero_grad.
template <class T>
struct Variable {
    Tensor<T> value;
    Tensor<T> grad;
    bool trainable = true;
    std::string path;

    Variable() = default;
    explicit Variable(Tensor<T> v, bool train = true, std::string p = "")
        : value(std::move(v)), trainable(train), path(std::move(p)) {
        grad = Tensor<T>(value.n(), value.h(), value.w(), value.c());
    }

    void zero_grad() { grad.fill(T(0)); }
};

template <class T, class Range>
void zero_grad(Range& vars) {
    for (auto* v : vars) v->zero_grad();
}

/// Define-by-run reverse-mode tape. Nodes are appended in forward
/// (topological) order; backward replays them once in reverse.
template <class T>
class Tape {
public:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;  // same shape as value, zeroed at backward start
        std::function<void(Tape&, Node&)> back;
        Variable<T>* leaf = nullptr;
    };
    using Ref = Node*;

    Ref constant(Tensor<T> v) {
        auto& n = push(std::move(v));
        return &n;
    }

    /// Insert a parameter as a leaf node; backward adds into var.grad.
    Ref leaf(Variable<T>& var) {
        auto& n = push(var.value);
        n.leaf = &var;
        return &n;
    }

    Ref make(Tensor<T> v, std::function<void(Tape&, Node&)> back) {
        auto& n = push(std::move(v));
        n.back = std::move(back);
        return &n;
    }

    void backward(Ref loss) {
        if (nodes_.empty()) throw std::logic_error("backward: empty tape");
        if (!loss->value.is_scalar()) {
            throw std::invalid_argument("backward: loss must be scalar, got " +
                                        loss->value.shape_str());
        }
        for (auto& n : nodes_) {
            n->grad = Tensor<T>(n->value.n(), n->value.h(), n->value.w(), n->value.c());
        }
        loss->grad.data[0] = T(1);
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
            Node& n = **it;
            if (n.back) n.back(*this, n);
            if (n.leaf && n.leaf->trainable) {
                for (size_t i = 0; i < n.grad.size(); ++i) n.leaf->grad.data[i] += n.grad.data[i];
            }
        }
    }

    size_t num_nodes() const { return nodes_.size(); }

    /// Distance of the closest forward activation to a non-differentiable
    /// point (ReLU zero, max-pool tie). Gradient probes use this to reject
    /// and resample near-kink inputs.
    T kink_margin() const { return kink_margin_; }
    void note_kink(T margin) { kink_margin_ = std::min(kink_margin_, margin); }

private:
    Node& push(Tensor<T> v) {
        nodes_.push_back(std::make_unique<Node>());
        nodes_.back()->value = std::move(v);
        return *nodes_.back();
    }

    std::vector<std::unique_ptr<Node>> nodes_;
    T kink_margin_ = std::numeric_limits<T>::infinity();
};

// ---- elementwise ops -------------------------------------------------------

/// a + b. b may instead have batch dim 1 and broadcast over a's batch.
template <class T>
typename Tape<T>::Ref add(Tape<T>& t, typename Tape<T>::Ref a, typename Tape<T>::Ref b) {
    const Tensor<T>& av = a->value;
    const Tensor<T>& bv = b->value;
    bool bcast = !av.same_shape(bv);
    if (bcast) {
        if (!(bv.n() == 1 && av.h() == bv.h() && av.w() == bv.w() && av.c() == bv.c())) {
            throw std::invalid_argument("add: shape mismatch " + av.shape_str() + " vs " +
                                        bv.shape_str());
        }
    }
    Tensor<T> out = av;
    size_t per = bv.size();
    for (size_t i = 0; i < out.size(); ++i) out.data[i] += bv.data[i % per];
    return t.make(std::move(out), [a, b, per](Tape<T>&, typename Tape<T>::Node& n) {
        for (size_t i = 0; i < n.grad.size(); ++i) {
            a->grad.data[i] += n.grad.data[i];
            b->grad.data[i % per] += n.grad.data[i];
        }
    });
}

/// Elementwise (Hadamard) product; shapes must match exactly.
template <class T>
typename Tape<T>::Ref mul(Tape<T>& t, typename Tape<T>::Ref a, typename Tape<T>::Ref b) {
    check_same_shape(a->value, b->value, "mul");
    Tensor<T> out = a->value;
    for (size_t i = 0; i < out.size(); ++i) out.data[i] *= b->value.data[i];
    return t.make(std::move(out), [a, b](Tape<T>&, typename Tape<T>::Node& n) {
        for (size_t i = 0; i < n.grad.size(); ++i) {
            a->grad.data[i] += n.grad.data[i] * b->value.data[i];
            b->grad.data[i] += n.grad.data[i] * a->value.data[i];
        }
    });
}

template <class T>
typename Tape<T>::Ref sum(Tape<T>& t, typename Tape<T>::Ref a) {
    Tensor<T> out = Tensor<T>::scalar(a->value.sum());
    return t.make(std::move(out), [a](Tape<T>&, typename Tape<T>::Node& n) {
        T g = n.grad.data[0];
        for (auto& v : a->grad.data) v += g;
    });
}

template <class T>
typename Tape<T>::Ref relu(Tape<T>& t, typename Tape<T>::Ref a) {
    Tensor<T> out = a->value;
    for (auto& v : out.data) {
        t.note_kink(std::abs(v));
        if (v < T(0)) v = T(0);
    }
    return t.make(std::move(out), [a](Tape<T>&, typename Tape<T>::Node& n) {
        for (size_t i = 0; i < n.grad.size(); ++i) {
            if (a->value.data[i] > T(0)) a->grad.data[i] += n.grad.data[i];
        }
    });
}

template <class T>
typename Tape<T>::Ref sigmoid(Tape<T>& t, typename Tape<T>::Ref a) {
    Tensor<T> out = a->value;
    for (auto& v : out.data) v = T(1) / (T(1) + std::exp(-v));
    typename Tape<T>::Ref r = t.make(std::move(out), nullptr);
    r->back = [a, r](Tape<T>&, typename Tape<T>::Node& n) {
        for (size_t i = 0; i < n.grad.size(); ++i) {
            T s = r->value.data[i];
            a->grad.data[i] += n.grad.data[i] * s * (T(1) - s);
        }
    };
    return r;
}

}  // namespace opticnet
