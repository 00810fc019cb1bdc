#pragma once

#include "conv.hpp"

namespace opticnet {

// ---- pooling ---------------------------------------------------------------

/// Per-window channelwise maxima. Backward routes gradient only to the
/// argmax position; ties break to the first occurrence in row-major order.
template <class T>
typename Tape<T>::Ref max_pool2d(Tape<T>& t, typename Tape<T>::Ref x, int window, int stride) {
    const Tensor<T>& v = x->value;
    if (window < 1 || stride < 1) throw std::invalid_argument("max_pool2d: window and stride must be positive");
    if (v.h() < window || v.w() < window) {
        throw std::invalid_argument("max_pool2d: window " + std::to_string(window) +
                                    " larger than input " + v.shape_str());
    }
    const int oh = (v.h() - window) / stride + 1;
    const int ow = (v.w() - window) / stride + 1;
    const int batch = v.n(), cc = v.c();

    Tensor<T> out(batch, oh, ow, cc);
    auto argmax = std::make_shared<std::vector<int>>(out.size());
    for (int b = 0; b < batch; ++b) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                for (int ci = 0; ci < cc; ++ci) {
                    T best = -std::numeric_limits<T>::infinity();
                    T second = best;
                    int best_idx = -1;
                    for (int ky = 0; ky < window; ++ky) {
                        for (int kx = 0; kx < window; ++kx) {
                            int iy = oy * stride + ky, ix = ox * stride + kx;
                            T val = v.at(b, iy, ix, ci);
                            if (val > best) {
                                second = best;
                                best = val;
                                best_idx = (iy * v.w() + ix) * cc + ci;
                            } else if (val > second) {
                                second = val;
                            }
                        }
                    }
                    out.at(b, oy, ox, ci) = best;
                    if (window > 1) t.note_kink(best - second);
                    (*argmax)[((static_cast<size_t>(b) * oh + oy) * ow + ox) * cc + ci] =
                        best_idx;
                }
            }
        }
    }

    return t.make(std::move(out), [x, argmax](Tape<T>&, typename Tape<T>::Node& n) {
        const size_t per_image = static_cast<size_t>(x->value.h()) * x->value.w() * x->value.c();
        const size_t out_per = n.grad.size() / n.grad.n();
        for (int b = 0; b < n.grad.n(); ++b) {
            for (size_t i = 0; i < out_per; ++i) {
                size_t oi = b * out_per + i;
                x->grad.data[b * per_image + (*argmax)[oi]] += n.grad.data[oi];
            }
        }
    });
}

/// Spatial mean, (n, h, w, c) -> (n, 1, 1, c).
template <class T>
typename Tape<T>::Ref global_avg_pool(Tape<T>& t, typename Tape<T>::Ref x) {
    const Tensor<T>& v = x->value;
    const int batch = v.n(), cc = v.c();
    const T inv = T(1) / (T(v.h()) * T(v.w()));
    Tensor<T> out(batch, 1, 1, cc);
    for (int b = 0; b < batch; ++b)
        for (int j = 0; j < v.h(); ++j)
            for (int k = 0; k < v.w(); ++k)
                for (int ci = 0; ci < cc; ++ci) out.at(b, 0, 0, ci) += v.at(b, j, k, ci) * inv;
    return t.make(std::move(out), [x, inv](Tape<T>&, typename Tape<T>::Node& n) {
        const int cc = x->value.c();
        for (int b = 0; b < x->value.n(); ++b)
            for (int j = 0; j < x->value.h(); ++j)
                for (int k = 0; k < x->value.w(); ++k)
                    for (int ci = 0; ci < cc; ++ci)
                        x->grad.at(b, j, k, ci) += n.grad.at(b, 0, 0, ci) * inv;
    });
}

// ---- bilinear upsampling ---------------------------------------------------

namespace detail {

struct InterpAxis {
    std::vector<int> lo, hi;
    std::vector<double> frac;
};

/// Half-pixel-centre (align-corners-false) source coordinates.
inline InterpAxis interp_axis(int in, int out) {
    InterpAxis a;
    a.lo.resize(out);
    a.hi.resize(out);
    a.frac.resize(out);
    double scale = static_cast<double>(in) / out;
    for (int d = 0; d < out; ++d) {
        double src = (d + 0.5) * scale - 0.5;
        if (src < 0) src = 0;
        int i0 = static_cast<int>(src);
        if (i0 > in - 1) i0 = in - 1;
        a.lo[d] = i0;
        a.hi[d] = std::min(i0 + 1, in - 1);
        a.frac[d] = src - i0;
    }
    return a;
}

}  // namespace detail

/// Bilinear interpolation to (out_h, out_w); backward distributes the
/// upstream gradient by the same interpolation weights.
template <class T>
typename Tape<T>::Ref bilinear_upsample(Tape<T>& t, typename Tape<T>::Ref x, int out_h, int out_w) {
    const Tensor<T>& v = x->value;
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("bilinear_upsample: target dims must be positive");
    if (out_h < v.h() || out_w < v.w()) {
        throw std::invalid_argument("bilinear_upsample: target " + std::to_string(out_h) + "x" +
                                    std::to_string(out_w) + " smaller than input " + v.shape_str());
    }
    auto ay = std::make_shared<detail::InterpAxis>(detail::interp_axis(v.h(), out_h));
    auto ax = std::make_shared<detail::InterpAxis>(detail::interp_axis(v.w(), out_w));
    const int batch = v.n(), cc = v.c();

    Tensor<T> out(batch, out_h, out_w, cc);
    for (int b = 0; b < batch; ++b) {
        for (int oy = 0; oy < out_h; ++oy) {
            T fy = static_cast<T>(ay->frac[oy]);
            for (int ox = 0; ox < out_w; ++ox) {
                T fx = static_cast<T>(ax->frac[ox]);
                const T* p00 = &v.at(b, ay->lo[oy], ax->lo[ox], 0);
                const T* p01 = &v.at(b, ay->lo[oy], ax->hi[ox], 0);
                const T* p10 = &v.at(b, ay->hi[oy], ax->lo[ox], 0);
                const T* p11 = &v.at(b, ay->hi[oy], ax->hi[ox], 0);
                T* o = &out.at(b, oy, ox, 0);
                for (int ci = 0; ci < cc; ++ci) {
                    T top = p00[ci] + fx * (p01[ci] - p00[ci]);
                    T bot = p10[ci] + fx * (p11[ci] - p10[ci]);
                    o[ci] = top + fy * (bot - top);
                }
            }
        }
    }

    return t.make(std::move(out), [x, ay, ax](Tape<T>&, typename Tape<T>::Node& n) {
        const int cc = x->value.c();
        for (int b = 0; b < n.grad.n(); ++b) {
            for (int oy = 0; oy < n.grad.h(); ++oy) {
                T fy = static_cast<T>(ay->frac[oy]);
                for (int ox = 0; ox < n.grad.w(); ++ox) {
                    T fx = static_cast<T>(ax->frac[ox]);
                    for (int ci = 0; ci < cc; ++ci) {
                        T g = n.grad.at(b, oy, ox, ci);
                        x->grad.at(b, ay->lo[oy], ax->lo[ox], ci) += g * (1 - fy) * (1 - fx);
                        x->grad.at(b, ay->lo[oy], ax->hi[ox], ci) += g * (1 - fy) * fx;
                        x->grad.at(b, ay->hi[oy], ax->lo[ox], ci) += g * fy * (1 - fx);
                        x->grad.at(b, ay->hi[oy], ax->hi[ox], ci) += g * fy * fx;
                    }
                }
            }
        }
    });
}

// ---- batch normalization ---------------------------------------------------

enum class BNMode { train, infer };

template <class T>
struct BatchNormState {
    Variable<T> gamma, beta;
    Tensor<T> running_mean, running_var;
    T momentum = T(0.99);
    T epsilon = T(1e-3);

    BatchNormState() = default;
    explicit BatchNormState(int channels, std::string path = "")
        : gamma(Tensor<T>::ones(1, 1, 1, channels), true, path + "/gamma"),
          beta(Tensor<T>::zeros(1, 1, 1, channels), true, path + "/beta"),
          running_mean(Tensor<T>::zeros(1, 1, 1, channels)),
          running_var(Tensor<T>::ones(1, 1, 1, channels)) {}

    int channels() const { return gamma.value.c(); }
};

template <class T>
typename Tape<T>::Ref batch_norm(Tape<T>& t, typename Tape<T>::Ref x, BatchNormState<T>& state,
                                 BNMode mode) {
    const Tensor<T>& v = x->value;
    if (state.epsilon <= T(0)) throw std::invalid_argument("batch_norm: epsilon must be > 0");
    if (state.channels() != v.c()) {
        throw std::invalid_argument("batch_norm: state has " + std::to_string(state.channels()) +
                                    " channels, input " + v.shape_str());
    }
    const int cc = v.c();
    const size_t m = v.size() / cc;  // reduction count per channel

    auto g = t.leaf(state.gamma);
    auto be = t.leaf(state.beta);

    auto mean = std::make_shared<std::vector<T>>(cc, T(0));
    auto inv_std = std::make_shared<std::vector<T>>(cc, T(0));

    if (mode == BNMode::train) {
        std::vector<T> var(cc, T(0));
        for (size_t i = 0; i < v.size(); ++i) (*mean)[i % cc] += v.data[i];
        for (int ci = 0; ci < cc; ++ci) (*mean)[ci] /= T(m);
        for (size_t i = 0; i < v.size(); ++i) {
            T d = v.data[i] - (*mean)[i % cc];
            var[i % cc] += d * d;
        }
        for (int ci = 0; ci < cc; ++ci) {
            var[ci] /= T(m);
            (*inv_std)[ci] = T(1) / std::sqrt(var[ci] + state.epsilon);
            state.running_mean.data[ci] =
                state.momentum * state.running_mean.data[ci] + (T(1) - state.momentum) * (*mean)[ci];
            state.running_var.data[ci] =
                state.momentum * state.running_var.data[ci] + (T(1) - state.momentum) * var[ci];
        }
    } else {
        for (int ci = 0; ci < cc; ++ci) {
            (*mean)[ci] = state.running_mean.data[ci];
            (*inv_std)[ci] = T(1) / std::sqrt(state.running_var.data[ci] + state.epsilon);
        }
    }

    Tensor<T> out = v;
    for (size_t i = 0; i < out.size(); ++i) {
        int ci = i % cc;
        out.data[i] = g->value.data[ci] * (v.data[i] - (*mean)[ci]) * (*inv_std)[ci] +
                      be->value.data[ci];
    }

    if (mode == BNMode::infer) {
        return t.make(std::move(out), [x, g, be, mean, inv_std, cc](Tape<T>&, typename Tape<T>::Node& n) {
            for (size_t i = 0; i < n.grad.size(); ++i) {
                int ci = i % cc;
                T xhat = (x->value.data[i] - (*mean)[ci]) * (*inv_std)[ci];
                x->grad.data[i] += n.grad.data[i] * g->value.data[ci] * (*inv_std)[ci];
                g->grad.data[ci] += n.grad.data[i] * xhat;
                be->grad.data[ci] += n.grad.data[i];
            }
        });
    }

    // train mode: backward flows through the batch statistics too
    return t.make(std::move(out), [x, g, be, mean, inv_std, cc, m](Tape<T>&, typename Tape<T>::Node& n) {
        std::vector<T> sum_dxhat(cc, T(0)), sum_dxhat_xhat(cc, T(0));
        const size_t total = n.grad.size();
        for (size_t i = 0; i < total; ++i) {
            int ci = i % cc;
            T xhat = (x->value.data[i] - (*mean)[ci]) * (*inv_std)[ci];
            T dxhat = n.grad.data[i] * g->value.data[ci];
            sum_dxhat[ci] += dxhat;
            sum_dxhat_xhat[ci] += dxhat * xhat;
            g->grad.data[ci] += n.grad.data[i] * xhat;
            be->grad.data[ci] += n.grad.data[i];
        }
        const T invm = T(1) / T(m);
        for (size_t i = 0; i < total; ++i) {
            int ci = i % cc;
            T xhat = (x->value.data[i] - (*mean)[ci]) * (*inv_std)[ci];
            T dxhat = n.grad.data[i] * g->value.data[ci];
            x->grad.data[i] +=
                (*inv_std)[ci] * (dxhat - invm * sum_dxhat[ci] - invm * xhat * sum_dxhat_xhat[ci]);
        }
    });
}

// ---- dense -----------------------------------------------------------------

/// Affine map over the flattened feature dim. w layout (1, 1, in, out);
/// b, when given, layout (1, 1, 1, out). Output (n, 1, 1, out).
template <class T>
typename Tape<T>::Ref dense(Tape<T>& t, typename Tape<T>::Ref x, typename Tape<T>::Ref w,
                            typename Tape<T>::Ref b = nullptr) {
    const Tensor<T>& v = x->value;
    const int features = v.h() * v.w() * v.c();
    const int out_f = w->value.c();
    if (w->value.w() != features) {
        throw std::invalid_argument("dense: input features " + std::to_string(features) +
                                    " do not match weight rows " + std::to_string(w->value.w()));
    }
    const int batch = v.n();
    Tensor<T> out(batch, 1, 1, out_f);
    gemm(false, false, batch, out_f, features, T(1), v.data.data(), features,
         w->value.data.data(), out_f, T(0), out.data.data(), out_f);
    if (b) {
        for (int i = 0; i < batch; ++i)
            for (int j = 0; j < out_f; ++j) out.at(i, 0, 0, j) += b->value.data[j];
    }

    return t.make(std::move(out), [x, w, b, features, out_f](Tape<T>&, typename Tape<T>::Node& n) {
        const int batch = x->value.n();
        gemm(true, false, features, out_f, batch, T(1), x->value.data.data(), features,
             n.grad.data.data(), out_f, T(1), w->grad.data.data(), out_f);
        gemm(false, true, batch, features, out_f, T(1), n.grad.data.data(), out_f,
             w->value.data.data(), out_f, T(1), x->grad.data.data(), features);
        if (b) {
            for (int i = 0; i < batch; ++i)
                for (int j = 0; j < out_f; ++j) b->grad.data[j] += n.grad.at(i, 0, 0, j);
        }
    });
}

// ---- loss ------------------------------------------------------------------

/// Mean over the batch of -log softmax(logits)[label], stabilized by
/// max-subtraction. Gradient is (softmax - onehot) / batch.
template <class T>
typename Tape<T>::Ref softmax_cross_entropy(Tape<T>& t, typename Tape<T>::Ref logits,
                                            const std::vector<int>& labels) {
    const Tensor<T>& v = logits->value;
    const int batch = v.n(), k = v.c();
    if (static_cast<int>(labels.size()) != batch) {
        throw std::invalid_argument("softmax_cross_entropy: got " + std::to_string(labels.size()) +
                                    " labels for batch " + std::to_string(batch));
    }
    for (int lbl : labels) {
        if (lbl < 0 || lbl >= k) {
            throw std::invalid_argument("softmax_cross_entropy: label " + std::to_string(lbl) +
                                        " outside [0," + std::to_string(k) + ")");
        }
    }
    auto probs = std::make_shared<Tensor<T>>(batch, 1, 1, k);
    T loss = T(0);
    for (int i = 0; i < batch; ++i) {
        T mx = v.at(i, 0, 0, 0);
        for (int j = 1; j < k; ++j) mx = std::max(mx, v.at(i, 0, 0, j));
        T denom = T(0);
        for (int j = 0; j < k; ++j) {
            T e = std::exp(v.at(i, 0, 0, j) - mx);
            probs->at(i, 0, 0, j) = e;
            denom += e;
        }
        for (int j = 0; j < k; ++j) probs->at(i, 0, 0, j) /= denom;
        loss -= std::log(probs->at(i, 0, 0, labels[i]));
    }
    loss /= T(batch);

    auto lbls = std::make_shared<std::vector<int>>(labels);
    return t.make(Tensor<T>::scalar(loss),
                  [logits, probs, lbls](Tape<T>&, typename Tape<T>::Node& n) {
                      const int batch = probs->n(), k = probs->c();
                      T g = n.grad.data[0] / T(batch);
                      for (int i = 0; i < batch; ++i) {
                          for (int j = 0; j < k; ++j) {
                              T p = probs->at(i, 0, 0, j);
                              logits->grad.at(i, 0, 0, j) += g * (p - ((*lbls)[i] == j ? T(1) : T(0)));
                          }
                      }
                  });
}

}  // namespace opticnet
