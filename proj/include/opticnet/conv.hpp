#pragma once

#include "autodiff.hpp"
#include "gemm.hpp"

namespace opticnet {

enum class Padding { same, valid };
enum class ConvKind { regular, atrous, depthwise, separable, atrous_separable };

struct ConvSpec {
    int kh = 3, kw = 3;
    int stride = 1;
    int dilation = 1;  // r; effective receptive field per axis is (k-1)*r + 1
    int in_c = 0, out_c = 0;
    Padding padding = Padding::same;
    ConvKind kind = ConvKind::regular;

    int eff_kh() const { return (kh - 1) * dilation + 1; }
    int eff_kw() const { return (kw - 1) * dilation + 1; }
};

struct ConvGeom {
    int out_h, out_w;
    int pad_h, pad_w;  // leading pad per axis
};

inline ConvGeom conv_geometry(int in_h, int in_w, const ConvSpec& s) {
    if (s.stride < 1 || s.dilation < 1) {
        throw std::invalid_argument("conv: stride and dilation must be positive");
    }
    ConvGeom g{};
    if (s.padding == Padding::same) {
        g.out_h = (in_h + s.stride - 1) / s.stride;
        g.out_w = (in_w + s.stride - 1) / s.stride;
        int total_h = std::max((g.out_h - 1) * s.stride + s.eff_kh() - in_h, 0);
        int total_w = std::max((g.out_w - 1) * s.stride + s.eff_kw() - in_w, 0);
        g.pad_h = total_h / 2;
        g.pad_w = total_w / 2;
    } else {
        if (in_h < s.eff_kh() || in_w < s.eff_kw()) {
            throw std::invalid_argument("conv: input " + Tensor<float>::shape_str(1, in_h, in_w, 1) +
                                        " smaller than effective kernel");
        }
        g.out_h = (in_h - s.eff_kh()) / s.stride + 1;
        g.out_w = (in_w - s.eff_kw()) / s.stride + 1;
        g.pad_h = g.pad_w = 0;
    }
    return g;
}

namespace detail {

/// Gathers conv patches of image `b` into `col` (out_h*out_w rows,
/// kh*kw*in_c columns), column order (ky, kx, ci) matching a flattened
/// (kh, kw, in_c, out_c) weight tensor.
template <class T>
void im2col(const Tensor<T>& x, int b, const ConvSpec& s, const ConvGeom& g, T* col) {
    const int hc = x.h(), wc = x.w(), cc = x.c();
    const size_t K = static_cast<size_t>(s.kh) * s.kw * cc;
    for (int oy = 0; oy < g.out_h; ++oy) {
        for (int ox = 0; ox < g.out_w; ++ox) {
            T* row = col + (static_cast<size_t>(oy) * g.out_w + ox) * K;
            for (int ky = 0; ky < s.kh; ++ky) {
                int iy = oy * s.stride - g.pad_h + ky * s.dilation;
                for (int kx = 0; kx < s.kw; ++kx) {
                    int ix = ox * s.stride - g.pad_w + kx * s.dilation;
                    T* dst = row + (static_cast<size_t>(ky) * s.kw + kx) * cc;
                    if (iy < 0 || iy >= hc || ix < 0 || ix >= wc) {
                        std::fill(dst, dst + cc, T(0));
                    } else {
                        const T* src = &x.at(b, iy, ix, 0);
                        std::copy(src, src + cc, dst);
                    }
                }
            }
        }
    }
}

/// Scatter-adds a col-shaped gradient back onto image `b` of dx.
template <class T>
void col2im_add(const T* col, int b, const ConvSpec& s, const ConvGeom& g, Tensor<T>& dx) {
    const int hc = dx.h(), wc = dx.w(), cc = dx.c();
    const size_t K = static_cast<size_t>(s.kh) * s.kw * cc;
    for (int oy = 0; oy < g.out_h; ++oy) {
        for (int ox = 0; ox < g.out_w; ++ox) {
            const T* row = col + (static_cast<size_t>(oy) * g.out_w + ox) * K;
            for (int ky = 0; ky < s.kh; ++ky) {
                int iy = oy * s.stride - g.pad_h + ky * s.dilation;
                if (iy < 0 || iy >= hc) continue;
                for (int kx = 0; kx < s.kw; ++kx) {
                    int ix = ox * s.stride - g.pad_w + kx * s.dilation;
                    if (ix < 0 || ix >= wc) continue;
                    const T* src = row + (static_cast<size_t>(ky) * s.kw + kx) * cc;
                    T* dst = &dx.at(b, iy, ix, 0);
                    for (int ci = 0; ci < cc; ++ci) dst[ci] += src[ci];
                }
            }
        }
    }
}

template <class T>
void check_conv_args(const Tensor<T>& x, const Tensor<T>& w, const ConvSpec& s, int want_out) {
    if (x.c() != s.in_c) {
        throw std::invalid_argument("conv: input has " + std::to_string(x.c()) +
                                    " channels, spec expects " + std::to_string(s.in_c));
    }
    if (w.n() != s.kh || w.h() != s.kw || w.w() != s.in_c || w.c() != want_out) {
        throw std::invalid_argument("conv: weight shape " + w.shape_str() + " does not match spec (" +
                                    std::to_string(s.kh) + "," + std::to_string(s.kw) + "," +
                                    std::to_string(s.in_c) + "," + std::to_string(want_out) + ")");
    }
}

}  // namespace detail

/// Dense 2-D cross-correlation; covers the regular and atrous kinds
/// (dilation > 1 places the taps at dilation-spaced offsets).
/// Weight layout (kh, kw, in_c, out_c).
template <class T>
typename Tape<T>::Ref conv2d(Tape<T>& t, typename Tape<T>::Ref x, typename Tape<T>::Ref w,
                             const ConvSpec& spec) {
    detail::check_conv_args(x->value, w->value, spec, spec.out_c);
    const ConvGeom g = conv_geometry(x->value.h(), x->value.w(), spec);
    const int batch = x->value.n();
    const int rows = g.out_h * g.out_w;
    const int K = spec.kh * spec.kw * spec.in_c;

    Tensor<T> out(batch, g.out_h, g.out_w, spec.out_c);
    std::vector<T> col(static_cast<size_t>(rows) * K);
    for (int b = 0; b < batch; ++b) {
        detail::im2col(x->value, b, spec, g, col.data());
        gemm(false, false, rows, spec.out_c, K, T(1), col.data(), K, w->value.data.data(),
             spec.out_c, T(0), &out.at(b, 0, 0, 0), spec.out_c);
    }

    return t.make(std::move(out), [x, w, spec, g, rows, K](Tape<T>&, typename Tape<T>::Node& n) {
        const int batch = x->value.n();
        std::vector<T> col(static_cast<size_t>(rows) * K);
        std::vector<T> dcol(static_cast<size_t>(rows) * K);
        for (int b = 0; b < batch; ++b) {
            detail::im2col(x->value, b, spec, g, col.data());
            // dW (K, out_c) += col^T * dOut
            gemm(true, false, K, spec.out_c, rows, T(1), col.data(), K, &n.grad.at(b, 0, 0, 0),
                 spec.out_c, T(1), w->grad.data.data(), spec.out_c);
            // dCol (rows, K) = dOut * W^T
            gemm(false, true, rows, K, spec.out_c, T(1), &n.grad.at(b, 0, 0, 0), spec.out_c,
                 w->value.data.data(), spec.out_c, T(0), dcol.data(), K);
            detail::col2im_add(dcol.data(), b, spec, g, x->grad);
        }
    });
}

/// Per-channel spatial convolution; weight layout (kh, kw, in_c, 1).
/// Output channel count equals the input's.
template <class T>
typename Tape<T>::Ref depthwise_conv2d(Tape<T>& t, typename Tape<T>::Ref x,
                                       typename Tape<T>::Ref w, const ConvSpec& spec) {
    detail::check_conv_args(x->value, w->value, spec, 1);
    const ConvGeom g = conv_geometry(x->value.h(), x->value.w(), spec);
    const int batch = x->value.n(), cc = spec.in_c;
    const int hc = x->value.h(), wc = x->value.w();

    Tensor<T> out(batch, g.out_h, g.out_w, cc);
    for (int b = 0; b < batch; ++b) {
        for (int oy = 0; oy < g.out_h; ++oy) {
            for (int ox = 0; ox < g.out_w; ++ox) {
                T* o = &out.at(b, oy, ox, 0);
                for (int ky = 0; ky < spec.kh; ++ky) {
                    int iy = oy * spec.stride - g.pad_h + ky * spec.dilation;
                    if (iy < 0 || iy >= hc) continue;
                    for (int kx = 0; kx < spec.kw; ++kx) {
                        int ix = ox * spec.stride - g.pad_w + kx * spec.dilation;
                        if (ix < 0 || ix >= wc) continue;
                        const T* in = &x->value.at(b, iy, ix, 0);
                        const T* k = &w->value.at(ky, kx, 0, 0);
                        for (int ci = 0; ci < cc; ++ci) o[ci] += in[ci] * k[ci];
                    }
                }
            }
        }
    }

    return t.make(std::move(out), [x, w, spec, g](Tape<T>&, typename Tape<T>::Node& n) {
        const int batch = x->value.n(), cc = spec.in_c;
        const int hc = x->value.h(), wc = x->value.w();
        for (int b = 0; b < batch; ++b) {
            for (int oy = 0; oy < g.out_h; ++oy) {
                for (int ox = 0; ox < g.out_w; ++ox) {
                    const T* go = &n.grad.at(b, oy, ox, 0);
                    for (int ky = 0; ky < spec.kh; ++ky) {
                        int iy = oy * spec.stride - g.pad_h + ky * spec.dilation;
                        if (iy < 0 || iy >= hc) continue;
                        for (int kx = 0; kx < spec.kw; ++kx) {
                            int ix = ox * spec.stride - g.pad_w + kx * spec.dilation;
                            if (ix < 0 || ix >= wc) continue;
                            const T* in = &x->value.at(b, iy, ix, 0);
                            const T* k = &w->value.at(ky, kx, 0, 0);
                            T* gin = &x->grad.at(b, iy, ix, 0);
                            T* gk = &w->grad.at(ky, kx, 0, 0);
                            for (int ci = 0; ci < cc; ++ci) {
                                gin[ci] += go[ci] * k[ci];
                                gk[ci] += go[ci] * in[ci];
                            }
                        }
                    }
                }
            }
        }
    });
}

/// Depthwise spatial pass followed by a 1x1 pointwise pass. With
/// spec.dilation > 1 this is the atrous separable variant.
/// w_depth layout (kh, kw, in_c, 1); w_point layout (1, 1, in_c, out_c).
template <class T>
typename Tape<T>::Ref separable_conv2d(Tape<T>& t, typename Tape<T>::Ref x,
                                       typename Tape<T>::Ref w_depth,
                                       typename Tape<T>::Ref w_point, const ConvSpec& spec) {
    ConvSpec depth = spec;
    depth.out_c = spec.in_c;
    auto mid = depthwise_conv2d(t, x, w_depth, depth);
    ConvSpec point;
    point.kh = point.kw = 1;
    point.stride = 1;
    point.dilation = 1;
    point.in_c = spec.in_c;
    point.out_c = spec.out_c;
    point.padding = spec.padding;
    return conv2d(t, mid, w_point, point);
}

}  // namespace opticnet
