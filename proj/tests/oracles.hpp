// Test-only reference implementations. These stay deliberately naive
// (scalar loops, no GEMM, no shared code with the library's forward
// paths) so they can serve as independent oracles.
#pragma once

#include <opticnet/conv.hpp>

namespace oracle {

using opticnet::ConvGeom;
using opticnet::ConvSpec;
using opticnet::Tensor;

/// Direct quadruple-loop cross-correlation with dilation-spaced taps.
template <class T>
Tensor<T> conv2d_direct(const Tensor<T>& x, const Tensor<T>& w, const ConvSpec& s) {
    const ConvGeom g = opticnet::conv_geometry(x.h(), x.w(), s);
    Tensor<T> out(x.n(), g.out_h, g.out_w, s.out_c);
    for (int b = 0; b < x.n(); ++b)
        for (int oy = 0; oy < g.out_h; ++oy)
            for (int ox = 0; ox < g.out_w; ++ox)
                for (int oc = 0; oc < s.out_c; ++oc) {
                    T acc = 0;
                    for (int ky = 0; ky < s.kh; ++ky)
                        for (int kx = 0; kx < s.kw; ++kx) {
                            int iy = oy * s.stride - g.pad_h + ky * s.dilation;
                            int ix = ox * s.stride - g.pad_w + kx * s.dilation;
                            if (iy < 0 || iy >= x.h() || ix < 0 || ix >= x.w()) continue;
                            for (int ci = 0; ci < s.in_c; ++ci)
                                acc += x.at(b, iy, ix, ci) * w.at(ky, kx, ci, oc);
                        }
                    out.at(b, oy, ox, oc) = acc;
                }
    return out;
}

/// Per-channel spatial pass, weight (kh, kw, c, 1).
template <class T>
Tensor<T> depthwise_direct(const Tensor<T>& x, const Tensor<T>& w, const ConvSpec& s) {
    ConvSpec d = s;
    d.out_c = s.in_c;
    const ConvGeom g = opticnet::conv_geometry(x.h(), x.w(), d);
    Tensor<T> out(x.n(), g.out_h, g.out_w, s.in_c);
    for (int b = 0; b < x.n(); ++b)
        for (int oy = 0; oy < g.out_h; ++oy)
            for (int ox = 0; ox < g.out_w; ++ox)
                for (int ci = 0; ci < s.in_c; ++ci) {
                    T acc = 0;
                    for (int ky = 0; ky < s.kh; ++ky)
                        for (int kx = 0; kx < s.kw; ++kx) {
                            int iy = oy * s.stride - g.pad_h + ky * s.dilation;
                            int ix = ox * s.stride - g.pad_w + kx * s.dilation;
                            if (iy < 0 || iy >= x.h() || ix < 0 || ix >= x.w()) continue;
                            acc += x.at(b, iy, ix, ci) * w.at(ky, kx, ci, 0);
                        }
                    out.at(b, oy, ox, ci) = acc;
                }
    return out;
}

/// Loop max pooling.
template <class T>
Tensor<T> max_pool_direct(const Tensor<T>& x, int window, int stride) {
    int oh = (x.h() - window) / stride + 1;
    int ow = (x.w() - window) / stride + 1;
    Tensor<T> out(x.n(), oh, ow, x.c());
    for (int b = 0; b < x.n(); ++b)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox)
                for (int ci = 0; ci < x.c(); ++ci) {
                    T best = x.at(b, oy * stride, ox * stride, ci);
                    for (int ky = 0; ky < window; ++ky)
                        for (int kx = 0; kx < window; ++kx)
                            best = std::max(best, x.at(b, oy * stride + ky, ox * stride + kx, ci));
                    out.at(b, oy, ox, ci) = best;
                }
    return out;
}

/// Per-output-pixel closed-form bilinear weights (half-pixel centres).
template <class T>
Tensor<T> bilinear_direct(const Tensor<T>& x, int out_h, int out_w) {
    Tensor<T> out(x.n(), out_h, out_w, x.c());
    double sy = static_cast<double>(x.h()) / out_h;
    double sx = static_cast<double>(x.w()) / out_w;
    for (int b = 0; b < x.n(); ++b)
        for (int oy = 0; oy < out_h; ++oy)
            for (int ox = 0; ox < out_w; ++ox) {
                double fy = std::max((oy + 0.5) * sy - 0.5, 0.0);
                double fx = std::max((ox + 0.5) * sx - 0.5, 0.0);
                int y0 = std::min(static_cast<int>(fy), x.h() - 1);
                int x0 = std::min(static_cast<int>(fx), x.w() - 1);
                int y1 = std::min(y0 + 1, x.h() - 1);
                int x1 = std::min(x0 + 1, x.w() - 1);
                double wy = fy - y0, wx = fx - x0;
                for (int ci = 0; ci < x.c(); ++ci) {
                    double v = (1 - wy) * (1 - wx) * x.at(b, y0, x0, ci) +
                               (1 - wy) * wx * x.at(b, y0, x1, ci) +
                               wy * (1 - wx) * x.at(b, y1, x0, ci) +
                               wy * wx * x.at(b, y1, x1, ci);
                    out.at(b, oy, ox, ci) = static_cast<T>(v);
                }
            }
    return out;
}

/// Triple-loop matmul for the dense layer, x (n, features) * w (features, out).
template <class T>
Tensor<T> dense_direct(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias = nullptr) {
    int features = x.h() * x.w() * x.c();
    int out_f = w.c();
    Tensor<T> out(x.n(), 1, 1, out_f);
    for (int i = 0; i < x.n(); ++i)
        for (int j = 0; j < out_f; ++j) {
            T acc = bias ? bias->data[j] : T(0);
            for (int f = 0; f < features; ++f)
                acc += x.data[static_cast<size_t>(i) * features + f] *
                       w.data[static_cast<size_t>(f) * out_f + j];
            out.at(i, 0, 0, j) = acc;
        }
    return out;
}

template <class T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
    double worst = 0;
    for (size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(static_cast<double>(a.data[i]) - b.data[i]));
    return worst;
}

}  // namespace oracle
