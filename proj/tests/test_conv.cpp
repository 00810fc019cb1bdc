#include <gtest/gtest.h>

#include <opticnet/gradcheck.hpp>
#include <opticnet/layers.hpp>

#include "oracles.hpp"

using namespace opticnet;
using D = double;

namespace {

ConvSpec spec(int k, int in_c, int out_c, int stride = 1, int dilation = 1,
              Padding pad = Padding::same) {
    ConvSpec s;
    s.kh = s.kw = k;
    s.in_c = in_c;
    s.out_c = out_c;
    s.stride = stride;
    s.dilation = dilation;
    s.padding = pad;
    return s;
}

}  // namespace

TEST(Conv2d, IdentityOneByOneKernel) {
    Tape<D> t;
    auto x = t.constant(Tensor<D>::uniform(1, 4, 4, 3, 1));
    Tensor<D> w(1, 1, 3, 3);
    for (int i = 0; i < 3; ++i) w.at(0, 0, i, i) = 1;
    auto r = conv2d(t, x, t.constant(w), spec(1, 3, 3));
    EXPECT_EQ(r->value.data, x->value.data);
}

TEST(Conv2d, CountingWindowValidPadding) {
    Tape<D> t;
    auto x = t.constant(Tensor<D>::ones(1, 5, 5, 1));
    auto w = t.constant(Tensor<D>::ones(3, 3, 1, 1));
    auto r = conv2d(t, x, w, spec(3, 1, 1, 1, 1, Padding::valid));
    ASSERT_EQ(r->value.h(), 3);
    ASSERT_EQ(r->value.w(), 3);
    for (auto v : r->value.data) EXPECT_DOUBLE_EQ(v, 9.0);
}

TEST(Conv2d, MatchesDirectSummationOracle) {
    ConvSpec s = spec(3, 3, 4);
    Tensor<D> xv = Tensor<D>::uniform(1, 6, 6, 3, 11);
    Tensor<D> wv = Tensor<D>::uniform(3, 3, 3, 4, 12);
    Tape<D> t;
    auto r = conv2d(t, t.constant(xv), t.constant(wv), s);
    EXPECT_LT(oracle::max_abs_diff(r->value, oracle::conv2d_direct(xv, wv, s)), 1e-12);
}

TEST(Conv2d, BackwardMatchesFiniteDifferences) {
    ConvSpec s = spec(3, 3, 4, 1, 1, Padding::valid);
    Tensor<D> xv = Tensor<D>::uniform(1, 6, 6, 3, 13);
    Tensor<D> wv = Tensor<D>::uniform(3, 3, 3, 4, 14, -0.5, 0.5);

    Variable<D> x(xv), w(wv);
    Tape<D> t;
    t.backward(sum(t, conv2d(t, t.leaf(x), t.leaf(w), s)));

    auto f_x = [&](const Tensor<D>& p) {
        Tape<D> tt;
        return sum(tt, conv2d(tt, tt.constant(p), tt.constant(wv), s))->value.data[0];
    };
    auto f_w = [&](const Tensor<D>& p) {
        Tape<D> tt;
        return sum(tt, conv2d(tt, tt.constant(xv), tt.constant(p), s))->value.data[0];
    };
    EXPECT_LT(max_rel_err(x.grad, finite_diff(f_x, xv)), 1e-6);
    EXPECT_LT(max_rel_err(w.grad, finite_diff(f_w, wv)), 1e-6);
}

TEST(Conv2d, ChannelMismatchError) {
    Tape<D> t;
    auto x = t.constant(Tensor<D>::zeros(1, 4, 4, 2));
    auto w = t.constant(Tensor<D>::zeros(3, 3, 3, 4));
    EXPECT_THROW(conv2d(t, x, w, spec(3, 3, 4)), std::invalid_argument);
}

// Atrous equivalence: a 2x2 dilation-2 kernel is a 3x3 kernel whose centre
// row and column are zero. Outputs must be bitwise equal.
TEST(Atrous, EqualsZeroInflatedKernelBitwise) {
    Tensor<D> xv = Tensor<D>::uniform(2, 7, 7, 3, 21);
    Tensor<D> w2 = Tensor<D>::uniform(2, 2, 3, 5, 22);
    Tensor<D> w3(3, 3, 3, 5);
    for (int ky : {0, 1})
        for (int kx : {0, 1})
            for (int ci = 0; ci < 3; ++ci)
                for (int oc = 0; oc < 5; ++oc) w3.at(2 * ky, 2 * kx, ci, oc) = w2.at(ky, kx, ci, oc);

    Tape<D> t;
    auto atrous = conv2d(t, t.constant(xv), t.constant(w2), spec(2, 3, 5, 1, 2));
    auto inflated = conv2d(t, t.constant(xv), t.constant(w3), spec(3, 3, 5, 1, 1));
    EXPECT_EQ(atrous->value.data, inflated->value.data);
}

TEST(Atrous, ReceptiveFieldLaw) {
    ConvSpec s = spec(2, 1, 1, 1, 2);
    EXPECT_EQ(s.eff_kh(), 3);  // (f-1)*r + 1
    EXPECT_EQ(s.eff_kw(), 3);
}

TEST(Atrous, MatchesStridedTapOracle) {
    ConvSpec s = spec(2, 3, 4, 1, 2);
    Tensor<D> xv = Tensor<D>::uniform(1, 8, 8, 3, 23);
    Tensor<D> wv = Tensor<D>::uniform(2, 2, 3, 4, 24);
    Tape<D> t;
    auto r = conv2d(t, t.constant(xv), t.constant(wv), s);
    EXPECT_LT(oracle::max_abs_diff(r->value, oracle::conv2d_direct(xv, wv, s)), 1e-12);
}

TEST(Separable, IdentityKernels) {
    // depthwise 1x1 identity + pointwise identity -> passthrough
    Tape<D> t;
    auto x = t.constant(Tensor<D>::uniform(1, 4, 4, 3, 31));
    Tensor<D> wd = Tensor<D>::ones(1, 1, 3, 1);
    Tensor<D> wp(1, 1, 3, 3);
    for (int i = 0; i < 3; ++i) wp.at(0, 0, i, i) = 1;
    ConvSpec s = spec(1, 3, 3);
    s.kind = ConvKind::separable;
    auto r = separable_conv2d(t, x, t.constant(wd), t.constant(wp), s);
    EXPECT_EQ(r->value.data, x->value.data);
}

TEST(Separable, MatchesTwoStageOracle) {
    ConvSpec s = spec(3, 3, 5);
    s.kind = ConvKind::separable;
    Tensor<D> xv = Tensor<D>::uniform(1, 6, 6, 3, 32);
    Tensor<D> wd = Tensor<D>::uniform(3, 3, 3, 1, 33);
    Tensor<D> wp = Tensor<D>::uniform(1, 1, 3, 5, 34);
    Tape<D> t;
    auto r = separable_conv2d(t, t.constant(xv), t.constant(wd), t.constant(wp), s);

    Tensor<D> mid = oracle::depthwise_direct(xv, wd, s);
    ConvSpec point = spec(1, 3, 5);
    EXPECT_LT(oracle::max_abs_diff(r->value, oracle::conv2d_direct(mid, wp, point)), 1e-12);
}

TEST(AtrousSeparable, ConstantInteriorOutput) {
    Tape<D> t;
    auto x = t.constant(Tensor<D>::full(1, 8, 8, 1, 2.0));
    auto wd = t.constant(Tensor<D>::full(2, 2, 1, 1, 0.25));
    auto wp = t.constant(Tensor<D>::ones(1, 1, 1, 1));
    ConvSpec s = spec(2, 1, 1, 1, 2);
    s.kind = ConvKind::atrous_separable;
    auto r = separable_conv2d(t, x, wd, wp, s);
    // interior: all four dilated taps land inside
    for (int y = 2; y < 6; ++y)
        for (int xx = 2; xx < 6; ++xx) EXPECT_DOUBLE_EQ(r->value.at(0, y, xx, 0), 2.0);
}

TEST(AtrousSeparable, MatchesComposedOracleAndFiniteDiff) {
    ConvSpec s = spec(2, 3, 4, 1, 2);
    s.kind = ConvKind::atrous_separable;
    Tensor<D> xv = Tensor<D>::uniform(1, 6, 6, 3, 41);
    Tensor<D> wd = Tensor<D>::uniform(2, 2, 3, 1, 42);
    Tensor<D> wp = Tensor<D>::uniform(1, 1, 3, 4, 43);

    Variable<D> x(xv), d(wd), p(wp);
    Tape<D> t;
    auto r = separable_conv2d(t, t.leaf(x), t.leaf(d), t.leaf(p), s);
    Tensor<D> mid = oracle::depthwise_direct(xv, wd, s);
    EXPECT_LT(oracle::max_abs_diff(r->value, oracle::conv2d_direct(mid, wp, spec(1, 3, 4))), 1e-12);

    t.backward(sum(t, r));
    auto f = [&](const Tensor<D>& probe, int which) {
        Tape<D> tt;
        auto xa = tt.constant(which == 0 ? probe : xv);
        auto da = tt.constant(which == 1 ? probe : wd);
        auto pa = tt.constant(which == 2 ? probe : wp);
        return sum(tt, separable_conv2d(tt, xa, da, pa, s))->value.data[0];
    };
    EXPECT_LT(max_rel_err(x.grad, finite_diff([&](const Tensor<D>& q) { return f(q, 0); }, xv)), 1e-6);
    EXPECT_LT(max_rel_err(d.grad, finite_diff([&](const Tensor<D>& q) { return f(q, 1); }, wd)), 1e-6);
    EXPECT_LT(max_rel_err(p.grad, finite_diff([&](const Tensor<D>& q) { return f(q, 2); }, wp)), 1e-6);
}

// same-padding shape law: out = ceil(in / stride) for every variant
TEST(Padding, SameShapeLaw) {
    for (int in : {7, 8, 14, 15}) {
        for (int stride : {1, 2}) {
            for (int dil : {1, 2}) {
                ConvSpec s = spec(dil == 2 ? 2 : 3, 2, 3, stride, dil);
                Tape<D> t;
                auto r = conv2d(t, t.constant(Tensor<D>::uniform(1, in, in, 2, in * stride + dil)),
                                t.constant(Tensor<D>::uniform(s.kh, s.kw, 2, 3, 99)), s);
                EXPECT_EQ(r->value.h(), (in + stride - 1) / stride);
                EXPECT_EQ(r->value.w(), (in + stride - 1) / stride);
            }
        }
    }
}

TEST(Conv2d, StridedSamePadMatchesOracle) {
    ConvSpec s = spec(3, 2, 3, 2);
    Tensor<D> xv = Tensor<D>::uniform(2, 9, 9, 2, 61);
    Tensor<D> wv = Tensor<D>::uniform(3, 3, 2, 3, 62);
    Tape<D> t;
    auto r = conv2d(t, t.constant(xv), t.constant(wv), s);
    EXPECT_LT(oracle::max_abs_diff(r->value, oracle::conv2d_direct(xv, wv, s)), 1e-12);
}
