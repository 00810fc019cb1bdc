#include <gtest/gtest.h>

#include <set>

#include <opticnet/model.hpp>

#include "oracles.hpp"

using namespace opticnet;
using D = double;

namespace {

ModelConfig tiny_config() {
    // two stages, near-minimal widths, input small enough for fast forwards
    ModelConfig cfg;
    cfg.input_hw = 16;
    cfg.input_channels = 3;
    cfg.classes = 3;
    cfg.stem_width = 4;
    cfg.fc_hidden = 6;
    cfg.stages.push_back({2, {2, 2, 8}, 1, false});
    cfg.stages.push_back({4, {3, 3, 16}, 2, true});
    return cfg;
}

}  // namespace

// ---- closed-form parameter table (f = 3, d = d_prev = 64) ------------------

TEST(ParamFormulas, MiddleConvTable) {
    EXPECT_EQ(middle_conv_params(MiddleConvKind::regular, 3, 64, 64), 36864);
    EXPECT_EQ(middle_conv_params(MiddleConvKind::atrous, 3, 64, 64), 16384);
    EXPECT_EQ(middle_conv_params(MiddleConvKind::separable, 3, 64, 64), 4672);
    EXPECT_EQ(middle_conv_params(MiddleConvKind::atrous_separable, 3, 64, 64), 4352);
    EXPECT_EQ(middle_conv_params(MiddleConvKind::branched, 3, 64, 64), 5248);
    EXPECT_THROW(middle_conv_params(MiddleConvKind::regular, 1, 64, 64), std::invalid_argument);
}

TEST(ParamFormulas, DepletionPercentagesExact) {
    EXPECT_DOUBLE_EQ(depletion_percent(MiddleConvKind::regular, 3, 64), 100.0);
    EXPECT_NEAR(depletion_percent(MiddleConvKind::atrous, 3, 64), 44.4444, 1e-3);
    EXPECT_NEAR(depletion_percent(MiddleConvKind::separable, 3, 64), 12.6736, 1e-3);
    EXPECT_NEAR(depletion_percent(MiddleConvKind::atrous_separable, 3, 64), 11.8056, 1e-3);
    EXPECT_NEAR(depletion_percent(MiddleConvKind::branched, 3, 64), 14.2361, 1e-3);
}

// The branched formula must agree with the as-built middle section of a
// stage-1 residual unit at the published widths (w1 = w_branch = 32).
TEST(ParamFormulas, BranchedFormulaMatchesBuiltUnit) {
    OpticNet<float> net(ModelConfig::make(Variant::opticnet47, 224, 4), 7);
    EXPECT_EQ(net.unit(1, 0).middle_weight_count(), 5248);
    // f = 3 effective (2x2 kernel at dilation 2), d = d_prev = 2 * 32
    EXPECT_EQ(middle_conv_params(MiddleConvKind::branched, 3, 64, 64),
              net.unit(1, 0).middle_weight_count());
}

// ---- configuration ----------------------------------------------------------

TEST(ModelConfig, VariantRepeatsAndLayerArithmetic) {
    EXPECT_EQ(variant_repeats(Variant::opticnet47), (std::array<int, 4>{2, 2, 2, 2}));
    EXPECT_EQ(variant_repeats(Variant::opticnet63), (std::array<int, 4>{3, 3, 3, 3}));
    EXPECT_EQ(variant_repeats(Variant::opticnet71), (std::array<int, 4>{4, 4, 3, 3}));
    // named depth = stem + 4 stages x 3 projection convs + 4 convs per unit + 2 dense
    for (auto v : {Variant::opticnet47, Variant::opticnet63, Variant::opticnet71}) {
        auto reps = variant_repeats(v);
        int total_units = reps[0] + reps[1] + reps[2] + reps[3];
        int depth = 1 + 12 + 4 * total_units + 2;
        int expect = v == Variant::opticnet47 ? 47 : v == Variant::opticnet63 ? 63 : 71;
        EXPECT_EQ(depth, expect) << variant_name(v);
    }
}

TEST(ModelConfig, ValidationErrors) {
    ModelConfig cfg = tiny_config();
    cfg.input_hw = 50;  // 50 -> 25, stage 2 cannot halve
    EXPECT_THROW(cfg.validate(), std::invalid_argument);

    cfg = tiny_config();
    cfg.stages[0].unit.w4 = 6;  // skip connection would be shape-illegal
    EXPECT_THROW(cfg.validate(), std::invalid_argument);

    cfg = tiny_config();
    cfg.stages[1].repeats = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(ModelConfig, ParseVariantRoundTrip) {
    EXPECT_EQ(parse_variant("opticnet63"), Variant::opticnet63);
    EXPECT_EQ(parse_variant("71"), Variant::opticnet71);
    EXPECT_FALSE(parse_variant("resnet50").has_value());
}

// ---- static description vs built model --------------------------------------

TEST(Describe, StageOutputShapesAt224) {
    auto shapes = stage_output_shapes(ModelConfig::make(Variant::opticnet47, 224, 4));
    ASSERT_EQ(shapes.size(), 4u);
    EXPECT_EQ(shapes[0], (std::array<int, 3>{112, 112, 256}));
    EXPECT_EQ(shapes[1], (std::array<int, 3>{56, 56, 512}));
    EXPECT_EQ(shapes[2], (std::array<int, 3>{28, 28, 1024}));
    EXPECT_EQ(shapes[3], (std::array<int, 3>{14, 14, 2048}));
}

TEST(Describe, StemMacsClosedForm) {
    auto rows = describe(ModelConfig::make(Variant::opticnet47, 224, 4));
    ASSERT_FALSE(rows.empty());
    // 112 * 112 * 7 * 7 * 3 * 64 multiply-accumulates
    EXPECT_EQ(rows[0].macs, 118013952);
    EXPECT_EQ(rows[0].weights, 9408);
}

TEST(Describe, CensusAgreesWithBuiltModelTiny) {
    ModelConfig cfg = tiny_config();
    OpticNet<D> net(cfg, 3);
    EXPECT_EQ(net.weight_census(), total_weights(describe(cfg)));
}

// Frozen golden: the full bias-free weight census of the deepest variant.
// Derived twice by hand (per-layer sums) and once from the shape trace;
// all three agree.
TEST(Describe, OpticNet71WeightCensusGolden) {
    ModelConfig cfg = ModelConfig::make(Variant::opticnet71, 224, 4);
    EXPECT_EQ(total_weights(describe(cfg)), 14119104);
    OpticNet<float> net(cfg, 1);
    EXPECT_EQ(net.weight_census(), 14119104);
}

TEST(Describe, VariantOrderingOfCostAndSize) {
    auto w47 = total_weights(describe(ModelConfig::make(Variant::opticnet47)));
    auto w63 = total_weights(describe(ModelConfig::make(Variant::opticnet63)));
    auto w71 = total_weights(describe(ModelConfig::make(Variant::opticnet71)));
    EXPECT_LT(w47, w63);
    EXPECT_LT(w63, w71);
    EXPECT_LT(estimate_flops(ModelConfig::make(Variant::opticnet47)),
              estimate_flops(ModelConfig::make(Variant::opticnet63)));
}

// ---- registry ----------------------------------------------------------------

TEST(Registry, UniquePathsAndShapes) {
    OpticNet<D> net(tiny_config(), 5);
    auto tensors = net.state_tensors();
    std::set<std::string> paths;
    for (auto& [path, tens] : tensors) {
        EXPECT_TRUE(paths.insert(path).second) << "duplicate path " << path;
        EXPECT_GE(tens->size(), 1u);
    }
    auto params = net.parameters();
    for (auto* p : params) {
        EXPECT_TRUE(p->value.same_shape(p->grad)) << p->path;
        EXPECT_FALSE(p->path.empty());
    }
    // every trainable appears in the checkpoint set
    EXPECT_GT(tensors.size(), params.size());  // + running stats
}

TEST(Registry, SeedDeterminism) {
    OpticNet<D> a(tiny_config(), 11), b(tiny_config(), 11), c(tiny_config(), 12);
    auto ta = a.state_tensors(), tb = b.state_tensors(), tc = c.state_tensors();
    ASSERT_EQ(ta.size(), tb.size());
    bool any_diff = false;
    for (size_t i = 0; i < ta.size(); ++i) {
        EXPECT_EQ(ta[i].second->data, tb[i].second->data) << ta[i].first;
        if (ta[i].second->data != tc[i].second->data) any_diff = true;
    }
    EXPECT_TRUE(any_diff);
}

// ---- forward pass -------------------------------------------------------------

TEST(Forward, ShapeLawOnTinyModel) {
    ModelConfig cfg = tiny_config();
    OpticNet<D> net(cfg, 9);
    Tape<D> t;
    auto x = t.constant(Tensor<D>::uniform(2, cfg.input_hw, cfg.input_hw, 3, 17, 0, 1));
    BlockCapture<D> cap;
    auto logits = net.forward(t, x, BNMode::train, 2, &cap);
    EXPECT_EQ(logits->value.n(), 2);
    EXPECT_EQ(logits->value.h(), 1);
    EXPECT_EQ(logits->value.w(), 1);
    EXPECT_EQ(logits->value.c(), cfg.classes);
    // stage 2 halves the stem's 8x8 and emits 4 * bottleneck channels
    EXPECT_EQ(cap.tau.h(), 4);
    EXPECT_EQ(cap.tau.w(), 4);
    EXPECT_EQ(cap.tau.c(), 16);
    EXPECT_TRUE(cap.alpha.same_shape(cap.tau));
    EXPECT_TRUE(cap.beta.same_shape(cap.tau));
}

TEST(Forward, CaptureSatisfiesCombinationIdentity) {
    ModelConfig cfg = tiny_config();
    OpticNet<D> net(cfg, 21);
    Tape<D> t;
    auto x = t.constant(Tensor<D>::uniform(1, cfg.input_hw, cfg.input_hw, 3, 22, 0, 1));
    BlockCapture<D> cap;
    net.forward(t, x, BNMode::train, 1, &cap);
    for (size_t i = 0; i < cap.tau.size(); ++i) {
        D a = cap.alpha.data[i], b = cap.beta.data[i];
        EXPECT_NEAR(cap.tau.data[i], a + b + a * b, 1e-12);
    }
    // the exhausted signal is a sigmoid output
    for (auto b : cap.beta.data) {
        EXPECT_GT(b, 0.0);
        EXPECT_LT(b, 1.0);
    }
}

// Combination probes: alpha = 1, beta = 1 -> 3; alpha = 2, beta = 0.5 -> 3.5.
// Checked through the same tape ops the block uses.
TEST(Forward, CombinationProbeValues) {
    auto combine = [](D a, D b) {
        Tape<D> t;
        auto ar = t.constant(Tensor<D>::scalar(a));
        auto br = t.constant(Tensor<D>::scalar(b));
        return add(t, add(t, ar, br), mul(t, ar, br))->value.data[0];
    };
    EXPECT_DOUBLE_EQ(combine(1.0, 1.0), 3.0);
    EXPECT_DOUBLE_EQ(combine(2.0, 0.5), 3.5);
    EXPECT_DOUBLE_EQ(combine(0.0, 0.7), 0.7);  // dead residual passes beta through
}

// With every conv weight zeroed the residual stack is the identity, so the
// block must reduce to x + s + x (.) s with s = sigmoid(upsample(maxpool(x))).
TEST(Forward, ZeroWeightBlockMatchesOracleComposition) {
    ResidualUnitConfig ucfg{2, 2, 4};
    std::mt19937_64 rng(31);
    BuildingBlock<D> block;
    block.init(ucfg, 2, "blk", rng);
    for (auto& u : block.units) {
        u.c1.w.value.fill(0);
        u.c2_atrous.w.value.fill(0);
        u.c3_sep.w_depth.value.fill(0);
        u.c3_sep.w_point.value.fill(0);
        u.c4.w.value.fill(0);
    }

    Tensor<D> xv = Tensor<D>::uniform(2, 6, 6, 4, 33, 0, 1);
    Tape<D> t;
    BlockCapture<D> cap;
    auto out = block.forward(t, t.constant(xv), BNMode::train, &cap);

    EXPECT_EQ(cap.alpha.data, xv.data);  // identity residual path, bitwise

    Tensor<D> s = oracle::bilinear_direct(oracle::max_pool_direct(xv, 2, 2), 6, 6);
    for (auto& v : s.data) v = 1.0 / (1.0 + std::exp(-v));
    for (size_t i = 0; i < xv.size(); ++i) {
        D expect = xv.data[i] + s.data[i] + xv.data[i] * s.data[i];
        EXPECT_NEAR(out->value.data[i], expect, 1e-12);
    }
}

TEST(Forward, EndToEndGradientReachesEveryParameter) {
    ModelConfig cfg = tiny_config();
    OpticNet<D> net(cfg, 41);
    auto params = net.parameters();
    zero_grad<D>(params);

    Tape<D> t;
    auto x = t.constant(Tensor<D>::uniform(2, cfg.input_hw, cfg.input_hw, 3, 42, 0, 1));
    auto logits = net.forward(t, x, BNMode::train);
    t.backward(softmax_cross_entropy(t, logits, {0, 2}));

    for (auto* p : params) {
        double mag = 0;
        for (auto g : p->grad.data) mag += std::abs(g);
        EXPECT_GT(mag, 0.0) << "no gradient reached " << p->path;
    }
}

TEST(Forward, InferModeIsDeterministicAndStateless) {
    ModelConfig cfg = tiny_config();
    OpticNet<D> net(cfg, 51);
    Tensor<D> xv = Tensor<D>::uniform(1, cfg.input_hw, cfg.input_hw, 3, 52, 0, 1);
    auto run = [&] {
        Tape<D> t;
        return net.forward(t, t.constant(xv), BNMode::infer)->value;
    };
    Tensor<D> a = run(), b = run();
    EXPECT_EQ(a.data, b.data);  // infer mode must not mutate running stats
}
