#pragma once

#include <optional>

#include "layers.hpp"

namespace opticnet {

// ---- configuration ---------------------------------------------------------

enum class Variant { opticnet47, opticnet63, opticnet71 };

inline const char* variant_name(Variant v) {
    switch (v) {
        case Variant::opticnet47: return "opticnet47";
        case Variant::opticnet63: return "opticnet63";
        default: return "opticnet71";
    }
}

inline std::optional<Variant> parse_variant(const std::string& s) {
    if (s == "opticnet47" || s == "47") return Variant::opticnet47;
    if (s == "opticnet63" || s == "63") return Variant::opticnet63;
    if (s == "opticnet71" || s == "71") return Variant::opticnet71;
    return std::nullopt;
}

inline std::array<int, 4> variant_repeats(Variant v) {
    switch (v) {
        case Variant::opticnet47: return {2, 2, 2, 2};
        case Variant::opticnet63: return {3, 3, 3, 3};
        default: return {4, 4, 3, 3};
    }
}

struct ResidualUnitConfig {
    int w1;        // channels of the leading 1x1 conv (C1)
    int w_branch;  // channels of each branch (C2 atrous, C3 atrous separable)
    int w4;        // channels of the closing 1x1 conv (C4); equals unit input
};

struct StageConfig {
    int bottleneck;  // a; the projection unit widths are (a, a, 4a)
    ResidualUnitConfig unit;
    int repeats;
    bool downsample;
};

struct ModelConfig {
    std::vector<StageConfig> stages;
    int input_hw = 224;
    int input_channels = 3;
    int classes = 4;
    int stem_width = 64;
    int fc_hidden = 256;

    /// Stage widths per the published layer table; width_div scales every
    /// channel count down for desk-scale and gradient-probe models.
    static ModelConfig make(Variant v, int input_hw = 224, int classes = 4, int width_div = 1) {
        ModelConfig cfg;
        cfg.input_hw = input_hw;
        cfg.classes = classes;
        auto reps = variant_repeats(v);
        for (int i = 0; i < 4; ++i) {
            StageConfig st;
            st.bottleneck = (64 << i) / width_div;
            st.unit = {(32 << i) / width_div, (32 << i) / width_div, (256 << i) / width_div};
            st.repeats = reps[i];
            st.downsample = i > 0;
            cfg.stages.push_back(st);
        }
        cfg.stem_width = 64 / width_div;
        cfg.fc_hidden = 256 / width_div;
        cfg.validate();
        return cfg;
    }

    void validate() const {
        if (stages.empty()) throw std::invalid_argument("model config: no stages");
        if (input_hw < 2 || classes < 2 || stem_width < 1 || fc_hidden < 1) {
            throw std::invalid_argument("model config: bad scalar field");
        }
        int hw = input_hw;
        if (hw % 2) throw std::invalid_argument("model config: input size must be even for the stem stride");
        hw /= 2;
        for (size_t i = 0; i < stages.size(); ++i) {
            const auto& st = stages[i];
            if (st.repeats < 1) throw std::invalid_argument("model config: repeats must be >= 1");
            if (st.bottleneck < 1 || st.unit.w1 < 1 || st.unit.w_branch < 1 || st.unit.w4 < 1) {
                throw std::invalid_argument("model config: channel widths must be >= 1");
            }
            if (st.unit.w4 != 4 * st.bottleneck) {
                throw std::invalid_argument(
                    "model config: unit output width must equal the stage output (4x bottleneck) "
                    "so the identity skip is shape-legal");
            }
            if (st.downsample != (i > 0)) {
                throw std::invalid_argument("model config: downsampling is fixed to stages 2..S");
            }
            if (st.downsample) {
                if (hw % 2) {
                    throw std::invalid_argument(
                        "model config: input " + std::to_string(input_hw) +
                        " is not divisible for the stride plan at stage " + std::to_string(i + 1));
                }
                hw /= 2;
            }
            if (hw < 2) {
                throw std::invalid_argument("model config: stage " + std::to_string(i + 1) +
                                            " spatial size collapses below the pooling window");
            }
        }
    }
};

// ---- layers with owned parameters -----------------------------------------

namespace detail {

template <class T>
Tensor<T> he_normal(int d0, int d1, int d2, int d3, int fan_in, std::mt19937_64& rng) {
    Tensor<T> t(d0, d1, d2, d3);
    std::normal_distribution<T> dist(T(0), std::sqrt(T(2) / T(fan_in)));
    for (auto& v : t.data) v = dist(rng);
    return t;
}

}  // namespace detail

/// Plain (regular or atrous) conv layer, no bias; BN supplies the shift.
template <class T>
struct ConvLayer {
    ConvSpec spec;
    Variable<T> w;

    void init(const ConvSpec& s, const std::string& path, std::mt19937_64& rng) {
        spec = s;
        w = Variable<T>(detail::he_normal<T>(s.kh, s.kw, s.in_c, s.out_c, s.kh * s.kw * s.in_c, rng),
                        true, path + "/w");
    }
    typename Tape<T>::Ref forward(Tape<T>& t, typename Tape<T>::Ref x) {
        return conv2d(t, x, t.leaf(w), spec);
    }
    long long weight_count() const { return static_cast<long long>(w.value.size()); }
};

/// Depthwise-then-pointwise conv layer (separable / atrous separable).
template <class T>
struct SepConvLayer {
    ConvSpec spec;
    Variable<T> w_depth, w_point;

    void init(const ConvSpec& s, const std::string& path, std::mt19937_64& rng) {
        spec = s;
        w_depth = Variable<T>(detail::he_normal<T>(s.kh, s.kw, s.in_c, 1, s.kh * s.kw, rng), true,
                              path + "/w_depth");
        w_point = Variable<T>(detail::he_normal<T>(1, 1, s.in_c, s.out_c, s.in_c, rng), true,
                              path + "/w_point");
    }
    typename Tape<T>::Ref forward(Tape<T>& t, typename Tape<T>::Ref x) {
        return separable_conv2d(t, x, t.leaf(w_depth), t.leaf(w_point), spec);
    }
    long long weight_count() const {
        return static_cast<long long>(w_depth.value.size() + w_point.value.size());
    }
};

template <class T>
typename Tape<T>::Ref bn_relu(Tape<T>& t, typename Tape<T>::Ref x, BatchNormState<T>& bn,
                              BNMode mode) {
    return relu(t, batch_norm(t, x, bn, mode));
}

/// Pre-activation bottleneck with a 1x1 projection skip. When downsampling,
/// stride 2 sits on the final 1x1 conv and the projection (the stated
/// placement for the published design).
template <class T>
struct ResidualConvUnit {
    BatchNormState<T> bn0, bn1, bn2;
    ConvLayer<T> c1, c2, c3, proj;

    void init(int in_c, int bottleneck, bool downsample, const std::string& path,
              std::mt19937_64& rng) {
        int out_c = 4 * bottleneck;
        int stride = downsample ? 2 : 1;
        bn0 = BatchNormState<T>(in_c, path + "/bn0");
        bn1 = BatchNormState<T>(bottleneck, path + "/bn1");
        bn2 = BatchNormState<T>(bottleneck, path + "/bn2");
        ConvSpec s1{1, 1, 1, 1, in_c, bottleneck, Padding::same, ConvKind::regular};
        ConvSpec s2{3, 3, 1, 1, bottleneck, bottleneck, Padding::same, ConvKind::regular};
        ConvSpec s3{1, 1, stride, 1, bottleneck, out_c, Padding::same, ConvKind::regular};
        ConvSpec sp{1, 1, stride, 1, in_c, out_c, Padding::same, ConvKind::regular};
        c1.init(s1, path + "/c1", rng);
        c2.init(s2, path + "/c2", rng);
        c3.init(s3, path + "/c3", rng);
        proj.init(sp, path + "/proj", rng);
    }

    typename Tape<T>::Ref forward(Tape<T>& t, typename Tape<T>::Ref x, BNMode mode) {
        auto h = bn_relu(t, x, bn0, mode);
        auto m = c1.forward(t, h);
        m = c2.forward(t, bn_relu(t, m, bn1, mode));
        m = c3.forward(t, bn_relu(t, m, bn2, mode));
        return add(t, m, proj.forward(t, h));
    }
};

/// The branched residual unit: identity skip around
/// C4( C2(C1(x)) + C3(C1(x)) ) with pre-activation ordering, where C2 is a
/// 2x2 dilation-2 atrous conv and C3 its separable counterpart.
template <class T>
struct ResidualUnit {
    ResidualUnitConfig cfg;
    BatchNormState<T> bn_in, bn_mid, bn_out;
    ConvLayer<T> c1, c2_atrous, c4;
    SepConvLayer<T> c3_sep;

    void init(const ResidualUnitConfig& c, const std::string& path, std::mt19937_64& rng) {
        cfg = c;
        bn_in = BatchNormState<T>(c.w4, path + "/bn_in");
        bn_mid = BatchNormState<T>(c.w1, path + "/bn_mid");
        bn_out = BatchNormState<T>(c.w_branch, path + "/bn_out");
        ConvSpec s1{1, 1, 1, 1, c.w4, c.w1, Padding::same, ConvKind::regular};
        ConvSpec s2{2, 2, 1, 2, c.w1, c.w_branch, Padding::same, ConvKind::atrous};
        ConvSpec s3{2, 2, 1, 2, c.w1, c.w_branch, Padding::same, ConvKind::atrous_separable};
        ConvSpec s4{1, 1, 1, 1, c.w_branch, c.w4, Padding::same, ConvKind::regular};
        c1.init(s1, path + "/c1", rng);
        c2_atrous.init(s2, path + "/c2", rng);
        c3_sep.init(s3, path + "/c3", rng);
        c4.init(s4, path + "/c4", rng);
    }

    typename Tape<T>::Ref forward(Tape<T>& t, typename Tape<T>::Ref x, BNMode mode) {
        auto h = c1.forward(t, bn_relu(t, x, bn_in, mode));
        auto hm = bn_relu(t, h, bn_mid, mode);
        auto branches = add(t, c2_atrous.forward(t, hm), c3_sep.forward(t, hm));
        auto f = c4.forward(t, bn_relu(t, branches, bn_out, mode));
        return add(t, x, f);
    }

    /// Weight census of the middle (branch) section, for the published
    /// closed-form comparison.
    long long middle_weight_count() const {
        return c2_atrous.weight_count() + c3_sep.weight_count();
    }
};

/// Per-stage capture of the residual signal, the exhausted signal and the
/// propagated output.
template <class T>
struct BlockCapture {
    Tensor<T> alpha, beta, tau;
};

/// Stacked residual units (alpha) combined with the max-pool ->
/// bilinear-upsample -> sigmoid exhaustion path (beta) as
/// tau = alpha + beta + alpha (.) beta.
template <class T>
struct BuildingBlock {
    std::vector<ResidualUnit<T>> units;

    void init(const ResidualUnitConfig& c, int repeats, const std::string& path,
              std::mt19937_64& rng) {
        units.resize(repeats);
        for (int i = 0; i < repeats; ++i) units[i].init(c, path + "/unit" + std::to_string(i), rng);
    }

    typename Tape<T>::Ref forward(Tape<T>& t, typename Tape<T>::Ref x, BNMode mode,
                                  BlockCapture<T>* cap = nullptr) {
        auto alpha = x;
        for (auto& u : units) alpha = u.forward(t, alpha, mode);
        auto pooled = max_pool2d(t, x, 2, 2);
        auto beta = sigmoid(t, bilinear_upsample(t, pooled, x->value.h(), x->value.w()));
        auto tau = add(t, add(t, alpha, beta), mul(t, alpha, beta));
        if (cap) {
            cap->alpha = alpha->value;
            cap->beta = beta->value;
            cap->tau = tau->value;
        }
        return tau;
    }
};

// ---- the model -------------------------------------------------------------

template <class T>
class OpticNet {
public:
    explicit OpticNet(ModelConfig cfg, uint64_t seed = 0) : cfg_(std::move(cfg)) {
        cfg_.validate();
        std::mt19937_64 rng(seed);
        ConvSpec stem{7, 7, 2, 1, cfg_.input_channels, cfg_.stem_width, Padding::same,
                      ConvKind::regular};
        stem_.init(stem, "stem/conv", rng);
        stem_bn_ = BatchNormState<T>(cfg_.stem_width, "stem/bn");

        int in_c = cfg_.stem_width;
        for (size_t i = 0; i < cfg_.stages.size(); ++i) {
            const auto& st = cfg_.stages[i];
            std::string path = "stage" + std::to_string(i + 1);
            StageLayers stage;
            stage.res_conv.init(in_c, st.bottleneck, st.downsample, path + "/resconv", rng);
            stage.block.init(st.unit, st.repeats, path, rng);
            stages_.push_back(std::move(stage));
            in_c = 4 * st.bottleneck;
        }

        fc1_w_ = Variable<T>(detail::he_normal<T>(1, 1, in_c, cfg_.fc_hidden, in_c, rng), true,
                             "fc1/w");
        fc1_b_ = Variable<T>(Tensor<T>::zeros(1, 1, 1, cfg_.fc_hidden), true, "fc1/b");
        fc2_w_ = Variable<T>(
            detail::he_normal<T>(1, 1, cfg_.fc_hidden, cfg_.classes, cfg_.fc_hidden, rng), true,
            "fc2/w");
        fc2_b_ = Variable<T>(Tensor<T>::zeros(1, 1, 1, cfg_.classes), true, "fc2/b");
    }

    /// Full forward pass to logits (n, 1, 1, K). capture_stage is 1-based;
    /// when in [1, S] the stage's alpha/beta/tau are copied into *cap.
    typename Tape<T>::Ref forward(Tape<T>& t, typename Tape<T>::Ref images, BNMode mode,
                                  int capture_stage = -1, BlockCapture<T>* cap = nullptr) {
        auto x = bn_relu(t, stem_.forward(t, images), stem_bn_, mode);
        for (size_t i = 0; i < stages_.size(); ++i) {
            x = stages_[i].res_conv.forward(t, x, mode);
            bool want = cap && capture_stage == static_cast<int>(i + 1);
            x = stages_[i].block.forward(t, x, mode, want ? cap : nullptr);
        }
        auto g = global_avg_pool(t, x);
        auto h = relu(t, dense(t, g, t.leaf(fc1_w_), t.leaf(fc1_b_)));
        return dense(t, h, t.leaf(fc2_w_), t.leaf(fc2_b_));
    }

    std::vector<Variable<T>*> parameters() {
        std::vector<Variable<T>*> out;
        visit_variables([&](Variable<T>& v) { out.push_back(&v); });
        return out;
    }

    /// Every persistent tensor by stable path: trainables plus BN running
    /// statistics. This is the checkpoint contents.
    std::vector<std::pair<std::string, Tensor<T>*>> state_tensors() {
        std::vector<std::pair<std::string, Tensor<T>*>> out;
        visit_variables([&](Variable<T>& v) { out.emplace_back(v.path, &v.value); });
        visit_bn([&](BatchNormState<T>& bn) {
            std::string base = bn.gamma.path.substr(0, bn.gamma.path.rfind('/'));
            out.emplace_back(base + "/running_mean", &bn.running_mean);
            out.emplace_back(base + "/running_var", &bn.running_var);
        });
        return out;
    }

    /// Bias-free weight census: conv and dense weights only (the published
    /// parameter table counts without biases; BN learnables are separate).
    long long weight_census() {
        long long total = 0;
        visit_variables([&](Variable<T>& v) {
            bool bias = v.path.ends_with("/b") || v.path.ends_with("/gamma") ||
                        v.path.ends_with("/beta");
            if (!bias) total += static_cast<long long>(v.value.size());
        });
        return total;
    }

    long long bn_learnable_count() {
        long long total = 0;
        visit_bn([&](BatchNormState<T>& bn) {
            total += static_cast<long long>(bn.gamma.value.size() + bn.beta.value.size());
        });
        return total;
    }

    long long bias_count() {
        return static_cast<long long>(fc1_b_.value.size() + fc2_b_.value.size());
    }

    const ModelConfig& config() const { return cfg_; }

    ResidualUnit<T>& unit(int stage, int index) { return stages_.at(stage - 1).block.units.at(index); }
    ResidualConvUnit<T>& res_conv(int stage) { return stages_.at(stage - 1).res_conv; }

    template <class F>
    void visit_variables(F&& f) {
        f(stem_.w);
        visit_bn([&](BatchNormState<T>& bn) {
            f(bn.gamma);
            f(bn.beta);
        });
        for (auto& st : stages_) {
            f(st.res_conv.c1.w);
            f(st.res_conv.c2.w);
            f(st.res_conv.c3.w);
            f(st.res_conv.proj.w);
            for (auto& u : st.block.units) {
                f(u.c1.w);
                f(u.c2_atrous.w);
                f(u.c3_sep.w_depth);
                f(u.c3_sep.w_point);
                f(u.c4.w);
            }
        }
        f(fc1_w_);
        f(fc1_b_);
        f(fc2_w_);
        f(fc2_b_);
    }

    template <class F>
    void visit_bn(F&& f) {
        f(stem_bn_);
        for (auto& st : stages_) {
            f(st.res_conv.bn0);
            f(st.res_conv.bn1);
            f(st.res_conv.bn2);
            for (auto& u : st.block.units) {
                f(u.bn_in);
                f(u.bn_mid);
                f(u.bn_out);
            }
        }
    }

private:
    struct StageLayers {
        ResidualConvUnit<T> res_conv;
        BuildingBlock<T> block;
    };

    ModelConfig cfg_;
    ConvLayer<T> stem_;
    BatchNormState<T> stem_bn_;
    std::vector<StageLayers> stages_;
    Variable<T> fc1_w_, fc1_b_, fc2_w_, fc2_b_;
};

// ---- static audit ----------------------------------------------------------

/// One line of the architecture table: a layer (or layer group) with its
/// output shape, parameter split and per-image multiply-accumulate count.
struct LayerRow {
    std::string name;
    int out_h = 0, out_w = 0, out_c = 0;
    long long weights = 0;  // conv/dense weights, bias-free
    long long biases = 0;
    long long bn = 0;  // BN learnables (gamma + beta)
    long long macs = 0;
};

/// Shape-only trace of the whole network; no tensors are materialized.
inline std::vector<LayerRow> describe(const ModelConfig& cfg) {
    cfg.validate();
    std::vector<LayerRow> rows;
    auto conv_row = [](const std::string& name, int hw_out, int kh, int kw, long long in_c,
                       long long out_c, bool depthwise = false) {
        LayerRow r;
        r.name = name;
        r.out_h = r.out_w = hw_out;
        r.out_c = static_cast<int>(out_c);
        r.weights = static_cast<long long>(kh) * kw * in_c * (depthwise ? 1 : out_c);
        r.macs = static_cast<long long>(hw_out) * hw_out * r.weights;
        return r;
    };

    int hw = cfg.input_hw / 2;
    rows.push_back(conv_row("stem conv7x7/2", hw, 7, 7, cfg.input_channels, cfg.stem_width));
    rows.back().bn = 2LL * cfg.stem_width;

    long long in_c = cfg.stem_width;
    for (size_t i = 0; i < cfg.stages.size(); ++i) {
        const auto& st = cfg.stages[i];
        std::string tag = "stage" + std::to_string(i + 1);
        int hw_out = st.downsample ? hw / 2 : hw;
        long long a = st.bottleneck, out_c = 4LL * st.bottleneck;

        rows.push_back(conv_row(tag + "/resconv c1 1x1", hw, 1, 1, in_c, a));
        rows.back().bn = 2 * in_c;  // pre-activation BN on the unit input
        rows.push_back(conv_row(tag + "/resconv c2 3x3", hw, 3, 3, a, a));
        rows.back().bn = 2 * a;
        rows.push_back(conv_row(tag + "/resconv c3 1x1/" + (st.downsample ? "2" : "1"), hw_out, 1,
                                1, a, out_c));
        rows.back().bn = 2 * a;
        rows.push_back(conv_row(tag + "/resconv proj 1x1", hw_out, 1, 1, in_c, out_c));
        hw = hw_out;

        const auto& u = st.unit;
        for (int rep = 0; rep < st.repeats; ++rep) {
            std::string up = tag + "/unit" + std::to_string(rep);
            rows.push_back(conv_row(up + " c1 1x1", hw, 1, 1, out_c, u.w1));
            rows.back().bn = 2 * out_c;
            rows.push_back(conv_row(up + " c2 atrous2x2 r2", hw, 2, 2, u.w1, u.w_branch));
            rows.back().bn = 2 * u.w1;
            LayerRow dw = conv_row(up + " c3 depthwise2x2 r2", hw, 2, 2, u.w1, u.w1, true);
            LayerRow pw = conv_row(up + " c3 pointwise1x1", hw, 1, 1, u.w1, u.w_branch);
            dw.weights += pw.weights;
            dw.macs += pw.macs;
            dw.out_c = u.w_branch;
            rows.push_back(dw);
            rows.push_back(conv_row(up + " c4 1x1", hw, 1, 1, u.w_branch, u.w4));
            rows.back().bn = 2 * u.w_branch;
        }
        in_c = out_c;
    }

    LayerRow gap;
    gap.name = "global avg pool";
    gap.out_h = gap.out_w = 1;
    gap.out_c = static_cast<int>(in_c);
    rows.push_back(gap);

    LayerRow fc1;
    fc1.name = "dense fc1";
    fc1.out_h = fc1.out_w = 1;
    fc1.out_c = cfg.fc_hidden;
    fc1.weights = in_c * cfg.fc_hidden;
    fc1.biases = cfg.fc_hidden;
    fc1.macs = fc1.weights;
    rows.push_back(fc1);

    LayerRow fc2;
    fc2.name = "dense fc2";
    fc2.out_h = fc2.out_w = 1;
    fc2.out_c = cfg.classes;
    fc2.weights = static_cast<long long>(cfg.fc_hidden) * cfg.classes;
    fc2.biases = cfg.classes;
    fc2.macs = fc2.weights;
    rows.push_back(fc2);

    return rows;
}

/// Output spatial/channel shape after each stage, for a square input.
inline std::vector<std::array<int, 3>> stage_output_shapes(const ModelConfig& cfg) {
    std::vector<std::array<int, 3>> shapes;
    int hw = cfg.input_hw / 2;
    for (const auto& st : cfg.stages) {
        if (st.downsample) hw /= 2;
        shapes.push_back({hw, hw, 4 * st.bottleneck});
    }
    return shapes;
}

inline long long total_weights(const std::vector<LayerRow>& rows) {
    long long t = 0;
    for (const auto& r : rows) t += r.weights;
    return t;
}

inline long long total_macs(const std::vector<LayerRow>& rows) {
    long long t = 0;
    for (const auto& r : rows) t += r.macs;
    return t;
}

/// Multiply-accumulates x2, per image, over conv and dense layers.
inline long long estimate_flops(const ModelConfig& cfg) { return 2 * total_macs(describe(cfg)); }

// ---- closed-form parameter formulas (middle-convolution comparison) --------

enum class MiddleConvKind { regular, atrous, separable, atrous_separable, branched };

inline std::optional<MiddleConvKind> parse_middle_kind(const std::string& s) {
    if (s == "regular") return MiddleConvKind::regular;
    if (s == "atrous") return MiddleConvKind::atrous;
    if (s == "separable") return MiddleConvKind::separable;
    if (s == "atrous_separable") return MiddleConvKind::atrous_separable;
    if (s == "branched") return MiddleConvKind::branched;
    return std::nullopt;
}

/// Closed-form parameter counts for the middle convolution of a residual
/// unit, kernel (f, f), d output kernels, d_prev input channels, biases not
/// counted. The branched row is the atrous + atrous-separable pair at half
/// width each.
inline long long middle_conv_params(MiddleConvKind kind, int f, long long d, long long d_prev) {
    if (f < 2 || d < 1 || d_prev < 1) throw std::invalid_argument("middle_conv_params: f >= 2, dims >= 1 required");
    long long f2 = static_cast<long long>(f) * f;
    long long fm2 = static_cast<long long>(f - 1) * (f - 1);
    switch (kind) {
        case MiddleConvKind::regular: return f2 * d * d_prev;
        case MiddleConvKind::atrous: return fm2 * d * d_prev;
        case MiddleConvKind::separable: return (f2 + d) * d_prev;
        case MiddleConvKind::atrous_separable: return (fm2 + d) * d_prev;
        case MiddleConvKind::branched:
            // 1/2 ((f-1)^2 (1 + d/2) + d/2) d_prev, exact in integers via /4
            return (fm2 * (2 + d) + d) * d_prev / 4;
    }
    throw std::invalid_argument("middle_conv_params: unknown kind");
}

/// Parameter depletion factor: the kind's count as a fraction of the
/// regular convolution's, in percent, evaluated exactly.
inline double depletion_percent(MiddleConvKind kind, int f, long long d) {
    double num = static_cast<double>(middle_conv_params(kind, f, d, d));
    double den = static_cast<double>(middle_conv_params(MiddleConvKind::regular, f, d, d));
    return 100.0 * num / den;
}

}  // namespace opticnet
