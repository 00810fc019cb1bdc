#pragma once

#include <deque>
#include <fstream>
#include <functional>

#include "model.hpp"

namespace opticnet {

/// Central finite differences (f(x+eps e) - f(x-eps e)) / 2 eps, per
/// component. f must be deterministic; non-finite evaluations are a
/// probe error.
inline Tensor<double> finite_diff(const std::function<double(const Tensor<double>&)>& f,
                                  Tensor<double> x, double eps = 1e-5) {
    if (eps <= 0) throw std::invalid_argument("finite_diff: eps must be positive");
    Tensor<double> grad(x.n(), x.h(), x.w(), x.c());
    for (size_t i = 0; i < x.size(); ++i) {
        double orig = x.data[i];
        x.data[i] = orig + eps;
        double fp = f(x);
        x.data[i] = orig - eps;
        double fm = f(x);
        x.data[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw std::runtime_error("finite_diff: non-finite evaluation at component " +
                                     std::to_string(i));
        }
        grad.data[i] = (fp - fm) / (2 * eps);
    }
    return grad;
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

inline double max_rel_err(const Tensor<double>& a, const Tensor<double>& b) {
    check_same_shape(a, b, "max_rel_err");
    double worst = 0;
    for (size_t i = 0; i < a.size(); ++i) worst = std::max(worst, rel_err(a.data[i], b.data[i]));
    return worst;
}

inline double max_abs_err(const Tensor<double>& a, const Tensor<double>& b) {
    check_same_shape(a, b, "max_abs_err");
    double worst = 0;
    for (size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
    return worst;
}

struct ProbeResult {
    std::string name;
    uint64_t seed = 0;
    double eps = 1e-5;
    double max_rel = 0;
    double max_abs = 0;
    bool pass = false;
};

struct GradReport {
    std::vector<ProbeResult> probes;
    double tol = 1e-4;

    bool pass() const {
        for (const auto& p : probes)
            if (!p.pass) return false;
        return !probes.empty();
    }

    const ProbeResult* worst() const {
        const ProbeResult* w = nullptr;
        for (const auto& p : probes)
            if (!w || p.max_rel > w->max_rel) w = &p;
        return w;
    }

    void print(std::ostream& os) const {
        for (const auto& p : probes) {
            os << (p.pass ? "PASS" : "FAIL") << "  " << p.name << "  seed=" << p.seed
               << "  max_rel=" << p.max_rel << "  max_abs=" << p.max_abs << "\n";
        }
        os << (pass() ? "gradcheck: all probes passed" : "gradcheck: FAILURES present")
           << " (tol " << tol << ", " << probes.size() << " probes)\n";
    }

    void write_csv(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw std::runtime_error("gradcheck: cannot write " + path);
        os << "probe,seed,eps,max_rel_err,max_abs_err,pass\n";
        for (const auto& p : probes) {
            os << p.name << "," << p.seed << "," << p.eps << "," << p.max_rel << "," << p.max_abs
               << "," << (p.pass ? 1 : 0) << "\n";
        }
    }
};

// ---- probe machinery ---------------------------------------------------------

namespace gradcheck_detail {

/// One constructed computation: a scalar loss plus live gradient storage,
/// aligned with the value vector the builder was given. `keep` owns the
/// Variables / layer states the graph references.
struct Built {
    typename Tape<double>::Ref loss;
    std::vector<Tensor<double>*> grads;
    std::shared_ptr<void> keep;
};

using Builder = std::function<Built(Tape<double>&, const std::vector<Tensor<double>>&)>;
using Sampler = std::function<std::vector<Tensor<double>>(uint64_t)>;

constexpr double kKinkMargin = 1e-3;

/// Absolute-error floor for the pass decision: below this, a gradient
/// component is indistinguishable from central-difference roundoff.
constexpr double kAbsFloor = 1e-8;

/// Weighted scalar readout: sum(out (.) fixed random tensor). Avoids the
/// degenerate all-ones upstream gradient of a bare sum.
inline typename Tape<double>::Ref readout(Tape<double>& t, typename Tape<double>::Ref out,
                                          uint64_t seed) {
    const auto& v = out->value;
    return sum(t, mul(t, out, t.constant(Tensor<double>::uniform(v.n(), v.h(), v.w(), v.c(),
                                                                 seed ^ 0x9e3779b97f4a7c15ULL))));
}

/// Compare autodiff against central differences on one sampled input set.
/// Samples whose forward pass lands within kKinkMargin of a ReLU zero or a
/// max-pool tie are rejected and redrawn (finite differences are meaningless
/// at those kinks).
inline ProbeResult run_probe(const std::string& name, uint64_t seed, double tol,
                             const Sampler& sample, const Builder& build, double eps = 1e-5) {
    for (int attempt = 0; attempt < 256; ++attempt) {
        uint64_t s = seed + 1000003ULL * attempt;
        std::vector<Tensor<double>> vals = sample(s);
        Tape<double> t;
        Built built = build(t, vals);
        if (t.kink_margin() < kKinkMargin) continue;
        t.backward(built.loss);

        ProbeResult r;
        r.name = name;
        r.seed = s;
        r.eps = eps;
        bool ok = true;
        for (size_t i = 0; i < vals.size(); ++i) {
            auto f = [&](const Tensor<double>& probe) {
                std::vector<Tensor<double>> v2 = vals;
                v2[i] = probe;
                Tape<double> tt;
                return build(tt, v2).loss->value.data[0];
            };
            Tensor<double> fd = finite_diff(f, vals[i], eps);
            r.max_rel = std::max(r.max_rel, max_rel_err(*built.grads[i], fd));
            r.max_abs = std::max(r.max_abs, max_abs_err(*built.grads[i], fd));
            // combined test: central differences carry roundoff noise of order
            // |f| * machine_eps / eps (~1e-9 here), so components that small
            // are judged on absolute error, larger ones on relative error
            const Tensor<double>& g = *built.grads[i];
            for (size_t j = 0; j < g.size(); ++j) {
                double diff = std::abs(g.data[j] - fd.data[j]);
                if (diff > kAbsFloor + tol * std::max(std::abs(g.data[j]), std::abs(fd.data[j]))) {
                    ok = false;
                }
            }
        }
        r.pass = ok;
        return r;
    }
    throw std::runtime_error("gradcheck: no kink-free probe found for " + name);
}

/// Holder for leaf Variables created from the sampled value vector.
struct VarPack {
    std::deque<Variable<double>> vars;
    BatchNormState<double> bn;  // optional, used by BN probes
};

}  // namespace gradcheck_detail

// ---- layer suite -------------------------------------------------------------

/// Finite-difference checks for every exposed op, one probe per (op, seed).
inline GradReport check_op_suite(const std::vector<uint64_t>& seeds, double tol = 1e-4) {
    using namespace gradcheck_detail;
    GradReport report;
    report.tol = tol;

    // generic: leaves from vals, graph g(refs...) -> out, weighted readout
    auto simple = [&](const std::string& name, uint64_t seed,
                      std::vector<std::array<int, 4>> shapes,
                      std::function<typename Tape<double>::Ref(
                          Tape<double>&, const std::vector<typename Tape<double>::Ref>&)> g) {
        Sampler sample = [shapes](uint64_t s) {
            std::vector<Tensor<double>> vals;
            for (size_t i = 0; i < shapes.size(); ++i) {
                auto& d = shapes[i];
                vals.push_back(Tensor<double>::uniform(d[0], d[1], d[2], d[3], s + 31 * i));
            }
            return vals;
        };
        Builder build = [g, seed](Tape<double>& t, const std::vector<Tensor<double>>& vals) {
            auto pack = std::make_shared<VarPack>();
            std::vector<typename Tape<double>::Ref> refs;
            Built b;
            for (const auto& v : vals) {
                pack->vars.emplace_back(v);
                refs.push_back(t.leaf(pack->vars.back()));
                b.grads.push_back(&pack->vars.back().grad);
            }
            b.loss = readout(t, g(t, refs), seed);
            b.keep = pack;
            return b;
        };
        report.probes.push_back(run_probe(name, seed, tol, sample, build));
    };

    for (uint64_t seed : seeds) {
        simple("add_broadcast", seed, {{2, 3, 3, 2}, {1, 3, 3, 2}},
               [](Tape<double>& t, const auto& r) { return add(t, r[0], r[1]); });
        simple("mul", seed, {{2, 3, 3, 2}, {2, 3, 3, 2}},
               [](Tape<double>& t, const auto& r) { return mul(t, r[0], r[1]); });
        simple("relu", seed, {{2, 3, 3, 2}},
               [](Tape<double>& t, const auto& r) { return relu(t, r[0]); });
        simple("sigmoid", seed, {{2, 3, 3, 2}},
               [](Tape<double>& t, const auto& r) { return sigmoid(t, r[0]); });
        simple("conv_same_stride2", seed, {{1, 5, 5, 2}, {3, 3, 2, 3}},
               [](Tape<double>& t, const auto& r) {
                   ConvSpec s{3, 3, 2, 1, 2, 3, Padding::same, ConvKind::regular};
                   return conv2d(t, r[0], r[1], s);
               });
        simple("conv_valid", seed, {{2, 5, 5, 2}, {3, 3, 2, 3}},
               [](Tape<double>& t, const auto& r) {
                   ConvSpec s{3, 3, 1, 1, 2, 3, Padding::valid, ConvKind::regular};
                   return conv2d(t, r[0], r[1], s);
               });
        simple("conv_atrous2x2_r2", seed, {{1, 6, 6, 2}, {2, 2, 2, 3}},
               [](Tape<double>& t, const auto& r) {
                   ConvSpec s{2, 2, 1, 2, 2, 3, Padding::same, ConvKind::atrous};
                   return conv2d(t, r[0], r[1], s);
               });
        simple("atrous_separable", seed, {{1, 6, 6, 2}, {2, 2, 2, 1}, {1, 1, 2, 3}},
               [](Tape<double>& t, const auto& r) {
                   ConvSpec s{2, 2, 1, 2, 2, 3, Padding::same, ConvKind::atrous_separable};
                   return separable_conv2d(t, r[0], r[1], r[2], s);
               });
        simple("max_pool2x2", seed, {{2, 4, 4, 2}},
               [](Tape<double>& t, const auto& r) { return max_pool2d(t, r[0], 2, 2); });
        simple("bilinear_upsample", seed, {{1, 3, 3, 2}},
               [](Tape<double>& t, const auto& r) { return bilinear_upsample(t, r[0], 6, 6); });
        simple("global_avg_pool", seed, {{2, 3, 3, 4}},
               [](Tape<double>& t, const auto& r) { return global_avg_pool(t, r[0]); });
        simple("dense_bias", seed, {{3, 1, 1, 5}, {1, 1, 5, 4}, {1, 1, 1, 4}},
               [](Tape<double>& t, const auto& r) { return dense(t, r[0], r[1], r[2]); });

        // batch norm probes gamma and beta through the layer's own state
        for (BNMode mode : {BNMode::train, BNMode::infer}) {
            std::string name = mode == BNMode::train ? "batch_norm_train" : "batch_norm_infer";
            Sampler sample = [](uint64_t s) {
                return std::vector<Tensor<double>>{Tensor<double>::uniform(4, 2, 2, 3, s),
                                                   Tensor<double>::uniform(1, 1, 1, 3, s + 1, 0.5, 1.5),
                                                   Tensor<double>::uniform(1, 1, 1, 3, s + 2)};
            };
            Builder build = [mode, seed](Tape<double>& t, const std::vector<Tensor<double>>& vals) {
                auto pack = std::make_shared<VarPack>();
                pack->vars.emplace_back(vals[0]);
                pack->bn = BatchNormState<double>(3);
                pack->bn.gamma.value = vals[1];
                pack->bn.beta.value = vals[2];
                pack->bn.running_mean = Tensor<double>::uniform(1, 1, 1, 3, seed + 3);
                pack->bn.running_var = Tensor<double>::uniform(1, 1, 1, 3, seed + 4, 0.5, 1.5);
                Built b;
                b.loss = readout(t, batch_norm(t, t.leaf(pack->vars[0]), pack->bn, mode), seed);
                b.grads = {&pack->vars[0].grad, &pack->bn.gamma.grad, &pack->bn.beta.grad};
                b.keep = pack;
                return b;
            };
            report.probes.push_back(run_probe(name, seed, tol, sample, build));
        }

        // softmax cross entropy against deterministic labels
        {
            Sampler sample = [](uint64_t s) {
                return std::vector<Tensor<double>>{Tensor<double>::uniform(3, 1, 1, 4, s, -2, 2)};
            };
            Builder build = [](Tape<double>& t, const std::vector<Tensor<double>>& vals) {
                auto pack = std::make_shared<VarPack>();
                pack->vars.emplace_back(vals[0]);
                Built b;
                b.loss = softmax_cross_entropy(t, t.leaf(pack->vars[0]), {0, 2, 3});
                b.grads = {&pack->vars[0].grad};
                b.keep = pack;
                return b;
            };
            report.probes.push_back(run_probe("softmax_cross_entropy", seed, tol, sample, build));
        }
    }
    return report;
}

// ---- building block ----------------------------------------------------------

/// Numerical check of the full building-block gradient: d(readout(tau)) with
/// respect to the input, every conv weight and every BN learnable.
inline GradReport check_building_block(const std::vector<uint64_t>& seeds, double tol = 1e-4,
                                       BNMode mode = BNMode::train) {
    using namespace gradcheck_detail;
    GradReport report;
    report.tol = tol;
    const ResidualUnitConfig ucfg{2, 2, 4};

    struct Holder {
        BuildingBlock<double> block;
        std::deque<Variable<double>> vars;
    };

    for (uint64_t seed : seeds) {
        Sampler sample = [ucfg](uint64_t s) {
            std::mt19937_64 rng(s);
            BuildingBlock<double> proto;
            proto.init(ucfg, 1, "probe", rng);
            std::vector<Tensor<double>> vals;
            vals.push_back(Tensor<double>::uniform(2, 6, 6, ucfg.w4, s + 99));
            proto.units[0].init(ucfg, "probe/unit0", rng);  // fresh draw for weights
            auto& u = proto.units[0];
            for (Tensor<double>* w : {&u.c1.w.value, &u.c2_atrous.w.value, &u.c3_sep.w_depth.value,
                                      &u.c3_sep.w_point.value, &u.c4.w.value, &u.bn_in.gamma.value,
                                      &u.bn_in.beta.value, &u.bn_mid.gamma.value,
                                      &u.bn_mid.beta.value, &u.bn_out.gamma.value,
                                      &u.bn_out.beta.value}) {
                vals.push_back(*w);
            }
            return vals;
        };
        std::string name = mode == BNMode::train ? "building_block_train" : "building_block_infer";
        Builder build = [ucfg, seed, mode](Tape<double>& t, const std::vector<Tensor<double>>& vals) {
            auto h = std::make_shared<Holder>();
            std::mt19937_64 rng(0);
            h->block.init(ucfg, 1, "probe", rng);
            auto& u = h->block.units[0];
            std::vector<Variable<double>*> slots = {
                &u.c1.w,          &u.c2_atrous.w,   &u.c3_sep.w_depth, &u.c3_sep.w_point,
                &u.c4.w,          &u.bn_in.gamma,   &u.bn_in.beta,     &u.bn_mid.gamma,
                &u.bn_mid.beta,   &u.bn_out.gamma,  &u.bn_out.beta};
            Built b;
            h->vars.emplace_back(vals[0]);
            b.grads.push_back(&h->vars[0].grad);
            for (size_t i = 0; i < slots.size(); ++i) {
                slots[i]->value = vals[i + 1];
                b.grads.push_back(&slots[i]->grad);
            }
            if (mode == BNMode::infer) {
                for (BatchNormState<double>* bn : {&u.bn_in, &u.bn_mid, &u.bn_out}) {
                    int c = bn->channels();
                    bn->running_mean = Tensor<double>::uniform(1, 1, 1, c, seed + 7);
                    bn->running_var = Tensor<double>::uniform(1, 1, 1, c, seed + 8, 0.5, 1.5);
                }
            }
            b.loss = readout(t, h->block.forward(t, t.leaf(h->vars[0]), mode), seed);
            b.keep = h;
            return b;
        };
        report.probes.push_back(run_probe(name, seed, tol, sample, build));
    }
    return report;
}

// ---- end-to-end tiny model -----------------------------------------------------

/// Two-stage reduced-width config, small enough for exhaustive finite
/// differences over every parameter.
inline ModelConfig gradcheck_tiny_config(int input_hw = 16) {
    ModelConfig cfg;
    cfg.input_hw = input_hw;
    cfg.input_channels = 2;
    cfg.classes = 3;
    cfg.stem_width = 3;
    cfg.fc_hidden = 4;
    cfg.stages.push_back({1, {2, 2, 4}, 1, false});
    cfg.stages.push_back({2, {2, 2, 8}, 1, true});
    return cfg;
}

/// End-to-end check: softmax cross-entropy gradient of the tiny model with
/// respect to the input image and every trainable tensor.
inline GradReport check_full_chain(const std::vector<uint64_t>& seeds, double tol = 1e-4) {
    using namespace gradcheck_detail;
    GradReport report;
    report.tol = tol;
    // input 8 with batch 1 keeps the count of ReLU/pool sites low enough that
    // kink-free samples are common, while still crossing both stages
    const ModelConfig cfg = gradcheck_tiny_config(8);
    const std::vector<int> labels = {1};

    struct Holder {
        std::unique_ptr<OpticNet<double>> net;
        std::deque<Variable<double>> vars;
    };

    for (uint64_t seed : seeds) {
        Sampler sample = [cfg](uint64_t s) {
            std::vector<Tensor<double>> vals;
            vals.push_back(
                Tensor<double>::uniform(1, cfg.input_hw, cfg.input_hw, cfg.input_channels, s, 0, 1));
            OpticNet<double> proto(cfg, s);
            proto.visit_variables([&](Variable<double>& v) { vals.push_back(v.value); });
            return vals;
        };
        Builder build = [cfg, labels](Tape<double>& t, const std::vector<Tensor<double>>& vals) {
            auto h = std::make_shared<Holder>();
            h->net = std::make_unique<OpticNet<double>>(cfg, 0);
            Built b;
            h->vars.emplace_back(vals[0]);
            b.grads.push_back(&h->vars[0].grad);
            size_t i = 1;
            h->net->visit_variables([&](Variable<double>& v) {
                v.value = vals[i++];
                b.grads.push_back(&v.grad);
            });
            auto logits = h->net->forward(t, t.leaf(h->vars[0]), BNMode::train);
            b.loss = softmax_cross_entropy(t, logits, labels);
            b.keep = h;
            return b;
        };
        report.probes.push_back(run_probe("full_chain", seed, tol, sample, build));
    }
    return report;
}

}  // namespace opticnet
