// Command-line front end: train / eval / audit / gradcheck / synth /
// export-features. Exit codes: 0 ok, 1 failing gradient probes, 2 bad
// path or configuration, 3 checkpoint/model mismatch.
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include <opticnet/config.hpp>
#include <opticnet/gradcheck.hpp>
#include <opticnet/image_io.hpp>
#include <opticnet/train.hpp>

namespace fs = std::filesystem;
using namespace opticnet;
using F = float;

namespace {

int thread_count_from_env() {
    const char* env = std::getenv("OPTICNET_THREADS");
    if (!env) return 1;  // single-threaded by default for determinism
    int n = std::atoi(env);
    return n >= 1 ? n : 1;
}

fs::path make_run_dir(const std::string& base) {
    std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", std::localtime(&now));
    fs::path dir = fs::path(base) / stamp;
    for (int i = 2; fs::exists(dir); ++i) dir = fs::path(base) / (std::string(stamp) + "-" + std::to_string(i));
    fs::create_directories(dir);
    return dir;
}

/// All off-diagonal costs equal; the fallback when the OCT2017 class names
/// don't match the dataset at hand.
PenaltyMatrix uniform_penalties(const std::vector<std::string>& labels) {
    std::vector<double> w(labels.size() * labels.size(), 1.0);
    for (size_t i = 0; i < labels.size(); ++i) w[i * labels.size() + i] = 0.0;
    return PenaltyMatrix(labels, std::move(w));
}

/// Resolve --penalties for a dataset: builtin name, grid file, or none.
/// Returns nullopt when penalties are disabled or inapplicable (noted in
/// *note).
std::optional<PenaltyMatrix> resolve_penalties(const std::string& spec,
                                               const std::vector<std::string>& labels,
                                               std::string* note) {
    if (spec == "none") return std::nullopt;
    if (spec == "uniform") return uniform_penalties(labels);
    PenaltyMatrix base = spec == "oct2017" ? default_oct2017_penalties() : load_penalties(spec);
    try {
        return base.aligned_to(labels);
    } catch (const std::invalid_argument&) {
        if (spec == "oct2017") {
            *note = "note: oct2017 penalty classes do not match this dataset; "
                    "using uniform off-diagonal penalties\n";
            return uniform_penalties(labels);
        }
        throw;
    }
}

Dataset<F> load_train_data(const RunConfig& cfg, Dataset<F>* val_out) {
    if (cfg.synthetic || cfg.data_root.empty()) {
        if (!cfg.synthetic) {
            throw std::invalid_argument("config: provide data_root or enable synthetic data");
        }
        // memorization experiment: validate on the training images themselves
        Dataset<F> ds = make_synthetic<F>(cfg.classes, cfg.synth_per_class, cfg.input_size,
                                          cfg.input_size, cfg.seed);
        *val_out = ds;
        return ds;
    }
    fs::path root(cfg.data_root);
    if (fs::is_directory(root / "train")) {
        Dataset<F> train_set = load_image_tree<F>((root / "train").string(), cfg.input_size,
                                                  cfg.input_size);
        if (fs::is_directory(root / "test")) {
            *val_out = load_image_tree<F>((root / "test").string(), cfg.input_size,
                                          cfg.input_size);
            return train_set;
        }
        auto [tr, va] = split(train_set, cfg.train_fraction, cfg.seed);
        *val_out = std::move(va);
        return std::move(tr);
    }
    Dataset<F> all = load_image_tree<F>(root.string(), cfg.input_size, cfg.input_size);
    auto [tr, va] = split(all, cfg.train_fraction, cfg.seed);
    *val_out = std::move(va);
    return std::move(tr);
}

void print_metrics(std::ostream& os, const ConfusionMatrix& cm,
                   const std::optional<PenaltyMatrix>& penalties, const std::string& note) {
    cm.print(os);
    os << note;
    os << "accuracy       " << 100.0 * accuracy(cm) << " %\n";
    os << "sensitivity    " << 100.0 * sensitivity(cm) << " %\n";
    os << "specificity    " << 100.0 * specificity(cm) << " %\n";
    if (penalties) os << "weighted error " << weighted_error(cm, *penalties) << " %\n";
}

int cmd_train(const RunConfig& cfg) {
    ModelConfig mc = cfg.model_config();
    TrainConfig<F> tc = cfg.train_config<F>();

    Dataset<F> val_set;
    Dataset<F> train_set = load_train_data(cfg, &val_set);

    fs::path run_dir = make_run_dir(cfg.out_dir);
    std::cout << "run directory: " << run_dir.string() << "\n";
    cfg.save_file((run_dir / "config.txt").string());

    OpticNet<F> model(mc, cfg.seed);
    auto result = train(model, train_set, val_set, tc, (run_dir / "best.optn").string(),
                        &std::cout);

    std::ofstream log(run_dir / "log.csv");
    write_run_log(log, result.log);

    std::ofstream report(run_dir / "report.txt");
    if (!result.log.empty()) {
        auto tensors = model.state_tensors();
        if (fs::exists(run_dir / "best.optn")) {
            load_checkpoint((run_dir / "best.optn").string(), tensors);
        }
        EvalResult<F> final_eval = evaluate(model, val_set, tc.batch_size);
        std::string note;
        auto penalties = resolve_penalties(cfg.penalties, val_set.class_names, &note);
        print_metrics(report, final_eval.cm, penalties, note);
        std::cout << "final train accuracy: " << 100.0 * result.final_train_acc << " %"
                  << "  (" << result.steps << " optimizer steps)\n";
        std::cout << "best validation loss " << result.best_val_loss << " at epoch "
                  << result.best_epoch << "\n";
    } else {
        report << "no epochs run\n";
    }
    return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& checkpoint) {
    ModelConfig mc = cfg.model_config();
    OpticNet<F> model(mc, 0);
    auto tensors = model.state_tensors();
    load_checkpoint(checkpoint, tensors);

    Dataset<F> ds;
    if (cfg.synthetic || cfg.data_root.empty()) {
        if (!cfg.synthetic) throw std::invalid_argument("eval: provide --data or --synthetic");
        ds = make_synthetic<F>(cfg.classes, cfg.synth_per_class, cfg.input_size, cfg.input_size,
                               cfg.seed);
    } else {
        fs::path root(cfg.data_root);
        fs::path tree = fs::is_directory(root / "test") ? root / "test" : root;
        ds = load_image_tree<F>(tree.string(), cfg.input_size, cfg.input_size);
    }

    EvalResult<F> res = evaluate(model, ds, cfg.batch_size);
    std::string note;
    auto penalties = resolve_penalties(cfg.penalties, ds.class_names, &note);
    print_metrics(std::cout, res.cm, penalties, note);
    std::cout << "mean loss      " << res.loss << "\n";
    return 0;
}

int cmd_audit(const RunConfig& cfg) {
    ModelConfig mc = cfg.model_config();
    Variant v = *parse_variant(cfg.variant);
    auto reps = variant_repeats(v);
    std::cout << variant_name(v) << "  input " << mc.input_hw << "x" << mc.input_hw << "x"
              << mc.input_channels << "  classes " << mc.classes << "\n";
    std::cout << "residual-unit repeats per stage: [" << reps[0] << "," << reps[1] << ","
              << reps[2] << "," << reps[3] << "]\n\n";

    auto rows = describe(mc);
    std::cout << std::left << std::setw(34) << "layer" << std::right << std::setw(16) << "output"
              << std::setw(12) << "weights" << std::setw(8) << "bias" << std::setw(8) << "bn"
              << std::setw(16) << "MACs\n";
    for (const auto& r : rows) {
        std::ostringstream shape;
        shape << r.out_h << "x" << r.out_w << "x" << r.out_c;
        std::cout << std::left << std::setw(34) << r.name << std::right << std::setw(16)
                  << shape.str() << std::setw(12) << r.weights << std::setw(8) << r.biases
                  << std::setw(8) << r.bn << std::setw(16) << r.macs << "\n";
    }
    long long weights = total_weights(rows);
    std::cout << "\ntotal conv/dense weights: " << weights << "  ("
              << weights / 1e6 << " M)\n";
    std::cout << "estimated forward FLOPs per image: " << estimate_flops(mc) << "\n";

    OpticNet<F> model(mc, 0);
    auto tensors = model.state_tensors();
    std::cout << "builder weight census: " << model.weight_census()
              << "  bn learnables: " << model.bn_learnable_count() << "  biases: "
              << model.bias_count() << "\n";
    std::cout << "checkpoint size: " << checkpoint_byte_size(tensors) << " bytes\n";

    std::cout << "\nmiddle-convolution comparison (f=3, 64 kernels, 64 input channels):\n";
    struct Row { const char* name; MiddleConvKind kind; };
    for (Row row : {Row{"regular", MiddleConvKind::regular}, Row{"atrous", MiddleConvKind::atrous},
                    Row{"separable", MiddleConvKind::separable},
                    Row{"atrous separable", MiddleConvKind::atrous_separable},
                    Row{"branched (this unit)", MiddleConvKind::branched}}) {
        std::cout << "  " << std::left << std::setw(22) << row.name << std::right << std::setw(8)
                  << middle_conv_params(row.kind, 3, 64, 64) << "  depletion "
                  << depletion_percent(row.kind, 3, 64) << " %\n";
    }
    return 0;
}

int cmd_gradcheck(const std::string& suite, int n_seeds, uint64_t seed, double tol,
                  const std::string& csv) {
    std::vector<uint64_t> seeds;
    for (int i = 0; i < n_seeds; ++i) seeds.push_back(seed + 100 * i);

    GradReport all;
    all.tol = tol;
    auto merge = [&](GradReport r) {
        for (auto& p : r.probes) all.probes.push_back(std::move(p));
    };
    if (suite == "all" || suite == "ops") merge(check_op_suite(seeds, tol));
    if (suite == "all" || suite == "block") {
        merge(check_building_block(seeds, tol, BNMode::train));
        merge(check_building_block(seeds, tol, BNMode::infer));
    }
    if (suite == "all" || suite == "chain") {
        std::vector<uint64_t> few(seeds.begin(), seeds.begin() + std::min<size_t>(3, seeds.size()));
        merge(check_full_chain(few, tol));
    }
    if (all.probes.empty()) {
        std::cerr << "error: unknown suite '" << suite << "' (all, ops, block, chain)\n";
        return 2;
    }
    all.print(std::cout);
    if (!csv.empty()) all.write_csv(csv);
    return all.pass() ? 0 : 1;
}

int cmd_synth(int classes, int per_class, int size, uint64_t seed, const std::string& out) {
    auto ds = make_synthetic<F>(classes, per_class, size, size, seed);
    save_image_tree(ds, out);
    std::cout << "wrote " << ds.size() << " images (" << classes << " classes x " << per_class
              << ") under " << out << "\n";
    return 0;
}

int cmd_export_features(const RunConfig& cfg, const std::string& checkpoint, int stage,
                        const std::string& image, const std::string& out) {
    ModelConfig mc = cfg.model_config();
    if (stage < 1 || stage > static_cast<int>(mc.stages.size())) {
        throw std::invalid_argument("export-features: stage must be in [1," +
                                    std::to_string(mc.stages.size()) + "]");
    }
    OpticNet<F> model(mc, 0);
    if (!checkpoint.empty()) {
        auto tensors = model.state_tensors();
        load_checkpoint(checkpoint, tensors);
    }

    Tensor<F> input;
    if (image.empty()) {
        auto ds = make_synthetic<F>(cfg.classes, 1, cfg.input_size, cfg.input_size, cfg.seed);
        input = ds.images[0];
    } else {
        fs::path img(image);
        // single image: wrap it in a one-class tree loader pass
        cv::Mat raw = cv::imread(image, cv::IMREAD_UNCHANGED);
        if (raw.empty()) throw std::runtime_error("export-features: cannot decode " + image);
        if (raw.channels() == 4) cv::cvtColor(raw, raw, cv::COLOR_BGRA2BGR);
        double scale = raw.depth() == CV_16U ? 1.0 / 65535.0 : 1.0 / 255.0;
        cv::Mat scaled, resized;
        raw.convertTo(scaled, CV_32F, scale);
        cv::resize(scaled, resized, cv::Size(cfg.input_size, cfg.input_size), 0, 0,
                   cv::INTER_LINEAR);
        input = Tensor<F>(1, cfg.input_size, cfg.input_size, 3);
        for (int y = 0; y < cfg.input_size; ++y)
            for (int x = 0; x < cfg.input_size; ++x)
                for (int c = 0; c < 3; ++c) {
                    input.at(0, y, x, c) = resized.channels() == 1
                                               ? resized.at<float>(y, x)
                                               : resized.at<cv::Vec3f>(y, x)[2 - c];
                }
    }

    Tape<F> t;
    BlockCapture<F> cap;
    model.forward(t, t.constant(std::move(input)), BNMode::infer, stage, &cap);

    std::string base = "stage" + std::to_string(stage);
    std::vector<std::pair<std::string, Tensor<F>*>> tensors = {
        {base + "/alpha", &cap.alpha}, {base + "/beta", &cap.beta}, {base + "/tau", &cap.tau}};
    save_checkpoint(out, tensors);
    std::cout << "wrote " << base << " alpha/beta/tau " << cap.tau.shape_str() << " to " << out
              << "\n";
    return 0;
}

void add_model_flags(CLI::App* app, RunConfig& cfg) {
    app->add_option("--variant", cfg.variant, "opticnet47 | opticnet63 | opticnet71");
    app->add_option("--input-size", cfg.input_size, "square input resolution");
    app->add_option("--classes", cfg.classes, "number of classes");
    app->add_option("--width-div", cfg.width_div, "divide all channel widths (desk-scale runs)");
    app->add_option("--seed", cfg.seed, "RNG seed");
}

}  // namespace

int main(int argc, char** argv) {
    set_blas_threads(thread_count_from_env());

    CLI::App app{"Optic-Net reference implementation"};
    app.require_subcommand(1);
    RunConfig cfg;
    std::string config_file, checkpoint, suite = "all", csv, image, out;
    int stage = 4, n_seeds = 10;
    double tol = 1e-4;
    int synth_classes = 4, synth_per_class = 16, synth_size = 64;
    uint64_t synth_seed = 0;

    auto* tr = app.add_subcommand("train", "train a model");
    tr->add_option("--config", config_file, "key=value config file");
    add_model_flags(tr, cfg);
    tr->add_flag("--synthetic", cfg.synthetic, "use the synthetic dataset");
    tr->add_option("--data", cfg.data_root, "class-tree dataset root");
    tr->add_option("--per-class", cfg.synth_per_class, "synthetic samples per class");
    tr->add_option("--train-fraction", cfg.train_fraction, "train split fraction");
    tr->add_option("--batch-size", cfg.batch_size);
    tr->add_option("--epochs", cfg.epochs);
    tr->add_option("--lr", cfg.lr);
    tr->add_option("--steps", cfg.steps, "optimizer-step cap (-1 = unlimited)");
    tr->add_option("--penalties", cfg.penalties, "oct2017 | uniform | none | grid file");
    tr->add_option("--out", cfg.out_dir, "run output directory");

    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    ev->add_option("--checkpoint", checkpoint, "OPTN checkpoint")->required();
    add_model_flags(ev, cfg);
    ev->add_flag("--synthetic", cfg.synthetic);
    ev->add_option("--data", cfg.data_root);
    ev->add_option("--per-class", cfg.synth_per_class);
    ev->add_option("--batch-size", cfg.batch_size);
    ev->add_option("--penalties", cfg.penalties);

    auto* au = app.add_subcommand("audit", "layer table, parameter and FLOP audit");
    add_model_flags(au, cfg);

    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    gc->add_option("--suite", suite, "all | ops | block | chain");
    gc->add_option("--seeds", n_seeds, "number of random seeds");
    gc->add_option("--seed", synth_seed, "base seed");
    gc->add_option("--tol", tol, "max relative error tolerance");
    gc->add_option("--csv", csv, "write per-probe CSV here");

    auto* sy = app.add_subcommand("synth", "write a synthetic dataset as a PNG class tree");
    sy->add_option("--classes", synth_classes);
    sy->add_option("--per-class", synth_per_class);
    sy->add_option("--size", synth_size, "square image size");
    sy->add_option("--seed", synth_seed);
    sy->add_option("--out", out, "output directory")->required();

    auto* ex = app.add_subcommand("export-features", "export a stage's alpha/beta/tau maps");
    ex->add_option("--checkpoint", checkpoint, "OPTN checkpoint (optional: random init if absent)");
    ex->add_option("--stage", stage, "stage index, 1-based");
    ex->add_option("--image", image, "input image (default: synthetic sample)");
    ex->add_option("--out", out, "output OPTN file")->required();
    add_model_flags(ex, cfg);

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_file.empty()) {
            RunConfig from_file;
            from_file.load_file(config_file);
            // command-line flags override the file; CLI11 already wrote the
            // explicit ones into cfg, so copy over everything that moved off
            // its default
            from_file.synthetic = cfg.synthetic || from_file.synthetic;
            RunConfig merged = from_file;
            RunConfig defaults;
            auto pick = [](auto& dst, const auto& cli_val, const auto& def_val) {
                if (!(cli_val == def_val)) dst = cli_val;
            };
            pick(merged.variant, cfg.variant, defaults.variant);
            pick(merged.input_size, cfg.input_size, defaults.input_size);
            pick(merged.classes, cfg.classes, defaults.classes);
            pick(merged.width_div, cfg.width_div, defaults.width_div);
            pick(merged.data_root, cfg.data_root, defaults.data_root);
            pick(merged.synth_per_class, cfg.synth_per_class, defaults.synth_per_class);
            pick(merged.train_fraction, cfg.train_fraction, defaults.train_fraction);
            pick(merged.out_dir, cfg.out_dir, defaults.out_dir);
            pick(merged.penalties, cfg.penalties, defaults.penalties);
            pick(merged.batch_size, cfg.batch_size, defaults.batch_size);
            pick(merged.epochs, cfg.epochs, defaults.epochs);
            pick(merged.lr, cfg.lr, defaults.lr);
            pick(merged.steps, cfg.steps, defaults.steps);
            pick(merged.seed, cfg.seed, defaults.seed);
            cfg = merged;
        }
        if (tr->parsed()) return cmd_train(cfg);
        if (ev->parsed()) return cmd_eval(cfg, checkpoint);
        if (au->parsed()) return cmd_audit(cfg);
        if (gc->parsed()) return cmd_gradcheck(suite, n_seeds, synth_seed, tol, csv);
        if (sy->parsed()) return cmd_synth(synth_classes, synth_per_class, synth_size, synth_seed, out);
        if (ex->parsed()) return cmd_export_features(cfg, checkpoint, stage, image, out);
    } catch (const checkpoint_mismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
