#pragma once

#include "checkpoint.hpp"
#include "dataset.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "optim.hpp"

namespace opticnet {

template <class T>
struct EpochLog {
    int epoch;
    T lr;
    T train_loss, train_acc;
    T val_loss, val_acc;
};

template <class T>
struct TrainResult {
    std::vector<EpochLog<T>> log;
    T best_val_loss = std::numeric_limits<T>::infinity();
    int best_epoch = -1;
    long long steps = 0;
    T final_train_acc = T(0);
};

inline const char* kRunLogHeader = "epoch,lr,train_loss,train_acc,val_loss,val_acc";

template <class T>
void write_run_log(std::ostream& os, const std::vector<EpochLog<T>>& log) {
    os << kRunLogHeader << "\n";
    for (const auto& e : log) {
        os << e.epoch << "," << e.lr << "," << e.train_loss << "," << e.train_acc << ","
           << e.val_loss << "," << e.val_acc << "\n";
    }
}

template <class T>
struct EvalResult {
    ConfusionMatrix cm;
    T loss = T(0);
    T acc = T(0);
};

/// Argmax predictions over the dataset, aggregated into a confusion matrix,
/// plus mean cross-entropy. Runs in inference mode (frozen BN statistics).
template <class T>
EvalResult<T> evaluate(OpticNet<T>& model, const Dataset<T>& ds, int batch_size = 8) {
    ds.validate();
    if (ds.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
    if (model.config().classes != ds.classes()) {
        throw std::invalid_argument("evaluate: model has " +
                                    std::to_string(model.config().classes) +
                                    " classes, dataset has " + std::to_string(ds.classes()));
    }
    EvalResult<T> res;
    res.cm = ConfusionMatrix(ds.class_names);
    T loss_sum = T(0);
    long long correct = 0;
    for (int start = 0; start < ds.size(); start += batch_size) {
        std::vector<int> idx;
        for (int i = start; i < std::min(start + batch_size, ds.size()); ++i) idx.push_back(i);
        auto [batch, labels] = make_batch(ds, idx);
        Tape<T> t;
        auto logits = model.forward(t, t.constant(std::move(batch)), BNMode::infer);
        auto loss = softmax_cross_entropy(t, logits, labels);
        loss_sum += loss->value.data[0] * static_cast<T>(idx.size());
        const int k = logits->value.c();
        for (size_t i = 0; i < idx.size(); ++i) {
            int best = 0;
            for (int j = 1; j < k; ++j) {
                if (logits->value.at(static_cast<int>(i), 0, 0, j) >
                    logits->value.at(static_cast<int>(i), 0, 0, best)) {
                    best = j;
                }
            }
            res.cm.record(labels[i], best);
            if (best == labels[i]) ++correct;
        }
    }
    res.loss = loss_sum / static_cast<T>(ds.size());
    res.acc = static_cast<T>(correct) / static_cast<T>(ds.size());
    return res;
}

/// Train with Adam + reduce-on-plateau. Deterministic for a fixed seed in
/// single-threaded mode: batch order derives from cfg.seed and the epoch
/// index. When checkpoint_path is non-empty the lowest-validation-loss
/// parameters are persisted there.
template <class T>
TrainResult<T> train(OpticNet<T>& model, const Dataset<T>& train_set, const Dataset<T>& val_set,
                     const TrainConfig<T>& cfg, const std::string& checkpoint_path = "",
                     std::ostream* progress = nullptr) {
    cfg.validate();
    train_set.validate();
    val_set.validate();
    if (train_set.size() == 0 || val_set.size() == 0) {
        throw std::invalid_argument("train: train and validation sets must be non-empty");
    }
    for (int count : train_set.per_class_counts()) {
        if (count == 0) throw std::invalid_argument("train: a class has no training samples");
    }
    if (model.config().classes != train_set.classes()) {
        throw std::invalid_argument("train: model/dataset class count mismatch");
    }

    auto params = model.parameters();
    Adam<T> opt(cfg.beta1, cfg.beta2, cfg.epsilon);
    PlateauSchedule<T> sched(cfg.lr, cfg.gamma, cfg.patience, cfg.lr_min);

    TrainResult<T> res;
    bool step_capped = false;
    for (int epoch = 0; epoch < cfg.epochs && !step_capped; ++epoch) {
        std::vector<int> order(train_set.size());
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(cfg.seed + 0x9e3779b97f4a7c15ULL * (epoch + 1));
        std::shuffle(order.begin(), order.end(), rng);

        const T lr = sched.lr();
        T loss_sum = T(0);
        long long correct = 0, seen = 0;
        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            if (cfg.max_steps >= 0 && res.steps >= cfg.max_steps) {
                step_capped = true;
                break;
            }
            std::vector<int> idx(order.begin() + start,
                                 order.begin() + std::min(start + cfg.batch_size, order.size()));
            auto [batch, labels] = make_batch(train_set, idx);
            Tape<T> t;
            auto logits = model.forward(t, t.constant(std::move(batch)), BNMode::train);
            auto loss = softmax_cross_entropy(t, logits, labels);

            loss_sum += loss->value.data[0] * static_cast<T>(idx.size());
            seen += static_cast<long long>(idx.size());
            const int k = logits->value.c();
            for (size_t i = 0; i < idx.size(); ++i) {
                int best = 0;
                for (int j = 1; j < k; ++j) {
                    if (logits->value.at(static_cast<int>(i), 0, 0, j) >
                        logits->value.at(static_cast<int>(i), 0, 0, best)) {
                        best = j;
                    }
                }
                if (best == labels[i]) ++correct;
            }

            zero_grad<T>(params);
            t.backward(loss);
            opt.step(params, lr);
            ++res.steps;
        }
        if (seen == 0) break;  // step cap hit before the first batch

        EpochLog<T> row;
        row.epoch = epoch;
        row.lr = lr;
        row.train_loss = loss_sum / static_cast<T>(seen);
        row.train_acc = static_cast<T>(correct) / static_cast<T>(seen);
        res.final_train_acc = row.train_acc;

        EvalResult<T> val = evaluate(model, val_set, cfg.batch_size);
        row.val_loss = val.loss;
        row.val_acc = val.acc;
        res.log.push_back(row);

        // the first completed epoch always establishes a baseline, so a run
        // whose validation loss never becomes finite still leaves a checkpoint
        if (val.loss < res.best_val_loss || res.best_epoch < 0) {
            res.best_val_loss = val.loss;
            res.best_epoch = epoch;
            if (!checkpoint_path.empty()) {
                auto tensors = model.state_tensors();
                save_checkpoint(checkpoint_path, tensors);
            }
        }
        sched.step(val.loss);

        if (progress) {
            *progress << "epoch " << epoch << "  lr " << lr << "  train_loss " << row.train_loss
                      << "  train_acc " << row.train_acc << "  val_loss " << row.val_loss
                      << "  val_acc " << row.val_acc << "\n";
        }
        if (cfg.stop_train_acc >= T(0) && row.train_acc >= cfg.stop_train_acc) break;
    }
    return res;
}

}  // namespace opticnet
