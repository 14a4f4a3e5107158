#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "herald/errors.hpp"
#include "herald/log.hpp"
#include "herald/model.hpp"
#include "herald/numeric_health.hpp"
#include "herald/optim.hpp"

namespace herald {

struct Splits {
    std::vector<int> train;
    std::vector<int> val;
    std::vector<int> test;
};

struct TrainConfig {
    double lr = 0.01;
    int max_epochs = 1000;
    int patience = 100;
    double reg_weight = 0.1;
    std::uint64_t seed = 0;
    int batch_size = 32;  // graph task only
};

inline void validate(const TrainConfig& cfg) {
    if (!(cfg.lr > 0.0)) throw ConfigError("train: lr must be positive");
    if (cfg.max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
    if (cfg.patience < 0 || cfg.patience > cfg.max_epochs) {
        throw ConfigError("train: patience must lie in [0, max_epochs]");
    }
    if (cfg.reg_weight < 0.0) throw ConfigError("train: reg_weight must be >= 0");
    if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
}

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    int stopped_epoch = 0;
    int best_val_epoch = 0;
    double best_val_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::vector<double> fold_accuracies;  // CV only
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;

    nlohmann::json to_json() const {
        nlohmann::json epochs_json = nlohmann::json::array();
        for (const auto& e : epochs) {
            epochs_json.push_back({{"epoch", e.epoch},
                                   {"train_loss", e.train_loss},
                                   {"train_accuracy", e.train_accuracy},
                                   {"val_loss", e.val_loss},
                                   {"val_accuracy", e.val_accuracy}});
        }
        return {{"epochs", epochs_json},
                {"stopped_epoch", stopped_epoch},
                {"best_val_epoch", best_val_epoch},
                {"best_val_accuracy", best_val_accuracy},
                {"test_accuracy", test_accuracy},
                {"fold_accuracies", fold_accuracies},
                {"mean_accuracy", mean_accuracy},
                {"std_accuracy", std_accuracy}};
    }

    /// Deterministic per-epoch CSV (no timestamps so reruns are
    /// byte-identical).
    std::string metrics_csv() const {
        std::ostringstream os;
        os << std::setprecision(17);
        os << "epoch,train_loss,train_accuracy,val_loss,val_accuracy\n";
        for (const auto& e : epochs) {
            os << e.epoch << ',' << e.train_loss << ',' << e.train_accuracy << ','
               << e.val_loss << ',' << e.val_accuracy << '\n';
        }
        return os.str();
    }
};

// ---------------------------------------------------------------------------
// Losses and metrics
// ---------------------------------------------------------------------------

/// Mean negative log-softmax of the true classes over the masked rows.
inline Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                            const std::vector<int>& mask) {
    if (mask.empty()) throw ContractError("cross_entropy: empty mask");
    const std::size_t n = logits.rows(), c = logits.cols();
    for (int idx : mask) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= n) {
            throw ContractError("cross_entropy: mask index " + std::to_string(idx) +
                                " out of range");
        }
        if (labels[static_cast<std::size_t>(idx)] < 0 ||
            static_cast<std::size_t>(labels[static_cast<std::size_t>(idx)]) >= c) {
            throw ContractError("cross_entropy: label out of range at row " +
                                std::to_string(idx));
        }
    }
    const double inv = 1.0 / static_cast<double>(mask.size());
    // softmax rows for the masked subset, kept for the backward pass
    std::vector<double> probs(mask.size() * c);
    double loss = 0.0;
    for (std::size_t k = 0; k < mask.size(); ++k) {
        const auto i = static_cast<std::size_t>(mask[k]);
        const double* row = logits.data().data() + i * c;
        double mx = row[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            probs[k * c + j] = std::exp(row[j] - mx);
            denom += probs[k * c + j];
        }
        for (std::size_t j = 0; j < c; ++j) probs[k * c + j] /= denom;
        const double lse = mx + std::log(denom);
        loss += lse - row[static_cast<std::size_t>(labels[i])];
    }
    loss *= inv;
    std::vector<int> mask_copy = mask;
    std::vector<int> label_copy = labels;
    return make_op(
        "cross_entropy", {1}, {loss}, {logits},
        [probs = std::move(probs), mask_copy = std::move(mask_copy),
         label_copy = std::move(label_copy), c, inv](const TensorNode& o) {
            auto& in = *o.inputs[0];
            if (!in.requires_grad) return;
            in.ensure_grad();
            const double g = o.grad[0] * inv;
            for (std::size_t k = 0; k < mask_copy.size(); ++k) {
                const auto i = static_cast<std::size_t>(mask_copy[k]);
                const auto y = static_cast<std::size_t>(label_copy[i]);
                for (std::size_t j = 0; j < c; ++j) {
                    const double onehot = j == y ? 1.0 : 0.0;
                    in.grad[i * c + j] += g * (probs[k * c + j] - onehot);
                }
            }
        });
}

/// Frobenius distance between the static and residual operators.
inline Tensor topology_regularizer(const Tensor& n_static, const Tensor& n_res) {
    detail::require_same_shape("topology_regularizer", n_static, n_res);
    return frobenius_norm(sub(n_static, n_res));
}

/// Mean over adaptor invocations; zero when none exist.
inline Tensor topology_regularizer(const Tensor& n_static,
                                   const std::vector<HeraldOutput>& outputs) {
    if (outputs.empty()) return Tensor::scalar(0.0);
    Tensor acc = topology_regularizer(n_static, outputs[0].n_res);
    for (std::size_t k = 1; k < outputs.size(); ++k) {
        acc = add(acc, topology_regularizer(n_static, outputs[k].n_res));
    }
    return scale(acc, 1.0 / static_cast<double>(outputs.size()));
}

inline int argmax_row(const Tensor& logits, std::size_t row) {
    const std::size_t c = logits.cols();
    int best = 0;
    double best_v = logits.at(row, 0);
    for (std::size_t j = 1; j < c; ++j) {
        // ties break toward the lowest class index
        if (logits.at(row, j) > best_v) {
            best_v = logits.at(row, j);
            best = static_cast<int>(j);
        }
    }
    return best;
}

inline double accuracy(const Tensor& logits, const std::vector<int>& labels,
                       const std::vector<int>& mask) {
    if (mask.empty()) throw ContractError("accuracy: empty mask");
    std::size_t hits = 0;
    for (int idx : mask) {
        const auto i = static_cast<std::size_t>(idx);
        if (argmax_row(logits, i) == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(mask.size());
}

// ---------------------------------------------------------------------------
// Training loops
// ---------------------------------------------------------------------------

namespace detail {

struct BestSnapshot {
    std::vector<std::vector<double>> params;
    int epoch = 0;
    double val_accuracy = -1.0;
};

inline void capture(const Model& model, BestSnapshot& snap, int epoch, double val_acc) {
    snap.params.clear();
    for (const auto& t : model.parameters()) snap.params.push_back(t.data());
    snap.epoch = epoch;
    snap.val_accuracy = val_acc;
}

inline void restore(Model& model, const BestSnapshot& snap) {
    auto params = model.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) params[i].data() = snap.params[i];
}

inline void check_finite(double loss) {
    if (!std::isfinite(loss)) {
        throw NumericError("training diverged (non-finite loss); " +
                           numeric_health().report());
    }
}

/// Early stopping bookkeeping: stop after `patience` consecutive epochs
/// without an improvement (patience 0 stops at the first one).
inline bool should_stop(int epochs_since_best, int patience) {
    return epochs_since_best >= std::max(patience, 1);
}

inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
    if (xs.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size());
    return {mean, std::sqrt(var)};
}

}  // namespace detail

/// Carves a seeded validation subset (20%) out of the training ids when a
/// dataset ships without one; early stopping needs it.
inline Splits ensure_validation_split(Splits splits, std::uint64_t seed) {
    if (!splits.val.empty()) return splits;
    if (splits.train.size() < 2) {
        throw ContractError("splits: cannot carve a validation set out of " +
                            std::to_string(splits.train.size()) + " training ids");
    }
    Rng rng(stream_seed(seed, "validation_carve"));
    std::vector<int> pool = splits.train;
    rng.shuffle(pool);
    const std::size_t n_val = std::max<std::size_t>(1, pool.size() / 5);
    splits.val.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_val));
    splits.train.assign(pool.begin() + static_cast<std::ptrdiff_t>(n_val), pool.end());
    std::sort(splits.val.begin(), splits.val.end());
    std::sort(splits.train.begin(), splits.train.end());
    return splits;
}

/// Full-batch training for hypernode classification. Evaluation runs
/// after each update; the reported test accuracy always comes from the
/// best-validation parameters.
inline TrainReport train_node(Model& model, const PreparedGraph& prep,
                              const Tensor& features, const std::vector<int>& labels,
                              const Splits& splits_in, const TrainConfig& cfg) {
    validate(cfg);
    if (splits_in.train.empty() || splits_in.test.empty()) {
        throw ContractError("train: empty train or test split");
    }
    const Splits splits = ensure_validation_split(splits_in, cfg.seed);
    const bool use_reg = cfg.reg_weight > 0.0 && model.config().any_herald();
    Adam optimizer(model.parameters(), AdamConfig{cfg.lr});
    Rng dropout_rng(stream_seed(cfg.seed, "dropout"));

    TrainReport report;
    detail::BestSnapshot best;
    int epochs_since_best = 0;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        ForwardResult fwd = model.forward(prep, features, /*training=*/true, &dropout_rng);
        Tensor loss = cross_entropy(fwd.logits, labels, splits.train);
        if (use_reg) {
            loss = add(loss, scale(topology_regularizer(prep.normalized, fwd.herald_outputs),
                                   cfg.reg_weight));
        }
        detail::check_finite(loss.value());
        const double train_loss = loss.value();
        const double train_acc = accuracy(fwd.logits, labels, splits.train);
        backward(loss);
        optimizer.step();

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = train_loss;
        rec.train_accuracy = train_acc;
        {
            NoGradGuard eval;
            ForwardResult ev = model.forward(prep, features, /*training=*/false);
            rec.val_loss = cross_entropy(ev.logits, labels, splits.val).value();
            rec.val_accuracy = accuracy(ev.logits, labels, splits.val);
        }
        report.epochs.push_back(rec);
        report.stopped_epoch = epoch;

        if (rec.val_accuracy > best.val_accuracy) {
            detail::capture(model, best, epoch, rec.val_accuracy);
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
            if (detail::should_stop(epochs_since_best, cfg.patience)) break;
        }
    }

    detail::restore(model, best);
    report.best_val_epoch = best.epoch;
    report.best_val_accuracy = best.val_accuracy;
    {
        NoGradGuard eval;
        ForwardResult ev = model.forward(prep, features, /*training=*/false);
        report.test_accuracy = accuracy(ev.logits, labels, splits.test);
    }
    return report;
}

/// One prepared instance of a graph-classification example. The graph is
/// owned through a shared_ptr so the PreparedGraph's back-pointer stays
/// valid when example vectors reallocate.
struct GraphExample {
    std::shared_ptr<const Hypergraph> graph;
    PreparedGraph prep;
    Tensor features;  // {V, d}
    int label = 0;
};

inline GraphExample make_graph_example(Hypergraph g) {
    GraphExample ex;
    ex.graph = std::make_shared<const Hypergraph>(std::move(g));
    ex.prep = prepare(*ex.graph);
    if (ex.graph->features) {
        ex.features = *ex.graph->features;
    } else {
        ex.features = Tensor::filled({ex.graph->num_nodes, 1}, 1.0);
    }
    ex.label = ex.graph->graph_label;
    return ex;
}

namespace detail {

inline double evaluate_graph_accuracy(const Model& model,
                                      const std::vector<GraphExample>& examples,
                                      const std::vector<int>& ids) {
    if (ids.empty()) throw ContractError("accuracy: empty mask");
    NoGradGuard eval;
    std::size_t hits = 0;
    for (int id : ids) {
        const auto& ex = examples[static_cast<std::size_t>(id)];
        ForwardResult fwd = model.forward(ex.prep, ex.features, /*training=*/false);
        if (argmax_row(fwd.logits, 0) == ex.label) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(ids.size());
}

}  // namespace detail

/// Mini-batch training over whole graphs (per-graph forward, batched
/// gradient accumulation).
inline TrainReport train_graph(Model& model, const std::vector<GraphExample>& examples,
                               const Splits& splits_in, const TrainConfig& cfg) {
    validate(cfg);
    if (splits_in.train.empty() || splits_in.test.empty()) {
        throw ContractError("train: empty train or test split");
    }
    const Splits splits = ensure_validation_split(splits_in, cfg.seed);
    const bool use_reg = cfg.reg_weight > 0.0 && model.config().any_herald();
    Adam optimizer(model.parameters(), AdamConfig{cfg.lr});
    Rng shuffle_rng(stream_seed(cfg.seed, "batch_shuffle"));
    Rng dropout_rng(stream_seed(cfg.seed, "dropout"));

    TrainReport report;
    detail::BestSnapshot best;
    int epochs_since_best = 0;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::vector<int> order = splits.train;
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            Tensor batch_loss = Tensor::scalar(0.0);
            for (std::size_t k = start; k < stop; ++k) {
                const auto& ex = examples[static_cast<std::size_t>(order[k])];
                ForwardResult fwd =
                    model.forward(ex.prep, ex.features, /*training=*/true, &dropout_rng);
                Tensor loss = cross_entropy(fwd.logits, {ex.label}, {0});
                if (use_reg) {
                    loss = add(loss,
                               scale(topology_regularizer(ex.prep.normalized,
                                                          fwd.herald_outputs),
                                     cfg.reg_weight));
                }
                batch_loss = add(batch_loss, loss);
            }
            batch_loss = scale(batch_loss, 1.0 / static_cast<double>(stop - start));
            detail::check_finite(batch_loss.value());
            epoch_loss += batch_loss.value() * static_cast<double>(stop - start);
            backward(batch_loss);
            optimizer.step();
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = epoch_loss / static_cast<double>(order.size());
        rec.train_accuracy = detail::evaluate_graph_accuracy(model, examples, splits.train);
        rec.val_accuracy = detail::evaluate_graph_accuracy(model, examples, splits.val);
        rec.val_loss = 0.0;
        report.epochs.push_back(rec);
        report.stopped_epoch = epoch;

        if (rec.val_accuracy > best.val_accuracy) {
            detail::capture(model, best, epoch, rec.val_accuracy);
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
            if (detail::should_stop(epochs_since_best, cfg.patience)) break;
        }
    }

    detail::restore(model, best);
    report.best_val_epoch = best.epoch;
    report.best_val_accuracy = best.val_accuracy;
    report.test_accuracy = detail::evaluate_graph_accuracy(model, examples, splits.test);
    return report;
}

/// Seeded stratified fold assignment; falls back to a plain shuffle (with
/// a warning) when any class has fewer members than folds.
inline std::vector<int> fold_assignment(const std::vector<int>& labels, int folds,
                                        std::uint64_t seed) {
    if (folds < 2) throw ConfigError("cross_validate: folds must be >= 2");
    if (static_cast<std::size_t>(folds) > labels.size()) {
        throw ConfigError("cross_validate: more folds than examples");
    }
    std::map<int, std::vector<int>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i)
        by_class[labels[i]].push_back(static_cast<int>(i));
    bool stratified = true;
    for (const auto& [cls, ids] : by_class) {
        if (ids.size() < static_cast<std::size_t>(folds)) {
            stratified = false;
            log_error("cross_validate: class " + std::to_string(cls) + " has only " +
                      std::to_string(ids.size()) +
                      " examples; falling back to non-stratified folds");
            break;
        }
    }
    Rng rng(stream_seed(seed, "cv_folds"));
    std::vector<int> assignment(labels.size(), 0);
    if (stratified) {
        // deal round-robin with a running offset so per-class remainders
        // land on different folds and sizes differ by at most one
        std::size_t cursor = 0;
        for (auto& [cls, ids] : by_class) {
            rng.shuffle(ids);
            for (std::size_t k = 0; k < ids.size(); ++k)
                assignment[static_cast<std::size_t>(ids[k])] =
                    static_cast<int>((cursor + k) % static_cast<std::size_t>(folds));
            cursor = (cursor + ids.size()) % static_cast<std::size_t>(folds);
        }
    } else {
        std::vector<int> ids(labels.size());
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
        rng.shuffle(ids);
        for (std::size_t k = 0; k < ids.size(); ++k)
            assignment[static_cast<std::size_t>(ids[k])] =
                static_cast<int>(k % static_cast<std::size_t>(folds));
    }
    return assignment;
}

/// Stratified k-fold cross-validation for graph classification. Each fold
/// trains a fresh model from a fold-derived seed and reports the test
/// accuracy of its best-validation checkpoint.
inline TrainReport cross_validate(const std::vector<GraphExample>& examples,
                                  const ModelConfig& model_cfg, const TrainConfig& cfg,
                                  int folds = 10) {
    validate(cfg);
    std::vector<int> labels(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) labels[i] = examples[i].label;
    const std::vector<int> assignment = fold_assignment(labels, folds, cfg.seed);

    TrainReport report;
    for (int fold = 0; fold < folds; ++fold) {
        Splits splits;
        for (std::size_t i = 0; i < examples.size(); ++i) {
            (assignment[i] == fold ? splits.test : splits.train)
                .push_back(static_cast<int>(i));
        }
        TrainConfig fold_cfg = cfg;
        fold_cfg.seed = stream_seed(cfg.seed, "fold." + std::to_string(fold));
        Model model(model_cfg, fold_cfg.seed);
        TrainReport fold_report = train_graph(model, examples, splits, fold_cfg);
        report.fold_accuracies.push_back(fold_report.test_accuracy);
        log_info("fold " + std::to_string(fold) + ": test accuracy " +
                 std::to_string(fold_report.test_accuracy));
    }
    const auto [mean, sd] = detail::mean_std(report.fold_accuracies);
    report.mean_accuracy = mean;
    report.std_accuracy = sd;
    report.test_accuracy = mean;
    return report;
}

}  // namespace herald
