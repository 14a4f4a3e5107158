#include <cmath>

#include <gtest/gtest.h>

#include "herald/data_io.hpp"
#include "herald/gradcheck.hpp"
#include "herald/training.hpp"
#include "support/oracles.hpp"

namespace herald {
namespace {

TEST(CrossEntropy, UniformLogitsGiveLogC) {
    Tensor logits = Tensor::zeros({3, 2});
    const std::vector<int> labels = {0, 1, 0};
    EXPECT_NEAR(cross_entropy(logits, labels, {0, 1, 2}).value(), std::log(2.0), 1e-12);
}

TEST(CrossEntropy, HugeCorrectMarginDrivesLossToZero) {
    Tensor logits = Tensor::from_data({1, 3}, {500.0, 0.0, 0.0});
    EXPECT_NEAR(cross_entropy(logits, {0}, {0}).value(), 0.0, 1e-12);
}

TEST(CrossEntropy, MatchesLogSumExpOracle) {
    Rng rng(51);
    std::vector<double> v(12);
    for (auto& x : v) x = 3.0 * rng.normal();
    Tensor logits = Tensor::from_data({4, 3}, v);
    const std::vector<int> labels = {2, 0, 1, 2};
    const std::vector<int> mask = {0, 2, 3};
    EXPECT_NEAR(cross_entropy(logits, labels, mask).value(),
                oracle::cross_entropy_loop(logits, labels, mask), 1e-12);
}

TEST(CrossEntropy, GradientMatchesFiniteDifferences) {
    Rng rng(52);
    std::vector<double> v(12);
    for (auto& x : v) x = rng.normal();
    Tensor logits = Tensor::from_data({4, 3}, v, true);
    const std::vector<int> labels = {1, 0, 2, 1};
    const std::vector<int> mask = {0, 1, 3};
    auto loss = [&] { return cross_entropy(logits, labels, mask); };
    EXPECT_LT(gradcheck_max_rel_error(loss, logits), 1e-6);
}

TEST(CrossEntropy, EmptyMaskIsContractError) {
    Tensor logits = Tensor::zeros({2, 2});
    EXPECT_THROW(cross_entropy(logits, {0, 1}, {}), ContractError);
}

TEST(Regularizer, ZeroWhenOperatorsCoincide) {
    Tensor n = Tensor::from_data({2, 2}, {0.5, 0.5, 0.5, 0.5});
    EXPECT_DOUBLE_EQ(topology_regularizer(n, n).value(), 0.0);
}

TEST(Regularizer, FrobeniusOfIdentityIsSqrtTwo) {
    Tensor n = Tensor::identity(2);
    Tensor zero = Tensor::zeros({2, 2});
    EXPECT_DOUBLE_EQ(topology_regularizer(n, zero).value(), std::sqrt(2.0));
}

TEST(Regularizer, GradientWrtResidualMatchesFiniteDifferences) {
    Rng rng(53);
    std::vector<double> nv(9), rv(9);
    for (auto& x : nv) x = rng.normal();
    for (auto& x : rv) x = rng.normal();
    Tensor n = Tensor::from_data({3, 3}, nv);
    Tensor n_res = Tensor::from_data({3, 3}, rv, true);
    auto loss = [&] { return topology_regularizer(n, n_res); };
    EXPECT_LT(gradcheck_max_rel_error(loss, n_res), 1e-5);
}

TEST(Accuracy, Examples) {
    Tensor logits = Tensor::from_data({2, 2}, {2, 1, 0, 3});
    EXPECT_DOUBLE_EQ(accuracy(logits, {0, 1}, {0, 1}), 1.0);
    // adding a constant per row leaves the argmax unchanged
    Tensor shifted = add(logits, Tensor::scalar(17.5));
    EXPECT_DOUBLE_EQ(accuracy(shifted, {0, 1}, {0, 1}), 1.0);
    // perfectly wrong two-class predictions
    EXPECT_DOUBLE_EQ(accuracy(logits, {1, 0}, {0, 1}), 0.0);
    // ties resolve toward the lowest class index
    Tensor tied = Tensor::from_data({1, 3}, {4.0, 4.0, 4.0});
    EXPECT_DOUBLE_EQ(accuracy(tied, {0}, {0}), 1.0);
    EXPECT_DOUBLE_EQ(accuracy(tied, {1}, {0}), 0.0);
    EXPECT_THROW(accuracy(logits, {0, 1}, {}), ContractError);
}

TEST(Splits, ValidationCarveIsSeededAndDisjoint) {
    Splits s;
    for (int i = 0; i < 50; ++i) s.train.push_back(i);
    s.test = {50, 51};
    Splits a = ensure_validation_split(s, 9);
    Splits b = ensure_validation_split(s, 9);
    EXPECT_EQ(a.val, b.val);
    EXPECT_EQ(a.val.size(), 10u);
    EXPECT_EQ(a.train.size(), 40u);
    for (int v : a.val)
        EXPECT_EQ(std::find(a.train.begin(), a.train.end(), v), a.train.end());
}

TrainConfig quick_config(std::uint64_t seed, int epochs = 200) {
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.max_epochs = epochs;
    cfg.patience = epochs;
    return cfg;
}

TEST(TrainNode, SeparableFixtureReachesFullTrainAccuracy) {
    NodeDataset ds = make_fixture(FixtureKind::separable_node_task, 0);
    PreparedGraph prep = prepare(ds.graph);
    ModelConfig mc = default_node_config(ds.graph.features->cols(), 3, true, 16);
    mc.herald_hidden = 8;
    Model model(mc, 0);
    TrainConfig cfg = quick_config(0);
    TrainReport report =
        train_node(model, prep, *ds.graph.features, ds.graph.node_labels, ds.splits, cfg);
    ASSERT_LE(report.stopped_epoch, 200);
    double best_train_acc = 0.0;
    for (const auto& e : report.epochs) best_train_acc = std::max(best_train_acc, e.train_accuracy);
    EXPECT_DOUBLE_EQ(best_train_acc, 1.0);
    // sanity slope: total loss shrinks across the first ten epochs
    ASSERT_GE(report.epochs.size(), 10u);
    EXPECT_LT(report.epochs[9].train_loss, report.epochs[0].train_loss);
}

TEST(TrainNode, DeterministicGivenSeed) {
    NodeDataset ds = make_fixture(FixtureKind::separable_node_task, 1);
    PreparedGraph prep = prepare(ds.graph);
    auto run = [&] {
        ModelConfig mc = default_node_config(ds.graph.features->cols(), 3, true, 8);
        mc.herald_hidden = 4;
        Model model(mc, 11);
        TrainConfig cfg = quick_config(11, 40);
        return train_node(model, prep, *ds.graph.features, ds.graph.node_labels,
                          ds.splits, cfg)
            .to_json()
            .dump();
    };
    EXPECT_EQ(run(), run());
}

TEST(TrainNode, PatienceZeroStopsAtFirstNonImprovingEpoch) {
    NodeDataset ds = make_fixture(FixtureKind::two_blobs, 2);
    PreparedGraph prep = prepare(ds.graph);
    ModelConfig mc = default_node_config(ds.graph.features->cols(), 2, false, 8);
    Model model(mc, 3);
    TrainConfig cfg = quick_config(3, 100);
    cfg.patience = 0;
    TrainReport report =
        train_node(model, prep, *ds.graph.features, ds.graph.node_labels, ds.splits, cfg);
    // stopped exactly one epoch after the last improvement
    EXPECT_EQ(report.stopped_epoch, report.best_val_epoch + 1);
}

TEST(TrainNode, TestAccuracyComesFromBestValidationCheckpoint) {
    NodeDataset ds = make_fixture(FixtureKind::separable_node_task, 4);
    PreparedGraph prep = prepare(ds.graph);
    ModelConfig mc = default_node_config(ds.graph.features->cols(), 3, false, 8);
    Model model(mc, 4);
    TrainConfig cfg = quick_config(4, 60);
    TrainReport report =
        train_node(model, prep, *ds.graph.features, ds.graph.node_labels, ds.splits, cfg);
    // the restored parameters must reproduce the reported test accuracy
    NoGradGuard eval;
    ForwardResult fwd = model.forward(prep, *ds.graph.features);
    EXPECT_DOUBLE_EQ(accuracy(fwd.logits, ds.graph.node_labels, ds.splits.test),
                     report.test_accuracy);
    // and the best epoch's recorded val accuracy matches the report
    ASSERT_GE(report.best_val_epoch, 1);
    EXPECT_DOUBLE_EQ(report.epochs[static_cast<std::size_t>(report.best_val_epoch - 1)]
                         .val_accuracy,
                     report.best_val_accuracy);
}

TEST(TrainNode, PlainHgnnTrajectoryIsBitStable) {
    NodeDataset ds = make_fixture(FixtureKind::two_blobs, 5);
    PreparedGraph prep = prepare(ds.graph);
    auto run = [&] {
        ModelConfig mc = default_node_config(ds.graph.features->cols(), 2, false, 8);
        Model model(mc, 6);
        TrainConfig cfg = quick_config(6, 30);
        cfg.reg_weight = 0.0;
        TrainReport r = train_node(model, prep, *ds.graph.features,
                                   ds.graph.node_labels, ds.splits, cfg);
        std::vector<double> losses;
        for (const auto& e : r.epochs) losses.push_back(e.train_loss);
        return losses;
    };
    EXPECT_EQ(run(), run());
}

TEST(TrainNode, HugeRegWeightPullsResidualTowardStatic) {
    // 6-node/3-edge toy; with the regularizer dominating the loss the
    // learned operator is driven onto the static one
    Rng grng(1);
    Hypergraph g = random_hypergraph(6, 3, grng, 4);
    PreparedGraph prep = prepare(g);
    const std::vector<int> labels = {0, 1, 0, 1, 0, 1};
    const std::vector<int> mask = {0, 1, 2, 3, 4, 5};
    Rng prng(2);
    HeraldParams p = make_herald_params(4, 6, 1.0, prng);
    Tensor theta = glorot_uniform({4, 2}, 4, 2, prng);

    auto reg_value = [&] {
        NoGradGuard eval;
        return topology_regularizer(prep.normalized,
                                    herald_forward(*g.features, prep, p, 1.0).n_res)
            .value();
    };
    const double initial = reg_value();

    Adam opt({p.w_v, p.w_e, p.w_s, theta}, AdamConfig{0.05});
    for (int step = 0; step < 3000; ++step) {
        HeraldOutput out = herald_forward(*g.features, prep, p, 1.0);
        Tensor logits = hgnn_layer(out.n_hat, *g.features, theta, Activation::none);
        Tensor loss = add(cross_entropy(logits, labels, mask),
                          scale(topology_regularizer(prep.normalized, out.n_res), 1e6));
        backward(loss);
        opt.step();
    }
    EXPECT_LT(reg_value(), 0.1 * initial);
}

Tensor degree_features(std::size_t n, const std::vector<std::pair<int, int>>& edges) {
    std::vector<double> feats(n * 2, 1.0);
    for (const auto& [u, v] : edges) {
        feats[static_cast<std::size_t>(u) * 2 + 1] += 1.0;
        feats[static_cast<std::size_t>(v) * 2 + 1] += 1.0;
    }
    return Tensor::from_data({n, 2}, std::move(feats));
}

Hypergraph path_graph(std::size_t n, int label) {
    std::vector<std::pair<int, int>> edges;
    for (std::size_t v = 0; v + 1 < n; ++v)
        edges.emplace_back(static_cast<int>(v), static_cast<int>(v + 1));
    Tensor features = degree_features(n, edges);
    return from_simple_graph(n, edges, features, {}, label);
}

Hypergraph clique_graph(std::size_t n, int label) {
    std::vector<std::pair<int, int>> edges;
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v)
            edges.emplace_back(static_cast<int>(u), static_cast<int>(v));
    Tensor features = degree_features(n, edges);
    return from_simple_graph(n, edges, features, {}, label);
}

std::vector<GraphExample> toy_graph_dataset() {
    std::vector<GraphExample> out;
    for (std::size_t k = 0; k < 10; ++k) {
        out.push_back(make_graph_example(path_graph(4 + k % 3, 0)));
        out.push_back(make_graph_example(clique_graph(4 + k % 3, 1)));
    }
    return out;
}

TEST(TrainGraph, LearnsPathVersusClique) {
    auto examples = toy_graph_dataset();
    Splits splits;
    for (int i = 0; i < 14; ++i) splits.train.push_back(i);
    for (int i = 14; i < 17; ++i) splits.val.push_back(i);
    for (int i = 17; i < 20; ++i) splits.test.push_back(i);
    ModelConfig mc = default_graph_config(2, 2, true, 8);
    mc.herald_hidden = 4;
    Model model(mc, 9);
    TrainConfig cfg = quick_config(9, 60);
    cfg.batch_size = 8;
    TrainReport report = train_graph(model, examples, splits, cfg);
    EXPECT_GE(report.test_accuracy, 2.0 / 3.0);
}

TEST(CrossValidate, BalancedTwoClassFoldsAreExact) {
    std::vector<int> labels;
    for (int i = 0; i < 10; ++i) labels.push_back(0);
    for (int i = 0; i < 10; ++i) labels.push_back(1);
    const auto assignment = fold_assignment(labels, 10, 3);
    std::vector<int> fold_sizes(10, 0);
    std::vector<std::vector<int>> class_per_fold(10, std::vector<int>(2, 0));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        ++fold_sizes[static_cast<std::size_t>(assignment[i])];
        ++class_per_fold[static_cast<std::size_t>(assignment[i])]
                        [static_cast<std::size_t>(labels[i])];
    }
    for (int f = 0; f < 10; ++f) {
        EXPECT_EQ(fold_sizes[static_cast<std::size_t>(f)], 2);
        EXPECT_EQ(class_per_fold[static_cast<std::size_t>(f)][0], 1);
        EXPECT_EQ(class_per_fold[static_cast<std::size_t>(f)][1], 1);
    }
}

TEST(CrossValidate, AssignmentIsAPartition) {
    Rng rng(55);
    std::vector<int> labels;
    for (int i = 0; i < 57; ++i) labels.push_back(static_cast<int>(rng.uniform_int(0, 2)));
    const auto assignment = fold_assignment(labels, 10, 4);
    ASSERT_EQ(assignment.size(), labels.size());
    for (int fold : assignment) {
        EXPECT_GE(fold, 0);
        EXPECT_LT(fold, 10);
    }
    // deterministic under the same seed
    EXPECT_EQ(assignment, fold_assignment(labels, 10, 4));
}

TEST(CrossValidate, MutagShapedFoldSizes) {
    // 188 graphs with the MUTAG class split (63/125) give folds of 18-19
    std::vector<int> labels;
    for (int i = 0; i < 63; ++i) labels.push_back(0);
    for (int i = 0; i < 125; ++i) labels.push_back(1);
    const auto assignment = fold_assignment(labels, 10, 0);
    std::vector<int> fold_sizes(10, 0);
    for (int f : assignment) ++fold_sizes[static_cast<std::size_t>(f)];
    for (int f = 0; f < 10; ++f) {
        EXPECT_GE(fold_sizes[static_cast<std::size_t>(f)], 18);
        EXPECT_LE(fold_sizes[static_cast<std::size_t>(f)], 19);
    }
}

TEST(CrossValidate, TinyClassFallsBackToNonStratified) {
    std::vector<int> labels = {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1};
    const auto assignment = fold_assignment(labels, 10, 1);  // class 1 has 3 < 10
    ASSERT_EQ(assignment.size(), labels.size());
    std::vector<int> fold_sizes(10, 0);
    for (int f : assignment) ++fold_sizes[static_cast<std::size_t>(f)];
    int total = 0;
    for (int s : fold_sizes) total += s;
    EXPECT_EQ(total, 15);
}

TEST(CrossValidate, TwoFoldToyRunsEndToEnd) {
    auto examples = toy_graph_dataset();
    ModelConfig mc = default_graph_config(2, 2, false, 6);
    TrainConfig cfg = quick_config(10, 15);
    cfg.batch_size = 8;
    TrainReport report = cross_validate(examples, mc, cfg, 2);
    EXPECT_EQ(report.fold_accuracies.size(), 2u);
    const auto [mean, sd] = std::pair(report.mean_accuracy, report.std_accuracy);
    EXPECT_GE(mean, 0.0);
    EXPECT_LE(mean, 1.0);
    EXPECT_GE(sd, 0.0);
}

TEST(Training, DivergenceAbortsWithNumericError) {
    NodeDataset ds = make_fixture(FixtureKind::two_blobs, 12);
    PreparedGraph prep = prepare(ds.graph);
    ModelConfig mc = default_node_config(ds.graph.features->cols(), 2, false, 8);
    Model model(mc, 13);
    TrainConfig cfg = quick_config(13, 50);
    cfg.lr = 1e200;  // parameters overflow within a step or two
    cfg.reg_weight = 0.0;
    EXPECT_THROW(train_node(model, prep, *ds.graph.features, ds.graph.node_labels,
                            ds.splits, cfg),
                 NumericError);
    numeric_health().reset();
}

}  // namespace
}  // namespace herald
