// Command-line surface of the toolkit: training runs, cross-validation,
// gradient checking, operator inspection and fixture generation.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <json.hpp>

#include "herald/data_io.hpp"
#include "herald/gradcheck.hpp"
#include "herald/log.hpp"
#include "herald/manifest.hpp"
#include "herald/model.hpp"
#include "herald/training.hpp"

#ifndef HERALD_BUILD_ID
#define HERALD_BUILD_ID "unknown"
#endif

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitGradcheck = 5;

namespace fs = std::filesystem;
using herald::Tensor;
using nlohmann::json;

struct RunOptions {
    std::string data;
    std::string task = "node";
    std::string herald_mode = "on";
    bool fast_herald = false;
    int layers = 0;  // 0: task default depth
    int hidden = 64;
    int herald_hidden = 16;
    double sigma = 1.0;
    std::string mix = "cosine";
    double lr = 0.01;
    int epochs = 1000;
    int patience = 100;
    double reg_weight = 0.1;
    double dropout = 0.0;
    std::string seed_spec = "0";
    int folds = 10;
    std::string out_dir = "herald_out";
};

void add_common_flags(CLI::App* cmd, RunOptions& opt) {
    cmd->add_option("--data", opt.data, "dataset path (hypergraph JSON or TU directory)")
        ->required();
    cmd->add_option("--task", opt.task, "node|graph")
        ->check(CLI::IsMember({"node", "graph"}));
    cmd->add_option("--herald", opt.herald_mode, "on|off")
        ->check(CLI::IsMember({"on", "off"}));
    cmd->add_flag("--fast-herald", opt.fast_herald,
                  "share one adaptor across all layers");
    cmd->add_option("--layers", opt.layers, "number of convolution layers");
    cmd->add_option("--hidden", opt.hidden, "hidden width");
    cmd->add_option("--herald-hidden", opt.herald_hidden, "adaptor hidden width h");
    cmd->add_option("--sigma", opt.sigma, "Gaussian kernel bandwidth");
    cmd->add_option("--mix", opt.mix, "cosine or const:<a>");
    cmd->add_option("--lr", opt.lr, "Adam learning rate");
    cmd->add_option("--epochs", opt.epochs, "maximum epochs");
    cmd->add_option("--patience", opt.patience, "early-stopping patience");
    cmd->add_option("--reg-weight", opt.reg_weight, "topology regularizer weight");
    cmd->add_option("--dropout", opt.dropout, "dropout rate on hidden layers");
    cmd->add_option("--out-dir", opt.out_dir, "output directory");
}

std::vector<std::uint64_t> parse_seed_spec(const std::string& spec) {
    const auto dots = spec.find("..");
    if (dots == std::string::npos) {
        return {static_cast<std::uint64_t>(std::stoull(spec))};
    }
    const auto lo = std::stoull(spec.substr(0, dots));
    const auto hi = std::stoull(spec.substr(dots + 2));
    if (hi < lo) throw herald::ConfigError("seed range is empty: " + spec);
    std::vector<std::uint64_t> seeds;
    for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
}

herald::MixSchedule parse_mix(const std::string& spec) {
    herald::MixSchedule mix;
    if (spec == "cosine") return mix;
    if (spec.rfind("const:", 0) == 0) {
        mix.mode = herald::MixSchedule::Mode::constant;
        mix.constant_value = std::stod(spec.substr(6));
        if (mix.constant_value < 0.0 || mix.constant_value > 1.0) {
            throw herald::ConfigError("mix constant must lie in [0,1]: " + spec);
        }
        return mix;
    }
    throw herald::ConfigError("bad --mix value: " + spec + " (want cosine or const:<a>)");
}

/// Optional JSON config file; explicitly passed flags win over its values.
void apply_config_file(const std::string& path, const CLI::App* cmd, RunOptions& opt) {
    std::ifstream in(path);
    if (!in) throw herald::ConfigError("cannot read config file " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& err) {
        throw herald::ConfigError(std::string("config file: ") + err.what());
    }
    auto maybe = [&](const char* key, const char* flag, auto& slot) {
        if (doc.contains(key) && cmd->count(flag) == 0) {
            doc.at(key).get_to(slot);
        }
    };
    maybe("task", "--task", opt.task);
    maybe("herald", "--herald", opt.herald_mode);
    maybe("fast_herald", "--fast-herald", opt.fast_herald);
    maybe("layers", "--layers", opt.layers);
    maybe("hidden", "--hidden", opt.hidden);
    maybe("herald_hidden", "--herald-hidden", opt.herald_hidden);
    maybe("sigma", "--sigma", opt.sigma);
    maybe("mix", "--mix", opt.mix);
    maybe("lr", "--lr", opt.lr);
    maybe("epochs", "--epochs", opt.epochs);
    maybe("patience", "--patience", opt.patience);
    maybe("reg_weight", "--reg-weight", opt.reg_weight);
    maybe("dropout", "--dropout", opt.dropout);
    maybe("out_dir", "--out-dir", opt.out_dir);
}

herald::ModelConfig build_model_config(const RunOptions& opt, std::size_t in_dim,
                                       std::size_t num_classes) {
    const bool herald_on = opt.herald_mode == "on";
    herald::ModelConfig cfg;
    if (opt.task == "graph") {
        cfg = herald::default_graph_config(in_dim, num_classes, herald_on,
                                           static_cast<std::size_t>(opt.hidden));
    } else {
        cfg = herald::default_node_config(in_dim, num_classes, herald_on,
                                          static_cast<std::size_t>(opt.hidden),
                                          opt.dropout);
    }
    if (opt.layers > 0) {
        // rebuild the chain at the requested depth; adaptor on layers 2..L
        std::vector<herald::LayerSpec> specs;
        const auto hidden = static_cast<std::size_t>(opt.hidden);
        const std::size_t depth = static_cast<std::size_t>(opt.layers);
        for (std::size_t l = 0; l < depth; ++l) {
            herald::LayerSpec spec;
            spec.in_dim = l == 0 ? in_dim : hidden;
            const bool last = l + 1 == depth;
            if (opt.task == "graph") {
                spec.out_dim = hidden;
                spec.activation = herald::Activation::relu;
            } else {
                spec.out_dim = last ? num_classes : hidden;
                spec.activation = last ? herald::Activation::none : herald::Activation::relu;
                spec.dropout_rate = last ? 0.0 : opt.dropout;
            }
            spec.herald_enabled = herald_on && l >= 1;
            specs.push_back(spec);
        }
        if (herald_on && depth == 1) specs[0].herald_enabled = true;
        cfg.layers = std::move(specs);
    }
    cfg.herald_hidden = static_cast<std::size_t>(opt.herald_hidden);
    cfg.sigma = opt.sigma;
    cfg.mix = parse_mix(opt.mix);
    cfg.fast_herald = opt.fast_herald;
    return cfg;
}

herald::TrainConfig build_train_config(const RunOptions& opt, std::uint64_t seed) {
    herald::TrainConfig cfg;
    cfg.lr = opt.lr;
    cfg.max_epochs = opt.epochs;
    cfg.patience = opt.patience;
    cfg.reg_weight = opt.reg_weight;
    cfg.seed = seed;
    return cfg;
}

json resolved_config_json(const RunOptions& opt) {
    return {{"data", opt.data},
            {"task", opt.task},
            {"herald", opt.herald_mode},
            {"fast_herald", opt.fast_herald},
            {"layers", opt.layers},
            {"hidden", opt.hidden},
            {"herald_hidden", opt.herald_hidden},
            {"sigma", opt.sigma},
            {"mix", opt.mix},
            {"lr", opt.lr},
            {"epochs", opt.epochs},
            {"patience", opt.patience},
            {"reg_weight", opt.reg_weight},
            {"dropout", opt.dropout},
            {"folds", opt.folds}};
}

herald::RunManifest make_manifest(const RunOptions& opt, std::uint64_t seed) {
    herald::RunManifest manifest;
    manifest.resolved_config = resolved_config_json(opt);
    manifest.dataset_path = opt.data;
    manifest.dataset_checksum = herald::dataset_checksum(opt.data);
    manifest.seed = seed;
    manifest.build_id = HERALD_BUILD_ID;
    return manifest;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw herald::ConfigError("cannot write " + path.string());
    out << text;
}

void write_json(const fs::path& path, const json& doc) {
    write_text(path, doc.dump(2) + "\n");
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size());
    return {mean, std::sqrt(var)};
}

/// Seeded 80/10/10 stratified split for plain (non-CV) graph-task runs.
herald::Splits graph_task_splits(const std::vector<herald::GraphExample>& examples,
                                 std::uint64_t seed) {
    std::map<int, std::vector<int>> by_class;
    for (std::size_t i = 0; i < examples.size(); ++i)
        by_class[examples[i].label].push_back(static_cast<int>(i));
    herald::Rng rng(herald::stream_seed(seed, "graph_split"));
    herald::Splits splits;
    for (auto& [cls, ids] : by_class) {
        rng.shuffle(ids);
        const std::size_t n_train = ids.size() * 8 / 10;
        const std::size_t n_val = std::max<std::size_t>(1, ids.size() / 10);
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (k < n_train) splits.train.push_back(ids[k]);
            else if (k < n_train + n_val) splits.val.push_back(ids[k]);
            else splits.test.push_back(ids[k]);
        }
    }
    return splits;
}

int cmd_train(const RunOptions& opt, const std::vector<std::uint64_t>& seeds) {
    fs::create_directories(opt.out_dir);
    std::vector<double> test_accs;

    for (const auto seed : seeds) {
        herald::RunManifest manifest = make_manifest(opt, seed);
        const auto started = std::chrono::steady_clock::now();

        herald::TrainReport report;
        std::size_t param_count = 0, herald_param_count = 0;
        json checkpoint;
        if (opt.task == "node") {
            herald::NodeDataset ds = herald::load_hypergraph_json(opt.data);
            if (!ds.graph.features) {
                throw herald::DataError(herald::DataErrorCode::malformed_json,
                                        "node task needs features");
            }
            if (ds.graph.node_labels.empty()) {
                throw herald::DataError(herald::DataErrorCode::bad_label,
                                        "node task needs node_labels");
            }
            if (ds.splits.train.empty() || ds.splits.test.empty()) {
                throw herald::DataError(herald::DataErrorCode::bad_split,
                                        "node task needs train and test splits");
            }
            const auto num_classes = static_cast<std::size_t>(
                *std::max_element(ds.graph.node_labels.begin(),
                                  ds.graph.node_labels.end()) + 1);
            herald::PreparedGraph prep = herald::prepare(ds.graph);
            herald::Model model(build_model_config(opt, ds.graph.features->cols(),
                                                   num_classes), seed);
            param_count = model.parameter_count();
            herald_param_count = model.herald_parameter_count();
            report = herald::train_node(model, prep, *ds.graph.features,
                                        ds.graph.node_labels, ds.splits,
                                        build_train_config(opt, seed));
            checkpoint = model.to_checkpoint(report.stopped_epoch);
        } else {
            auto examples =
                herald::prepare_graph_examples(herald::load_tu_dataset(opt.data));
            std::size_t num_classes = 0, in_dim = examples.front().features.cols();
            for (const auto& ex : examples)
                num_classes = std::max(num_classes, static_cast<std::size_t>(ex.label) + 1);
            herald::Model model(build_model_config(opt, in_dim, num_classes), seed);
            param_count = model.parameter_count();
            herald_param_count = model.herald_parameter_count();
            report = herald::train_graph(model, examples, graph_task_splits(examples, seed),
                                         build_train_config(opt, seed));
            checkpoint = model.to_checkpoint(report.stopped_epoch);
        }

        manifest.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                .count();
        test_accs.push_back(report.test_accuracy);

        const std::string tag = "seed" + std::to_string(seed);
        json report_doc = {{"manifest", manifest.to_json()},
                           {"parameter_count", param_count},
                           {"herald_parameter_count", herald_param_count},
                           {"report", report.to_json()}};
        write_json(fs::path(opt.out_dir) / ("report_" + tag + ".json"), report_doc);
        write_text(fs::path(opt.out_dir) / ("metrics_" + tag + ".csv"),
                   "# manifest: " + manifest.stable_json().dump() + "\n" +
                       report.metrics_csv());
        checkpoint["manifest"] = manifest.to_json();
        write_json(fs::path(opt.out_dir) / ("checkpoint_" + tag + ".json"), checkpoint);
        std::printf("seed %llu: test accuracy %.4f (best val epoch %d, stopped %d)\n",
                    static_cast<unsigned long long>(seed), report.test_accuracy,
                    report.best_val_epoch, report.stopped_epoch);
    }

    const auto [mean, sd] = mean_std(test_accs);
    json aggregate = {{"manifest", make_manifest(opt, seeds.front()).to_json()},
                      {"seeds", seeds},
                      {"test_accuracies", test_accs},
                      {"mean_test_accuracy", mean},
                      {"std_test_accuracy", sd}};
    write_json(fs::path(opt.out_dir) / "aggregate.json", aggregate);
    std::printf("aggregate over %zu seed(s): %.4f +/- %.4f\n", seeds.size(), mean, sd);
    return kExitOk;
}

int cmd_cv(const RunOptions& opt, std::uint64_t seed) {
    fs::create_directories(opt.out_dir);
    herald::RunManifest manifest = make_manifest(opt, seed);
    const auto started = std::chrono::steady_clock::now();

    auto examples = herald::prepare_graph_examples(herald::load_tu_dataset(opt.data));
    std::size_t num_classes = 0;
    const std::size_t in_dim = examples.front().features.cols();
    for (const auto& ex : examples)
        num_classes = std::max(num_classes, static_cast<std::size_t>(ex.label) + 1);

    herald::ModelConfig model_cfg = build_model_config(opt, in_dim, num_classes);
    herald::TrainReport report = herald::cross_validate(
        examples, model_cfg, build_train_config(opt, seed), opt.folds);

    manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    json doc = {{"manifest", manifest.to_json()}, {"report", report.to_json()}};
    write_json(fs::path(opt.out_dir) / "cv_report.json", doc);

    std::ostringstream csv;
    csv << "# manifest: " << manifest.stable_json().dump() << "\n";
    csv << std::setprecision(17) << "fold,test_accuracy\n";
    for (std::size_t f = 0; f < report.fold_accuracies.size(); ++f)
        csv << f << ',' << report.fold_accuracies[f] << '\n';
    write_text(fs::path(opt.out_dir) / "cv_folds.csv", csv.str());

    std::printf("%d-fold CV: %.4f +/- %.4f\n", opt.folds, report.mean_accuracy,
                report.std_accuracy);
    return kExitOk;
}

int cmd_gradcheck(std::uint64_t seed, const std::string& op_filter, double threshold,
                  bool inject_defect) {
    herald::debug::inject_backward_defect() = inject_defect;
    auto cases = herald::standard_gradcheck_suite(seed);
    for (auto& c : herald::full_loss_gradcheck_cases(seed)) cases.push_back(std::move(c));

    bool any_run = false, all_ok = true;
    std::string first_failure;
    for (const auto& c : cases) {
        if (!op_filter.empty() && c.name.find(op_filter) == std::string::npos) continue;
        any_run = true;
        const double err = c.run();
        const bool ok = err < threshold;
        std::printf("%-28s max rel err %.3e  %s\n", c.name.c_str(), err,
                    ok ? "ok" : "FAIL");
        if (!ok && first_failure.empty()) first_failure = c.name;
        all_ok = all_ok && ok;
    }
    herald::debug::inject_backward_defect() = false;
    if (!any_run) {
        std::fprintf(stderr, "no gradcheck case matches --op %s\n", op_filter.c_str());
        return kExitConfig;
    }
    if (!all_ok) {
        std::fprintf(stderr, "gradient check failed at op: %s\n", first_failure.c_str());
        return kExitGradcheck;
    }
    return kExitOk;
}

std::string matrix_csv(const Tensor& m) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) os << ',';
            os << m.at(i, j);
        }
        os << '\n';
    }
    return os.str();
}

std::vector<double> eigenvalues(const Tensor& m) {
    Eigen::MatrixXd mat(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            mat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m.at(i, j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(mat);
    return {solver.eigenvalues().data(),
            solver.eigenvalues().data() + solver.eigenvalues().size()};
}

json eig_summary(const std::vector<double>& eigs) {
    return {{"min", eigs.front()}, {"max", eigs.back()}, {"count", eigs.size()}};
}

std::string histogram_csv(const Tensor& m, int bins = 32) {
    double lo = m.at(0), hi = m.at(0);
    for (std::size_t i = 0; i < m.numel(); ++i) {
        lo = std::min(lo, m.at(i));
        hi = std::max(hi, m.at(i));
    }
    if (hi == lo) hi = lo + 1.0;
    std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
    for (std::size_t i = 0; i < m.numel(); ++i) {
        auto b = static_cast<std::size_t>((m.at(i) - lo) / (hi - lo) *
                                          static_cast<double>(bins));
        if (b >= counts.size()) b = counts.size() - 1;
        ++counts[b];
    }
    std::ostringstream os;
    os << std::setprecision(17) << "bin_low,bin_high,count\n";
    for (int b = 0; b < bins; ++b) {
        const double w = (hi - lo) / bins;
        os << lo + b * w << ',' << lo + (b + 1) * w << ',' << counts[static_cast<std::size_t>(b)]
           << '\n';
    }
    return os.str();
}

int cmd_inspect(const std::string& checkpoint_path, const std::string& data_path,
                const std::string& out_dir) {
    std::ifstream in(checkpoint_path);
    if (!in) throw herald::DataError(herald::DataErrorCode::missing_file, checkpoint_path);
    json ckpt;
    try {
        in >> ckpt;
    } catch (const json::exception& err) {
        throw herald::ConfigError(std::string("checkpoint: ") + err.what());
    }
    herald::Model model = herald::Model::from_checkpoint(ckpt);

    herald::NodeDataset ds = herald::load_hypergraph_json(data_path);
    if (!ds.graph.features) {
        throw herald::ConfigError("inspect: dataset has no features");
    }
    if (ds.graph.features->cols() != model.config().layers.front().in_dim) {
        throw herald::ConfigError(
            "inspect: checkpoint expects input dim " +
            std::to_string(model.config().layers.front().in_dim) + ", dataset has " +
            std::to_string(ds.graph.features->cols()));
    }
    herald::PreparedGraph prep = herald::prepare(ds.graph);

    herald::NoGradGuard eval;
    herald::ForwardResult fwd = model.forward(prep, *ds.graph.features);

    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "n.csv", matrix_csv(prep.normalized));
    const auto n_eigs = eigenvalues(prep.normalized);
    json summary = {{"dataset", data_path},
                    {"checkpoint", checkpoint_path},
                    {"build_id", HERALD_BUILD_ID},
                    {"n_spectrum", eig_summary(n_eigs)},
                    {"herald_layers", json::array()}};
    write_text(fs::path(out_dir) / "n_spectrum.csv", [&] {
        std::ostringstream os;
        os << std::setprecision(17) << "eigenvalue\n";
        for (double e : n_eigs) os << e << '\n';
        return os.str();
    }());

    for (std::size_t k = 0; k < fwd.herald_outputs.size(); ++k) {
        const auto& out = fwd.herald_outputs[k];
        const std::string tag = std::to_string(k);
        write_text(fs::path(out_dir) / ("n_res_" + tag + ".csv"), matrix_csv(out.n_res));
        write_text(fs::path(out_dir) / ("n_hat_" + tag + ".csv"), matrix_csv(out.n_hat));
        write_text(fs::path(out_dir) / ("h_tilde_" + tag + ".csv"),
                   matrix_csv(out.h_tilde));
        write_text(fs::path(out_dir) / ("h_tilde_hist_" + tag + ".csv"),
                   histogram_csv(out.h_tilde));
        const auto res_eigs = eigenvalues(out.n_res);
        const auto hat_eigs = eigenvalues(out.n_hat);
        std::ostringstream spectrum;
        spectrum << std::setprecision(17) << "n_res,n_hat\n";
        for (std::size_t i = 0; i < res_eigs.size(); ++i)
            spectrum << res_eigs[i] << ',' << hat_eigs[i] << '\n';
        write_text(fs::path(out_dir) / ("spectrum_" + tag + ".csv"), spectrum.str());
        summary["herald_layers"].push_back(
            {{"index", k},
             {"mix", out.mix},
             {"frobenius_distance",
              herald::topology_regularizer(prep.normalized, out.n_res).value()},
             {"n_res_spectrum", eig_summary(res_eigs)},
             {"n_hat_spectrum", eig_summary(hat_eigs)}});
    }
    write_json(fs::path(out_dir) / "summary.json", summary);
    std::printf("inspect: wrote %zu adaptor dump(s) to %s\n",
                fwd.herald_outputs.size(), out_dir.c_str());
    return kExitOk;
}

int cmd_fixture(const std::string& kind, std::uint64_t seed, const std::string& out,
                const std::string& tu_out) {
    if (!tu_out.empty()) {
        herald::write_synthetic_tu_dataset(tu_out, seed);
        std::printf("fixture: wrote synthetic TU dataset to %s\n", tu_out.c_str());
        return kExitOk;
    }
    herald::NodeDataset ds = herald::make_fixture(herald::fixture_kind_from_string(kind),
                                                  seed);
    herald::save_hypergraph_json(out, ds);
    std::printf("fixture: wrote %s (checksum %s)\n", out.c_str(),
                herald::checksum_hex(herald::fixture_checksum(ds)).c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hypergraph neural networks with an adaptive Laplacian"};
    app.require_subcommand(1);

    RunOptions opt;
    std::string config_file;
    std::string seed_spec = "0";
    std::uint64_t seed = 0;

    auto* train = app.add_subcommand("train", "train one or more seeded runs");
    add_common_flags(train, opt);
    train->add_option("--config", config_file, "JSON config file (flags win)");
    train->add_option("--seeds", seed_spec, "seed or range, e.g. 0..9");
    train->add_option("--seed", seed_spec, "single seed (alias of --seeds)");

    RunOptions cv_opt;
    cv_opt.task = "graph";
    auto* cv = app.add_subcommand("cv", "k-fold cross-validation on a TU directory");
    add_common_flags(cv, cv_opt);
    cv->add_option("--config", config_file, "JSON config file (flags win)");
    cv->add_option("--folds", cv_opt.folds, "number of folds");
    cv->add_option("--seed", seed, "fold/model seed");

    std::string op_filter;
    double threshold = 1e-4;
    bool inject = false;
    std::uint64_t gc_seed = 0;
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient audit");
    gradcheck->add_option("--seed", gc_seed, "instance seed");
    gradcheck->add_option("--op", op_filter, "restrict to cases containing this substring");
    gradcheck->add_option("--threshold", threshold, "max relative error allowed");
    gradcheck
        ->add_flag("--inject-backward-defect", inject,
                   "negative control: corrupt one backward rule")
        ->group("");  // hidden

    std::string checkpoint_path, inspect_data, inspect_out = "herald_inspect";
    auto* inspect = app.add_subcommand("inspect", "dump operators and spectra");
    inspect->add_option("--checkpoint", checkpoint_path, "checkpoint JSON")->required();
    inspect->add_option("--data", inspect_data, "hypergraph JSON")->required();
    inspect->add_option("--out-dir", inspect_out, "output directory");

    std::string fixture_kind = "separable_node_task", fixture_out = "fixture.json";
    std::string fixture_tu_out;
    std::uint64_t fixture_seed = 0;
    auto* fixture = app.add_subcommand("fixture", "write a deterministic fixture dataset");
    fixture->add_option("--kind", fixture_kind, "two_blobs|ring|separable_node_task");
    fixture->add_option("--seed", fixture_seed, "fixture seed");
    fixture->add_option("--out", fixture_out, "output JSON path");
    fixture->add_option("--tu-out", fixture_tu_out,
                        "write the synthetic TU dataset to this directory instead");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int rc = app.exit(err);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (train->parsed()) {
            if (!config_file.empty()) apply_config_file(config_file, train, opt);
            return cmd_train(opt, parse_seed_spec(seed_spec));
        }
        if (cv->parsed()) {
            if (!config_file.empty()) apply_config_file(config_file, cv, cv_opt);
            return cmd_cv(cv_opt, seed);
        }
        if (gradcheck->parsed()) {
            return cmd_gradcheck(gc_seed, op_filter, threshold, inject);
        }
        if (inspect->parsed()) {
            return cmd_inspect(checkpoint_path, inspect_data, inspect_out);
        }
        if (fixture->parsed()) {
            return cmd_fixture(fixture_kind, fixture_seed, fixture_out, fixture_tu_out);
        }
    } catch (const herald::ConfigError& err) {
        herald::log_error(err.what());
        return kExitConfig;
    } catch (const herald::DataError& err) {
        herald::log_error(err.what());
        return kExitData;
    } catch (const herald::StructuralError& err) {
        herald::log_error(err.what());
        return kExitData;
    } catch (const herald::NumericError& err) {
        herald::log_error(err.what());
        return kExitNumeric;
    } catch (const herald::Error& err) {
        herald::log_error(err.what());
        return kExitConfig;
    }
    return kExitConfig;
}
