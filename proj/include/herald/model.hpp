#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "herald/adaptor.hpp"
#include "herald/errors.hpp"
#include "herald/hypergraph.hpp"
#include "herald/rng.hpp"
#include "herald/tensor.hpp"

namespace herald {

enum class Activation { relu, none };
enum class Task { node_classification, graph_classification };

struct LayerSpec {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    Activation activation = Activation::relu;
    bool herald_enabled = false;
    double dropout_rate = 0.0;  // in [0, 1); 0 disables
};

struct ModelConfig {
    std::vector<LayerSpec> layers;
    std::size_t herald_hidden = 16;
    MixSchedule mix;
    bool fast_herald = false;
    Task task = Task::node_classification;
    double sigma = 1.0;
    bool scale_attention = false;       // off: scores are raw dot products
    std::size_t num_classes = 0;        // graph task classifier width

    bool any_herald() const {
        for (const auto& l : layers)
            if (l.herald_enabled) return true;
        return false;
    }
};

inline void validate(const ModelConfig& cfg) {
    if (cfg.layers.empty()) throw ConfigError("model: at least one layer required");
    for (std::size_t l = 0; l + 1 < cfg.layers.size(); ++l) {
        if (cfg.layers[l].out_dim != cfg.layers[l + 1].in_dim) {
            throw ConfigError("model: layer " + std::to_string(l + 1) + " out_dim " +
                              std::to_string(cfg.layers[l].out_dim) +
                              " does not feed layer " + std::to_string(l + 2) +
                              " in_dim " + std::to_string(cfg.layers[l + 1].in_dim));
        }
    }
    for (const auto& l : cfg.layers) {
        if (l.in_dim == 0 || l.out_dim == 0) throw ConfigError("model: zero layer dim");
        if (l.dropout_rate < 0.0 || l.dropout_rate >= 1.0) {
            throw ConfigError("model: dropout rate must be in [0,1)");
        }
    }
    if (cfg.task == Task::node_classification &&
        cfg.layers.back().activation != Activation::none) {
        throw ConfigError("model: final node-task layer must emit logits (no activation)");
    }
    if (cfg.task == Task::graph_classification && cfg.num_classes == 0) {
        throw ConfigError("model: graph task needs num_classes for the classifier");
    }
    if (cfg.herald_hidden == 0) throw ConfigError("model: herald_hidden must be positive");
    if (!(cfg.sigma > 0.0)) throw ConfigError("model: sigma must be positive");
}

/// Default architecture for hypernode classification: three layers
/// d -> hidden -> hidden -> C with ReLU between, adaptor on the latter
/// two layers (layer 1 keeps the static operator).
inline ModelConfig default_node_config(std::size_t in_dim, std::size_t num_classes,
                                       bool herald_on, std::size_t hidden = 64,
                                       double dropout = 0.0) {
    ModelConfig cfg;
    cfg.task = Task::node_classification;
    cfg.num_classes = num_classes;
    cfg.layers = {
        {in_dim, hidden, Activation::relu, false, dropout},
        {hidden, hidden, Activation::relu, herald_on, dropout},
        {hidden, num_classes, Activation::none, herald_on, 0.0},
    };
    return cfg;
}

/// Default architecture for hypergraph classification: two layers, sum
/// readout, then a linear classifier producing logits.
inline ModelConfig default_graph_config(std::size_t in_dim, std::size_t num_classes,
                                        bool herald_on, std::size_t hidden = 32) {
    ModelConfig cfg;
    cfg.task = Task::graph_classification;
    cfg.num_classes = num_classes;
    cfg.layers = {
        {in_dim, hidden, Activation::relu, false, 0.0},
        {hidden, hidden, Activation::relu, herald_on, 0.0},
    };
    return cfg;
}

/// Permutation-invariant sum readout: column sums as a {1, c} row.
inline Tensor readout_sum(const Tensor& node_embeddings) {
    return col_sum(node_embeddings);
}

/// One convolution: activation(Nhat · X · Theta). Multiplied as
/// Nhat · (X · Theta), which is the cheaper association when the layer
/// narrows the feature dimension.
inline Tensor hgnn_layer(const Tensor& nhat, const Tensor& x, const Tensor& theta,
                         Activation activation) {
    Tensor out = matmul(nhat, matmul(x, theta));
    return activation == Activation::relu ? relu(out) : out;
}

struct ForwardResult {
    Tensor logits;
    std::vector<HeraldOutput> herald_outputs;  // one per adaptor invocation
};

class Model {
public:
    Model(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), seed_(seed) {
        validate(cfg_);
        for (std::size_t l = 0; l < cfg_.layers.size(); ++l) {
            const auto& spec = cfg_.layers[l];
            Rng rng(stream_seed(seed_, "theta." + std::to_string(l + 1)));
            thetas_.push_back(glorot_uniform({spec.in_dim, spec.out_dim}, spec.in_dim,
                                             spec.out_dim, rng));
        }
        if (cfg_.any_herald()) {
            if (cfg_.fast_herald) {
                Rng rng(stream_seed(seed_, "herald.shared"));
                heralds_.push_back(make_herald_params(cfg_.layers.front().in_dim,
                                                      cfg_.herald_hidden, cfg_.sigma, rng));
            } else {
                for (std::size_t l = 0; l < cfg_.layers.size(); ++l) {
                    if (!cfg_.layers[l].herald_enabled) continue;
                    Rng rng(stream_seed(seed_, "herald." + std::to_string(l + 1)));
                    heralds_.push_back(make_herald_params(cfg_.layers[l].in_dim,
                                                          cfg_.herald_hidden, cfg_.sigma, rng));
                    herald_of_layer_[l] = heralds_.size() - 1;
                }
            }
        }
        if (cfg_.task == Task::graph_classification) {
            const std::size_t hidden = cfg_.layers.back().out_dim;
            Rng rng(stream_seed(seed_, "classifier"));
            cls_w_ = glorot_uniform({hidden, cfg_.num_classes}, hidden, cfg_.num_classes, rng);
            cls_b_ = Tensor::zeros({1, cfg_.num_classes}, /*requires_grad=*/true);
        }
    }

    const ModelConfig& config() const { return cfg_; }
    std::uint64_t seed() const { return seed_; }

    std::vector<std::pair<std::string, Tensor>> named_parameters() const {
        std::vector<std::pair<std::string, Tensor>> out;
        for (std::size_t l = 0; l < thetas_.size(); ++l)
            out.emplace_back("theta." + std::to_string(l + 1), thetas_[l]);
        for (std::size_t k = 0; k < heralds_.size(); ++k) {
            const std::string base =
                cfg_.fast_herald ? "herald.shared" : "herald." + std::to_string(herald_layer(k));
            out.emplace_back(base + ".w_v", heralds_[k].w_v);
            out.emplace_back(base + ".w_e", heralds_[k].w_e);
            out.emplace_back(base + ".w_s", heralds_[k].w_s);
        }
        if (cfg_.task == Task::graph_classification) {
            out.emplace_back("classifier.w", cls_w_);
            out.emplace_back("classifier.b", cls_b_);
        }
        return out;
    }

    std::vector<Tensor> parameters() const {
        std::vector<Tensor> out;
        for (auto& [name, t] : named_parameters()) out.push_back(t);
        return out;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& t : parameters()) n += t.numel();
        return n;
    }

    /// Size of the adaptor bundles only; independent of |V| and |E|.
    std::size_t herald_parameter_count() const {
        std::size_t n = 0;
        for (const auto& h : heralds_) n += h.parameter_count();
        return n;
    }

    const std::vector<HeraldParams>& herald_params() const { return heralds_; }

    ForwardResult forward(const PreparedGraph& prep, const Tensor& x,
                          bool training = false, Rng* dropout_rng = nullptr) const {
        ForwardResult result;
        Tensor h = x;
        std::optional<HeraldOutput> shared;
        for (std::size_t l = 0; l < cfg_.layers.size(); ++l) {
            const auto& spec = cfg_.layers[l];
            Tensor op = prep.normalized;
            if (cfg_.fast_herald && cfg_.any_herald()) {
                if (!shared) {
                    // built once from the input features, reused everywhere
                    shared = herald_forward(x, prep, heralds_[0],
                                            mix_coefficient(cfg_.mix, 1),
                                            cfg_.scale_attention);
                    result.herald_outputs.push_back(*shared);
                }
                op = shared->n_hat;
            } else if (spec.herald_enabled) {
                const auto it = herald_of_layer_.find(l);
                const HeraldOutput out = herald_forward(
                    h, prep, heralds_[it->second],
                    mix_coefficient(cfg_.mix, static_cast<int>(l + 1)),
                    cfg_.scale_attention);
                result.herald_outputs.push_back(out);
                op = out.n_hat;
            }
            h = hgnn_layer(op, h, thetas_[l], spec.activation);
            if (training && spec.dropout_rate > 0.0 && l + 1 < cfg_.layers.size()) {
                if (dropout_rng == nullptr) {
                    throw ContractError("forward: dropout enabled but no RNG supplied");
                }
                h = mul(h, dropout_mask(h.shape(), spec.dropout_rate, *dropout_rng));
            }
        }
        if (cfg_.task == Task::graph_classification) {
            Tensor pooled = readout_sum(h);
            result.logits = add(matmul(pooled, cls_w_), cls_b_);
        } else {
            result.logits = h;
        }
        return result;
    }

    nlohmann::json to_checkpoint(int epoch) const {
        nlohmann::json doc;
        doc["format_version"] = 1;
        doc["config"] = config_to_json(cfg_);
        doc["seed"] = seed_;
        doc["epoch"] = epoch;
        nlohmann::json params = nlohmann::json::object();
        for (const auto& [name, t] : named_parameters()) {
            params[name] = {{"shape", t.shape()}, {"data", t.data()}};
        }
        doc["params"] = params;
        return doc;
    }

    static Model from_checkpoint(const nlohmann::json& doc) {
        if (!doc.contains("format_version") || doc["format_version"].get<int>() != 1) {
            throw ConfigError("checkpoint: unsupported format version");
        }
        Model model(config_from_json(doc.at("config")), doc.at("seed").get<std::uint64_t>());
        const auto& params = doc.at("params");
        for (auto& [name, t] : model.named_parameters()) {
            if (!params.contains(name)) {
                throw ConfigError("checkpoint: missing parameter " + name);
            }
            const auto& entry = params.at(name);
            const auto shape = entry.at("shape").get<Shape>();
            if (shape != t.shape()) {
                throw ConfigError("checkpoint: parameter " + name + " has shape " +
                                  shape_str(shape) + ", model expects " +
                                  shape_str(t.shape()));
            }
            t.data() = entry.at("data").get<std::vector<double>>();
        }
        return model;
    }

    static nlohmann::json config_to_json(const ModelConfig& cfg) {
        nlohmann::json layers = nlohmann::json::array();
        for (const auto& l : cfg.layers) {
            layers.push_back({{"in_dim", l.in_dim},
                              {"out_dim", l.out_dim},
                              {"activation", l.activation == Activation::relu ? "relu" : "none"},
                              {"herald", l.herald_enabled},
                              {"dropout", l.dropout_rate}});
        }
        return {{"layers", layers},
                {"herald_hidden", cfg.herald_hidden},
                {"mix_mode", cfg.mix.mode == MixSchedule::Mode::constant ? "constant" : "cosine"},
                {"mix_constant", cfg.mix.constant_value},
                {"fast_herald", cfg.fast_herald},
                {"task", cfg.task == Task::graph_classification ? "graph" : "node"},
                {"sigma", cfg.sigma},
                {"scale_attention", cfg.scale_attention},
                {"num_classes", cfg.num_classes}};
    }

    static ModelConfig config_from_json(const nlohmann::json& j) {
        ModelConfig cfg;
        for (const auto& l : j.at("layers")) {
            LayerSpec spec;
            spec.in_dim = l.at("in_dim").get<std::size_t>();
            spec.out_dim = l.at("out_dim").get<std::size_t>();
            spec.activation =
                l.at("activation").get<std::string>() == "relu" ? Activation::relu
                                                                : Activation::none;
            spec.herald_enabled = l.at("herald").get<bool>();
            spec.dropout_rate = l.at("dropout").get<double>();
            cfg.layers.push_back(spec);
        }
        cfg.herald_hidden = j.at("herald_hidden").get<std::size_t>();
        cfg.mix.mode = j.at("mix_mode").get<std::string>() == "constant"
                           ? MixSchedule::Mode::constant
                           : MixSchedule::Mode::cosine_layerwise;
        cfg.mix.constant_value = j.at("mix_constant").get<double>();
        cfg.fast_herald = j.at("fast_herald").get<bool>();
        cfg.task = j.at("task").get<std::string>() == "graph" ? Task::graph_classification
                                                              : Task::node_classification;
        cfg.sigma = j.at("sigma").get<double>();
        cfg.scale_attention = j.at("scale_attention").get<bool>();
        cfg.num_classes = j.at("num_classes").get<std::size_t>();
        return cfg;
    }

private:
    int herald_layer(std::size_t bundle_index) const {
        for (const auto& [layer, idx] : herald_of_layer_)
            if (idx == bundle_index) return static_cast<int>(layer + 1);
        return 0;
    }

    static Tensor dropout_mask(const Shape& shape, double rate, Rng& rng) {
        const double keep_scale = 1.0 / (1.0 - rate);
        std::vector<double> mask(shape_numel(shape));
        for (auto& m : mask) m = rng.uniform() >= rate ? keep_scale : 0.0;
        return Tensor::from_data(shape, std::move(mask));
    }

    ModelConfig cfg_;
    std::uint64_t seed_;
    std::vector<Tensor> thetas_;
    std::vector<HeraldParams> heralds_;
    std::map<std::size_t, std::size_t> herald_of_layer_;
    Tensor cls_w_, cls_b_;
};

}  // namespace herald
