#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "herald/errors.hpp"
#include "herald/hypergraph.hpp"
#include "herald/log.hpp"
#include "herald/rng.hpp"
#include "herald/training.hpp"

namespace herald {

struct LoadOptions {
    bool strict = true;              // unknown top-level keys are rejected
    bool dedupe_hyperedges = false;  // drop duplicate member sets
};

/// A node-classification dataset: the hypergraph plus its split lists.
struct NodeDataset {
    Hypergraph graph;
    Splits splits;
};

// ---------------------------------------------------------------------------
// Canonical hypergraph JSON
// ---------------------------------------------------------------------------

namespace detail {

inline const std::set<std::string>& known_document_keys() {
    static const std::set<std::string> keys = {
        "num_nodes", "hyperedges", "features",     "node_labels",
        "graph_label", "edge_weights", "splits"};
    return keys;
}

inline std::vector<int> parse_id_list(const nlohmann::json& arr, std::size_t num_nodes,
                                      const char* what) {
    std::vector<int> out;
    for (const auto& v : arr) {
        if (!v.is_number_integer()) {
            throw DataError(DataErrorCode::malformed_json,
                            std::string(what) + " must contain integers");
        }
        const int id = v.get<int>();
        if (id < 0 || static_cast<std::size_t>(id) >= num_nodes) {
            throw DataError(DataErrorCode::id_out_of_range,
                            std::string(what) + " id " + std::to_string(id) +
                                " outside [0, " + std::to_string(num_nodes) + ")");
        }
        out.push_back(id);
    }
    return out;
}

}  // namespace detail

inline NodeDataset document_to_dataset(const nlohmann::json& doc,
                                       const LoadOptions& opts = {}) {
    if (!doc.is_object()) {
        throw DataError(DataErrorCode::malformed_json, "top level must be an object");
    }
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (detail::known_document_keys().count(it.key()) == 0) {
            if (opts.strict) {
                throw DataError(DataErrorCode::unknown_key, it.key());
            }
            log_error("hypergraph document: ignoring unknown key '" + it.key() + "'");
        }
    }
    if (!doc.contains("num_nodes") || !doc.contains("hyperedges")) {
        throw DataError(DataErrorCode::malformed_json,
                        "num_nodes and hyperedges are required");
    }
    const auto num_nodes = doc.at("num_nodes").get<std::size_t>();

    std::vector<std::vector<int>> hyperedges;
    for (const auto& edge : doc.at("hyperedges")) {
        if (!edge.is_array() || edge.empty()) {
            throw DataError(DataErrorCode::empty_hyperedge,
                            "hyperedge " + std::to_string(hyperedges.size()) +
                                " is empty or not a list");
        }
        hyperedges.push_back(detail::parse_id_list(edge, num_nodes, "hyperedge"));
    }
    if (opts.dedupe_hyperedges) {
        std::set<std::vector<int>> seen;
        std::vector<std::vector<int>> unique;
        for (auto& e : hyperedges) {
            auto canon = detail::canonical_members(e);
            if (seen.insert(canon).second) unique.push_back(std::move(canon));
        }
        hyperedges = std::move(unique);
    }

    std::vector<double> weights;
    if (doc.contains("edge_weights")) {
        for (const auto& w : doc.at("edge_weights")) {
            const double value = w.get<double>();
            if (!(value > 0.0)) {
                throw DataError(DataErrorCode::bad_edge_weight,
                                "weight " + std::to_string(value) + " is not positive");
            }
            weights.push_back(value);
        }
        if (weights.size() != hyperedges.size()) {
            throw DataError(DataErrorCode::bad_edge_weight,
                            std::to_string(weights.size()) + " weights for " +
                                std::to_string(hyperedges.size()) + " hyperedges");
        }
    }

    std::optional<Tensor> features;
    if (doc.contains("features")) {
        const auto& rows = doc.at("features");
        if (!rows.is_array() || rows.size() != num_nodes) {
            throw DataError(DataErrorCode::ragged_features,
                            "feature matrix must have one row per node");
        }
        const std::size_t d = rows.empty() ? 0 : rows.front().size();
        std::vector<double> data;
        data.reserve(num_nodes * d);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != d) {
                throw DataError(DataErrorCode::ragged_features,
                                "feature row " + std::to_string(i) + " has " +
                                    std::to_string(rows[i].size()) + " values, expected " +
                                    std::to_string(d));
            }
            for (const auto& v : rows[i]) data.push_back(v.get<double>());
        }
        features = Tensor::from_data({num_nodes, d}, std::move(data));
    }

    std::vector<int> node_labels;
    if (doc.contains("node_labels")) {
        for (const auto& v : doc.at("node_labels")) node_labels.push_back(v.get<int>());
        if (node_labels.size() != num_nodes) {
            throw DataError(DataErrorCode::bad_label,
                            "node_labels length " + std::to_string(node_labels.size()) +
                                " != num_nodes " + std::to_string(num_nodes));
        }
    }

    NodeDataset out;
    try {
        out.graph = make_hypergraph(num_nodes, std::move(hyperedges), std::move(weights),
                                    std::move(features), std::move(node_labels));
    } catch (const StructuralError& err) {
        const std::string what = err.what();
        if (what.rfind("isolated vertices", 0) == 0) {
            throw DataError(DataErrorCode::isolated_vertices, what);
        }
        throw;
    }
    if (doc.contains("graph_label")) {
        out.graph.graph_label = doc.at("graph_label").get<int>();
    }

    if (doc.contains("splits")) {
        const auto& sp = doc.at("splits");
        if (sp.contains("train"))
            out.splits.train = detail::parse_id_list(sp.at("train"), num_nodes, "split train");
        if (sp.contains("val"))
            out.splits.val = detail::parse_id_list(sp.at("val"), num_nodes, "split val");
        if (sp.contains("test"))
            out.splits.test = detail::parse_id_list(sp.at("test"), num_nodes, "split test");
        std::set<int> seen;
        for (const auto* list : {&out.splits.train, &out.splits.val, &out.splits.test}) {
            for (int id : *list) {
                if (!seen.insert(id).second) {
                    throw DataError(DataErrorCode::bad_split,
                                    "node " + std::to_string(id) +
                                        " appears in more than one split");
                }
            }
        }
    }
    return out;
}

inline nlohmann::json dataset_to_document(const NodeDataset& ds) {
    nlohmann::json doc;
    doc["num_nodes"] = ds.graph.num_nodes;
    doc["hyperedges"] = ds.graph.hyperedges;
    doc["edge_weights"] = ds.graph.edge_weights;
    if (ds.graph.features) {
        nlohmann::json rows = nlohmann::json::array();
        const auto& f = *ds.graph.features;
        for (std::size_t i = 0; i < f.rows(); ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t j = 0; j < f.cols(); ++j) row.push_back(f.at(i, j));
            rows.push_back(std::move(row));
        }
        doc["features"] = std::move(rows);
    }
    if (!ds.graph.node_labels.empty()) doc["node_labels"] = ds.graph.node_labels;
    if (ds.graph.graph_label >= 0) doc["graph_label"] = ds.graph.graph_label;
    if (!ds.splits.train.empty() || !ds.splits.val.empty() || !ds.splits.test.empty()) {
        doc["splits"] = {{"train", ds.splits.train},
                         {"val", ds.splits.val},
                         {"test", ds.splits.test}};
    }
    return doc;
}

inline NodeDataset load_hypergraph_json(const std::string& path,
                                        const LoadOptions& opts = {}) {
    std::ifstream in(path);
    if (!in) {
        throw DataError(DataErrorCode::missing_file, path);
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& err) {
        throw DataError(DataErrorCode::malformed_json, err.what());
    }
    return document_to_dataset(doc, opts);
}

inline void save_hypergraph_json(const std::string& path, const NodeDataset& ds) {
    std::ofstream out(path);
    if (!out) {
        throw DataError(DataErrorCode::missing_file, "cannot write " + path);
    }
    out << dataset_to_document(ds).dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// TU graph-classification text format
// ---------------------------------------------------------------------------

struct TuDataset {
    std::vector<Hypergraph> graphs;  // graph_label set on each
    std::size_t num_classes = 0;
    std::size_t feature_dim = 0;
    std::size_t total_nodes = 0;
};

namespace detail {

inline std::vector<long> read_int_lines(const std::string& path, bool required) {
    std::ifstream in(path);
    if (!in) {
        if (required) throw DataError(DataErrorCode::missing_file, path);
        return {};
    }
    std::vector<long> out;
    std::string line;
    while (std::getline(in, line)) {
        std::string cleaned = line;
        std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
        std::istringstream is(cleaned);
        long v;
        if (is >> v) out.push_back(v);
    }
    return out;
}

inline std::string find_tu_prefix(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw DataError(DataErrorCode::missing_file, dir + " is not a directory");
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        const auto pos = name.rfind("_A.txt");
        if (pos != std::string::npos && pos + 6 == name.size()) {
            return (fs::path(dir) / name.substr(0, pos)).string();
        }
    }
    throw DataError(DataErrorCode::missing_file, "no *_A.txt file under " + dir);
}

}  // namespace detail

/// Loads a TU-style directory (DS_A.txt, DS_graph_indicator.txt,
/// DS_graph_labels.txt, optional DS_node_labels.txt) into per-graph
/// hypergraphs via the centroid expansion. Node features are one-hot
/// node labels when available, otherwise a constant scalar.
inline TuDataset load_tu_dataset(const std::string& dir) {
    const std::string prefix = detail::find_tu_prefix(dir);

    // edge file parsed pairwise, keeping the source line for diagnostics
    std::ifstream edge_in(prefix + "_A.txt");
    if (!edge_in) throw DataError(DataErrorCode::missing_file, prefix + "_A.txt");
    std::vector<std::pair<long, long>> raw_edges;
    std::vector<std::size_t> edge_lines;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(edge_in, line)) {
        ++line_no;
        std::string cleaned = line;
        std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
        std::istringstream is(cleaned);
        long u, v;
        if (is >> u >> v) {
            raw_edges.emplace_back(u, v);
            edge_lines.push_back(line_no);
        }
    }

    const auto indicator =
        detail::read_int_lines(prefix + "_graph_indicator.txt", /*required=*/true);
    const auto graph_labels =
        detail::read_int_lines(prefix + "_graph_labels.txt", /*required=*/true);
    const auto node_labels =
        detail::read_int_lines(prefix + "_node_labels.txt", /*required=*/false);
    if (indicator.empty()) {
        throw DataError(DataErrorCode::malformed_json, "empty graph indicator file");
    }
    if (!node_labels.empty() && node_labels.size() != indicator.size()) {
        throw DataError(DataErrorCode::bad_label,
                        "node label count does not match node count");
    }

    const std::size_t num_graphs = graph_labels.size();
    // global (1-based) node id -> (graph index, local id)
    std::vector<std::size_t> graph_of(indicator.size());
    std::vector<int> local_of(indicator.size());
    std::vector<std::size_t> nodes_per_graph(num_graphs, 0);
    for (std::size_t i = 0; i < indicator.size(); ++i) {
        const long g = indicator[i];
        if (g < 1 || static_cast<std::size_t>(g) > num_graphs) {
            throw DataError(DataErrorCode::id_out_of_range,
                            "graph indicator " + std::to_string(g) + " at node " +
                                std::to_string(i + 1));
        }
        graph_of[i] = static_cast<std::size_t>(g - 1);
        local_of[i] = static_cast<int>(nodes_per_graph[graph_of[i]]++);
    }

    std::vector<std::vector<std::pair<int, int>>> edges_per_graph(num_graphs);
    for (std::size_t k = 0; k < raw_edges.size(); ++k) {
        const auto [u, v] = raw_edges[k];
        if (u < 1 || v < 1 || static_cast<std::size_t>(u) > indicator.size() ||
            static_cast<std::size_t>(v) > indicator.size()) {
            throw DataError(DataErrorCode::id_out_of_range,
                            "edge endpoint out of range at line " +
                                std::to_string(edge_lines[k]));
        }
        const std::size_t gu = graph_of[static_cast<std::size_t>(u - 1)];
        const std::size_t gv = graph_of[static_cast<std::size_t>(v - 1)];
        if (gu != gv) {
            throw DataError(DataErrorCode::cross_graph_edge,
                            "edge at line " + std::to_string(edge_lines[k]) +
                                " connects graph " + std::to_string(gu + 1) +
                                " and graph " + std::to_string(gv + 1));
        }
        edges_per_graph[gu].emplace_back(local_of[static_cast<std::size_t>(u - 1)],
                                         local_of[static_cast<std::size_t>(v - 1)]);
    }

    // contiguous 0-based label ids in sorted label order
    std::map<long, int> label_map;
    for (long l : graph_labels) label_map.emplace(l, 0);
    {
        int next = 0;
        for (auto& [raw, mapped] : label_map) mapped = next++;
    }
    std::map<long, int> node_label_map;
    for (long l : node_labels) node_label_map.emplace(l, 0);
    {
        int next = 0;
        for (auto& [raw, mapped] : node_label_map) mapped = next++;
    }

    TuDataset out;
    out.num_classes = label_map.size();
    out.feature_dim = node_labels.empty() ? 1 : node_label_map.size();
    out.total_nodes = indicator.size();
    for (std::size_t g = 0; g < num_graphs; ++g) {
        const std::size_t n = nodes_per_graph[g];
        if (n == 0) {
            throw DataError(DataErrorCode::malformed_json,
                            "graph " + std::to_string(g + 1) + " has no nodes");
        }
        Tensor features = Tensor::zeros({n, out.feature_dim});
        if (node_labels.empty()) {
            for (std::size_t i = 0; i < n; ++i) features.data()[i] = 1.0;
        }
        Hypergraph hg = from_simple_graph(n, edges_per_graph[g], std::move(features), {},
                                          label_map.at(graph_labels[g]));
        out.graphs.push_back(std::move(hg));
    }
    if (!node_labels.empty()) {
        // second pass fills one-hot rows now that local ids are known
        for (std::size_t i = 0; i < indicator.size(); ++i) {
            auto& f = *out.graphs[graph_of[i]].features;
            f.data()[static_cast<std::size_t>(local_of[i]) * out.feature_dim +
                     static_cast<std::size_t>(node_label_map.at(node_labels[i]))] = 1.0;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Deterministic fixtures (recipes documented in docs/fixtures.md)
// ---------------------------------------------------------------------------

enum class FixtureKind { two_blobs, ring, separable_node_task };

inline FixtureKind fixture_kind_from_string(const std::string& name) {
    if (name == "two_blobs") return FixtureKind::two_blobs;
    if (name == "ring") return FixtureKind::ring;
    if (name == "separable_node_task") return FixtureKind::separable_node_task;
    throw ConfigError("unknown fixture kind: " + name);
}

namespace detail {

/// Grouped hyperedges that cover every vertex, then a few extra random
/// edges; class-pure groups carry the planted structure.
inline std::vector<std::vector<int>> clustered_hyperedges(
    const std::vector<std::vector<int>>& class_members, std::size_t group_size,
    std::size_t extra_edges, std::size_t num_nodes, Rng& rng) {
    std::vector<std::vector<int>> edges;
    for (const auto& members : class_members) {
        std::vector<int> shuffled = members;
        rng.shuffle(shuffled);
        for (std::size_t start = 0; start < shuffled.size(); start += group_size) {
            const std::size_t stop = std::min(shuffled.size(), start + group_size);
            edges.emplace_back(shuffled.begin() + static_cast<std::ptrdiff_t>(start),
                               shuffled.begin() + static_cast<std::ptrdiff_t>(stop));
        }
    }
    for (std::size_t k = 0; k < extra_edges; ++k) {
        std::vector<int> edge;
        const std::size_t size = 3;
        while (edge.size() < size) {
            const int v = static_cast<int>(
                rng.uniform_int(0, static_cast<std::int64_t>(num_nodes) - 1));
            if (std::find(edge.begin(), edge.end(), v) == edge.end()) edge.push_back(v);
        }
        edges.push_back(std::move(edge));
    }
    return edges;
}

inline Splits stratified_splits(const std::vector<int>& labels, std::size_t num_classes,
                                double train_frac, double val_frac, Rng& rng) {
    Splits splits;
    for (std::size_t c = 0; c < num_classes; ++c) {
        std::vector<int> ids;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == static_cast<int>(c)) ids.push_back(static_cast<int>(i));
        rng.shuffle(ids);
        const auto n_train = static_cast<std::size_t>(
            std::round(train_frac * static_cast<double>(ids.size())));
        const auto n_val = static_cast<std::size_t>(
            std::round(val_frac * static_cast<double>(ids.size())));
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (k < n_train) splits.train.push_back(ids[k]);
            else if (k < n_train + n_val) splits.val.push_back(ids[k]);
            else splits.test.push_back(ids[k]);
        }
    }
    std::sort(splits.train.begin(), splits.train.end());
    std::sort(splits.val.begin(), splits.val.end());
    std::sort(splits.test.begin(), splits.test.end());
    return splits;
}

}  // namespace detail

inline NodeDataset make_fixture(FixtureKind kind, std::uint64_t seed) {
    Rng rng(stream_seed(seed, "fixture"));
    NodeDataset out;
    switch (kind) {
        case FixtureKind::two_blobs: {
            // 40 nodes, 2 Gaussian blobs in 4 dims, co-authorship-sized edges
            const std::size_t n = 40, d = 4, per_class = 20;
            std::vector<int> labels(n);
            std::vector<double> feats(n * d);
            std::vector<std::vector<int>> members(2);
            for (std::size_t i = 0; i < n; ++i) {
                const int cls = i < per_class ? 0 : 1;
                labels[i] = cls;
                members[static_cast<std::size_t>(cls)].push_back(static_cast<int>(i));
                const double mu = cls == 0 ? 1.5 : -1.5;
                feats[i * d + 0] = mu + 0.5 * rng.normal();
                feats[i * d + 1] = -mu + 0.5 * rng.normal();
                feats[i * d + 2] = 0.5 * rng.normal();
                feats[i * d + 3] = 0.5 * rng.normal();
            }
            auto edges = detail::clustered_hyperedges(members, 4, 4, n, rng);
            out.graph = make_hypergraph(
                n, std::move(edges), {},
                Tensor::from_data({n, d}, std::move(feats)), std::move(labels));
            out.splits = detail::stratified_splits(out.graph.node_labels, 2, 0.4, 0.2, rng);
            break;
        }
        case FixtureKind::ring: {
            // cycle of 12; centroid expansion gives |E| = |V| and every
            // hyperedge {v-1, v, v+1}
            const std::size_t n = 12;
            std::vector<std::pair<int, int>> edges;
            for (std::size_t v = 0; v < n; ++v)
                edges.emplace_back(static_cast<int>(v), static_cast<int>((v + 1) % n));
            std::vector<double> feats(n * 2);
            std::vector<int> labels(n);
            for (std::size_t v = 0; v < n; ++v) {
                feats[v * 2 + 0] = std::cos(2.0 * M_PI * static_cast<double>(v) / 12.0);
                feats[v * 2 + 1] = std::sin(2.0 * M_PI * static_cast<double>(v) / 12.0);
                labels[v] = static_cast<int>(v % 2);
            }
            out.graph = from_simple_graph(n, edges,
                                          Tensor::from_data({n, 2}, std::move(feats)),
                                          std::move(labels));
            break;
        }
        case FixtureKind::separable_node_task: {
            // 60 nodes, 3 classes, features linearly separable by design:
            // a strong one-hot class signal plus weak noise
            const std::size_t n = 60, d = 8, classes = 3, per_class = 20;
            std::vector<int> labels(n);
            std::vector<double> feats(n * d);
            std::vector<std::vector<int>> members(classes);
            for (std::size_t i = 0; i < n; ++i) {
                const int cls = static_cast<int>(i / per_class);
                labels[i] = cls;
                members[static_cast<std::size_t>(cls)].push_back(static_cast<int>(i));
                for (std::size_t j = 0; j < d; ++j) feats[i * d + j] = 0.1 * rng.normal();
                feats[i * d + static_cast<std::size_t>(cls)] += 3.0;
            }
            auto edges = detail::clustered_hyperedges(members, 5, 3, n, rng);
            out.graph = make_hypergraph(
                n, std::move(edges), {},
                Tensor::from_data({n, d}, std::move(feats)), std::move(labels));
            out.splits =
                detail::stratified_splits(out.graph.node_labels, classes, 0.4, 0.2, rng);
            break;
        }
    }
    return out;
}

/// FNV-1a of the canonical JSON serialization; what docs/fixtures.md pins.
inline std::uint64_t fixture_checksum(const NodeDataset& ds) {
    return fnv1a64(dataset_to_document(ds).dump());
}

inline std::vector<GraphExample> prepare_graph_examples(TuDataset ds) {
    std::vector<GraphExample> out;
    out.reserve(ds.graphs.size());
    for (auto& g : ds.graphs) out.push_back(make_graph_example(std::move(g)));
    return out;
}

/// Writes a deterministic TU-format graph-classification dataset shaped
/// like MUTAG: 188 graphs, 2 classes (63/125), node counts averaging
/// ~18. Class 0 graphs are random trees, class 1 graphs are rings with
/// chords, and the node-label distributions differ between classes, so
/// both structure and features carry signal.
inline void write_synthetic_tu_dataset(const std::string& dir, std::uint64_t seed,
                                       const std::string& name = "SYNTH") {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    Rng rng(stream_seed(seed, "tu_synthetic"));

    std::ofstream a_out((fs::path(dir) / (name + "_A.txt")).string());
    std::ofstream ind_out((fs::path(dir) / (name + "_graph_indicator.txt")).string());
    std::ofstream gl_out((fs::path(dir) / (name + "_graph_labels.txt")).string());
    std::ofstream nl_out((fs::path(dir) / (name + "_node_labels.txt")).string());

    long next_node = 1;  // TU ids are 1-based
    for (int g = 0; g < 188; ++g) {
        const int cls = g < 63 ? 0 : 1;
        const auto n = static_cast<std::size_t>(rng.uniform_int(12, 24));
        std::vector<std::pair<long, long>> edges;
        if (cls == 0) {
            for (std::size_t v = 1; v < n; ++v) {
                const long parent = rng.uniform_int(0, static_cast<std::int64_t>(v) - 1);
                edges.emplace_back(parent, static_cast<long>(v));
            }
        } else {
            for (std::size_t v = 0; v < n; ++v)
                edges.emplace_back(static_cast<long>(v), static_cast<long>((v + 1) % n));
            const auto chords = static_cast<std::size_t>(n / 4);
            for (std::size_t k = 0; k < chords; ++k) {
                const long u = rng.uniform_int(0, static_cast<std::int64_t>(n) - 1);
                const long v = rng.uniform_int(0, static_cast<std::int64_t>(n) - 1);
                if (u != v) edges.emplace_back(u, v);
            }
        }
        for (std::size_t v = 0; v < n; ++v) {
            ind_out << (g + 1) << "\n";
            const double r = rng.uniform();
            int label;
            if (cls == 0) {
                label = r < 0.7 ? 0 : (r < 0.85 ? 1 : 2);
            } else {
                label = r < 0.7 ? 1 : (r < 0.85 ? 0 : 2);
            }
            nl_out << label << "\n";
        }
        for (const auto& [u, v] : edges) {
            a_out << (next_node + u) << ", " << (next_node + v) << "\n";
            a_out << (next_node + v) << ", " << (next_node + u) << "\n";
        }
        gl_out << (cls == 0 ? 1 : 2) << "\n";
        next_node += static_cast<long>(n);
    }
}

/// Seeded random hypergraph with full vertex coverage; edge sizes 2..4.
/// Used by the verification harness and the spectral suites.
inline Hypergraph random_hypergraph(std::size_t num_nodes, std::size_t num_edges,
                                    Rng& rng, std::size_t feature_dim = 0) {
    std::vector<std::vector<int>> edges(num_edges);
    for (auto& edge : edges) {
        const auto size = static_cast<std::size_t>(rng.uniform_int(2, 4));
        while (edge.size() < size) {
            const int v = static_cast<int>(
                rng.uniform_int(0, static_cast<std::int64_t>(num_nodes) - 1));
            if (std::find(edge.begin(), edge.end(), v) == edge.end()) edge.push_back(v);
        }
    }
    std::vector<char> covered(num_nodes, 0);
    for (const auto& edge : edges)
        for (int v : edge) covered[static_cast<std::size_t>(v)] = 1;
    for (std::size_t v = 0; v < num_nodes; ++v) {
        if (!covered[v]) {
            edges[static_cast<std::size_t>(rng.uniform_int(
                      0, static_cast<std::int64_t>(num_edges) - 1))]
                .push_back(static_cast<int>(v));
        }
    }
    std::optional<Tensor> features;
    if (feature_dim > 0) {
        std::vector<double> data(num_nodes * feature_dim);
        for (auto& x : data) x = rng.normal();
        features = Tensor::from_data({num_nodes, feature_dim}, std::move(data));
    }
    return make_hypergraph(num_nodes, std::move(edges), {}, std::move(features));
}

}  // namespace herald
