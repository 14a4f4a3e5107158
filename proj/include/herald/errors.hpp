#pragma once

#include <stdexcept>
#include <string>

namespace herald {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Shape disagreement between tensors (e.g. matmul inner dims).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A documented precondition was violated (non-scalar loss, empty mask,
/// missing gradient, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

/// NaN inputs, divergence and other floating-point failures.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Invalid hypergraph structure (zero degree, empty hyperedge, ...).
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Loader error codes; one per distinct failure mode so callers can
/// branch without string matching.
enum class DataErrorCode {
    malformed_json,
    unknown_key,
    id_out_of_range,
    empty_hyperedge,
    isolated_vertices,
    ragged_features,
    bad_edge_weight,
    bad_split,
    missing_file,
    cross_graph_edge,
    bad_label,
};

inline const char* to_string(DataErrorCode code) {
    switch (code) {
        case DataErrorCode::malformed_json: return "malformed_json";
        case DataErrorCode::unknown_key: return "unknown_key";
        case DataErrorCode::id_out_of_range: return "id_out_of_range";
        case DataErrorCode::empty_hyperedge: return "empty_hyperedge";
        case DataErrorCode::isolated_vertices: return "isolated_vertices";
        case DataErrorCode::ragged_features: return "ragged_features";
        case DataErrorCode::bad_edge_weight: return "bad_edge_weight";
        case DataErrorCode::bad_split: return "bad_split";
        case DataErrorCode::missing_file: return "missing_file";
        case DataErrorCode::cross_graph_edge: return "cross_graph_edge";
        case DataErrorCode::bad_label: return "bad_label";
    }
    return "unknown";
}

class DataError : public Error {
public:
    DataError(DataErrorCode code, const std::string& what)
        : Error(std::string(to_string(code)) + ": " + what), code_(code) {}
    DataErrorCode code() const { return code_; }

private:
    DataErrorCode code_;
};

/// Bad CLI flags or config files.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace herald
