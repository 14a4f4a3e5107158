#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "herald/errors.hpp"
#include "herald/numeric_health.hpp"

namespace herald {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << " x ";
        os << s[i];
    }
    os << "]";
    return os.str();
}

struct TensorNode;
using BackwardFn = std::function<void(const TensorNode&)>;

/// One vertex of the differentiation tape. The tape is rebuilt on every
/// forward pass: ops allocate fresh nodes and link them to their inputs,
/// so dropping the final result releases the whole graph except leaves.
struct TensorNode {
    Shape shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::vector<double> grad;  // allocated on demand, same length as data
    std::vector<std::shared_ptr<TensorNode>> inputs;
    BackwardFn backward_fn;
    const char* op = "leaf";

    std::size_t numel() const { return data.size(); }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
};

namespace detail {

inline bool& grad_mode() {
    thread_local bool enabled = true;
    return enabled;
}

}  // namespace detail

/// Disables tape construction in its scope (evaluation passes).
class NoGradGuard {
public:
    NoGradGuard() : prev_(detail::grad_mode()) { detail::grad_mode() = false; }
    ~NoGradGuard() { detail::grad_mode() = prev_; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

inline bool grad_enabled() { return detail::grad_mode(); }

namespace debug {

/// Negative control for the gradient checker: when set, matmul's backward
/// is deliberately wrong so the checker must report a failure.
inline bool& inject_backward_defect() {
    thread_local bool flag = false;
    return flag;
}

}  // namespace debug

class Tensor {
public:
    Tensor() : node_(std::make_shared<TensorNode>()) {}

    explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        return filled(std::move(shape), 0.0, requires_grad);
    }

    static Tensor filled(Shape shape, double value, bool requires_grad = false) {
        auto node = std::make_shared<TensorNode>();
        node->data.assign(shape_numel(shape), value);
        node->shape = std::move(shape);
        node->requires_grad = requires_grad;
        return Tensor(std::move(node));
    }

    static Tensor from_data(Shape shape, std::vector<double> values,
                            bool requires_grad = false) {
        if (shape_numel(shape) != values.size()) {
            throw DimensionError("tensor data length " + std::to_string(values.size()) +
                                 " does not match shape " + shape_str(shape));
        }
        auto node = std::make_shared<TensorNode>();
        node->shape = std::move(shape);
        node->data = std::move(values);
        node->requires_grad = requires_grad;
        return Tensor(std::move(node));
    }

    static Tensor scalar(double value) { return from_data({1}, {value}); }

    static Tensor identity(std::size_t n) {
        Tensor t = zeros({n, n});
        for (std::size_t i = 0; i < n; ++i) t.node_->data[i * n + i] = 1.0;
        return t;
    }

    const Shape& shape() const { return node_->shape; }
    std::size_t numel() const { return node_->numel(); }
    bool is_matrix() const { return node_->shape.size() == 2; }

    std::size_t rows() const {
        require_matrix("rows()");
        return node_->shape[0];
    }
    std::size_t cols() const {
        require_matrix("cols()");
        return node_->shape[1];
    }

    double value() const {
        if (numel() != 1) {
            throw ContractError("value(): tensor " + shape_str(shape()) +
                                " is not a scalar");
        }
        return node_->data[0];
    }

    double at(std::size_t i) const { return node_->data.at(i); }
    double at(std::size_t i, std::size_t j) const {
        require_matrix("at(i,j)");
        return node_->data.at(i * node_->shape[1] + j);
    }

    std::vector<double>& data() { return node_->data; }
    const std::vector<double>& data() const { return node_->data; }

    bool requires_grad() const { return node_->requires_grad; }

    std::vector<double>& grad() {
        if (!node_->requires_grad) {
            throw ContractError("grad(): tensor does not require gradients");
        }
        node_->ensure_grad();
        return node_->grad;
    }
    const std::vector<double>& grad() const {
        return const_cast<Tensor*>(this)->grad();
    }

    void zero_grad() {
        if (node_->requires_grad) node_->grad.assign(node_->data.size(), 0.0);
    }

    const std::shared_ptr<TensorNode>& node() const { return node_; }

private:
    void require_matrix(const char* what) const {
        if (node_->shape.size() != 2) {
            throw DimensionError(std::string(what) + " needs a rank-2 tensor, got " +
                                 shape_str(node_->shape));
        }
    }

    std::shared_ptr<TensorNode> node_;
};

/// Creates an op node. When gradients are globally disabled or no input
/// needs them, inputs and the backward closure are dropped so evaluation
/// passes never grow a tape.
inline Tensor make_op(const char* op, Shape shape, std::vector<double> values,
                      std::vector<Tensor> inputs, BackwardFn backward) {
    if (shape_numel(shape) != values.size()) {
        throw DimensionError(std::string(op) + ": result data length mismatch");
    }
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->data = std::move(values);
    node->op = op;
    bool needs = false;
    if (grad_enabled()) {
        for (const auto& in : inputs) needs = needs || in.requires_grad();
    }
    node->requires_grad = needs;
    if (needs) {
        node->inputs.reserve(inputs.size());
        for (auto& in : inputs) node->inputs.push_back(in.node());
        node->backward_fn = std::move(backward);
    }
    return Tensor(std::move(node));
}

/// Reverse pass from a scalar loss. Nodes run in reverse topological
/// order, so each backward fires exactly once with its output gradient
/// fully accumulated. The visit order is a deterministic function of the
/// graph, which makes repeated runs bit-identical.
inline void backward(const Tensor& loss) {
    if (loss.numel() != 1) {
        throw ContractError("backward: loss must be scalar, got " +
                            shape_str(loss.shape()));
    }
    TensorNode* root = loss.node().get();
    if (!root->requires_grad) return;

    std::vector<TensorNode*> order;
    std::unordered_set<const TensorNode*> seen;
    struct Frame {
        TensorNode* node;
        std::size_t next;
    };
    std::vector<Frame> stack;
    stack.push_back({root, 0});
    seen.insert(root);
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next < f.node->inputs.size()) {
            TensorNode* child = f.node->inputs[f.next++].get();
            if (child->requires_grad && seen.insert(child).second) {
                stack.push_back({child, 0});
            }
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    root->ensure_grad();
    root->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode* n = *it;
        if (n->backward_fn) n->backward_fn(*n);
    }
}

// ---------------------------------------------------------------------------
// Kernels. Plain row-major loops with a fixed accumulation order; the
// order is part of the determinism contract.
// ---------------------------------------------------------------------------

namespace detail {

// c += a(m×k) · b(k×n)
inline void mm_nn(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = arow[p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
}

// c += a(m×k) · b(n×k)ᵀ
inline void mm_nt(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] += acc;
        }
    }
}

// c += a(k×m)ᵀ · b(k×n)
inline void mm_tn(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n) {
    for (std::size_t p = 0; p < k; ++p) {
        const double* arow = a + p * m;
        const double* brow = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double api = arow[i];
            double* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += api * brow[j];
        }
    }
}

inline void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) +
                             " and " + shape_str(b.shape()) + " do not match");
    }
}

inline bool is_scalar(const Tensor& t) { return t.numel() == 1; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise ops. Broadcasting is limited to scalar-with-tensor; anything
// else must be same-shape.
// ---------------------------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
    if (a.shape() == b.shape()) {
        std::vector<double> out(a.numel());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + b.at(i);
        return make_op("add", a.shape(), std::move(out), {a, b},
                       [](const TensorNode& o) {
                           for (int s = 0; s < 2; ++s) {
                               auto& in = *o.inputs[s];
                               if (!in.requires_grad) continue;
                               in.ensure_grad();
                               for (std::size_t i = 0; i < o.grad.size(); ++i)
                                   in.grad[i] += o.grad[i];
                           }
                       });
    }
    if (detail::is_scalar(a) || detail::is_scalar(b)) {
        const bool a_scalar = detail::is_scalar(a);
        const Tensor& big = a_scalar ? b : a;
        const double c = (a_scalar ? a : b).at(0);
        std::vector<double> out(big.numel());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = big.at(i) + c;
        return make_op("add", big.shape(), std::move(out), {a, b},
                       [a_scalar](const TensorNode& o) {
                           auto& sc = *o.inputs[a_scalar ? 0 : 1];
                           auto& bg = *o.inputs[a_scalar ? 1 : 0];
                           if (bg.requires_grad) {
                               bg.ensure_grad();
                               for (std::size_t i = 0; i < o.grad.size(); ++i)
                                   bg.grad[i] += o.grad[i];
                           }
                           if (sc.requires_grad) {
                               sc.ensure_grad();
                               double acc = 0.0;
                               for (double g : o.grad) acc += g;
                               sc.grad[0] += acc;
                           }
                       });
    }
    detail::require_same_shape("add", a, b);
    return Tensor();  // unreachable
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    if (a.shape() == b.shape()) {
        std::vector<double> out(a.numel());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) - b.at(i);
        return make_op("sub", a.shape(), std::move(out), {a, b},
                       [](const TensorNode& o) {
                           auto& ia = *o.inputs[0];
                           auto& ib = *o.inputs[1];
                           if (ia.requires_grad) {
                               ia.ensure_grad();
                               for (std::size_t i = 0; i < o.grad.size(); ++i)
                                   ia.grad[i] += o.grad[i];
                           }
                           if (ib.requires_grad) {
                               ib.ensure_grad();
                               for (std::size_t i = 0; i < o.grad.size(); ++i)
                                   ib.grad[i] -= o.grad[i];
                           }
                       });
    }
    if (detail::is_scalar(a) || detail::is_scalar(b)) {
        const bool a_scalar = detail::is_scalar(a);
        const Tensor& big = a_scalar ? b : a;
        std::vector<double> out(big.numel());
        if (a_scalar) {
            const double c = a.at(0);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = c - b.at(i);
        } else {
            const double c = b.at(0);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) - c;
        }
        return make_op("sub", big.shape(), std::move(out), {a, b},
                       [a_scalar](const TensorNode& o) {
                           auto& ia = *o.inputs[0];
                           auto& ib = *o.inputs[1];
                           if (ia.requires_grad) {
                               ia.ensure_grad();
                               if (a_scalar) {
                                   double acc = 0.0;
                                   for (double g : o.grad) acc += g;
                                   ia.grad[0] += acc;
                               } else {
                                   for (std::size_t i = 0; i < o.grad.size(); ++i)
                                       ia.grad[i] += o.grad[i];
                               }
                           }
                           if (ib.requires_grad) {
                               ib.ensure_grad();
                               if (a_scalar) {
                                   for (std::size_t i = 0; i < o.grad.size(); ++i)
                                       ib.grad[i] -= o.grad[i];
                               } else {
                                   double acc = 0.0;
                                   for (double g : o.grad) acc += g;
                                   ib.grad[0] -= acc;
                               }
                           }
                       });
    }
    detail::require_same_shape("sub", a, b);
    return Tensor();
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.shape() == b.shape()) {
        std::vector<double> out(a.numel());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * b.at(i);
        return make_op("mul", a.shape(), std::move(out), {a, b},
                       [](const TensorNode& o) {
                           auto& ia = *o.inputs[0];
                           auto& ib = *o.inputs[1];
                           if (ia.requires_grad) {
                               ia.ensure_grad();
                               for (std::size_t i = 0; i < o.grad.size(); ++i)
                                   ia.grad[i] += o.grad[i] * ib.data[i];
                           }
                           if (ib.requires_grad) {
                               ib.ensure_grad();
                               for (std::size_t i = 0; i < o.grad.size(); ++i)
                                   ib.grad[i] += o.grad[i] * ia.data[i];
                           }
                       });
    }
    if (detail::is_scalar(a) || detail::is_scalar(b)) {
        const bool a_scalar = detail::is_scalar(a);
        const Tensor& big = a_scalar ? b : a;
        const double c = (a_scalar ? a : b).at(0);
        std::vector<double> out(big.numel());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = big.at(i) * c;
        return make_op("mul", big.shape(), std::move(out), {a, b},
                       [a_scalar](const TensorNode& o) {
                           auto& sc = *o.inputs[a_scalar ? 0 : 1];
                           auto& bg = *o.inputs[a_scalar ? 1 : 0];
                           const double c = sc.data[0];
                           if (bg.requires_grad) {
                               bg.ensure_grad();
                               for (std::size_t i = 0; i < o.grad.size(); ++i)
                                   bg.grad[i] += o.grad[i] * c;
                           }
                           if (sc.requires_grad) {
                               sc.ensure_grad();
                               double acc = 0.0;
                               for (std::size_t i = 0; i < o.grad.size(); ++i)
                                   acc += o.grad[i] * bg.data[i];
                               sc.grad[0] += acc;
                           }
                       });
    }
    detail::require_same_shape("mul", a, b);
    return Tensor();
}

inline Tensor div(const Tensor& a, const Tensor& b) {
    const bool a_scalar = detail::is_scalar(a) && a.shape() != b.shape();
    const bool b_scalar = detail::is_scalar(b) && a.shape() != b.shape();
    if (!(a.shape() == b.shape() || a_scalar || b_scalar)) {
        detail::require_same_shape("div", a, b);
    }
    const Tensor& big = a_scalar ? b : a;
    std::vector<double> out(big.numel());
    std::size_t zeros = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double num = a_scalar ? a.at(0) : a.at(i);
        const double den = b_scalar ? b.at(0) : b.at(i);
        if (den == 0.0) ++zeros;
        out[i] = num / den;
    }
    if (zeros > 0) numeric_health().note_div_by_zero(zeros);
    return make_op("div", big.shape(), std::move(out), {a, b},
                   [a_scalar, b_scalar](const TensorNode& o) {
                       auto& ia = *o.inputs[0];
                       auto& ib = *o.inputs[1];
                       if (ia.requires_grad) {
                           ia.ensure_grad();
                           if (a_scalar) {
                               double acc = 0.0;
                               for (std::size_t i = 0; i < o.grad.size(); ++i)
                                   acc += o.grad[i] / (b_scalar ? ib.data[0] : ib.data[i]);
                               ia.grad[0] += acc;
                           } else {
                               for (std::size_t i = 0; i < o.grad.size(); ++i)
                                   ia.grad[i] += o.grad[i] / (b_scalar ? ib.data[0] : ib.data[i]);
                           }
                       }
                       if (ib.requires_grad) {
                           ib.ensure_grad();
                           for (std::size_t i = 0; i < o.grad.size(); ++i) {
                               const double num = a_scalar ? ia.data[0] : ia.data[i];
                               const double den = b_scalar ? ib.data[0] : ib.data[i];
                               const double gi = -o.grad[i] * num / (den * den);
                               ib.grad[b_scalar ? 0 : i] += gi;
                           }
                       }
                   });
}

/// Multiply by a plain constant (no gradient w.r.t. the constant).
inline Tensor scale(const Tensor& a, double c) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * c;
    return make_op("scale", a.shape(), std::move(out), {a},
                   [c](const TensorNode& o) {
                       auto& in = *o.inputs[0];
                       if (!in.requires_grad) return;
                       in.ensure_grad();
                       for (std::size_t i = 0; i < o.grad.size(); ++i)
                           in.grad[i] += o.grad[i] * c;
                   });
}

inline Tensor exp(const Tensor& a) {
    std::vector<double> out(a.numel());
    std::size_t infs = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::exp(a.at(i));
        if (std::isinf(out[i])) ++infs;
    }
    if (infs > 0) numeric_health().note_non_finite("exp", 0, infs);
    return make_op("exp", a.shape(), std::move(out), {a},
                   [](const TensorNode& o) {
                       auto& in = *o.inputs[0];
                       if (!in.requires_grad) return;
                       in.ensure_grad();
                       for (std::size_t i = 0; i < o.grad.size(); ++i)
                           in.grad[i] += o.grad[i] * o.data[i];
                   });
}

inline Tensor sqrt(const Tensor& a) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(a.at(i));
    return make_op("sqrt", a.shape(), std::move(out), {a},
                   [](const TensorNode& o) {
                       auto& in = *o.inputs[0];
                       if (!in.requires_grad) return;
                       in.ensure_grad();
                       for (std::size_t i = 0; i < o.grad.size(); ++i)
                           in.grad[i] += o.grad[i] * 0.5 / o.data[i];
                   });
}

inline Tensor square(const Tensor& a) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * a.at(i);
    return make_op("square", a.shape(), std::move(out), {a},
                   [](const TensorNode& o) {
                       auto& in = *o.inputs[0];
                       if (!in.requires_grad) return;
                       in.ensure_grad();
                       for (std::size_t i = 0; i < o.grad.size(); ++i)
                           in.grad[i] += o.grad[i] * 2.0 * in.data[i];
                   });
}

inline Tensor relu(const Tensor& a) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) > 0.0 ? a.at(i) : 0.0;
    return make_op("relu", a.shape(), std::move(out), {a},
                   [](const TensorNode& o) {
                       // subgradient 0 at the kink
                       auto& in = *o.inputs[0];
                       if (!in.requires_grad) return;
                       in.ensure_grad();
                       for (std::size_t i = 0; i < o.grad.size(); ++i)
                           if (in.data[i] > 0.0) in.grad[i] += o.grad[i];
                   });
}

inline Tensor clamp_min(const Tensor& a, double floor) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(a.at(i), floor);
    return make_op("clamp_min", a.shape(), std::move(out), {a},
                   [floor](const TensorNode& o) {
                       auto& in = *o.inputs[0];
                       if (!in.requires_grad) return;
                       in.ensure_grad();
                       for (std::size_t i = 0; i < o.grad.size(); ++i)
                           if (in.data[i] > floor) in.grad[i] += o.grad[i];
                   });
}

// ---------------------------------------------------------------------------
// Matrix ops
// ---------------------------------------------------------------------------

inline Tensor transpose(const Tensor& a) {
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.at(i, j);
    return make_op("transpose", {n, m}, std::move(out), {a},
                   [m, n](const TensorNode& o) {
                       auto& in = *o.inputs[0];
                       if (!in.requires_grad) return;
                       in.ensure_grad();
                       for (std::size_t j = 0; j < n; ++j)
                           for (std::size_t i = 0; i < m; ++i)
                               in.grad[i * n + j] += o.grad[j * m + i];
                   });
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.cols() != b.rows()) {
        throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) +
                             " and " + shape_str(b.shape()));
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    std::vector<double> out(m * n, 0.0);
    detail::mm_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
    return make_op("matmul", {m, n}, std::move(out), {a, b},
                   [m, k, n](const TensorNode& o) {
                       auto& ia = *o.inputs[0];
                       auto& ib = *o.inputs[1];
                       if (ia.requires_grad) {
                           ia.ensure_grad();
                           detail::mm_nt(o.grad.data(), ib.data.data(), ia.grad.data(),
                                         m, n, k);
                           if (debug::inject_backward_defect()) {
                               for (auto& g : ia.grad) g *= 1.001;
                           }
                       }
                       if (ib.requires_grad) {
                           ib.ensure_grad();
                           detail::mm_tn(ia.data.data(), o.grad.data(), ib.grad.data(),
                                         k, m, n);
                       }
                   });
}

/// Row i multiplied by v[i]; v must be {m, 1}.
inline Tensor scale_rows(const Tensor& a, const Tensor& v) {
    const std::size_t m = a.rows(), n = a.cols();
    if (v.shape() != Shape{m, 1}) {
        throw DimensionError("scale_rows: scale vector " + shape_str(v.shape()) +
                             " must be [" + std::to_string(m) + " x 1]");
    }
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = a.at(i, j) * v.at(i);
    return make_op("scale_rows", {m, n}, std::move(out), {a, v},
                   [m, n](const TensorNode& o) {
                       auto& ia = *o.inputs[0];
                       auto& iv = *o.inputs[1];
                       if (ia.requires_grad) {
                           ia.ensure_grad();
                           for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t j = 0; j < n; ++j)
                                   ia.grad[i * n + j] += o.grad[i * n + j] * iv.data[i];
                       }
                       if (iv.requires_grad) {
                           iv.ensure_grad();
                           for (std::size_t i = 0; i < m; ++i) {
                               double acc = 0.0;
                               for (std::size_t j = 0; j < n; ++j)
                                   acc += o.grad[i * n + j] * ia.data[i * n + j];
                               iv.grad[i] += acc;
                           }
                       }
                   });
}

/// Column j multiplied by u[j]; u must be {1, n}.
inline Tensor scale_columns(const Tensor& a, const Tensor& u) {
    const std::size_t m = a.rows(), n = a.cols();
    if (u.shape() != Shape{1, n}) {
        throw DimensionError("scale_columns: scale vector " + shape_str(u.shape()) +
                             " must be [1 x " + std::to_string(n) + "]");
    }
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = a.at(i, j) * u.at(j);
    return make_op("scale_columns", {m, n}, std::move(out), {a, u},
                   [m, n](const TensorNode& o) {
                       auto& ia = *o.inputs[0];
                       auto& iu = *o.inputs[1];
                       if (ia.requires_grad) {
                           ia.ensure_grad();
                           for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t j = 0; j < n; ++j)
                                   ia.grad[i * n + j] += o.grad[i * n + j] * iu.data[j];
                       }
                       if (iu.requires_grad) {
                           iu.ensure_grad();
                           for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t j = 0; j < n; ++j)
                                   iu.grad[j] += o.grad[i * n + j] * ia.data[i * n + j];
                       }
                   });
}

inline Tensor softmax_rows(const Tensor& a) {
    const std::size_t m = a.rows(), n = a.cols();
    for (std::size_t i = 0; i < m * n; ++i) {
        if (std::isnan(a.at(i))) {
            numeric_health().note_non_finite("softmax_rows", 1, 0);
            throw NumericError("softmax_rows: NaN input");
        }
    }
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = a.data().data() + i * n;
        double mx = row[0];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            out[i * n + j] = std::exp(row[j] - mx);
            denom += out[i * n + j];
        }
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= denom;
    }
    return make_op("softmax_rows", {m, n}, std::move(out), {a},
                   [m, n](const TensorNode& o) {
                       auto& in = *o.inputs[0];
                       if (!in.requires_grad) return;
                       in.ensure_grad();
                       for (std::size_t i = 0; i < m; ++i) {
                           const double* y = o.data.data() + i * n;
                           const double* g = o.grad.data() + i * n;
                           double dot = 0.0;
                           for (std::size_t j = 0; j < n; ++j) dot += g[j] * y[j];
                           for (std::size_t j = 0; j < n; ++j)
                               in.grad[i * n + j] += y[j] * (g[j] - dot);
                       }
                   });
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

inline Tensor sum(const Tensor& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) acc += a.at(i);
    return make_op("sum", {1}, {acc}, {a}, [](const TensorNode& o) {
        auto& in = *o.inputs[0];
        if (!in.requires_grad) return;
        in.ensure_grad();
        for (auto& g : in.grad) g += o.grad[0];
    });
}

inline Tensor mean(const Tensor& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) acc += a.at(i);
    const double inv = 1.0 / static_cast<double>(a.numel());
    return make_op("mean", {1}, {acc * inv}, {a}, [inv](const TensorNode& o) {
        auto& in = *o.inputs[0];
        if (!in.requires_grad) return;
        in.ensure_grad();
        for (auto& g : in.grad) g += o.grad[0] * inv;
    });
}

inline Tensor row_sum(const Tensor& a) {
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> out(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i] += a.at(i, j);
    return make_op("row_sum", {m, 1}, std::move(out), {a},
                   [m, n](const TensorNode& o) {
                       auto& in = *o.inputs[0];
                       if (!in.requires_grad) return;
                       in.ensure_grad();
                       for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t j = 0; j < n; ++j)
                               in.grad[i * n + j] += o.grad[i];
                   });
}

inline Tensor row_mean(const Tensor& a) {
    const std::size_t m = a.rows(), n = a.cols();
    const double inv = 1.0 / static_cast<double>(n);
    std::vector<double> out(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) out[i] += a.at(i, j);
        out[i] *= inv;
    }
    return make_op("row_mean", {m, 1}, std::move(out), {a},
                   [m, n, inv](const TensorNode& o) {
                       auto& in = *o.inputs[0];
                       if (!in.requires_grad) return;
                       in.ensure_grad();
                       for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t j = 0; j < n; ++j)
                               in.grad[i * n + j] += o.grad[i] * inv;
                   });
}

/// Column sums. Each column is accumulated in value-sorted order, which
/// makes the result invariant under any row permutation of the input
/// (the sum-readout contract) at O(m log m) per column.
inline Tensor col_sum(const Tensor& a) {
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> out(n, 0.0);
    std::vector<double> column(m);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) column[i] = a.at(i, j);
        std::sort(column.begin(), column.end());
        double acc = 0.0;
        for (double v : column) acc += v;
        out[j] = acc;
    }
    return make_op("col_sum", {1, n}, std::move(out), {a},
                   [m, n](const TensorNode& o) {
                       auto& in = *o.inputs[0];
                       if (!in.requires_grad) return;
                       in.ensure_grad();
                       for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t j = 0; j < n; ++j)
                               in.grad[i * n + j] += o.grad[j];
                   });
}

inline Tensor frobenius_norm(const Tensor& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) acc += a.at(i) * a.at(i);
    const double norm = std::sqrt(acc);
    return make_op("frobenius_norm", {1}, {norm}, {a}, [](const TensorNode& o) {
        auto& in = *o.inputs[0];
        if (!in.requires_grad) return;
        const double norm = o.data[0];
        if (norm == 0.0) return;  // zero subgradient at the origin
        in.ensure_grad();
        const double g = o.grad[0] / norm;
        for (std::size_t i = 0; i < in.grad.size(); ++i)
            in.grad[i] += g * in.data[i];
    });
}

}  // namespace herald
