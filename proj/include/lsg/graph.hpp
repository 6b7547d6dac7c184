#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "lsg/tensor.hpp"

// Reverse-mode autodiff on a define-by-run tape. A forward pass records
// nodes in creation order; since parents always precede children, walking
// the tape backwards visits every node after all of its consumers.
// Gradient accumulation is additive: a node feeding k consumers receives
// the sum of the k upstream contributions. Graphs are rebuilt per forward
// pass; Tensors are immutable values, so sharing them read-only across
// threads is safe, but a Tape itself is single-threaded.

namespace lsg::ad {

class Tape;

// Lightweight handle into a tape. Valid only while its tape is alive.
struct Value {
    Tape* tape = nullptr;
    std::uint32_t idx = 0;

    const Tensor& val() const;
};

class Tape {
public:
    using BackFn = std::function<void(Tape&, const Tensor& upstream, std::uint32_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Enter a tensor into the graph. requires_grad marks it as a parameter
    // whose gradient is retained by backward().
    Value leaf(Tensor t, bool requires_grad = false);
    Value constant(Tensor t) { return leaf(std::move(t), false); }
    Value constant_scalar(double v) { return leaf(Tensor::scalar(v), false); }

    // Runs the reverse pass from a scalar loss. Gradients of requires_grad
    // leaves are retained; all other intermediate gradients are discarded.
    void backward(Value loss);

    const Tensor& value(Value v) const;
    // Gradient of a requires_grad leaf; contract_error if absent.
    const Tensor& grad(Value v) const;

    std::size_t node_count() const { return nodes_.size(); }

    // --- used by the op builders ---
    Value emit(const char* op, Tensor value, const std::vector<Value>& parents, BackFn fn);
    bool needs_grad(Value v) const { return nodes_[v.idx].needs_grad; }
    // Adds a contribution to a node's gradient buffer during backward.
    void accumulate(std::uint32_t idx, const Tensor& contribution);
    void accumulate(std::uint32_t idx, Tensor&& contribution);

private:
    struct Node {
        Tensor value;
        BackFn back;
        bool needs_grad = false;
        bool is_param = false;
    };

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;     // live only during backward
    std::unordered_map<std::uint32_t, Tensor> param_grads_;
};

// ---- ops ----

Value matmul(Value a, Value b);

// Shapes must be equal, or one operand a scalar, or one operand a
// (row-)vector matching the other's last dimension (broadcast over rows).
Value add(Value a, Value b);
Value sub(Value a, Value b);
Value mul(Value a, Value b);
Value div(Value a, Value b);  // denominator must be positive elementwise

Value add_scalar(Value a, double s);
Value mul_scalar(Value a, double s);

Value exp(Value a);
Value log(Value a);  // argument must be positive elementwise
Value square(Value a);
Value softplus(Value a);
Value relu(Value a);

// reduce: empty axis list is the identity; all axes (or sum_all/mean_all)
// reduce to a scalar; single-axis reduction is supported for rank-2.
Value sum(Value a, const std::vector<std::size_t>& axes);
Value mean(Value a, const std::vector<std::size_t>& axes);
Value sum_all(Value a);
Value mean_all(Value a);

Value reshape(Value a, std::vector<std::size_t> shape);
Value transpose(Value a);                                  // rank-2
Value concat(const std::vector<Value>& parts, std::size_t axis);  // rank-2, axis 0 or 1
std::vector<Value> split(Value a, std::size_t axis,
                         const std::vector<std::size_t>& sizes);  // rank-2
Value slice_rows(Value a, std::size_t row0, std::size_t row1);    // rank-2, [row0, row1)

inline Value operator+(Value a, Value b) { return add(a, b); }
inline Value operator-(Value a, Value b) { return sub(a, b); }
inline Value operator*(Value a, Value b) { return mul(a, b); }
inline Value operator/(Value a, Value b) { return div(a, b); }
inline Value operator+(Value a, double s) { return add_scalar(a, s); }
inline Value operator-(Value a, double s) { return add_scalar(a, -s); }
inline Value operator*(Value a, double s) { return mul_scalar(a, s); }
inline Value operator*(double s, Value a) { return mul_scalar(a, s); }

} // namespace lsg::ad
