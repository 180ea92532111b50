#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "dagi/adjacency.hpp"
#include "dagi/matrix.hpp"

namespace dagi {

/// Handle into a Tape's node list.
struct Var {
    static constexpr std::uint32_t kInvalid = UINT32_MAX;
    std::uint32_t id = kInvalid;
    bool valid() const { return id != kInvalid; }
};

/// Reverse-mode differentiation tape. Values are computed eagerly when an
/// operation is recorded; backward() then walks the nodes once in reverse
/// creation order (a topological order by construction) accumulating
/// adjoints. A tape belongs to a single thread; clear() reuses the storage
/// for the next step.
///
/// Numerical guards: log inputs are floored at kLogFloor, sigmoid outputs
/// clamped to (0, 1), so finite inputs never yield NaN/Inf.
class Tape {
public:
    static constexpr double kLogFloor = 1e-12;

    Var leaf(Matrix value, bool requires_grad = false);
    Var constant(Matrix value) { return leaf(std::move(value), false); }

    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b); // elementwise

    /// x (n x c) combined with a row vector (1 x c) broadcast over rows.
    Var add_rowvec(Var x, Var row);
    Var mul_rowvec(Var x, Var row);

    Var relu(Var x);
    Var sigmoid(Var x);
    Var log_clamped(Var x);
    Var square(Var x);
    Var sqrt_floor(Var x); // sqrt(max(x, 0))
    Var reciprocal(Var x);

    Var add_const(Var x, double c);
    Var mul_const(Var x, double c);
    /// x scaled by a 1x1 tape value (broadcast product).
    Var mul_scalar_var(Var x, Var s);

    Var sum(Var x);       // 1x1
    Var mean_rows(Var x); // n x c -> 1 x c column means
    Var mean_all(Var x);  // 1x1

    /// out_i = sum of h_j over neighbors j of i. `nbr` must outlive the tape.
    Var neighbor_sum(Var h, const NeighborIndex* nbr);
    /// out_i = sum over incident edges e=(i,j) of w_e * h_j, both directions.
    /// `edges` must outlive the tape; w is 1 x |edges|.
    Var neighbor_sum_weighted(Var h, Var w, const EdgeList* edges);

    /// Seeds d(loss)/d(loss) = 1 and accumulates adjoints into every
    /// gradient-tracked node reachable from `loss` (a 1x1 value).
    void backward(Var loss);
    void zero_gradients();

    /// Reference remains valid for the tape's lifetime (node storage never
    /// relocates), including across later op recordings.
    const Matrix& value(Var v) const { return node(v).value; }
    const Matrix& gradient(Var v) const;
    bool requires_grad(Var v) const { return node(v).requires_grad; }

    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

private:
    enum class Op : std::uint8_t {
        Leaf,
        MatMul,
        Add,
        Sub,
        Mul,
        AddRow,
        MulRow,
        Relu,
        Sigmoid,
        LogClamped,
        Square,
        SqrtFloor,
        Reciprocal,
        AddConst,
        MulConst,
        MulScalarVar,
        Sum,
        MeanRows,
        MeanAll,
        NeighborSum,
        NeighborSumWeighted,
    };

    struct Node {
        Matrix value;
        Matrix grad; // allocated only when requires_grad
        Op op = Op::Leaf;
        std::uint32_t a = Var::kInvalid;
        std::uint32_t b = Var::kInvalid;
        double scalar = 0.0;
        const NeighborIndex* neighbors = nullptr;
        const EdgeList* edges = nullptr;
        bool requires_grad = false;
    };

    Node& node(Var v);
    const Node& node(Var v) const;
    Var push(Node n);
    Var unary(Op op, Var x, double scalar = 0.0);
    void check_same_shape(const char* what, Var a, Var b) const;
    void backprop(std::uint32_t id);

    std::deque<Node> nodes_; // deque: references survive push_back
};

} // namespace dagi
