#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dagi/adjacency.hpp"
#include "dagi/graph.hpp"
#include "dagi/matrix.hpp"
#include "dagi/rng.hpp"
#include "dagi/tape.hpp"

namespace dagi {

/// Visits trainable tensors as (name, matrix) pairs in a fixed order.
using ParamVisitor = std::function<void(const std::string&, Matrix&)>;

/// Binds parameter matrices onto one tape, once each (cached by address),
/// so a forward pass and the optimizer agree on the leaf for every
/// parameter. One binder per tape per step.
class ParamBinder {
public:
    explicit ParamBinder(Tape& tape, bool track = true) : tape_(&tape), track_(track) {}

    Var bind(Matrix& param);
    /// Leaf previously bound for this matrix; contract error if never bound.
    Var var_of(const Matrix& param) const;
    Tape& tape() { return *tape_; }
    bool tracking() const { return track_; }

private:
    Tape* tape_;
    bool track_;
    std::map<const Matrix*, Var> bound_;
};

/// Fully connected layer; weights and bias drawn uniformly from
/// [-1/sqrt(fan_in), +1/sqrt(fan_in)] (weight entries first, then bias).
struct DenseLayer {
    Matrix weight; // in x out
    Matrix bias;   // 1 x out

    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out, SeededRng& rng);

    Var forward(ParamBinder& pb, Var x);
    void visit(const std::string& prefix, const ParamVisitor& v);
};

/// Dense layers with ReLU between them and no activation after the last.
struct Mlp {
    std::vector<DenseLayer> layers;

    Mlp() = default;
    /// dims = {in, hidden..., out}
    Mlp(const std::vector<std::size_t>& dims, SeededRng& rng);

    Var forward(ParamBinder& pb, Var x);
    void visit(const std::string& prefix, const ParamVisitor& v);
};

/// Normalizes over the rows of its input (the nodes of one graph), so the
/// output for a graph never depends on what else shares the batch.
struct BatchNorm {
    Matrix gamma;        // 1 x c, starts at 1
    Matrix beta;         // 1 x c, starts at 0
    Matrix running_mean; // 1 x c
    Matrix running_var;  // 1 x c, starts at 1
    double momentum = 0.1;
    double eps = 1e-5;

    BatchNorm() = default;
    explicit BatchNorm(std::size_t c);

    /// Train mode normalizes by batch statistics (requires >= 2 rows) and
    /// updates the running estimates; eval mode is an affine map using the
    /// running estimates only.
    Var forward(ParamBinder& pb, Var x, bool train);
    void visit(const std::string& prefix, const ParamVisitor& v);
    /// All tensors including running statistics, for persistence.
    void visit_state(const std::string& prefix, const ParamVisitor& v);
};

/// Neighborhood aggregation source: exactly one of `neighbors` (plain sum)
/// or `edges` + `edge_weights` (per-edge weighted sum) is set.
struct Aggregation {
    const NeighborIndex* neighbors = nullptr;
    const EdgeList* edges = nullptr;
    Var edge_weights{};

    static Aggregation over(const NeighborIndex& nbr);
    static Aggregation masked(const EdgeList& edges, Var weights);
    Var sum(Tape& t, Var h) const;
};

/// Graph isomorphism layer: MLP((1 + eps) * h_i + sum of neighbor rows).
/// eps is a single trainable scalar starting at 0, so a fresh layer
/// aggregates by plain summation.
struct GinLayer {
    Matrix epsilon; // 1 x 1
    Mlp mlp;

    GinLayer() = default;
    GinLayer(const std::vector<std::size_t>& mlp_dims, SeededRng& rng);

    Var aggregate(ParamBinder& pb, Var h, const Aggregation& agg);
    Var forward(ParamBinder& pb, Var h, const Aggregation& agg);
    void visit(const std::string& prefix, const ParamVisitor& v);
};

/// Graph convolution with symmetric degree normalization and self-loops.
struct GcnLayer {
    Matrix weight; // in x out

    GcnLayer() = default;
    GcnLayer(std::size_t in, std::size_t out, SeededRng& rng);

    /// norm_adj * h * W without the nonlinearity.
    Var propagate(ParamBinder& pb, Var h, const Matrix& norm_adj);
    /// ReLU(norm_adj * h * W).
    Var forward(ParamBinder& pb, Var h, const Matrix& norm_adj);
    void visit(const std::string& prefix, const ParamVisitor& v);
};

/// D^{-1/2} (A + I) D^{-1/2} where D is the degree matrix of A + I.
Matrix gcn_normalized_adjacency(const Matrix& adjacency);

/// Column means of a v x r node embedding: the 1 x r graph embedding.
Var global_mean_pool(Tape& t, Var h);

} // namespace dagi
