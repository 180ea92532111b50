#include "dagi/layers.hpp"

#include <cmath>

#include "dagi/errors.hpp"

namespace dagi {

Var ParamBinder::bind(Matrix& param) {
    auto it = bound_.find(&param);
    if (it != bound_.end()) return it->second;
    const Var v = tape_->leaf(param, track_);
    bound_.emplace(&param, v);
    return v;
}

Var ParamBinder::var_of(const Matrix& param) const {
    auto it = bound_.find(&param);
    if (it == bound_.end())
        throw ContractError("binder: parameter was never bound on this tape");
    return it->second;
}

DenseLayer::DenseLayer(std::size_t in, std::size_t out, SeededRng& rng) {
    if (in == 0 || out == 0)
        throw DimensionError("dense: zero-sized layer " + std::to_string(in) + "x" +
                             std::to_string(out));
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    weight = rng.uniform_matrix(in, out, -bound, bound);
    bias = rng.uniform_matrix(1, out, -bound, bound);
}

Var DenseLayer::forward(ParamBinder& pb, Var x) {
    Tape& t = pb.tape();
    return t.add_rowvec(t.matmul(x, pb.bind(weight)), pb.bind(bias));
}

void DenseLayer::visit(const std::string& prefix, const ParamVisitor& v) {
    v(prefix + ".w", weight);
    v(prefix + ".b", bias);
}

Mlp::Mlp(const std::vector<std::size_t>& dims, SeededRng& rng) {
    if (dims.size() < 2)
        throw ContractError("mlp: need at least input and output widths");
    for (std::size_t i = 0; i + 1 < dims.size(); ++i)
        layers.emplace_back(dims[i], dims[i + 1], rng);
}

Var Mlp::forward(ParamBinder& pb, Var x) {
    if (layers.empty())
        throw ContractError("mlp: forward on empty layer list");
    Var h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (i > 0) h = pb.tape().relu(h);
        h = layers[i].forward(pb, h);
    }
    return h;
}

void Mlp::visit(const std::string& prefix, const ParamVisitor& v) {
    for (std::size_t i = 0; i < layers.size(); ++i)
        layers[i].visit(prefix + ".l" + std::to_string(i), v);
}

BatchNorm::BatchNorm(std::size_t c)
    : gamma(Matrix::constant(1, c, 1.0)),
      beta(1, c),
      running_mean(1, c),
      running_var(Matrix::constant(1, c, 1.0)) {}

Var BatchNorm::forward(ParamBinder& pb, Var x, bool train) {
    Tape& t = pb.tape();
    const std::size_t n_rows = t.value(x).rows();
    if (t.value(x).cols() != gamma.cols())
        throw DimensionError("batchnorm: input " + t.value(x).shape() + " vs width " +
                             std::to_string(gamma.cols()));
    Var mean{}, var{};
    if (train) {
        if (n_rows < 2)
            throw ContractError("batchnorm: train mode needs >= 2 rows, got " +
                                std::to_string(n_rows));
        mean = t.mean_rows(x);
        Var centered = t.add_rowvec(x, t.mul_const(mean, -1.0));
        var = t.mean_rows(t.square(centered));
        const Matrix& bm = t.value(mean);
        const Matrix& bv = t.value(var);
        const double n = static_cast<double>(n_rows);
        // Running variance uses the unbiased estimate, the usual convention.
        const double unbias = n / (n - 1.0);
        for (std::size_t j = 0; j < gamma.cols(); ++j) {
            running_mean(0, j) = (1.0 - momentum) * running_mean(0, j) + momentum * bm(0, j);
            running_var(0, j) =
                (1.0 - momentum) * running_var(0, j) + momentum * unbias * bv(0, j);
        }
    } else {
        mean = t.constant(running_mean);
        var = t.constant(running_var);
    }
    Var centered = t.add_rowvec(x, t.mul_const(mean, -1.0));
    Var inv_std = t.reciprocal(t.sqrt_floor(t.add_const(var, eps)));
    Var normalized = t.mul_rowvec(centered, inv_std);
    return t.add_rowvec(t.mul_rowvec(normalized, pb.bind(gamma)), pb.bind(beta));
}

void BatchNorm::visit(const std::string& prefix, const ParamVisitor& v) {
    v(prefix + ".gamma", gamma);
    v(prefix + ".beta", beta);
}

void BatchNorm::visit_state(const std::string& prefix, const ParamVisitor& v) {
    visit(prefix, v);
    v(prefix + ".running_mean", running_mean);
    v(prefix + ".running_var", running_var);
}

Aggregation Aggregation::over(const NeighborIndex& nbr) {
    Aggregation a;
    a.neighbors = &nbr;
    return a;
}

Aggregation Aggregation::masked(const EdgeList& edges, Var weights) {
    Aggregation a;
    a.edges = &edges;
    a.edge_weights = weights;
    return a;
}

Var Aggregation::sum(Tape& t, Var h) const {
    if (neighbors != nullptr) return t.neighbor_sum(h, neighbors);
    if (edges != nullptr) return t.neighbor_sum_weighted(h, edge_weights, edges);
    throw ContractError("aggregation: no source configured");
}

GinLayer::GinLayer(const std::vector<std::size_t>& mlp_dims, SeededRng& rng)
    : epsilon(1, 1), mlp(mlp_dims, rng) {}

Var GinLayer::aggregate(ParamBinder& pb, Var h, const Aggregation& agg) {
    Tape& t = pb.tape();
    Var self = t.mul_scalar_var(h, t.add_const(pb.bind(epsilon), 1.0));
    return t.add(self, agg.sum(t, h));
}

Var GinLayer::forward(ParamBinder& pb, Var h, const Aggregation& agg) {
    return mlp.forward(pb, aggregate(pb, h, agg));
}

void GinLayer::visit(const std::string& prefix, const ParamVisitor& v) {
    v(prefix + ".eps", epsilon);
    mlp.visit(prefix + ".mlp", v);
}

GcnLayer::GcnLayer(std::size_t in, std::size_t out, SeededRng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    weight = rng.uniform_matrix(in, out, -bound, bound);
}

Var GcnLayer::propagate(ParamBinder& pb, Var h, const Matrix& norm_adj) {
    Tape& t = pb.tape();
    const Matrix& mh = t.value(h);
    if (norm_adj.rows() != mh.rows() || norm_adj.cols() != mh.rows())
        throw DimensionError("gcn: adjacency " + norm_adj.shape() + " vs features " +
                             mh.shape());
    Var a = t.constant(norm_adj);
    return t.matmul(t.matmul(a, h), pb.bind(weight));
}

Var GcnLayer::forward(ParamBinder& pb, Var h, const Matrix& norm_adj) {
    return pb.tape().relu(propagate(pb, h, norm_adj));
}

void GcnLayer::visit(const std::string& prefix, const ParamVisitor& v) {
    v(prefix + ".w", weight);
}

Matrix gcn_normalized_adjacency(const Matrix& adjacency) {
    if (adjacency.rows() != adjacency.cols())
        throw DimensionError("gcn: adjacency must be square, got " + adjacency.shape());
    const std::size_t v = adjacency.rows();
    Matrix with_loops = adjacency;
    for (std::size_t i = 0; i < v; ++i) with_loops(i, i) += 1.0;
    std::vector<double> inv_sqrt_deg(v);
    for (std::size_t i = 0; i < v; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < v; ++j) deg += with_loops(i, j);
        inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
    }
    Matrix out(v, v);
    for (std::size_t i = 0; i < v; ++i)
        for (std::size_t j = 0; j < v; ++j)
            out(i, j) = inv_sqrt_deg[i] * with_loops(i, j) * inv_sqrt_deg[j];
    return out;
}

Var global_mean_pool(Tape& t, Var h) { return t.mean_rows(h); }

} // namespace dagi
