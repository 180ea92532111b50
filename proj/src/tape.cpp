#include "dagi/tape.hpp"

#include <cmath>
#include <string>

#include "dagi/errors.hpp"

namespace dagi {

namespace {

std::string shape_pair(const Matrix& a, const Matrix& b) {
    return a.shape() + " vs " + b.shape();
}

} // namespace

Tape::Node& Tape::node(Var v) {
    if (!v.valid() || v.id >= nodes_.size())
        throw ContractError("tape: variable handle out of range");
    return nodes_[v.id];
}

const Tape::Node& Tape::node(Var v) const {
    if (!v.valid() || v.id >= nodes_.size())
        throw ContractError("tape: variable handle out of range");
    return nodes_[v.id];
}

Var Tape::push(Node n) {
    if (n.requires_grad && (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols()))
        n.grad = Matrix(n.value.rows(), n.value.cols());
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::leaf(Matrix value, bool requires_grad) {
    Node n;
    n.value = std::move(value);
    n.op = Op::Leaf;
    n.requires_grad = requires_grad;
    return push(std::move(n));
}

void Tape::check_same_shape(const char* what, Var a, Var b) const {
    const Matrix& ma = node(a).value;
    const Matrix& mb = node(b).value;
    if (!ma.same_shape(mb))
        throw DimensionError(std::string(what) + ": " + shape_pair(ma, mb));
}

Var Tape::matmul(Var a, Var b) {
    const Matrix& ma = node(a).value;
    const Matrix& mb = node(b).value;
    if (ma.cols() != mb.rows())
        throw DimensionError("matmul: " + shape_pair(ma, mb));
    Node n;
    n.value = Matrix(ma.rows(), mb.cols());
    matmul_into(n.value, ma, mb, false);
    n.op = Op::MatMul;
    n.a = a.id;
    n.b = b.id;
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
    check_same_shape("add", a, b);
    Node n;
    n.value = node(a).value;
    const double* pb = node(b).value.data();
    double* pv = n.value.data();
    for (std::size_t i = 0; i < n.value.size(); ++i) pv[i] += pb[i];
    n.op = Op::Add;
    n.a = a.id;
    n.b = b.id;
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
    check_same_shape("sub", a, b);
    Node n;
    n.value = node(a).value;
    const double* pb = node(b).value.data();
    double* pv = n.value.data();
    for (std::size_t i = 0; i < n.value.size(); ++i) pv[i] -= pb[i];
    n.op = Op::Sub;
    n.a = a.id;
    n.b = b.id;
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
    check_same_shape("mul", a, b);
    Node n;
    n.value = node(a).value;
    const double* pb = node(b).value.data();
    double* pv = n.value.data();
    for (std::size_t i = 0; i < n.value.size(); ++i) pv[i] *= pb[i];
    n.op = Op::Mul;
    n.a = a.id;
    n.b = b.id;
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    return push(std::move(n));
}

Var Tape::add_rowvec(Var x, Var row) {
    const Matrix& mx = node(x).value;
    const Matrix& mr = node(row).value;
    if (mr.rows() != 1 || mr.cols() != mx.cols())
        throw DimensionError("add_rowvec: " + shape_pair(mx, mr));
    Node n;
    n.value = mx;
    for (std::size_t i = 0; i < mx.rows(); ++i)
        for (std::size_t j = 0; j < mx.cols(); ++j) n.value(i, j) += mr(0, j);
    n.op = Op::AddRow;
    n.a = x.id;
    n.b = row.id;
    n.requires_grad = node(x).requires_grad || node(row).requires_grad;
    return push(std::move(n));
}

Var Tape::mul_rowvec(Var x, Var row) {
    const Matrix& mx = node(x).value;
    const Matrix& mr = node(row).value;
    if (mr.rows() != 1 || mr.cols() != mx.cols())
        throw DimensionError("mul_rowvec: " + shape_pair(mx, mr));
    Node n;
    n.value = mx;
    for (std::size_t i = 0; i < mx.rows(); ++i)
        for (std::size_t j = 0; j < mx.cols(); ++j) n.value(i, j) *= mr(0, j);
    n.op = Op::MulRow;
    n.a = x.id;
    n.b = row.id;
    n.requires_grad = node(x).requires_grad || node(row).requires_grad;
    return push(std::move(n));
}

Var Tape::unary(Op op, Var x, double scalar) {
    Node n;
    n.value = node(x).value;
    n.op = op;
    n.a = x.id;
    n.scalar = scalar;
    n.requires_grad = node(x).requires_grad;
    double* p = n.value.data();
    const std::size_t sz = n.value.size();
    switch (op) {
    case Op::Relu:
        for (std::size_t i = 0; i < sz; ++i) p[i] = p[i] > 0.0 ? p[i] : 0.0;
        break;
    case Op::Sigmoid:
        for (std::size_t i = 0; i < sz; ++i) {
            // Branch keeps exp() argument non-positive for stability.
            double v = p[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-p[i]))
                                   : std::exp(p[i]) / (1.0 + std::exp(p[i]));
            if (v < kLogFloor) v = kLogFloor;
            if (v > 1.0 - kLogFloor) v = 1.0 - kLogFloor;
            p[i] = v;
        }
        break;
    case Op::LogClamped:
        for (std::size_t i = 0; i < sz; ++i) p[i] = std::log(p[i] < kLogFloor ? kLogFloor : p[i]);
        break;
    case Op::Square:
        for (std::size_t i = 0; i < sz; ++i) p[i] *= p[i];
        break;
    case Op::SqrtFloor:
        for (std::size_t i = 0; i < sz; ++i) p[i] = std::sqrt(p[i] > 0.0 ? p[i] : 0.0);
        break;
    case Op::Reciprocal:
        for (std::size_t i = 0; i < sz; ++i) p[i] = 1.0 / p[i];
        break;
    case Op::AddConst:
        for (std::size_t i = 0; i < sz; ++i) p[i] += scalar;
        break;
    case Op::MulConst:
        for (std::size_t i = 0; i < sz; ++i) p[i] *= scalar;
        break;
    default:
        throw ContractError("tape: unary dispatch on non-unary op");
    }
    return push(std::move(n));
}

Var Tape::relu(Var x) { return unary(Op::Relu, x); }
Var Tape::sigmoid(Var x) { return unary(Op::Sigmoid, x); }
Var Tape::log_clamped(Var x) { return unary(Op::LogClamped, x); }
Var Tape::square(Var x) { return unary(Op::Square, x); }
Var Tape::sqrt_floor(Var x) { return unary(Op::SqrtFloor, x); }
Var Tape::reciprocal(Var x) { return unary(Op::Reciprocal, x); }
Var Tape::add_const(Var x, double c) { return unary(Op::AddConst, x, c); }
Var Tape::mul_const(Var x, double c) { return unary(Op::MulConst, x, c); }

Var Tape::mul_scalar_var(Var x, Var s) {
    const Matrix& ms = node(s).value;
    if (ms.rows() != 1 || ms.cols() != 1)
        throw DimensionError("mul_scalar_var: scalar operand is " + ms.shape());
    Node n;
    n.value = node(x).value;
    const double sv = ms(0, 0);
    double* p = n.value.data();
    for (std::size_t i = 0; i < n.value.size(); ++i) p[i] *= sv;
    n.op = Op::MulScalarVar;
    n.a = x.id;
    n.b = s.id;
    n.requires_grad = node(x).requires_grad || node(s).requires_grad;
    return push(std::move(n));
}

Var Tape::sum(Var x) {
    const Matrix& mx = node(x).value;
    Node n;
    n.value = Matrix(1, 1);
    double acc = 0.0;
    const double* p = mx.data();
    for (std::size_t i = 0; i < mx.size(); ++i) acc += p[i];
    n.value(0, 0) = acc;
    n.op = Op::Sum;
    n.a = x.id;
    n.requires_grad = node(x).requires_grad;
    return push(std::move(n));
}

Var Tape::mean_rows(Var x) {
    const Matrix& mx = node(x).value;
    if (mx.rows() == 0) throw DimensionError("mean_rows: empty input");
    Node n;
    n.value = Matrix(1, mx.cols());
    for (std::size_t j = 0; j < mx.cols(); ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < mx.rows(); ++i) acc += mx(i, j);
        n.value(0, j) = acc / static_cast<double>(mx.rows());
    }
    n.op = Op::MeanRows;
    n.a = x.id;
    n.requires_grad = node(x).requires_grad;
    return push(std::move(n));
}

Var Tape::mean_all(Var x) {
    const Matrix& mx = node(x).value;
    if (mx.size() == 0) throw DimensionError("mean_all: empty input");
    Node n;
    n.value = Matrix(1, 1);
    double acc = 0.0;
    const double* p = mx.data();
    for (std::size_t i = 0; i < mx.size(); ++i) acc += p[i];
    n.value(0, 0) = acc / static_cast<double>(mx.size());
    n.op = Op::MeanAll;
    n.a = x.id;
    n.requires_grad = node(x).requires_grad;
    return push(std::move(n));
}

Var Tape::neighbor_sum(Var h, const NeighborIndex* nbr) {
    const Matrix& mh = node(h).value;
    if (nbr == nullptr) throw ContractError("neighbor_sum: null neighbor index");
    if (nbr->node_count() != mh.rows())
        throw DimensionError("neighbor_sum: features " + mh.shape() + " vs " +
                             std::to_string(nbr->node_count()) + " graph nodes");
    Node n;
    n.value = Matrix(mh.rows(), mh.cols());
    for (std::size_t i = 0; i < mh.rows(); ++i)
        for (std::uint32_t j : nbr->lists[i])
            for (std::size_t c = 0; c < mh.cols(); ++c) n.value(i, c) += mh(j, c);
    n.op = Op::NeighborSum;
    n.a = h.id;
    n.neighbors = nbr;
    n.requires_grad = node(h).requires_grad;
    return push(std::move(n));
}

Var Tape::neighbor_sum_weighted(Var h, Var w, const EdgeList* edges) {
    const Matrix& mh = node(h).value;
    const Matrix& mw = node(w).value;
    if (edges == nullptr) throw ContractError("neighbor_sum_weighted: null edge list");
    if (mw.rows() != 1 || mw.cols() != edges->size())
        throw DimensionError("neighbor_sum_weighted: weights " + mw.shape() + " vs " +
                             std::to_string(edges->size()) + " edges");
    Node n;
    n.value = Matrix(mh.rows(), mh.cols());
    for (std::size_t e = 0; e < edges->size(); ++e) {
        const auto [lo, hi] = (*edges)[e];
        if (lo >= mh.rows() || hi >= mh.rows())
            throw DimensionError("neighbor_sum_weighted: edge endpoint beyond " + mh.shape());
        const double we = mw(0, e);
        for (std::size_t c = 0; c < mh.cols(); ++c) {
            n.value(lo, c) += we * mh(hi, c);
            n.value(hi, c) += we * mh(lo, c);
        }
    }
    n.op = Op::NeighborSumWeighted;
    n.a = h.id;
    n.b = w.id;
    n.edges = edges;
    n.requires_grad = node(h).requires_grad || node(w).requires_grad;
    return push(std::move(n));
}

const Matrix& Tape::gradient(Var v) const {
    const Node& n = node(v);
    if (!n.requires_grad)
        throw ContractError("tape: gradient requested for a non-tracked variable");
    return n.grad;
}

void Tape::zero_gradients() {
    for (Node& n : nodes_)
        if (n.requires_grad) n.grad.fill(0.0);
}

void Tape::backward(Var loss) {
    Node& ln = node(loss);
    if (ln.value.rows() != 1 || ln.value.cols() != 1)
        throw ContractError("backward: loss must be 1x1, got " + ln.value.shape());
    if (!ln.requires_grad)
        throw ContractError("backward: loss does not depend on any tracked variable");
    // Non-leaf gradients are scratch space for this traversal; only leaves
    // accumulate across backward calls.
    for (Node& n : nodes_)
        if (n.requires_grad && n.op != Op::Leaf) n.grad.fill(0.0);
    ln.grad(0, 0) += 1.0;
    for (std::uint32_t id = loss.id + 1; id-- > 0;) {
        if (nodes_[id].requires_grad && nodes_[id].op != Op::Leaf) backprop(id);
    }
}

void Tape::backprop(std::uint32_t id) {
    Node& n = nodes_[id];
    const Matrix& g = n.grad;
    auto grad_of = [&](std::uint32_t pid) -> Matrix* {
        Node& p = nodes_[pid];
        return p.requires_grad ? &p.grad : nullptr;
    };
    switch (n.op) {
    case Op::Leaf:
        break;
    case Op::MatMul: {
        if (Matrix* ga = grad_of(n.a)) matmul_abt_into(*ga, g, nodes_[n.b].value, true);
        if (Matrix* gb = grad_of(n.b)) matmul_atb_into(*gb, nodes_[n.a].value, g, true);
        break;
    }
    case Op::Add: {
        if (Matrix* ga = grad_of(n.a)) {
            double* pa = ga->data();
            const double* pg = g.data();
            for (std::size_t i = 0; i < g.size(); ++i) pa[i] += pg[i];
        }
        if (Matrix* gb = grad_of(n.b)) {
            double* pb = gb->data();
            const double* pg = g.data();
            for (std::size_t i = 0; i < g.size(); ++i) pb[i] += pg[i];
        }
        break;
    }
    case Op::Sub: {
        if (Matrix* ga = grad_of(n.a)) {
            double* pa = ga->data();
            const double* pg = g.data();
            for (std::size_t i = 0; i < g.size(); ++i) pa[i] += pg[i];
        }
        if (Matrix* gb = grad_of(n.b)) {
            double* pb = gb->data();
            const double* pg = g.data();
            for (std::size_t i = 0; i < g.size(); ++i) pb[i] -= pg[i];
        }
        break;
    }
    case Op::Mul: {
        if (Matrix* ga = grad_of(n.a)) {
            double* pa = ga->data();
            const double* pg = g.data();
            const double* pb = nodes_[n.b].value.data();
            for (std::size_t i = 0; i < g.size(); ++i) pa[i] += pg[i] * pb[i];
        }
        if (Matrix* gb = grad_of(n.b)) {
            double* pb = gb->data();
            const double* pg = g.data();
            const double* pa = nodes_[n.a].value.data();
            for (std::size_t i = 0; i < g.size(); ++i) pb[i] += pg[i] * pa[i];
        }
        break;
    }
    case Op::AddRow: {
        if (Matrix* ga = grad_of(n.a)) {
            double* pa = ga->data();
            const double* pg = g.data();
            for (std::size_t i = 0; i < g.size(); ++i) pa[i] += pg[i];
        }
        if (Matrix* gr = grad_of(n.b)) {
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < g.cols(); ++j) (*gr)(0, j) += g(i, j);
        }
        break;
    }
    case Op::MulRow: {
        const Matrix& x = nodes_[n.a].value;
        const Matrix& r = nodes_[n.b].value;
        if (Matrix* ga = grad_of(n.a)) {
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < g.cols(); ++j) (*ga)(i, j) += g(i, j) * r(0, j);
        }
        if (Matrix* gr = grad_of(n.b)) {
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < g.cols(); ++j) (*gr)(0, j) += g(i, j) * x(i, j);
        }
        break;
    }
    case Op::Relu: {
        if (Matrix* ga = grad_of(n.a)) {
            double* pa = ga->data();
            const double* pg = g.data();
            const double* px = nodes_[n.a].value.data();
            for (std::size_t i = 0; i < g.size(); ++i)
                if (px[i] > 0.0) pa[i] += pg[i];
        }
        break;
    }
    case Op::Sigmoid: {
        if (Matrix* ga = grad_of(n.a)) {
            double* pa = ga->data();
            const double* pg = g.data();
            const double* po = n.value.data();
            for (std::size_t i = 0; i < g.size(); ++i) pa[i] += pg[i] * po[i] * (1.0 - po[i]);
        }
        break;
    }
    case Op::LogClamped: {
        if (Matrix* ga = grad_of(n.a)) {
            double* pa = ga->data();
            const double* pg = g.data();
            const double* px = nodes_[n.a].value.data();
            // Below the floor the output is constant, so the gradient is zero.
            for (std::size_t i = 0; i < g.size(); ++i)
                if (px[i] >= kLogFloor) pa[i] += pg[i] / px[i];
        }
        break;
    }
    case Op::Square: {
        if (Matrix* ga = grad_of(n.a)) {
            double* pa = ga->data();
            const double* pg = g.data();
            const double* px = nodes_[n.a].value.data();
            for (std::size_t i = 0; i < g.size(); ++i) pa[i] += pg[i] * 2.0 * px[i];
        }
        break;
    }
    case Op::SqrtFloor: {
        if (Matrix* ga = grad_of(n.a)) {
            double* pa = ga->data();
            const double* pg = g.data();
            const double* px = nodes_[n.a].value.data();
            const double* po = n.value.data();
            for (std::size_t i = 0; i < g.size(); ++i)
                if (px[i] > 0.0) pa[i] += pg[i] * 0.5 / po[i];
        }
        break;
    }
    case Op::Reciprocal: {
        if (Matrix* ga = grad_of(n.a)) {
            double* pa = ga->data();
            const double* pg = g.data();
            const double* po = n.value.data();
            for (std::size_t i = 0; i < g.size(); ++i) pa[i] -= pg[i] * po[i] * po[i];
        }
        break;
    }
    case Op::AddConst: {
        if (Matrix* ga = grad_of(n.a)) {
            double* pa = ga->data();
            const double* pg = g.data();
            for (std::size_t i = 0; i < g.size(); ++i) pa[i] += pg[i];
        }
        break;
    }
    case Op::MulConst: {
        if (Matrix* ga = grad_of(n.a)) {
            double* pa = ga->data();
            const double* pg = g.data();
            for (std::size_t i = 0; i < g.size(); ++i) pa[i] += pg[i] * n.scalar;
        }
        break;
    }
    case Op::MulScalarVar: {
        const Matrix& x = nodes_[n.a].value;
        const double s = nodes_[n.b].value(0, 0);
        if (Matrix* ga = grad_of(n.a)) {
            double* pa = ga->data();
            const double* pg = g.data();
            for (std::size_t i = 0; i < g.size(); ++i) pa[i] += pg[i] * s;
        }
        if (Matrix* gs = grad_of(n.b)) {
            double acc = 0.0;
            const double* pg = g.data();
            const double* px = x.data();
            for (std::size_t i = 0; i < g.size(); ++i) acc += pg[i] * px[i];
            (*gs)(0, 0) += acc;
        }
        break;
    }
    case Op::Sum: {
        if (Matrix* ga = grad_of(n.a)) {
            const double gv = g(0, 0);
            double* pa = ga->data();
            for (std::size_t i = 0; i < ga->size(); ++i) pa[i] += gv;
        }
        break;
    }
    case Op::MeanRows: {
        if (Matrix* ga = grad_of(n.a)) {
            const double inv = 1.0 / static_cast<double>(ga->rows());
            for (std::size_t i = 0; i < ga->rows(); ++i)
                for (std::size_t j = 0; j < ga->cols(); ++j) (*ga)(i, j) += g(0, j) * inv;
        }
        break;
    }
    case Op::MeanAll: {
        if (Matrix* ga = grad_of(n.a)) {
            const double gv = g(0, 0) / static_cast<double>(ga->size());
            double* pa = ga->data();
            for (std::size_t i = 0; i < ga->size(); ++i) pa[i] += gv;
        }
        break;
    }
    case Op::NeighborSum: {
        if (Matrix* ga = grad_of(n.a)) {
            // The adjacency is symmetric, so the adjoint is the same
            // neighborhood sum applied to the upstream gradient.
            const NeighborIndex& nbr = *n.neighbors;
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::uint32_t j : nbr.lists[i])
                    for (std::size_t c = 0; c < g.cols(); ++c) (*ga)(i, c) += g(j, c);
        }
        break;
    }
    case Op::NeighborSumWeighted: {
        const Matrix& h = nodes_[n.a].value;
        const Matrix& w = nodes_[n.b].value;
        Matrix* gh = grad_of(n.a);
        Matrix* gw = grad_of(n.b);
        const EdgeList& edges = *n.edges;
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const auto [lo, hi] = edges[e];
            const double we = w(0, e);
            double dw = 0.0;
            for (std::size_t c = 0; c < g.cols(); ++c) {
                if (gh != nullptr) {
                    (*gh)(hi, c) += we * g(lo, c);
                    (*gh)(lo, c) += we * g(hi, c);
                }
                dw += g(lo, c) * h(hi, c) + g(hi, c) * h(lo, c);
            }
            if (gw != nullptr) (*gw)(0, e) += dw;
        }
        break;
    }
    }
}

} // namespace dagi
