#include "dagi/matrix.hpp"

#include <cmath>
#include <utility>

#include "dagi/errors.hpp"

namespace dagi {

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionError("matrix init: " + std::to_string(data_.size()) +
                             " values for shape " + shape());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::constant(std::size_t rows, std::size_t cols, double value) {
    Matrix m(rows, cols);
    m.fill(value);
    return m;
}

std::string Matrix::shape() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool Matrix::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Matrix::fill(double value) {
    for (double& v : data_) v = value;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Matrix Matrix::product(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), b.cols());
    matmul_into(out, a, b, false);
    return out;
}

void matmul_into(Matrix& out, const Matrix& a, const Matrix& b, bool accumulate) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: " + a.shape() + " vs " + b.shape());
    }
    if (out.rows() != a.rows() || out.cols() != b.cols()) {
        throw DimensionError("matmul output: expected " + std::to_string(a.rows()) + "x" +
                             std::to_string(b.cols()) + ", got " + out.shape());
    }
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    if (!accumulate) out.fill(0.0);
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double av = pa[i * k + p];
            const double* brow = pb + p * m;
            double* orow = po + i * m;
            for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    }
}

void matmul_abt_into(Matrix& out, const Matrix& a, const Matrix& b, bool accumulate) {
    if (a.cols() != b.cols()) {
        throw DimensionError("matmul_abt: " + a.shape() + " vs " + b.shape());
    }
    const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
    if (out.rows() != n || out.cols() != m) {
        throw DimensionError("matmul_abt output: expected " + std::to_string(n) + "x" +
                             std::to_string(m) + ", got " + out.shape());
    }
    const double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double acc = 0.0;
            const double* ra = pa + i * k;
            const double* rb = pb + j * k;
            for (std::size_t p = 0; p < k; ++p) acc += ra[p] * rb[p];
            if (accumulate)
                out(i, j) += acc;
            else
                out(i, j) = acc;
        }
    }
}

void matmul_atb_into(Matrix& out, const Matrix& a, const Matrix& b, bool accumulate) {
    if (a.rows() != b.rows()) {
        throw DimensionError("matmul_atb: " + a.shape() + " vs " + b.shape());
    }
    const std::size_t k = a.rows(), n = a.cols(), m = b.cols();
    if (out.rows() != n || out.cols() != m) {
        throw DimensionError("matmul_atb output: expected " + std::to_string(n) + "x" +
                             std::to_string(m) + ", got " + out.shape());
    }
    if (!accumulate) out.fill(0.0);
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    for (std::size_t p = 0; p < k; ++p) {
        for (std::size_t i = 0; i < n; ++i) {
            const double av = pa[p * n + i];
            const double* brow = pb + p * m;
            double* orow = po + i * m;
            for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    }
}

bool cholesky_solve(const Matrix& a, const Matrix& rhs, Matrix& x) {
    if (a.rows() != a.cols()) {
        throw DimensionError("cholesky: square matrix required, got " + a.shape());
    }
    if (rhs.rows() != a.rows()) {
        throw DimensionError("cholesky: " + a.shape() + " vs rhs " + rhs.shape());
    }
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a(j, j);
        for (std::size_t p = 0; p < j; ++p) diag -= l(j, p) * l(j, p);
        // Relative pivot floor: exactly singular inputs otherwise leave a
        // rounding-noise pivot that "succeeds" with a garbage solution.
        if (!(diag > 1e-13 * std::fabs(a(j, j))) || !std::isfinite(diag)) return false;
        const double lj = std::sqrt(diag);
        l(j, j) = lj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t p = 0; p < j; ++p) s -= l(i, p) * l(j, p);
            l(i, j) = s / lj;
        }
    }
    // forward then back substitution, one rhs column at a time
    const std::size_t m = rhs.cols();
    x = Matrix(n, m);
    std::vector<double> y(n);
    for (std::size_t c = 0; c < m; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = rhs(i, c);
            for (std::size_t p = 0; p < i; ++p) s -= l(i, p) * y[p];
            y[i] = s / l(i, i);
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double s = y[ii];
            for (std::size_t p = ii + 1; p < n; ++p) s -= l(p, ii) * x(p, c);
            x(ii, c) = s / l(ii, ii);
        }
    }
    return true;
}

} // namespace dagi
