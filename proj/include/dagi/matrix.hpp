#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace dagi {

/// Dense row-major matrix of 64-bit floats.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols); // zero-filled
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    static Matrix identity(std::size_t n);
    static Matrix constant(std::size_t rows, std::size_t cols, double value);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    std::string shape() const; // "3x4"
    bool all_finite() const;
    void fill(double value);

    Matrix transposed() const;
    static Matrix product(const Matrix& a, const Matrix& b);

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// out (+)= a * b
void matmul_into(Matrix& out, const Matrix& a, const Matrix& b, bool accumulate);
// out (+)= a * b^T
void matmul_abt_into(Matrix& out, const Matrix& a, const Matrix& b, bool accumulate);
// out (+)= a^T * b
void matmul_atb_into(Matrix& out, const Matrix& a, const Matrix& b, bool accumulate);

/// Solves a * x = rhs for symmetric positive definite a.
/// Returns false (x untouched) when a is not numerically SPD.
bool cholesky_solve(const Matrix& a, const Matrix& rhs, Matrix& x);

} // namespace dagi
