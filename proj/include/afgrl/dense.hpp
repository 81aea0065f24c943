#pragma once

#include <cstddef>
#include <vector>

namespace afgrl {

// Row-major dense matrix of doubles. 64-bit floats throughout: gradient
// checks need headroom well below their 1e-4 tolerance.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    static DenseMatrix identity(std::size_t n);

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }

    bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }
    bool all_finite() const;
    bool empty() const { return rows == 0 || cols == 0; }
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

// a^T * b and a * b^T without materializing the transpose.
DenseMatrix matmul_at(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_bt(const DenseMatrix& a, const DenseMatrix& b);

// Scales each row to unit L2 norm; rows with norm below eps pass through
// unchanged so zero rows stay zero.
DenseMatrix row_l2_normalize(const DenseMatrix& m, double eps = 1e-12);

std::vector<double> row_norms(const DenseMatrix& m);

}  // namespace afgrl
