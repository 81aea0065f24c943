#include "afgrl/dense.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "afgrl/parallel.hpp"

namespace afgrl {

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool DenseMatrix::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

namespace {

void check_dims(std::size_t inner_a, std::size_t inner_b, const char* what) {
    if (inner_a != inner_b) {
        throw std::invalid_argument(std::string(what) + ": inner dimensions " +
                                    std::to_string(inner_a) + " and " +
                                    std::to_string(inner_b) + " do not match");
    }
}

}  // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    check_dims(a.cols, b.rows, "matmul");
    DenseMatrix out(a.rows, b.cols);
    parallel_for(a.rows, [&](std::size_t i0, std::size_t i1) {
        for (std::size_t i = i0; i < i1; ++i) {
            double* out_row = out.row(i);
            const double* a_row = a.row(i);
            for (std::size_t k = 0; k < a.cols; ++k) {
                const double aik = a_row[k];
                if (aik == 0.0) continue;
                const double* b_row = b.row(k);
                for (std::size_t j = 0; j < b.cols; ++j) out_row[j] += aik * b_row[j];
            }
        }
    });
    return out;
}

DenseMatrix matmul_at(const DenseMatrix& a, const DenseMatrix& b) {
    check_dims(a.rows, b.rows, "matmul_at");
    DenseMatrix out(a.cols, b.cols);
    // out(i,j) = sum_k a(k,i) b(k,j); k stays the sequential reduction axis.
    parallel_for(a.cols, [&](std::size_t i0, std::size_t i1) {
        for (std::size_t i = i0; i < i1; ++i) {
            double* out_row = out.row(i);
            for (std::size_t k = 0; k < a.rows; ++k) {
                const double aki = a(k, i);
                if (aki == 0.0) continue;
                const double* b_row = b.row(k);
                for (std::size_t j = 0; j < b.cols; ++j) out_row[j] += aki * b_row[j];
            }
        }
    });
    return out;
}

DenseMatrix matmul_bt(const DenseMatrix& a, const DenseMatrix& b) {
    check_dims(a.cols, b.cols, "matmul_bt");
    DenseMatrix out(a.rows, b.rows);
    parallel_for(a.rows, [&](std::size_t i0, std::size_t i1) {
        for (std::size_t i = i0; i < i1; ++i) {
            const double* a_row = a.row(i);
            double* out_row = out.row(i);
            for (std::size_t j = 0; j < b.rows; ++j) {
                const double* b_row = b.row(j);
                double acc = 0.0;
                for (std::size_t k = 0; k < a.cols; ++k) acc += a_row[k] * b_row[k];
                out_row[j] = acc;
            }
        }
    });
    return out;
}

DenseMatrix row_l2_normalize(const DenseMatrix& m, double eps) {
    if (eps <= 0.0) throw std::invalid_argument("row_l2_normalize: eps must be positive");
    DenseMatrix out = m;
    for (std::size_t i = 0; i < m.rows; ++i) {
        double sq = 0.0;
        const double* src = m.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) sq += src[j] * src[j];
        const double norm = std::sqrt(sq);
        if (norm < eps) continue;
        double* dst = out.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) dst[j] = src[j] / norm;
    }
    return out;
}

std::vector<double> row_norms(const DenseMatrix& m) {
    std::vector<double> norms(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double sq = 0.0;
        const double* src = m.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) sq += src[j] * src[j];
        norms[i] = std::sqrt(sq);
    }
    return norms;
}

}  // namespace afgrl
