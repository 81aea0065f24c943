#include "afgrl/csr.hpp"

#include <stdexcept>
#include <string>

#include "afgrl/parallel.hpp"

namespace afgrl {

CsrMatrix CsrMatrix::identity(std::size_t n) {
    CsrMatrix m(n, n);
    m.col_indices.resize(n);
    m.values.assign(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        m.col_indices[i] = i;
        m.row_offsets[i + 1] = i + 1;
    }
    return m;
}

void CsrMatrix::validate() const {
    if (row_offsets.size() != rows + 1) {
        throw std::invalid_argument("CsrMatrix: row_offsets size must be rows+1");
    }
    if (row_offsets.front() != 0 || row_offsets.back() != nnz()) {
        throw std::invalid_argument("CsrMatrix: row_offsets must start at 0 and end at nnz");
    }
    if (col_indices.size() != values.size()) {
        throw std::invalid_argument("CsrMatrix: col_indices/values length mismatch");
    }
    for (std::size_t i = 0; i < rows; ++i) {
        if (row_offsets[i] > row_offsets[i + 1]) {
            throw std::invalid_argument("CsrMatrix: row_offsets must be non-decreasing");
        }
        for (std::size_t p = row_offsets[i]; p < row_offsets[i + 1]; ++p) {
            if (col_indices[p] >= cols) {
                throw std::invalid_argument("CsrMatrix: column index out of range in row " +
                                            std::to_string(i));
            }
            if (p > row_offsets[i] && col_indices[p - 1] >= col_indices[p]) {
                throw std::invalid_argument(
                    "CsrMatrix: column indices must be strictly increasing in row " +
                    std::to_string(i));
            }
        }
    }
}

DenseMatrix spmm(const CsrMatrix& s, const DenseMatrix& d) {
    if (s.cols != d.rows) {
        throw std::invalid_argument("spmm: sparse cols " + std::to_string(s.cols) +
                                    " do not match dense rows " + std::to_string(d.rows));
    }
    DenseMatrix out(s.rows, d.cols);
    parallel_for(s.rows, [&](std::size_t i0, std::size_t i1) {
        for (std::size_t i = i0; i < i1; ++i) {
            double* out_row = out.row(i);
            for (std::size_t p = s.row_begin(i); p < s.row_end(i); ++p) {
                const double v = s.values[p];
                const double* d_row = d.row(s.col_indices[p]);
                for (std::size_t j = 0; j < d.cols; ++j) out_row[j] += v * d_row[j];
            }
        }
    });
    return out;
}

DenseMatrix densify(const CsrMatrix& s) {
    DenseMatrix out(s.rows, s.cols);
    for (std::size_t i = 0; i < s.rows; ++i) {
        for (std::size_t p = s.row_begin(i); p < s.row_end(i); ++p) {
            out(i, s.col_indices[p]) = s.values[p];
        }
    }
    return out;
}

}  // namespace afgrl
