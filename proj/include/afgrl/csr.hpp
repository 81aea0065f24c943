#pragma once

#include <cstddef>
#include <vector>

#include "afgrl/dense.hpp"

namespace afgrl {

// Compressed sparse row matrix. Column indices are strictly increasing within
// each row and duplicate entries are not stored.
struct CsrMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_offsets;  // rows + 1, non-decreasing
    std::vector<std::size_t> col_indices;
    std::vector<double> values;

    CsrMatrix() : row_offsets(1, 0) {}
    CsrMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), row_offsets(r + 1, 0) {}

    static CsrMatrix identity(std::size_t n);

    std::size_t nnz() const { return col_indices.size(); }
    std::size_t row_begin(std::size_t i) const { return row_offsets[i]; }
    std::size_t row_end(std::size_t i) const { return row_offsets[i + 1]; }

    // Throws std::invalid_argument if any structural invariant is violated.
    void validate() const;
};

DenseMatrix spmm(const CsrMatrix& s, const DenseMatrix& d);
DenseMatrix densify(const CsrMatrix& s);

}  // namespace afgrl
