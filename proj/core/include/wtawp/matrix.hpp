// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major matrices, CSR sparse matrices, and the handful of
// sequential kernels the models need. All reductions run in a fixed order
// so repeated calls are bit-identical.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace wtawp {

struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major, rows*cols entries

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }

    std::size_t size() const { return data.size(); }
    bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }

    void fill(double v) { data.assign(data.size(), v); }
    bool all_finite() const;
};

/// Compressed sparse row matrix; column indices are strictly increasing
/// within each row.
struct CsrMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_ptr;  // rows + 1 entries
    std::vector<std::size_t> col_idx;
    std::vector<double> values;

    CsrMatrix() = default;
    CsrMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), row_ptr(r + 1, 0) {}

    std::size_t nnz() const { return values.size(); }

    /// Builds a CSR copy keeping entries with |x| > tol.
    static CsrMatrix from_dense(const DenseMatrix& d, double tol = 0.0);
    DenseMatrix to_dense() const;

    /// Value at (i, j), or 0 if the entry is not stored. Binary search on
    /// the row's column indices.
    double at(std::size_t i, std::size_t j) const;
    bool has_entry(std::size_t i, std::size_t j) const;
};

// out = a * b
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// out = a^T * b
DenseMatrix matmul_ta(const DenseMatrix& a, const DenseMatrix& b);
// out = a * b^T
DenseMatrix matmul_tb(const DenseMatrix& a, const DenseMatrix& b);

// out = s * d
DenseMatrix spmm(const CsrMatrix& s, const DenseMatrix& d);
// out = s^T * d
DenseMatrix spmm_t(const CsrMatrix& s, const DenseMatrix& d);

// y += alpha * x
void axpy(double alpha, const DenseMatrix& x, DenseMatrix& y);
void scale(DenseMatrix& m, double alpha);

double dot(const DenseMatrix& a, const DenseMatrix& b);
double frobenius_norm(const DenseMatrix& m);

/// Throws std::invalid_argument with `what` if the inner dimensions do not
/// allow the product left(rows x inner) * right(inner x cols).
void check_inner_dims(std::size_t left_cols, std::size_t right_rows, const std::string& what);

}  // namespace wtawp
