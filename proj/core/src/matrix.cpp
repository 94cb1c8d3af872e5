// SPDX-License-Identifier: Apache-2.0

#include "wtawp/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wtawp {

bool DenseMatrix::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

CsrMatrix CsrMatrix::from_dense(const DenseMatrix& d, double tol) {
    CsrMatrix s(d.rows, d.cols);
    s.row_ptr.assign(d.rows + 1, 0);
    for (std::size_t i = 0; i < d.rows; ++i) {
        const double* r = d.row(i);
        for (std::size_t j = 0; j < d.cols; ++j) {
            if (std::abs(r[j]) > tol) {
                s.col_idx.push_back(j);
                s.values.push_back(r[j]);
            }
        }
        s.row_ptr[i + 1] = s.col_idx.size();
    }
    return s;
}

DenseMatrix CsrMatrix::to_dense() const {
    DenseMatrix d(rows, cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
            d(i, col_idx[k]) = values[k];
        }
    }
    return d;
}

double CsrMatrix::at(std::size_t i, std::size_t j) const {
    const auto begin = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
    const auto end = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
    const auto it = std::lower_bound(begin, end, j);
    if (it == end || *it != j) return 0.0;
    return values[static_cast<std::size_t>(it - col_idx.begin())];
}

bool CsrMatrix::has_entry(std::size_t i, std::size_t j) const {
    const auto begin = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
    const auto end = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
    return std::binary_search(begin, end, j);
}

void check_inner_dims(std::size_t left_cols, std::size_t right_rows, const std::string& what) {
    if (left_cols != right_rows) {
        throw std::invalid_argument(what + ": inner dimensions " + std::to_string(left_cols) +
                                    " vs " + std::to_string(right_rows));
    }
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    check_inner_dims(a.cols, b.rows, "matmul");
    DenseMatrix out(a.rows, b.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

DenseMatrix matmul_ta(const DenseMatrix& a, const DenseMatrix& b) {
    check_inner_dims(a.rows, b.rows, "matmul_ta");
    DenseMatrix out(a.cols, b.cols, 0.0);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* arow = a.row(k);
        const double* brow = b.row(k);
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            double* orow = out.row(i);
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aki * brow[j];
        }
    }
    return out;
}

DenseMatrix matmul_tb(const DenseMatrix& a, const DenseMatrix& b) {
    check_inner_dims(a.cols, b.cols, "matmul_tb");
    DenseMatrix out(a.rows, b.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
            orow[j] = acc;
        }
    }
    return out;
}

DenseMatrix spmm(const CsrMatrix& s, const DenseMatrix& d) {
    check_inner_dims(s.cols, d.rows, "spmm");
    DenseMatrix out(s.rows, d.cols, 0.0);
    for (std::size_t i = 0; i < s.rows; ++i) {
        double* orow = out.row(i);
        for (std::size_t k = s.row_ptr[i]; k < s.row_ptr[i + 1]; ++k) {
            const double v = s.values[k];
            const double* drow = d.row(s.col_idx[k]);
            for (std::size_t j = 0; j < d.cols; ++j) orow[j] += v * drow[j];
        }
    }
    return out;
}

DenseMatrix spmm_t(const CsrMatrix& s, const DenseMatrix& d) {
    check_inner_dims(s.rows, d.rows, "spmm_t");
    DenseMatrix out(s.cols, d.cols, 0.0);
    for (std::size_t i = 0; i < s.rows; ++i) {
        const double* drow = d.row(i);
        for (std::size_t k = s.row_ptr[i]; k < s.row_ptr[i + 1]; ++k) {
            const double v = s.values[k];
            double* orow = out.row(s.col_idx[k]);
            for (std::size_t j = 0; j < d.cols; ++j) orow[j] += v * drow[j];
        }
    }
    return out;
}

void axpy(double alpha, const DenseMatrix& x, DenseMatrix& y) {
    if (!x.same_shape(y)) throw std::invalid_argument("axpy: shape mismatch");
    for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] += alpha * x.data[i];
}

void scale(DenseMatrix& m, double alpha) {
    for (double& v : m.data) v *= alpha;
}

double dot(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("dot: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) acc += a.data[i] * b.data[i];
    return acc;
}

double frobenius_norm(const DenseMatrix& m) {
    double acc = 0.0;
    for (double v : m.data) acc += v * v;
    return std::sqrt(acc);
}

}  // namespace wtawp
