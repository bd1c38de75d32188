#include "adkit/matrix.hpp"

#include <algorithm>

#include "adkit/errors.hpp"

namespace adkit {

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    DenseMatrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeMismatch("", "", "ragged rows in DenseMatrix::from_rows");
        std::copy(row.begin(), row.end(), m.row(i++).begin());
    }
    return m;
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

void DenseMatrix::reshape(std::size_t rows, std::size_t cols) {
    rows_ = rows;
    cols_ = cols;
    data_.resize(rows * cols);
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> col_ptr,
                           std::vector<std::size_t> row_idx, std::vector<double> values)
    : rows_(rows), cols_(cols), col_ptr_(std::move(col_ptr)), row_idx_(std::move(row_idx)), values_(std::move(values)) {
    if (col_ptr_.size() != cols_ + 1 || col_ptr_.back() != row_idx_.size() || values_.size() != row_idx_.size())
        throw ShapeMismatch("", "", "inconsistent compressed column arrays");
}

double SparseMatrix::operator()(std::size_t i, std::size_t j) const {
    const auto first = row_idx_.begin() + static_cast<std::ptrdiff_t>(col_ptr_[j]);
    const auto last = row_idx_.begin() + static_cast<std::ptrdiff_t>(col_ptr_[j + 1]);
    const auto it = std::lower_bound(first, last, i);
    if (it == last || *it != i) return 0.0;
    return values_[static_cast<std::size_t>(it - row_idx_.begin())];
}

DenseMatrix SparseMatrix::to_dense() const {
    DenseMatrix d(rows_, cols_);
    for (std::size_t j = 0; j < cols_; ++j)
        for (std::size_t k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) d(row_idx_[k], j) = values_[k];
    return d;
}

std::size_t Matrix::rows() const {
    return is_sparse() ? sparse().rows() : dense().rows();
}

std::size_t Matrix::cols() const {
    return is_sparse() ? sparse().cols() : dense().cols();
}

double Matrix::operator()(std::size_t i, std::size_t j) const {
    return is_sparse() ? sparse()(i, j) : dense()(i, j);
}

DenseMatrix Matrix::to_dense() const {
    return is_sparse() ? sparse().to_dense() : dense();
}

}  // namespace adkit
