#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <variant>
#include <vector>

namespace adkit {

/// Row-major dense matrix of doubles.
///
/// Also used as the batch type for seeds and tangents: row k is direction k.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static DenseMatrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    /// Resizes without preserving contents; reuses capacity when possible.
    void reshape(std::size_t rows, std::size_t cols);

    DenseMatrix transposed() const;

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Seeds and tangent/cotangent batches: one direction per row.
using Batch = DenseMatrix;

/// Compressed sparse column matrix with strictly increasing row indices per column.
class SparseMatrix {
public:
    SparseMatrix() = default;
    SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> col_ptr,
                 std::vector<std::size_t> row_idx, std::vector<double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t nnz() const noexcept { return row_idx_.size(); }

    std::span<const std::size_t> col_ptr() const noexcept { return col_ptr_; }
    std::span<const std::size_t> row_indices() const noexcept { return row_idx_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    /// Entry lookup by binary search; zero outside the structure.
    double operator()(std::size_t i, std::size_t j) const;

    DenseMatrix to_dense() const;

    friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> col_ptr_{0};
    std::vector<std::size_t> row_idx_;
    std::vector<double> values_;
};

/// Jacobian/Hessian result: dense by default, sparse when the preparation
/// carries a sparse plan.
class Matrix {
public:
    Matrix() = default;
    Matrix(DenseMatrix m) : storage_(std::move(m)) {}
    Matrix(SparseMatrix m) : storage_(std::move(m)) {}

    bool is_sparse() const noexcept { return std::holds_alternative<SparseMatrix>(storage_); }
    std::size_t rows() const;
    std::size_t cols() const;
    double operator()(std::size_t i, std::size_t j) const;

    DenseMatrix& dense() { return std::get<DenseMatrix>(storage_); }
    const DenseMatrix& dense() const { return std::get<DenseMatrix>(storage_); }
    SparseMatrix& sparse() { return std::get<SparseMatrix>(storage_); }
    const SparseMatrix& sparse() const { return std::get<SparseMatrix>(storage_); }

    DenseMatrix to_dense() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::variant<DenseMatrix, SparseMatrix> storage_;
};

}  // namespace adkit
