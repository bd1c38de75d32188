#pragma once

// Sparsity pattern detection, greedy coloring and compressed evaluation.
//
// Detection and coloring happen once, inside prepare() for Backend::sparse;
// each sparse_jacobian/sparse_hessian call then costs one derivative pass
// per color.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "adkit/backend.hpp"
#include "adkit/context.hpp"
#include "adkit/function.hpp"
#include "adkit/matrix.hpp"
#include "adkit/preparation.hpp"
#include "adkit/tracer.hpp"

namespace adkit {

/// Boolean structure of a matrix, stored by column with sorted row indices.
class SparsityPattern {
public:
    SparsityPattern() = default;
    SparsityPattern(std::size_t nrows, std::size_t ncols, std::vector<std::size_t> col_ptr,
                    std::vector<std::int32_t> row_idx);

    /// Builds from per-row column sets (what first-order tracers produce).
    static SparsityPattern from_row_sets(std::size_t ncols, std::span<const IndexSet> rows);
    /// Builds from (row, col) pairs in any order; duplicates are merged.
    static SparsityPattern from_entries(std::size_t nrows, std::size_t ncols,
                                        std::vector<std::pair<std::int32_t, std::int32_t>> entries);
    static SparsityPattern dense(std::size_t nrows, std::size_t ncols);

    std::size_t nrows() const noexcept { return nrows_; }
    std::size_t ncols() const noexcept { return ncols_; }
    std::size_t nnz() const noexcept { return row_idx_.size(); }
    std::span<const std::size_t> col_ptr() const noexcept { return col_ptr_; }
    std::span<const std::int32_t> row_indices() const noexcept { return row_idx_; }
    std::span<const std::int32_t> column(std::size_t j) const {
        return {row_idx_.data() + col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]};
    }

    bool contains(std::size_t i, std::size_t j) const;
    bool is_symmetric() const;
    SparsityPattern transposed() const;
    /// (row, col) pairs in row-major order.
    std::vector<std::pair<std::int32_t, std::int32_t>> entries() const;

    friend bool operator==(const SparsityPattern&, const SparsityPattern&) = default;

private:
    std::size_t nrows_ = 0;
    std::size_t ncols_ = 0;
    std::vector<std::size_t> col_ptr_{0};
    std::vector<std::int32_t> row_idx_;
};

enum class Partition { column, row, symmetric, bidirectional };

/// Where one structural nonzero is read from after compressed evaluation.
struct Recovery {
    bool from_rows = false;  // reverse (row-colored) product, else forward/symmetric product
    std::int32_t color = 0;
    std::int32_t slot = 0;   // row index within a column product, column index within a row product
};

/// Color assignment with its seed matrices and decompression map.
struct Coloring {
    Partition partition = Partition::column;
    /// Column colors (column/symmetric/bidirectional); -1 marks columns not
    /// forward-colored in a bidirectional coloring.
    std::vector<std::int32_t> column_colors;
    /// Row colors (row/bidirectional); -1 marks rows not reverse-colored.
    std::vector<std::int32_t> row_colors;
    std::size_t num_column_colors = 0;
    std::size_t num_row_colors = 0;
    /// One input-sized seed per column color (sum of that color's basis vectors).
    Batch column_seeds;
    /// One output-sized seed per row color.
    Batch row_seeds;
    /// Recovery entry per nonzero, in the pattern's column-major order.
    std::vector<Recovery> recovery;

    std::size_t num_colors() const noexcept { return num_column_colors + num_row_colors; }
};

/// First-order index-set tracing at the typical input.
SparsityPattern detect_jacobian_pattern(const Function& f, std::span<const double> typical_input,
                                        ContextArgs ctx = {});
/// Second-order tracing; scalar-output functions only. Structurally symmetric.
SparsityPattern detect_hessian_pattern(const Function& f, std::span<const double> typical_input,
                                       ContextArgs ctx = {});

/// Deterministic greedy coloring in natural index order.
///  column: distance-2 on the bipartite graph (structurally orthogonal columns)
///  row: the same on the transpose
///  symmetric: star coloring of the adjacency graph, with direct recovery
///  bidirectional: columns with at most median-degree nonzeros are
///    column-colored, the remaining columns' rows are row-colored
Coloring greedy_color(const SparsityPattern& pattern, Partition partition);

/// Decompresses column products (colors x nrows) and/or row products
/// (colors x ncols) into the pattern's values.
void decompress(const SparsityPattern& pattern, const Coloring& coloring, const Batch& column_products,
                const Batch& row_products, SparseMatrix& out);

/// Jacobian through a sparse preparation: one pass per color.
SparseMatrix sparse_jacobian(const Function& f, Preparation& prep, const Backend& b, std::span<const double> x,
                             ContextArgs ctx = {});
/// Hessian through a sparse preparation: one hvp per star color.
SparseMatrix sparse_hessian(const Function& f, Preparation& prep, const Backend& b, std::span<const double> x,
                            ContextArgs ctx = {});

// Plain-text exchange format. Pattern: "nrows ncols" then one "row col" per
// nonzero (0-based, row-major). Coloring: "count ncolors" then one
// "index color" per column (or per row for row partitions).
void write_pattern(std::ostream& os, const SparsityPattern& pattern);
SparsityPattern read_pattern(std::istream& is);
void write_coloring(std::ostream& os, const Coloring& coloring);
std::vector<std::pair<std::int32_t, std::int32_t>> read_coloring(std::istream& is);

}  // namespace adkit
