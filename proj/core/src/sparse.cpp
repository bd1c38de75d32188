#include "adkit/sparse.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "adkit/operators.hpp"
#include "engine.hpp"

namespace adkit {

SparsityPattern::SparsityPattern(std::size_t nrows, std::size_t ncols, std::vector<std::size_t> col_ptr,
                                 std::vector<std::int32_t> row_idx)
    : nrows_(nrows), ncols_(ncols), col_ptr_(std::move(col_ptr)), row_idx_(std::move(row_idx)) {
    if (col_ptr_.size() != ncols_ + 1 || col_ptr_.back() != row_idx_.size())
        throw ShapeMismatch("", "", "column pointer array does not match the column count");
}

SparsityPattern SparsityPattern::from_row_sets(std::size_t ncols, std::span<const IndexSet> rows) {
    std::vector<std::pair<std::int32_t, std::int32_t>> entries;
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::int32_t j : rows[i]) entries.emplace_back(static_cast<std::int32_t>(i), j);
    return from_entries(rows.size(), ncols, std::move(entries));
}

SparsityPattern SparsityPattern::from_entries(std::size_t nrows, std::size_t ncols,
                                              std::vector<std::pair<std::int32_t, std::int32_t>> entries) {
    for (const auto& [i, j] : entries)
        if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= nrows || static_cast<std::size_t>(j) >= ncols)
            throw ShapeMismatch("", "", "pattern entry (" + std::to_string(i) + ", " + std::to_string(j) +
                                            ") outside " + std::to_string(nrows) + "x" + std::to_string(ncols));
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.second != b.second ? a.second < b.second : a.first < b.first; });
    entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
    std::vector<std::size_t> ptr(ncols + 1, 0);
    std::vector<std::int32_t> rows;
    rows.reserve(entries.size());
    for (const auto& [i, j] : entries) {
        ++ptr[static_cast<std::size_t>(j) + 1];
        rows.push_back(i);
    }
    for (std::size_t j = 0; j < ncols; ++j) ptr[j + 1] += ptr[j];
    return SparsityPattern(nrows, ncols, std::move(ptr), std::move(rows));
}

SparsityPattern SparsityPattern::dense(std::size_t nrows, std::size_t ncols) {
    std::vector<std::size_t> ptr(ncols + 1);
    std::vector<std::int32_t> rows;
    rows.reserve(nrows * ncols);
    for (std::size_t j = 0; j < ncols; ++j) {
        ptr[j] = rows.size();
        for (std::size_t i = 0; i < nrows; ++i) rows.push_back(static_cast<std::int32_t>(i));
    }
    ptr[ncols] = rows.size();
    return SparsityPattern(nrows, ncols, std::move(ptr), std::move(rows));
}

bool SparsityPattern::contains(std::size_t i, std::size_t j) const {
    if (j >= ncols_) return false;
    const auto col = column(j);
    return std::binary_search(col.begin(), col.end(), static_cast<std::int32_t>(i));
}

bool SparsityPattern::is_symmetric() const {
    if (nrows_ != ncols_) return false;
    for (std::size_t j = 0; j < ncols_; ++j)
        for (std::int32_t i : column(j))
            if (!contains(j, static_cast<std::size_t>(i))) return false;
    return true;
}

SparsityPattern SparsityPattern::transposed() const {
    std::vector<std::pair<std::int32_t, std::int32_t>> e;
    e.reserve(nnz());
    for (std::size_t j = 0; j < ncols_; ++j)
        for (std::int32_t i : column(j)) e.emplace_back(static_cast<std::int32_t>(j), i);
    return from_entries(ncols_, nrows_, std::move(e));
}

std::vector<std::pair<std::int32_t, std::int32_t>> SparsityPattern::entries() const {
    std::vector<std::pair<std::int32_t, std::int32_t>> e;
    e.reserve(nnz());
    for (std::size_t j = 0; j < ncols_; ++j)
        for (std::int32_t i : column(j)) e.emplace_back(i, static_cast<std::int32_t>(j));
    std::sort(e.begin(), e.end());
    return e;
}

SparsityPattern detect_jacobian_pattern(const Function& f, std::span<const double> x, ContextArgs ctx) {
    if (x.size() != f.input_size())
        throw ShapeMismatch("jacobian", "sparse", "typical input has " + std::to_string(x.size()) +
                                                      " elements, expected " + std::to_string(f.input_size()));
    std::vector<JacobianTracer> xs(x.size()), ys(f.output_size());
    for (std::size_t i = 0; i < x.size(); ++i) xs[i] = JacobianTracer(x[i], IndexSet{static_cast<std::int32_t>(i)});
    CacheStore<JacobianTracer> caches(ContextSignature::of(ctx));
    f.eval<JacobianTracer>(xs, ys, caches.view(ctx));
    std::vector<IndexSet> rows(ys.size());
    for (std::size_t j = 0; j < ys.size(); ++j) rows[j] = std::move(ys[j].deps);
    return SparsityPattern::from_row_sets(x.size(), rows);
}

SparsityPattern detect_hessian_pattern(const Function& f, std::span<const double> x, ContextArgs ctx) {
    if (x.size() != f.input_size())
        throw ShapeMismatch("hessian", "sparse", "typical input has " + std::to_string(x.size()) +
                                                     " elements, expected " + std::to_string(f.input_size()));
    if (f.output_size() != 1)
        throw ShapeMismatch("hessian", "sparse", "needs a scalar output, function '" + f.name() + "' has " +
                                                     std::to_string(f.output_size()) + " outputs");
    std::vector<HessianTracer> xs(x.size()), ys(1);
    for (std::size_t i = 0; i < x.size(); ++i)
        xs[i] = HessianTracer(x[i], IndexSet{static_cast<std::int32_t>(i)}, {});
    CacheStore<HessianTracer> caches(ContextSignature::of(ctx));
    f.eval<HessianTracer>(xs, ys, caches.view(ctx));
    std::vector<std::pair<std::int32_t, std::int32_t>> e;
    for (const auto& [i, j] : ys[0].hess) {
        e.emplace_back(i, j);
        e.emplace_back(j, i);
    }
    return SparsityPattern::from_entries(x.size(), x.size(), std::move(e));
}

namespace {

// Row lists per column and column lists per row.
struct Adjacency {
    std::vector<std::vector<std::int32_t>> rows_of_col, cols_of_row;

    explicit Adjacency(const SparsityPattern& p) : rows_of_col(p.ncols()), cols_of_row(p.nrows()) {
        for (std::size_t j = 0; j < p.ncols(); ++j)
            for (std::int32_t i : p.column(j)) {
                rows_of_col[j].push_back(i);
                cols_of_row[static_cast<std::size_t>(i)].push_back(static_cast<std::int32_t>(j));
            }
    }
};

std::int32_t smallest_free(std::vector<std::size_t>& forbidden, std::size_t stamp) {
    std::size_t c = 0;
    while (c < forbidden.size() && forbidden[c] == stamp) ++c;
    if (c == forbidden.size()) forbidden.push_back(0);
    return static_cast<std::int32_t>(c);
}

// Distance-2 greedy coloring of the vertices in `members` (natural order):
// two members conflict when they share a neighbor in `via` that `counts` accepts.
template <class Counts>
std::vector<std::int32_t> distance2(std::size_t count, const std::vector<std::vector<std::int32_t>>& to,
                                    const std::vector<std::vector<std::int32_t>>& back,
                                    const std::vector<bool>& members, Counts counts, std::size_t& ncolors) {
    std::vector<std::int32_t> color(count, -1);
    std::vector<std::size_t> forbidden;
    ncolors = 0;
    for (std::size_t v = 0; v < count; ++v) {
        if (!members[v]) continue;
        const std::size_t stamp = v + 1;
        for (std::int32_t w : to[v]) {
            if (!counts(w)) continue;
            for (std::int32_t u : back[static_cast<std::size_t>(w)]) {
                const std::int32_t c = color[static_cast<std::size_t>(u)];
                if (c >= 0) {
                    if (static_cast<std::size_t>(c) >= forbidden.size()) forbidden.resize(c + 1, 0);
                    forbidden[c] = stamp;
                }
            }
        }
        color[v] = smallest_free(forbidden, stamp);
        ncolors = std::max(ncolors, static_cast<std::size_t>(color[v]) + 1);
    }
    return color;
}

Batch seeds_from(const std::vector<std::int32_t>& colors, std::size_t ncolors) {
    Batch s(ncolors, colors.size(), 0.0);
    for (std::size_t j = 0; j < colors.size(); ++j)
        if (colors[j] >= 0) s(static_cast<std::size_t>(colors[j]), j) = 1.0;
    return s;
}

// Star coloring: distance-1 coloring in which every path on four vertices uses
// at least three colors.
std::vector<std::int32_t> star_colors(const std::vector<std::vector<std::int32_t>>& nbr, std::size_t& ncolors) {
    const std::size_t n = nbr.size();
    std::vector<std::int32_t> color(n, -1);
    std::vector<std::size_t> forbidden;
    ncolors = 0;
    auto forbid = [&](std::int32_t c, std::size_t stamp) {
        if (c < 0) return;
        if (static_cast<std::size_t>(c) >= forbidden.size()) forbidden.resize(c + 1, 0);
        forbidden[c] = stamp;
    };
    for (std::size_t v = 0; v < n; ++v) {
        const std::size_t stamp = v + 1;
        for (std::int32_t w : nbr[v]) forbid(color[w], stamp);
        for (std::int32_t w : nbr[v]) {
            if (color[w] < 0) {
                for (std::int32_t x : nbr[w]) forbid(color[x], stamp);
                continue;
            }
            for (std::int32_t x : nbr[w]) {
                if (static_cast<std::size_t>(x) == v || color[x] < 0) continue;
                for (std::int32_t y : nbr[x])
                    if (y != w && color[y] == color[w]) {
                        forbid(color[x], stamp);
                        break;
                    }
            }
        }
        color[v] = smallest_free(forbidden, stamp);
        ncolors = std::max(ncolors, static_cast<std::size_t>(color[v]) + 1);
    }
    return color;
}

}  // namespace

Coloring greedy_color(const SparsityPattern& p, Partition partition) {
    Coloring c;
    c.partition = partition;
    const Adjacency adj(p);
    const std::size_t m = p.nrows();
    const std::size_t n = p.ncols();
    const auto any = [](std::int32_t) { return true; };

    switch (partition) {
        case Partition::column: {
            c.column_colors = distance2(n, adj.rows_of_col, adj.cols_of_row, std::vector<bool>(n, true), any,
                                        c.num_column_colors);
            for (std::size_t j = 0; j < n; ++j)
                for (std::int32_t i : p.column(j)) c.recovery.push_back({false, c.column_colors[j], i});
            break;
        }
        case Partition::row: {
            c.row_colors = distance2(m, adj.cols_of_row, adj.rows_of_col, std::vector<bool>(m, true), any,
                                     c.num_row_colors);
            for (std::size_t j = 0; j < n; ++j)
                for (std::int32_t i : p.column(j))
                    c.recovery.push_back({true, c.row_colors[i], static_cast<std::int32_t>(j)});
            break;
        }
        case Partition::symmetric: {
            if (!p.is_symmetric()) throw ShapeMismatch("hessian", "sparse", "symmetric coloring needs a symmetric pattern");
            std::vector<std::vector<std::int32_t>> nbr(n);
            for (std::size_t j = 0; j < n; ++j)
                for (std::int32_t i : p.column(j))
                    if (static_cast<std::size_t>(i) != j) nbr[j].push_back(i);
            c.column_colors = star_colors(nbr, c.num_column_colors);
            const auto& col = c.column_colors;
            // Number of neighbors of i (including i) carrying color k.
            auto count_color = [&](std::size_t i, std::int32_t k) {
                std::size_t cnt = 0;
                for (std::int32_t r : p.column(i))
                    if (col[r] == k) ++cnt;
                return cnt;
            };
            for (std::size_t j = 0; j < n; ++j)
                for (std::int32_t i : p.column(j)) {
                    // Same rule for (i, j) and (j, i) so the result is exactly symmetric.
                    const std::size_t lo = std::min<std::size_t>(i, j);
                    const std::size_t hi = std::max<std::size_t>(i, j);
                    if (lo == hi) {
                        c.recovery.push_back({false, col[j], i});
                    } else if (count_color(lo, col[hi]) == 1) {
                        c.recovery.push_back({false, col[hi], static_cast<std::int32_t>(lo)});
                    } else {
                        c.recovery.push_back({false, col[lo], static_cast<std::int32_t>(hi)});
                    }
                }
            break;
        }
        case Partition::bidirectional: {
            std::vector<std::size_t> degree(n);
            for (std::size_t j = 0; j < n; ++j) degree[j] = p.column(j).size();
            std::size_t k = 0;
            if (n > 0) {
                std::vector<std::size_t> sorted = degree;
                std::sort(sorted.begin(), sorted.end());
                k = sorted[(n - 1) / 2];
            }
            std::vector<bool> light(n), heavy_row(m, false);
            for (std::size_t j = 0; j < n; ++j) {
                light[j] = degree[j] <= k;
                if (!light[j])
                    for (std::int32_t i : p.column(j)) heavy_row[i] = true;
            }
            c.column_colors = distance2(n, adj.rows_of_col, adj.cols_of_row, light, any, c.num_column_colors);
            for (std::size_t j = 0; j < n; ++j)
                if (!light[j]) c.column_colors[j] = -1;
            c.row_colors = distance2(m, adj.cols_of_row, adj.rows_of_col, heavy_row,
                                     [&](std::int32_t j) { return !light[j]; }, c.num_row_colors);
            for (std::size_t j = 0; j < n; ++j)
                for (std::int32_t i : p.column(j)) {
                    if (light[j])
                        c.recovery.push_back({false, c.column_colors[j], i});
                    else
                        c.recovery.push_back({true, c.row_colors[i], static_cast<std::int32_t>(j)});
                }
            break;
        }
    }
    if (!c.column_colors.empty() || partition != Partition::row)
        c.column_seeds = seeds_from(c.column_colors, c.num_column_colors);
    if (!c.row_colors.empty()) c.row_seeds = seeds_from(c.row_colors, c.num_row_colors);
    return c;
}

void decompress(const SparsityPattern& p, const Coloring& coloring, const Batch& colprod, const Batch& rowprod,
                SparseMatrix& out) {
    bool fits = out.rows() == p.nrows() && out.cols() == p.ncols() && out.nnz() == p.nnz() &&
                std::equal(out.col_ptr().begin(), out.col_ptr().end(), p.col_ptr().begin(), p.col_ptr().end());
    if (fits) {
        const auto ri = out.row_indices();
        const auto pi = p.row_indices();
        for (std::size_t k = 0; k < ri.size() && fits; ++k) fits = ri[k] == static_cast<std::size_t>(pi[k]);
    }
    if (!fits) {
        std::vector<std::size_t> ptr(p.col_ptr().begin(), p.col_ptr().end());
        std::vector<std::size_t> rows(p.row_indices().begin(), p.row_indices().end());
        out = SparseMatrix(p.nrows(), p.ncols(), std::move(ptr), std::move(rows), std::vector<double>(p.nnz(), 0.0));
    }
    auto values = out.values();
    for (std::size_t k = 0; k < coloring.recovery.size(); ++k) {
        const Recovery& r = coloring.recovery[k];
        const Batch& src = r.from_rows ? rowprod : colprod;
        values[k] = src(static_cast<std::size_t>(r.color), static_cast<std::size_t>(r.slot));
    }
}

namespace detail {
namespace {

Backend as_second_order(const Backend& b) {
    return b.kind() == Backend::Kind::second_order ? b : Backend::second_order(b, b);
}

SparseMatrix& sparse_out(Matrix& out) {
    if (!out.is_sparse()) out = Matrix(SparseMatrix());
    return out.sparse();
}

class SparseJacobianEngine final : public Engine {
public:
    SparseJacobianEngine(CallStats& stats, const Backend& b, const Function& f, XSpan x, ContextArgs ctx)
        : Engine(stats, b.id(), JacobianSide::pushforward), primal_(ctx.size()) {
        pattern_ = detect_jacobian_pattern(f, x, ctx);
        const Backend& d = b.dense();
        const Backend first = d.kind() == Backend::Kind::second_order ? d.inner() : d;
        Partition part;
        if (first.kind() == Backend::Kind::mixed_mode)
            part = Partition::bidirectional;
        else
            part = jacobian_side(first, IoSize{x.size(), f.output_size()}) == JacobianSide::pushforward
                       ? Partition::column
                       : Partition::row;
        coloring_ = greedy_color(pattern_, part);
        if (coloring_.num_column_colors > 0) {
            const Backend& fb = first.kind() == Backend::Kind::mixed_mode ? first.forward_half() : first;
            forward_ = make_engine(Operator::pushforward, f, fb, x, ctx, stats);
        }
        if (coloring_.num_row_colors > 0) {
            const Backend& rb = first.kind() == Backend::Kind::mixed_mode ? first.reverse_half() : first;
            reverse_ = make_engine(Operator::pullback, f, rb, x, ctx, stats);
        }
    }

    void jacobian(const Function& f, XSpan x, ContextArgs ctx, std::span<double> y, Matrix& out) override {
        if (forward_) forward_->pushforward(f, x, coloring_.column_seeds, ctx, y, colprod_);
        if (reverse_) reverse_->pullback(f, x, coloring_.row_seeds, ctx, y, rowprod_);
        if (!forward_ && !reverse_ && !y.empty()) f.eval<double>(x, y, primal_.bind(ctx));
        decompress(pattern_, coloring_, colprod_, rowprod_, sparse_out(out));
    }

    const SparsityPattern* pattern() const override { return &pattern_; }
    const Coloring* coloring() const override { return &coloring_; }
    const Tape* tape() const override {
        if (reverse_) return reverse_->tape();
        return forward_ ? forward_->tape() : nullptr;
    }
    const SeedBank* seed_bank() const override { return forward_ ? forward_->seed_bank() : nullptr; }

private:
    SparsityPattern pattern_;
    Coloring coloring_;
    std::unique_ptr<Engine> forward_, reverse_;
    Batch colprod_, rowprod_;
    PrimalContexts primal_;
};

class SparseHessianEngine final : public Engine {
public:
    SparseHessianEngine(CallStats& stats, const Backend& b, const Function& f, XSpan x, ContextArgs ctx)
        : Engine(stats, b.id(), JacobianSide::pushforward), primal_(ctx.size()), y_(1) {
        pattern_ = detect_hessian_pattern(f, x, ctx);
        coloring_ = greedy_color(pattern_, Partition::symmetric);
        hvp_ = make_second_order_engine(Operator::hvp, f, as_second_order(b.dense()), x, ctx, stats);
    }

    void hessian(const Function& f, XSpan x, ContextArgs ctx, double* y, Matrix& out) override {
        if (coloring_.num_column_colors > 0) {
            hvp_->hvp(f, x, coloring_.column_seeds, ctx, y, prod_);
        } else if (y) {
            f.eval<double>(x, y_, primal_.bind(ctx));
            *y = y_[0];
        }
        decompress(pattern_, coloring_, prod_, prod_, sparse_out(out));
    }

    const SparsityPattern* pattern() const override { return &pattern_; }
    const Coloring* coloring() const override { return &coloring_; }
    const Tape* tape() const override { return hvp_->tape(); }

private:
    SparsityPattern pattern_;
    Coloring coloring_;
    std::unique_ptr<Engine> hvp_;
    Batch prod_;
    PrimalContexts primal_;
    std::vector<double> y_;
};

}  // namespace

std::unique_ptr<Engine> make_sparse_engine(Operator op, const Function& f, const Backend& b, XSpan x, ContextArgs ctx,
                                           CallStats& stats) {
    if (op == Operator::hessian) return std::make_unique<SparseHessianEngine>(stats, b, f, x, ctx);
    return std::make_unique<SparseJacobianEngine>(stats, b, f, x, ctx);
}

}  // namespace detail

SparseMatrix sparse_jacobian(const Function& f, Preparation& prep, const Backend& b, std::span<const double> x,
                             ContextArgs ctx) {
    if (b.kind() != Backend::Kind::sparse)
        throw PreparationMismatch("jacobian", b.id(), "sparse_jacobian needs a sparse backend");
    Matrix m = jacobian(f, prep, b, x, ctx);
    return std::move(m.sparse());
}

SparseMatrix sparse_hessian(const Function& f, Preparation& prep, const Backend& b, std::span<const double> x,
                            ContextArgs ctx) {
    if (b.kind() != Backend::Kind::sparse)
        throw PreparationMismatch("hessian", b.id(), "sparse_hessian needs a sparse backend");
    Matrix m = hessian(f, prep, b, x, ctx);
    return std::move(m.sparse());
}

void write_pattern(std::ostream& os, const SparsityPattern& p) {
    os << p.nrows() << ' ' << p.ncols() << '\n';
    for (const auto& [i, j] : p.entries()) os << i << ' ' << j << '\n';
}

namespace {

// Remaining lines as integer pairs; blank lines are ignored.
std::vector<std::pair<long long, long long>> read_pairs(std::istream& is, const char* what) {
    std::vector<std::pair<long long, long long>> out;
    std::string line;
    std::getline(is, line);  // rest of the header line
    if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw ConfigError("", "", std::string("unexpected text after header: '") + line + "'");
    while (std::getline(is, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        long long a = 0, b = 0;
        std::string extra;
        if (!(ls >> a >> b) || (ls >> extra))
            throw ConfigError("", "", std::string("malformed '") + what + "' line: '" + line + "'");
        out.emplace_back(a, b);
    }
    return out;
}

}  // namespace

SparsityPattern read_pattern(std::istream& is) {
    long long nr = -1, nc = -1;
    if (!(is >> nr >> nc) || nr < 0 || nc < 0) throw ConfigError("", "", "pattern text must start with 'nrows ncols'");
    std::vector<std::pair<std::int32_t, std::int32_t>> e;
    for (const auto& [i, j] : read_pairs(is, "row col"))
        e.emplace_back(static_cast<std::int32_t>(i), static_cast<std::int32_t>(j));
    try {
        return SparsityPattern::from_entries(static_cast<std::size_t>(nr), static_cast<std::size_t>(nc), std::move(e));
    } catch (const ShapeMismatch& ex) {
        throw ConfigError("", "", ex.detail());
    }
}

void write_coloring(std::ostream& os, const Coloring& c) {
    const bool rows = c.partition == Partition::row;
    const auto& colors = rows ? c.row_colors : c.column_colors;
    os << colors.size() << ' ' << (rows ? c.num_row_colors : c.num_column_colors) << '\n';
    for (std::size_t k = 0; k < colors.size(); ++k) os << k << ' ' << colors[k] << '\n';
}

std::vector<std::pair<std::int32_t, std::int32_t>> read_coloring(std::istream& is) {
    long long count = -1, ncolors = -1;
    if (!(is >> count >> ncolors) || count < 0 || ncolors < 0)
        throw ConfigError("", "", "coloring text must start with 'count ncolors'");
    std::vector<std::pair<std::int32_t, std::int32_t>> out;
    for (const auto& [k, c] : read_pairs(is, "index color"))
        out.emplace_back(static_cast<std::int32_t>(k), static_cast<std::int32_t>(c));
    if (out.size() != static_cast<std::size_t>(count))
        throw ConfigError("", "", "coloring text lists " + std::to_string(out.size()) + " entries, header says " +
                                      std::to_string(count));
    return out;
}

}  // namespace adkit
