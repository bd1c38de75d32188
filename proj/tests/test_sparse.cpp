#include <gtest/gtest.h>

#include <sstream>

#include "adkit/harness.hpp"
#include "oracles.hpp"

using namespace adkit;

namespace {

SparsityPattern random_pattern(std::mt19937_64& rng, std::size_t m, std::size_t n, double density) {
    std::bernoulli_distribution on(density);
    std::vector<std::pair<std::int32_t, std::int32_t>> e;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (on(rng)) e.emplace_back(static_cast<std::int32_t>(i), static_cast<std::int32_t>(j));
    return SparsityPattern::from_entries(m, n, std::move(e));
}

SparsityPattern random_symmetric(std::mt19937_64& rng, std::size_t n, double density) {
    std::bernoulli_distribution on(density);
    std::vector<std::pair<std::int32_t, std::int32_t>> e;
    for (std::size_t i = 0; i < n; ++i) {
        e.emplace_back(static_cast<std::int32_t>(i), static_cast<std::int32_t>(i));
        for (std::size_t j = i + 1; j < n; ++j)
            if (on(rng)) {
                e.emplace_back(static_cast<std::int32_t>(i), static_cast<std::int32_t>(j));
                e.emplace_back(static_cast<std::int32_t>(j), static_cast<std::int32_t>(i));
            }
    }
    return SparsityPattern::from_entries(n, n, std::move(e));
}

// Fills a pattern with random values, evaluates the compressed products by
// brute force and checks decompression reproduces every value.
void check_recovery(const SparsityPattern& p, const Coloring& c, std::mt19937_64& rng, bool symmetric) {
    DenseMatrix A(p.nrows(), p.ncols());
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (auto [i, j] : p.entries()) {
        if (symmetric && j < i) continue;
        A(i, j) = d(rng);
        if (symmetric) A(j, i) = A(i, j);
    }
    Batch cols(c.num_column_colors, p.nrows()), rows(c.num_row_colors, p.ncols());
    for (std::size_t k = 0; k < c.num_column_colors; ++k)
        for (std::size_t i = 0; i < p.nrows(); ++i)
            for (std::size_t j = 0; j < p.ncols(); ++j) cols(k, i) += A(i, j) * c.column_seeds(k, j);
    for (std::size_t k = 0; k < c.num_row_colors; ++k)
        for (std::size_t j = 0; j < p.ncols(); ++j)
            for (std::size_t i = 0; i < p.nrows(); ++i) rows(k, j) += c.row_seeds(k, i) * A(i, j);
    SparseMatrix out;
    decompress(p, c, cols, rows, out);
    EXPECT_EQ(out.to_dense(), A);
}

Function tridiagonal(std::size_t n) {
    return make_function("tridiag", n, n, [](auto x) {
        using S = scalar_t<decltype(x)>;
        const std::size_t n = x.size();
        std::vector<S> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            S v = x[i] * x[i];
            if (i > 0) v = v - x[i - 1] * 2.0;
            if (i + 1 < n) v = v + adkit::sin(x[i + 1]);
            y[i] = v;
        }
        return y;
    });
}

}  // namespace

TEST(Pattern, Construction) {
    const IndexSet r0{0, 2};
    const IndexSet r1{1};
    const std::vector<IndexSet> rows{r0, r1};
    const SparsityPattern p = SparsityPattern::from_row_sets(3, rows);
    EXPECT_EQ(p.nrows(), 2u);
    EXPECT_EQ(p.nnz(), 3u);
    EXPECT_TRUE(p.contains(0, 2));
    EXPECT_FALSE(p.contains(1, 2));
    EXPECT_EQ(p.transposed().transposed(), p);
    EXPECT_EQ(SparsityPattern::dense(2, 2).nnz(), 4u);
    EXPECT_TRUE(SparsityPattern::dense(3, 3).is_symmetric());
    EXPECT_FALSE(p.is_symmetric());
}

TEST(Pattern, DetectionIsExactForTridiagonal) {
    const std::size_t n = 12;
    const std::vector<double> x(n, 0.5);
    const SparsityPattern p = detect_jacobian_pattern(tridiagonal(n), x);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) EXPECT_EQ(p.contains(i, j), i <= j + 1 && j <= i + 1);
}

TEST(Pattern, HessianDetection) {
    const Function f = make_function("f", 4, 1, [](auto x) { return x[0] * x[1] + adkit::exp(x[2]) + x[3]; });
    const std::vector<double> x{1, 2, 3, 4};
    const SparsityPattern p = detect_hessian_pattern(f, x);
    EXPECT_TRUE(p.is_symmetric());
    EXPECT_EQ(p.entries(), (std::vector<std::pair<std::int32_t, std::int32_t>>{{0, 1}, {1, 0}, {2, 2}}));
}

TEST(Coloring, ColumnColoringsAreOrthogonal) {
    std::mt19937_64 rng(51);
    for (int t = 0; t < 40; ++t) {
        const SparsityPattern p = random_pattern(rng, 3 + t % 9, 2 + t % 11, 0.25);
        const Coloring c = greedy_color(p, Partition::column);
        EXPECT_TRUE(oracle::columns_orthogonal(p, c.column_colors));
        check_recovery(p, c, rng, false);
    }
}

TEST(Coloring, RowColoringsAreOrthogonal) {
    std::mt19937_64 rng(52);
    for (int t = 0; t < 40; ++t) {
        const SparsityPattern p = random_pattern(rng, 2 + t % 10, 3 + t % 7, 0.25);
        const Coloring c = greedy_color(p, Partition::row);
        EXPECT_TRUE(oracle::rows_orthogonal(p, c.row_colors));
        check_recovery(p, c, rng, false);
    }
}

TEST(Coloring, StarColoringsAreValid) {
    std::mt19937_64 rng(53);
    for (int t = 0; t < 40; ++t) {
        const SparsityPattern p = random_symmetric(rng, 3 + t % 12, 0.2);
        const Coloring c = greedy_color(p, Partition::symmetric);
        EXPECT_TRUE(oracle::is_star_coloring(p, c.column_colors));
        check_recovery(p, c, rng, true);
    }
}

TEST(Coloring, BidirectionalCoversEveryNonzero) {
    std::mt19937_64 rng(54);
    for (int t = 0; t < 40; ++t) {
        const SparsityPattern p = random_pattern(rng, 4 + t % 8, 4 + t % 6, 0.3);
        const Coloring c = greedy_color(p, Partition::bidirectional);
        EXPECT_TRUE(oracle::columns_orthogonal(p, c.column_colors));
        check_recovery(p, c, rng, false);
    }
}

TEST(Coloring, BidirectionalSplitsAtMedianDegree) {
    // Arrowhead: column 0 is dense, the rest hold the diagonal and row 0.
    const std::size_t n = 10;
    std::vector<std::pair<std::int32_t, std::int32_t>> e;
    for (std::int32_t i = 0; i < static_cast<std::int32_t>(n); ++i) {
        e.emplace_back(i, i);
        e.emplace_back(0, i);
        e.emplace_back(i, 0);
    }
    const SparsityPattern p = SparsityPattern::from_entries(n, n, e);
    const Coloring c = greedy_color(p, Partition::bidirectional);
    EXPECT_EQ(c.column_colors[0], -1);
    for (std::size_t j = 1; j < n; ++j) EXPECT_GE(c.column_colors[j], 0);
    for (std::size_t i = 0; i < n; ++i) EXPECT_GE(c.row_colors[i], 0);
    EXPECT_TRUE(oracle::columns_orthogonal(p, c.column_colors));
    std::mt19937_64 rng(55);
    check_recovery(p, c, rng, false);
}

TEST(Coloring, TridiagonalUsesThreeColors) {
    const std::vector<double> x(32, 0.1);
    const SparsityPattern p = detect_jacobian_pattern(tridiagonal(32), x);
    const Coloring c = greedy_color(p, Partition::column);
    EXPECT_EQ(c.num_column_colors, 3u);
    EXPECT_EQ(c.column_seeds.rows(), 3u);
}

TEST(SparseJacobian, MatchesDenseOnEveryInnerBackend) {
    const std::size_t n = 16;
    std::mt19937_64 rng(56);
    const auto x = oracle::random_vector(rng, n);
    const Function f = tridiagonal(n);
    const DenseMatrix ref = jacobian(f, Backend::dual(), x).to_dense();
    for (const Backend& dense : {Backend::dual(), Backend::tape(), Backend::finite_diff(),
                                 Backend::mixed_mode(Backend::dual(), Backend::tape())}) {
        const Backend b = Backend::sparse(dense);
        Preparation prep = prepare(Operator::jacobian, f, b, x);
        prep.reset_stats();
        const SparseMatrix J = sparse_jacobian(f, prep, b, x);
        const double tol = dense.kind() == Backend::Kind::finite_diff ? 1e-7 : 1e-12;
        EXPECT_LT(oracle::max_abs_diff(J.to_dense(), ref), tol) << b.id();
        EXPECT_EQ(J.nnz(), prep.pattern()->nnz());
        const Matrix M = jacobian(f, prep, b, x);
        EXPECT_TRUE(M.is_sparse());
    }
}

TEST(SparseJacobian, RequiresSparsePreparation) {
    const Function f = tridiagonal(4);
    const std::vector<double> x(4, 1.0);
    Preparation prep = prepare(Operator::jacobian, f, Backend::dual(), x);
    EXPECT_THROW(sparse_jacobian(f, prep, Backend::dual(), x), PreparationMismatch);
}

TEST(SparseHessian, MatchesDense) {
    const std::size_t n = 10;
    const Function f = make_function("chain", n, 1, [](auto x) {
        using S = scalar_t<decltype(x)>;
        S s(0.0);
        for (std::size_t i = 0; i + 1 < x.size(); ++i) s = s + x[i] * x[i] * x[i + 1];
        return s;
    });
    std::mt19937_64 rng(57);
    const auto x = oracle::random_vector(rng, n);
    const Backend so = Backend::second_order(Backend::dual(), Backend::tape());
    const Backend b = Backend::sparse(so);
    Preparation prep = prepare(Operator::hessian, f, b, x);
    prep.reset_stats();
    const SparseMatrix H = sparse_hessian(f, prep, b, x);
    EXPECT_LT(oracle::max_abs_diff(H.to_dense(), hessian(f, so, x).to_dense()), 1e-12);
    EXPECT_EQ(prep.stats().hvps, prep.coloring()->num_column_colors);
    EXPECT_TRUE(oracle::is_star_coloring(*prep.pattern(), prep.coloring()->column_colors));
}

TEST(TextFormat, PatternRoundTrip) {
    std::mt19937_64 rng(58);
    const SparsityPattern p = random_pattern(rng, 7, 5, 0.3);
    std::stringstream ss;
    write_pattern(ss, p);
    EXPECT_EQ(read_pattern(ss), p);
}

TEST(TextFormat, ColoringRoundTrip) {
    std::mt19937_64 rng(59);
    const SparsityPattern p = random_pattern(rng, 6, 6, 0.3);
    const Coloring c = greedy_color(p, Partition::column);
    std::stringstream ss;
    write_coloring(ss, c);
    const auto pairs = read_coloring(ss);
    ASSERT_EQ(pairs.size(), 6u);
    for (const auto& [idx, color] : pairs) EXPECT_EQ(c.column_colors[idx], color);
}

TEST(TextFormat, MalformedInputIsConfigError) {
    for (const char* s : {"", "2", "2 2\n0 5\n", "2 2\n0\n", "x y\n"}) {
        std::istringstream is(s);
        EXPECT_THROW(read_pattern(is), ConfigError) << s;
    }
}

namespace {

bool some_two_coloring_exists(const SparsityPattern& p) {
    const std::size_t n = p.ncols();
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        std::vector<std::int32_t> c(n);
        for (std::size_t j = 0; j < n; ++j) c[j] = (mask >> j) & 1;
        if (oracle::columns_orthogonal(p, c)) return true;
    }
    return false;
}

Function laplacian(std::size_t n) {
    return make_function("laplacian", n, n, [](auto x) {
        using S = scalar_t<decltype(x)>;
        const std::size_t n = x.size();
        std::vector<S> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            S v = -2.0 * x[i];
            if (i > 0) v = v + x[i - 1];
            if (i + 1 < n) v = v + x[i + 1];
            y[i] = v;
        }
        return y;
    });
}

}  // namespace

TEST(SparseExamples, JacobianPatterns) {
    const Function two = make_function("two_out", 3, 2, [](auto x) {
        using S = scalar_t<decltype(x)>;
        return std::vector<S>{x[0] * x[1], x[1] + x[2]};
    });
    const std::vector<double> x3{1, 2, 3};
    EXPECT_EQ(detect_jacobian_pattern(two, x3).entries(),
              (std::vector<std::pair<std::int32_t, std::int32_t>>{{0, 0}, {0, 1}, {1, 1}, {1, 2}}));
    const Function id = make_function("id", 4, 4, [](auto x) {
        using S = scalar_t<decltype(x)>;
        return std::vector<S>(x.begin(), x.end());
    });
    const SparsityPattern d = detect_jacobian_pattern(id, std::vector<double>(4, 1.0));
    EXPECT_EQ(d.nnz(), 4u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_TRUE(d.contains(i, i));

    std::mt19937_64 rng(60);
    const auto x8 = oracle::random_vector(rng, 8);
    const SparsityPattern p = detect_jacobian_pattern(laplacian(8), x8);
    const DenseMatrix J = oracle::central_jacobian(laplacian(8), x8);
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j) EXPECT_EQ(p.contains(i, j), std::fabs(J(i, j)) > 1e-10);
}

TEST(SparseExamples, HessianPatterns) {
    const Function sq = make_function("sumsq", 4, 1, [](auto x) {
        return x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
    });
    const SparsityPattern d = detect_hessian_pattern(sq, std::vector<double>(4, 1.0));
    EXPECT_EQ(d.nnz(), 4u);
    const Function chain = make_function("chain", 6, 1, [](auto x) {
        using S = scalar_t<decltype(x)>;
        S s(0.0);
        for (std::size_t i = 0; i + 1 < 6; ++i) s = s + x[i] * x[i + 1];
        return s;
    });
    const SparsityPattern c = detect_hessian_pattern(chain, std::vector<double>(6, 1.0));
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j)
            if (i != j) {
                EXPECT_EQ(c.contains(i, j), i == j + 1 || j == i + 1);
            }
    const Function sqsum = make_function("sqsum", 5, 1, [](auto x) {
        auto s = x[0] + x[1] + x[2] + x[3] + x[4];
        return s * s;
    });
    EXPECT_EQ(detect_hessian_pattern(sqsum, std::vector<double>(5, 1.0)), SparsityPattern::dense(5, 5));
}

TEST(SparseExamples, ColoringCounts) {
    std::vector<std::pair<std::int32_t, std::int32_t>> diag;
    for (std::int32_t i = 0; i < 6; ++i) diag.emplace_back(i, i);
    EXPECT_EQ(greedy_color(SparsityPattern::from_entries(6, 6, diag), Partition::column).num_colors(), 1u);
    EXPECT_EQ(greedy_color(SparsityPattern::dense(3, 5), Partition::column).num_colors(), 5u);
    const SparsityPattern tri = detect_jacobian_pattern(laplacian(8), std::vector<double>(8, 1.0));
    EXPECT_EQ(greedy_color(tri, Partition::column).num_colors(), 3u);
    EXPECT_FALSE(some_two_coloring_exists(tri));
}

TEST(SparseExamples, SparseJacobianCallCounts) {
    std::mt19937_64 rng(61);
    const auto x8 = oracle::random_vector(rng, 8);
    const Backend b = Backend::sparse(Backend::dual());
    Preparation prep = prepare(Operator::jacobian, laplacian(8), b, x8);
    prep.reset_stats();
    const SparseMatrix J = sparse_jacobian(laplacian(8), prep, b, x8);
    EXPECT_EQ(prep.stats().pushforwards, 3u);
    EXPECT_LT(oracle::max_abs_diff(J.to_dense(), oracle::central_jacobian(laplacian(8), x8)), 1e-8);

    const Function cube = make_function("cube", 16, 16, [](auto x) {
        using S = scalar_t<decltype(x)>;
        std::vector<S> y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * x[i] * x[i];
        return y;
    });
    const std::vector<double> ones(16, 1.0);
    Preparation pc = prepare(Operator::jacobian, cube, b, ones);
    pc.reset_stats();
    const SparseMatrix Jc = sparse_jacobian(cube, pc, b, ones);
    EXPECT_EQ(pc.stats().pushforwards, 1u);
    EXPECT_EQ(Jc.nnz(), 16u);
    for (double v : Jc.values()) EXPECT_EQ(v, 3.0);

    const std::vector<double> x9(9, 1.0);
    EXPECT_THROW(sparse_jacobian(laplacian(8), prep, b, x9), PreparationMismatch);
}

TEST(SparseExamples, SparseHessianCallCounts) {
    const Backend b = Backend::sparse(Backend::second_order(Backend::dual(), Backend::tape()));
    const Function sq = make_function("sumsq", 16, 1, [](auto x) {
        using S = scalar_t<decltype(x)>;
        S s(0.0);
        for (const auto& xi : x) s = s + xi * xi;
        return s;
    });
    const std::vector<double> x16(16, 0.3);
    Preparation prep = prepare(Operator::hessian, sq, b, x16);
    prep.reset_stats();
    const SparseMatrix H = sparse_hessian(sq, prep, b, x16);
    EXPECT_EQ(prep.stats().hvps, 1u);
    EXPECT_EQ(H.to_dense(), [] {
        DenseMatrix I = DenseMatrix::identity(16);
        for (double& v : I.data()) v *= 2.0;
        return I;
    }());

    // Banded quartic: hvp count equals the star color count, not n.
    const std::size_t n = 20;
    const Function band = make_function("banded_quartic", n, 1, [](auto x) {
        using S = scalar_t<decltype(x)>;
        S s(0.0);
        for (std::size_t i = 0; i + 2 < x.size(); ++i) s = s + x[i] * x[i] * x[i + 1] * x[i + 2];
        return s;
    });
    std::mt19937_64 rng(62);
    const auto x = oracle::random_vector(rng, n);
    Preparation pb = prepare(Operator::hessian, band, b, x);
    pb.reset_stats();
    const SparseMatrix Hb = sparse_hessian(band, pb, b, x);
    EXPECT_EQ(pb.stats().hvps, pb.coloring()->num_colors());
    EXPECT_LT(pb.stats().hvps, n);
    EXPECT_LT(oracle::max_abs_diff(Hb.to_dense(), oracle::central_hessian(band, x)), 1e-6);
}

TEST(SparseProperties, DetectionIsSoundOnScenarios) {
    for (const harness::Scenario* s : harness::select_scenarios("all")) {
        if (is_second_order(s->op) || s->op == Operator::derivative) continue;
        harness::Instance inst = s->make(std::min<std::size_t>(s->default_size, 16));
        const auto ctx = inst.contexts();
        const std::vector<double> x = inst.x;
        const SparsityPattern p = detect_jacobian_pattern(inst.f, x, ctx);
        const DenseMatrix J = oracle::central_jacobian(inst.f, x, ctx);
        for (std::size_t i = 0; i < J.rows(); ++i)
            for (std::size_t j = 0; j < J.cols(); ++j)
                if (std::fabs(J(i, j)) > 1e-8) {
                    EXPECT_TRUE(p.contains(i, j)) << s->name << " " << i << "," << j;
                }
    }
}
