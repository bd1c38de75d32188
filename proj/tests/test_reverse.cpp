#include <gtest/gtest.h>

#include "adkit/harness.hpp"
#include "oracles.hpp"

using namespace adkit;

TEST(Tape, RecordsPrimitives) {
    const Function f = make_function("f", 2, 1, [](auto x) { return x[0] * x[1] + adkit::exp(x[0]); });
    const std::vector<double> x{1.0, 2.0};
    const Tape t = record(f, x);
    EXPECT_EQ(t.input_count(), 2u);
    EXPECT_EQ(t.output_count(), 1u);
    EXPECT_EQ(t.count(Primitive::mul), 1u);
    EXPECT_EQ(t.count(Primitive::exp), 1u);
    EXPECT_EQ(t.count(Primitive::add), 1u);
}

TEST(Tape, ReplayAndSweepMatchOracle) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        const auto p = oracle::PolyMap::random(rng, 4, 3);
        const Function f = p.function();
        const auto x0 = oracle::random_vector(rng, 4);
        Tape t = record(f, x0);
        const auto x1 = oracle::random_vector(rng, 4);
        const auto y = t.replay(x1);
        const auto ref = p.value(x1);
        for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(y[j], ref[j], 1e-12);
        const DenseMatrix J = p.jacobian(x1);
        for (std::size_t j = 0; j < 3; ++j) {
            std::vector<double> seed(3, 0.0);
            seed[j] = 1.0;
            const auto g = t.reverse_sweep(seed);
            for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(g[i], J(j, i), 1e-12);
        }
    }
}

TEST(Tape, SupportsErf) {
    const Function f = make_function("uses_erf", 1, 1, [](auto x) { return adkit::erf(x[0]) * x[0]; });
    const std::vector<double> x{0.3};
    const Vector g = gradient(f, Backend::tape(), x);
    const double ref = std::erf(0.3) + 0.3 * 2.0 / std::sqrt(M_PI) * std::exp(-0.09);
    EXPECT_NEAR(g[0], ref, 1e-14);
}

namespace {

Function branchy() {
    return make_function("branchy", 1, 1, [](auto x) {
        using S = scalar_t<decltype(x)>;
        if (x[0] > 0.0) return S(x[0] * x[0]);
        return S(-x[0]);
    });
}

}  // namespace

TEST(Tape, FreezeFollowsRecordedBranch) {
    const Function f = branchy();
    const std::vector<double> xp{2.0}, xn{-3.0};
    Preparation prep = prepare(Operator::gradient, f, Backend::tape(), xp);
    // The recorded branch is x^2, so at -3 the frozen tape reports -6.
    EXPECT_EQ(gradient(f, prep, Backend::tape(), xn)[0], -6.0);
}

TEST(Tape, CheckPolicyDetectsBranchFlip) {
    const Function f = branchy();
    const Backend b = Backend::tape({.branch_policy = BranchPolicy::check});
    const std::vector<double> xp{2.0}, xn{-3.0};
    Preparation prep = prepare(Operator::gradient, f, b, xp);
    EXPECT_EQ(gradient(f, prep, b, xp)[0], 4.0);
    EXPECT_THROW(gradient(f, prep, b, xn), TraceEscape);
}

TEST(Tape, RejectPolicyRefusesComparisons) {
    const Function f = branchy();
    const std::vector<double> x{2.0};
    EXPECT_THROW(record(f, x, {}, BranchPolicy::reject), TraceEscape);
    EXPECT_THROW(prepare(Operator::gradient, f, Backend::tape({.branch_policy = BranchPolicy::reject}), x),
                 TraceEscape);
}

TEST(Tape, PreparedGradientReusesTape) {
    const Function f = make_function("f", 3, 1, [](auto x) { return x[0] * x[1] * x[2]; });
    std::vector<double> x{1.0, 2.0, 3.0};
    Preparation prep = prepare(Operator::gradient, f, Backend::tape(), x);
    const std::size_t recorded = prep.stats().records;
    for (int k = 0; k < 5; ++k) {
        x[0] += 1.0;
        const Vector g = gradient(f, prep, Backend::tape(), x);
        EXPECT_EQ(g[0], x[1] * x[2]);
        EXPECT_EQ(g[1], x[0] * x[2]);
    }
    EXPECT_EQ(prep.stats().records, recorded);
    EXPECT_EQ(prep.stats().pullbacks, 5u);
}

TEST(Tape, InPlaceFunctionWithCache) {
    const Function f = make_inplace_function("ip", 3, 2, [](auto y, auto x, const auto& ctx) {
        auto buf = ctx.cache(0);
        buf[0] = x[0] * x[1];
        buf[1] = buf[0] * x[2];
        y[0] = buf[1];
        y[1] = buf[0] + x[2];
    });
    std::vector<double> cache(2, 0.0);
    const std::vector<double> x{2.0, 3.0, 5.0};
    const DenseMatrix J = jacobian(f, Backend::tape(), x, {Context::cache(cache)}).to_dense();
    const DenseMatrix ref = DenseMatrix::from_rows({{15.0, 10.0, 6.0}, {3.0, 2.0, 1.0}});
    EXPECT_EQ(J, ref);
}

TEST(Tape, PushforwardViaTransposeFallback) {
    const Function f = make_function("f", 2, 2, [](auto x) {
        using S = scalar_t<decltype(x)>;
        return std::vector<S>{x[0] * x[1], x[0] - x[1]};
    });
    const std::vector<double> x{2.0, 3.0};
    Batch v(1, 2);
    v(0, 0) = 1.0;
    v(0, 1) = 1.0;
    const Batch r = pushforward(f, Backend::tape(), x, v);
    EXPECT_EQ(r(0, 0), 5.0);
    EXPECT_EQ(r(0, 1), 0.0);
    EXPECT_THROW(pushforward(f, Backend::tape({.transpose_fallback = false}), x, v), UnsupportedOperator);
}

TEST(Tape, NonFiniteValuesPropagate) {
    const Function f = make_function("sqrtx", 1, 1, [](auto x) { return adkit::sqrt(x[0]); });
    const std::vector<double> x{0.0};
    EXPECT_FALSE(std::isfinite(gradient(f, Backend::tape(), x)[0]));
}

namespace {

Function sumsq(std::size_t n) {
    return make_function("sumsq", n, 1, [](auto x) {
        using S = scalar_t<decltype(x)>;
        S s = x[0] * x[0];
        for (std::size_t i = 1; i < x.size(); ++i) s = s + x[i] * x[i];
        return s;
    });
}

}  // namespace

TEST(TapeExamples, SumOfSquaresNodeCount) {
    const std::vector<double> x{1.0, 2.0, 3.0};
    const Tape t = record(sumsq(3), x);
    EXPECT_EQ(t.count(Primitive::mul), 3u);
    EXPECT_EQ(t.count(Primitive::add), 2u);
}

TEST(TapeExamples, ConstantIsEmbeddedAsLiteral) {
    const Function f = make_function("scale", 1, 1, [](auto x, const auto& ctx) { return ctx.constant(0)[0] * x[0]; });
    std::vector<double> c{4.0};
    const std::vector<double> x{1.5};
    Tape t = record(f, x, {Context::constant(c)});
    c[0] = 100.0;
    const std::vector<double> x2{2.0};
    EXPECT_EQ(t.replay(x2)[0], 8.0);
    EXPECT_EQ(t.reverse_sweep(std::vector<double>{1.0})[0], 4.0);
}

TEST(TapeExamples, IdentitySweepReturnsSeed) {
    const Function id = make_function("id", 3, 3, [](auto x) {
        using S = scalar_t<decltype(x)>;
        return std::vector<S>(x.begin(), x.end());
    });
    const std::vector<double> x{1.0, 2.0, 3.0};
    Tape t = record(id, x);
    t.replay(x);
    const std::vector<double> seed{0.5, -2.0, 7.0};
    EXPECT_EQ(t.reverse_sweep(seed), seed);
}

TEST(TapeExamples, Replay) {
    Tape t = record(sumsq(3), std::vector<double>{0.0, 0.0, 0.0});
    EXPECT_EQ(t.replay(std::vector<double>{1.0, 2.0, 3.0})[0], 14.0);
    std::mt19937_64 rng(22);
    const Function f = make_function("composite", 4, 2, [](auto x) {
        using S = scalar_t<decltype(x)>;
        return std::vector<S>{adkit::sin(x[0]) * x[1] + adkit::exp(x[2] * x[3]), x[0] / (x[1] * x[1] + 1.0)};
    });
    const auto x0 = oracle::random_vector(rng, 4);
    Tape at_x0 = record(f, x0);
    EXPECT_EQ(at_x0.replay(x0), f(x0));
    Tape at_zero = record(f, std::vector<double>(4, 0.0));
    const auto x1 = oracle::random_vector(rng, 4);
    EXPECT_EQ(at_zero.replay(x1), f(x1));
}

TEST(TapeExamples, ReverseSweep) {
    Tape t = record(sumsq(3), std::vector<double>{1.0, 2.0, 3.0});
    t.replay(std::vector<double>{1.0, 2.0, 3.0});
    EXPECT_EQ(t.reverse_sweep(std::vector<double>{1.0}), (std::vector<double>{2.0, 4.0, 6.0}));
    const Function two = make_function("two_out", 3, 2, [](auto x) {
        using S = scalar_t<decltype(x)>;
        return std::vector<S>{x[0] * x[1], x[1] + x[2]};
    });
    const std::vector<double> x{1.0, 2.0, 3.0};
    Tape t2 = record(two, x);
    t2.replay(x);
    EXPECT_EQ(t2.reverse_sweep(std::vector<double>{0.0, 1.0}), (std::vector<double>{0.0, 1.0, 1.0}));

    std::mt19937_64 rng(23);
    const Function f = make_function("composite", 4, 3, [](auto x) {
        using S = scalar_t<decltype(x)>;
        return std::vector<S>{adkit::tanh(x[0] * x[1]), adkit::sqrt(x[2] * x[2] + 1.0) * x[3],
                              adkit::cos(x[0]) / (2.0 + x[3])};
    });
    const auto xr = oracle::random_vector(rng, 4);
    const auto w = oracle::random_vector(rng, 3);
    Batch W(1, 3);
    std::copy(w.begin(), w.end(), W.row(0).begin());
    const Batch g = pullback(f, Backend::tape(), xr, W);
    const DenseMatrix J = oracle::central_jacobian(f, xr);
    for (std::size_t i = 0; i < 4; ++i) {
        double ref = 0;
        for (std::size_t j = 0; j < 3; ++j) ref += w[j] * J(j, i);
        EXPECT_NEAR(g(0, i), ref, 1e-6);
    }
}

TEST(TapeProperties, TopologicalOrder) {
    const Function f = make_function("f", 3, 1, [](auto x) { return adkit::exp(x[0] * x[1]) / (x[2] + 2.0); });
    const Tape t = record(f, std::vector<double>{0.1, 0.2, 0.3});
    for (std::size_t k = 0; k < t.nodes().size(); ++k) {
        const auto& node = t.nodes()[k];
        const auto slot = static_cast<std::int32_t>(t.input_count() + k);
        for (std::int32_t a : {node.a, node.b}) EXPECT_LT(a, slot);
    }
}

TEST(TapeProperties, TapeReuseMatchesFreshRecording) {
    std::mt19937_64 rng(24);
    const auto p = oracle::PolyMap::random(rng, 5, 3);
    const Function f = p.function();
    Tape reused = record(f, oracle::random_vector(rng, 5));
    for (int k = 0; k < 50; ++k) {
        const auto x = oracle::random_vector(rng, 5);
        const auto w = oracle::random_vector(rng, 3);
        Tape fresh = record(f, x);
        EXPECT_EQ(reused.replay(x), fresh.replay(x));
        EXPECT_EQ(reused.reverse_sweep(w), fresh.reverse_sweep(w));
    }
}

TEST(TapeProperties, SumAdjointsAreOnes) {
    const Function f = make_function("sum", 6, 1, [](auto x) { return adkit::sum(x); });
    std::mt19937_64 rng(25);
    const auto x = oracle::random_vector(rng, 6);
    EXPECT_EQ(gradient(f, Backend::tape(), x), Vector(6, 1.0));
}

TEST(TapeProperties, ZeroAllocationSteadyState) {
    const Function f = sumsq(50);
    std::mt19937_64 rng(26);
    auto x = oracle::random_vector(rng, 50);
    Preparation prep = prepare(Operator::gradient, f, Backend::tape(), x);
    std::vector<double> g(50);
    gradient_into(g, f, prep, Backend::tape(), x);
    const std::size_t a0 = harness::allocation_count();
    for (int k = 0; k < 10; ++k) {
        x[k] += 0.1;
        gradient_into(g, f, prep, Backend::tape(), x);
    }
    EXPECT_EQ(harness::allocation_count(), a0);
}
