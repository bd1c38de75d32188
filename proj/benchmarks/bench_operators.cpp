#include <benchmark/benchmark.h>

#include <random>

#include "adkit/adkit.hpp"

using namespace adkit;

namespace {

Function sumsq(std::size_t n) {
    return make_function("sumsq", n, 1, [](auto x) {
        using S = scalar_t<decltype(x)>;
        S s = x[0] * x[0];
        for (std::size_t i = 1; i < x.size(); ++i) s = s + x[i] * x[i];
        return s;
    });
}

Function stencil(std::size_t n) {
    return make_function("stencil", n, n, [](auto x) {
        using S = scalar_t<decltype(x)>;
        const std::size_t n = x.size();
        std::vector<S> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            S v = x[i] * x[i] * x[i] - 2.0 * x[i];
            if (i > 0) v = v + x[i - 1];
            if (i + 1 < n) v = v + x[i + 1];
            y[i] = v;
        }
        return y;
    });
}

Function chain(std::size_t n) {
    return make_function("chain", n, 1, [](auto x) {
        using S = scalar_t<decltype(x)>;
        S s(0.0);
        for (std::size_t i = 0; i + 1 < x.size(); ++i) s = s + x[i] * x[i] * x[i + 1];
        return s;
    });
}

std::vector<double> input(std::size_t n) {
    std::mt19937_64 rng(n);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<double> x(n);
    for (double& v : x) v = d(rng);
    return x;
}

const Backend& backend(int k) {
    static const Backend all[] = {Backend::dual(), Backend::tape(), Backend::finite_diff()};
    return all[k];
}

void GradientPrepared(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Backend& b = backend(static_cast<int>(state.range(1)));
    const Function f = sumsq(n);
    const auto x = input(n);
    Preparation prep = prepare(Operator::gradient, f, b, x);
    std::vector<double> g(n);
    for (auto _ : state) {
        gradient_into(g, f, prep, b, x);
        benchmark::DoNotOptimize(g.data());
    }
    state.SetLabel(b.id());
}

void GradientUnprepared(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Backend& b = backend(static_cast<int>(state.range(1)));
    const Function f = sumsq(n);
    const auto x = input(n);
    for (auto _ : state) {
        Vector g = gradient(f, b, x);
        benchmark::DoNotOptimize(g.data());
    }
    state.SetLabel(b.id());
}

void JacobianDense(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Function f = stencil(n);
    const auto x = input(n);
    const Backend b = Backend::dual();
    Preparation prep = prepare(Operator::jacobian, f, b, x);
    Matrix J;
    for (auto _ : state) {
        jacobian_into(J, f, prep, b, x);
        benchmark::DoNotOptimize(&J);
    }
}

void JacobianSparse(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Function f = stencil(n);
    const auto x = input(n);
    const Backend b = Backend::sparse(Backend::dual());
    Preparation prep = prepare(Operator::jacobian, f, b, x);
    Matrix J;
    for (auto _ : state) {
        jacobian_into(J, f, prep, b, x);
        benchmark::DoNotOptimize(&J);
    }
    state.counters["colors"] = static_cast<double>(prep.coloring()->num_colors());
}

void HessianDense(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Function f = chain(n);
    const auto x = input(n);
    const Backend b = Backend::second_order(Backend::dual(), Backend::tape());
    Preparation prep = prepare(Operator::hessian, f, b, x);
    Matrix H;
    for (auto _ : state) {
        hessian_into(H, f, prep, b, x);
        benchmark::DoNotOptimize(&H);
    }
}

void HessianSparse(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Function f = chain(n);
    const auto x = input(n);
    const Backend b = Backend::sparse(Backend::second_order(Backend::dual(), Backend::tape()));
    Preparation prep = prepare(Operator::hessian, f, b, x);
    Matrix H;
    for (auto _ : state) {
        hessian_into(H, f, prep, b, x);
        benchmark::DoNotOptimize(&H);
    }
}

void Hvp(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Function f = chain(n);
    const auto x = input(n);
    const Backend b = Backend::second_order(Backend::dual(), Backend::tape());
    Preparation prep = prepare(Operator::hvp, f, b, x);
    Batch v(1, n, 1.0), out;
    for (auto _ : state) {
        hvp_into(out, f, prep, b, x, v);
        benchmark::DoNotOptimize(out.data().data());
    }
}

void TapeRecord(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Function f = sumsq(n);
    const auto x = input(n);
    for (auto _ : state) {
        Tape t = record(f, x);
        benchmark::DoNotOptimize(t.node_count());
    }
}

}  // namespace

BENCHMARK(GradientPrepared)->ArgsProduct({{100, 1000}, {0, 1, 2}});
BENCHMARK(GradientUnprepared)->ArgsProduct({{100, 1000}, {0, 1, 2}});
BENCHMARK(JacobianDense)->Arg(64)->Arg(256);
BENCHMARK(JacobianSparse)->Arg(64)->Arg(256);
BENCHMARK(HessianDense)->Arg(32)->Arg(128);
BENCHMARK(HessianSparse)->Arg(32)->Arg(128);
BENCHMARK(Hvp)->Arg(128)->Arg(1024);
BENCHMARK(TapeRecord)->Arg(1000);
BENCHMARK_MAIN();
