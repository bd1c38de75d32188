#include <cmath>
#include <random>

#include "adkit/harness.hpp"

namespace adkit::harness {

std::vector<Context> Instance::contexts() {
    std::vector<Context> out;
    out.reserve(context_data.size());
    for (std::size_t i = 0; i < context_data.size(); ++i)
        out.push_back(context_kinds[i] == Context::Kind::constant ? Context::constant(context_data[i])
                                                                  : Context::cache(context_data[i]));
    return out;
}

namespace {

constexpr std::size_t kSeeds = 3;

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (double& e : v) e = d(rng);
    return v;
}

Batch random_batch(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    Batch b(rows, cols);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (double& e : b.data()) e = d(rng);
    return b;
}

DenseMatrix row_of(const std::vector<double>& v) {
    DenseMatrix r(1, v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r(0, i) = v[i];
    return r;
}

// seeds (k x n) times J^T (n x m).
DenseMatrix times_jt(const Batch& seeds, const DenseMatrix& J) {
    DenseMatrix r(seeds.rows(), J.rows());
    for (std::size_t k = 0; k < seeds.rows(); ++k)
        for (std::size_t j = 0; j < J.rows(); ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < J.cols(); ++i) s += J(j, i) * seeds(k, i);
            r(k, j) = s;
        }
    return r;
}

// seeds (k x m) times J (m x n).
DenseMatrix times_j(const Batch& seeds, const DenseMatrix& J) {
    DenseMatrix r(seeds.rows(), J.cols());
    for (std::size_t k = 0; k < seeds.rows(); ++k)
        for (std::size_t i = 0; i < J.cols(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < J.rows(); ++j) s += seeds(k, j) * J(j, i);
            r(k, i) = s;
        }
    return r;
}

Function sumsq(std::size_t n) {
    return make_function("sumsq", n, 1, [](auto x) {
        using S = scalar_t<decltype(x)>;
        S s = x[0] * x[0];
        for (std::size_t i = 1; i < x.size(); ++i) s = s + x[i] * x[i];
        return s;
    });
}

// y_j = x_j^2 x_{j+1} + 3 x_j, indices cyclic.
Function cyclic_poly(std::size_t n) {
    return make_function("cyclic_poly", n, n, [](auto x) {
        using S = scalar_t<decltype(x)>;
        const std::size_t n = x.size();
        std::vector<S> y(n);
        for (std::size_t j = 0; j < n; ++j) y[j] = x[j] * x[j] * x[(j + 1) % n] + 3.0 * x[j];
        return y;
    });
}

DenseMatrix cyclic_poly_jacobian(const std::vector<double>& x) {
    const std::size_t n = x.size();
    DenseMatrix J(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        J(j, j) += 2.0 * x[j] * x[(j + 1) % n] + 3.0;
        J(j, (j + 1) % n) += x[j] * x[j];
    }
    return J;
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

Function quadratic_form(std::size_t n) {
    return make_function("quadratic_form", n, 1, [](auto x, const auto& ctx) {
        using S = scalar_t<decltype(x)>;
        const auto A = ctx.constant(0);
        const std::size_t n = x.size();
        S s(0.0);
        for (std::size_t i = 0; i < n; ++i) {
            S row(0.0);
            for (std::size_t j = 0; j < n; ++j) row = row + A[i * n + j] * x[j];
            s = s + x[i] * row;
        }
        return s;
    });
}

std::vector<double> random_matrix(std::mt19937_64& rng, std::size_t n) { return random_vector(rng, n * n); }

DenseMatrix symmetrized(const std::vector<double>& A, std::size_t n) {
    DenseMatrix S(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) S(i, j) = A[i * n + j] + A[j * n + i];
    return S;
}

std::vector<Scenario> build() {
    std::vector<Scenario> out;

    out.push_back({"sumsq_gradient", Operator::gradient, "gradient of the squared norm", 100, true,
                   [](std::size_t n) {
                       std::mt19937_64 rng(n);
                       Instance inst;
                       inst.f = sumsq(n);
                       inst.x = random_vector(rng, n);
                       std::vector<double> g(n);
                       for (std::size_t i = 0; i < n; ++i) g[i] = 2.0 * inst.x[i];
                       inst.reference = row_of(g);
                       return inst;
                   },
                   nullptr});

    out.push_back({"poly_pushforward", Operator::pushforward, "directional derivatives of a cyclic polynomial map", 10,
                   true,
                   [](std::size_t n) {
                       std::mt19937_64 rng(n + 1);
                       Instance inst;
                       inst.f = cyclic_poly(n);
                       inst.x = random_vector(rng, n);
                       inst.seeds = random_batch(rng, kSeeds, n);
                       inst.reference = times_jt(inst.seeds, cyclic_poly_jacobian(inst.x));
                       return inst;
                   },
                   nullptr});

    out.push_back({"poly_pullback", Operator::pullback, "vector-Jacobian products of a cyclic polynomial map", 10, true,
                   [](std::size_t n) {
                       std::mt19937_64 rng(n + 2);
                       Instance inst;
                       inst.f = cyclic_poly(n);
                       inst.x = random_vector(rng, n);
                       inst.seeds = random_batch(rng, kSeeds, n);
                       inst.reference = times_j(inst.seeds, cyclic_poly_jacobian(inst.x));
                       return inst;
                   },
                   nullptr});

    out.push_back({"exp_derivative", Operator::derivative, "derivative of (exp 2t, t^3, sin t)", 1, true,
                   [](std::size_t) {
                       Instance inst;
                       inst.f = make_function("exp_curve", 1, 3, [](auto x) {
                           using S = scalar_t<decltype(x)>;
                           const S t = x[0];
                           return std::vector<S>{exp(2.0 * t), t * t * t, sin(t)};
                       });
                       const double t = 0.3;
                       inst.x = {t};
                       inst.reference = row_of({2.0 * std::exp(2.0 * t), 3.0 * t * t, std::cos(t)});
                       return inst;
                   },
                   nullptr});

    out.push_back({"cubic_second_derivative", Operator::second_derivative, "second derivative of (t^3 + 2t^2, exp t)",
                   1, true,
                   [](std::size_t) {
                       Instance inst;
                       inst.f = make_function("cubic_curve", 1, 2, [](auto x) {
                           using S = scalar_t<decltype(x)>;
                           const S t = x[0];
                           return std::vector<S>{t * t * t + 2.0 * t * t, exp(t)};
                       });
                       const double t = 0.7;
                       inst.x = {t};
                       inst.reference = row_of({6.0 * t + 4.0, std::exp(t)});
                       return inst;
                   },
                   nullptr});

    out.push_back({"stencil_jacobian", Operator::jacobian, "tridiagonal stencil with a cubic term", 32, true,
                   [](std::size_t n) {
                       std::mt19937_64 rng(n + 3);
                       Instance inst;
                       inst.f = stencil(n);
                       inst.x = random_vector(rng, n);
                       DenseMatrix J(n, n);
                       for (std::size_t i = 0; i < n; ++i) {
                           J(i, i) = 3.0 * inst.x[i] * inst.x[i] - 2.0;
                           if (i > 0) J(i, i - 1) = 1.0;
                           if (i + 1 < n) J(i, i + 1) = 1.0;
                       }
                       inst.reference = J;
                       return inst;
                   },
                   nullptr});

    out.push_back({"quadratic_form_hvp", Operator::hvp, "x^T A x with A passed as a Constant", 8, true,
                   [](std::size_t n) {
                       std::mt19937_64 rng(n + 4);
                       Instance inst;
                       inst.f = quadratic_form(n);
                       inst.x = random_vector(rng, n);
                       inst.context_data = {random_matrix(rng, n)};
                       inst.context_kinds = {Context::Kind::constant};
                       inst.seeds = random_batch(rng, 2, n);
                       const DenseMatrix H = symmetrized(inst.context_data[0], n);
                       inst.reference = times_jt(inst.seeds, H);
                       return inst;
                   },
                   nullptr});

    out.push_back({"quadratic_form_hessian", Operator::hessian, "Hessian of x^T A x with A passed as a Constant", 8,
                   true,
                   [](std::size_t n) {
                       std::mt19937_64 rng(n + 5);
                       Instance inst;
                       inst.f = quadratic_form(n);
                       inst.x = random_vector(rng, n);
                       inst.context_data = {random_matrix(rng, n)};
                       inst.context_kinds = {Context::Kind::constant};
                       inst.reference = symmetrized(inst.context_data[0], n);
                       return inst;
                   },
                   nullptr});

    out.push_back({"inplace_stencil_cache", Operator::jacobian, "in-place stencil using a Cache as scratch", 16, true,
                   [](std::size_t n) {
                       std::mt19937_64 rng(n + 6);
                       Instance inst;
                       inst.f = make_inplace_function("inplace_stencil", n, n, [](auto y, auto x, const auto& ctx) {
                           const auto c = ctx.cache(0);
                           const std::size_t n = x.size();
                           for (std::size_t i = 0; i < n; ++i) c[i] = x[i] * x[i];
                           for (std::size_t i = 0; i < n; ++i) y[i] = i + 1 < n ? c[i] + x[i + 1] : c[i];
                       });
                       inst.x = random_vector(rng, n);
                       inst.context_data = {random_vector(rng, n)};
                       inst.context_kinds = {Context::Kind::cache};
                       DenseMatrix J(n, n);
                       for (std::size_t i = 0; i < n; ++i) {
                           J(i, i) = 2.0 * inst.x[i];
                           if (i + 1 < n) J(i, i + 1) = 1.0;
                       }
                       inst.reference = J;
                       return inst;
                   },
                   nullptr});

    out.push_back({"branchy_gradient", Operator::gradient,
                   "piecewise function prepared where every branch is positive, evaluated across both branches", 10,
                   true,
                   [](std::size_t n) {
                       std::mt19937_64 rng(n + 7);
                       Instance inst;
                       inst.f = make_function("branchy", n, 1, [](auto x) {
                           using S = scalar_t<decltype(x)>;
                           S s(0.0);
                           for (std::size_t i = 0; i < x.size(); ++i) s = s + (x[i] > 0.0 ? x[i] * x[i] : 3.0 * x[i]);
                           return s;
                       });
                       inst.prep_x = random_vector(rng, n, 0.5, 1.5);
                       inst.x = random_vector(rng, n, 0.5, 1.5);
                       for (std::size_t i = 1; i < n; i += 2) inst.x[i] = -inst.x[i];
                       std::vector<double> g(n);
                       for (std::size_t i = 0; i < n; ++i) g[i] = inst.x[i] > 0.0 ? 2.0 * inst.x[i] : 3.0;
                       inst.reference = row_of(g);
                       return inst;
                   },
                   // A recorded tape replays the branch taken at preparation.
                   [](const Backend& b) { return b.id().find("tape") != std::string::npos; }});

    out.push_back({"selftest_wrong_reference", Operator::gradient, "squared norm against a corrupted reference", 10,
                   false,
                   [](std::size_t n) {
                       std::mt19937_64 rng(n);
                       Instance inst;
                       inst.f = sumsq(n);
                       inst.x = random_vector(rng, n);
                       std::vector<double> g(n);
                       for (std::size_t i = 0; i < n; ++i) g[i] = 2.0 * inst.x[i] + 1.0;
                       inst.reference = row_of(g);
                       return inst;
                   },
                   nullptr});

    return out;
}

}  // namespace

const std::vector<Scenario>& builtin_scenarios() {
    static const std::vector<Scenario> all = build();
    return all;
}

const Scenario& find_scenario(std::string_view name) {
    for (const Scenario& s : builtin_scenarios())
        if (s.name == name) return s;
    throw ConfigError("", "", "unknown scenario '" + std::string(name) + "'");
}

}  // namespace adkit::harness
