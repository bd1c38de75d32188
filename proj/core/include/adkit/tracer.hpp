#pragma once

// Index-set tracers for sparsity pattern detection.
//
// Tracers carry the primal value of the typical input so that value-dependent
// control flow follows the same branch as a plain evaluation would. Every
// propagation rule returns a union of its operands' sets: over-approximation
// is allowed, under-approximation never.

#include <cstdint>
#include <utility>
#include <vector>

#include "adkit/dual.hpp"
#include "adkit/primitives.hpp"

namespace adkit {

/// Sorted, duplicate-free set of input indices.
using IndexSet = std::vector<std::int32_t>;
/// Sorted, duplicate-free set of index pairs (i <= j).
using PairSet = std::vector<std::pair<std::int32_t, std::int32_t>>;

IndexSet set_union(const IndexSet& a, const IndexSet& b);
PairSet set_union(const PairSet& a, const PairSet& b);
/// All pairs {i, j} with i in a and j in b, normalized to i <= j.
PairSet cross_pairs(const IndexSet& a, const IndexSet& b);

/// First-order tracer: which inputs a value depends on.
struct JacobianTracer {
    double value = 0.0;
    IndexSet deps;

    JacobianTracer() = default;
    template <Passive P>
    JacobianTracer(P c) : value(static_cast<double>(c)) {}
    JacobianTracer(double v, IndexSet s) : value(v), deps(std::move(s)) {}

    JacobianTracer& operator+=(const JacobianTracer& o) { return *this = *this + o; }
    JacobianTracer& operator-=(const JacobianTracer& o) { return *this = *this - o; }
    JacobianTracer& operator*=(const JacobianTracer& o) { return *this = *this * o; }
    JacobianTracer& operator/=(const JacobianTracer& o) { return *this = *this / o; }

    friend JacobianTracer operator+(const JacobianTracer& a) { return a; }
    friend JacobianTracer operator-(const JacobianTracer& a) { return {-a.value, a.deps}; }
    friend JacobianTracer operator+(const JacobianTracer& a, const JacobianTracer& b) {
        return {a.value + b.value, set_union(a.deps, b.deps)};
    }
    friend JacobianTracer operator-(const JacobianTracer& a, const JacobianTracer& b) {
        return {a.value - b.value, set_union(a.deps, b.deps)};
    }
    friend JacobianTracer operator*(const JacobianTracer& a, const JacobianTracer& b) {
        return {a.value * b.value, set_union(a.deps, b.deps)};
    }
    friend JacobianTracer operator/(const JacobianTracer& a, const JacobianTracer& b) {
        return {a.value / b.value, set_union(a.deps, b.deps)};
    }
};

/// Second-order tracer: first-order dependencies plus nonlinear interactions.
struct HessianTracer {
    double value = 0.0;
    IndexSet grad;
    PairSet hess;

    HessianTracer() = default;
    template <Passive P>
    HessianTracer(P c) : value(static_cast<double>(c)) {}
    HessianTracer(double v, IndexSet g, PairSet h) : value(v), grad(std::move(g)), hess(std::move(h)) {}

    HessianTracer& operator+=(const HessianTracer& o) { return *this = *this + o; }
    HessianTracer& operator-=(const HessianTracer& o) { return *this = *this - o; }
    HessianTracer& operator*=(const HessianTracer& o) { return *this = *this * o; }
    HessianTracer& operator/=(const HessianTracer& o) { return *this = *this / o; }

    friend HessianTracer operator+(const HessianTracer& a) { return a; }
    friend HessianTracer operator-(const HessianTracer& a) { return {-a.value, a.grad, a.hess}; }
    friend HessianTracer operator+(const HessianTracer& a, const HessianTracer& b) {
        return {a.value + b.value, set_union(a.grad, b.grad), set_union(a.hess, b.hess)};
    }
    friend HessianTracer operator-(const HessianTracer& a, const HessianTracer& b) {
        return {a.value - b.value, set_union(a.grad, b.grad), set_union(a.hess, b.hess)};
    }
    // Bilinear: only cross terms between the two operands are new.
    friend HessianTracer operator*(const HessianTracer& a, const HessianTracer& b) {
        return {a.value * b.value, set_union(a.grad, b.grad),
                set_union(set_union(a.hess, b.hess), cross_pairs(a.grad, b.grad))};
    }
    friend HessianTracer operator/(const HessianTracer& a, const HessianTracer& b);
};

template <class T>
concept Tracer = std::is_same_v<T, JacobianTracer> || std::is_same_v<T, HessianTracer>;

inline double primal(const JacobianTracer& x) { return x.value; }
inline double primal(const HessianTracer& x) { return x.value; }

#define ADKIT_TRACER_MIXED(sym)                                                                  \
    template <Tracer T, Passive P> T operator sym(const T& a, P c) { return a sym T(c); }        \
    template <Tracer T, Passive P> T operator sym(P c, const T& a) { return T(c) sym a; }
ADKIT_TRACER_MIXED(+)
ADKIT_TRACER_MIXED(-)
ADKIT_TRACER_MIXED(*)
ADKIT_TRACER_MIXED(/)
#undef ADKIT_TRACER_MIXED

#define ADKIT_TRACER_COMPARE(sym)                                                                    \
    template <Tracer T> bool operator sym(const T& a, const T& b) { return a.value sym b.value; }    \
    template <Tracer T, Passive P> bool operator sym(const T& a, P c) { return a.value sym c; }      \
    template <Tracer T, Passive P> bool operator sym(P c, const T& a) { return c sym a.value; }
ADKIT_TRACER_COMPARE(<)
ADKIT_TRACER_COMPARE(<=)
ADKIT_TRACER_COMPARE(>)
ADKIT_TRACER_COMPARE(>=)
ADKIT_TRACER_COMPARE(==)
ADKIT_TRACER_COMPARE(!=)
#undef ADKIT_TRACER_COMPARE

namespace detail {

/// Unary nonlinear propagation: Hessian interactions grow by grad x grad.
HessianTracer tracer_nonlinear(const HessianTracer& a, double value);
/// Unary piecewise-linear propagation (abs): first order only, no new pairs.
HessianTracer tracer_linear(const HessianTracer& a, double value);
/// Binary propagation with full unions (division, pow, max/min).
HessianTracer tracer_full(const HessianTracer& a, const HessianTracer& b, double value);

}  // namespace detail

#define ADKIT_TRACER_UNARY(fn, kind)                                                     \
    inline JacobianTracer fn(const JacobianTracer& a) { return {std::fn(a.value), a.deps}; } \
    inline HessianTracer fn(const HessianTracer& a) { return detail::tracer_##kind(a, std::fn(a.value)); }
ADKIT_TRACER_UNARY(exp, nonlinear)
ADKIT_TRACER_UNARY(log, nonlinear)
ADKIT_TRACER_UNARY(sin, nonlinear)
ADKIT_TRACER_UNARY(cos, nonlinear)
ADKIT_TRACER_UNARY(tanh, nonlinear)
ADKIT_TRACER_UNARY(sqrt, nonlinear)
ADKIT_TRACER_UNARY(erf, nonlinear)
#undef ADKIT_TRACER_UNARY

inline JacobianTracer abs(const JacobianTracer& a) { return {std::fabs(a.value), a.deps}; }
inline HessianTracer abs(const HessianTracer& a) { return detail::tracer_linear(a, std::fabs(a.value)); }

inline JacobianTracer pow(const JacobianTracer& a, const JacobianTracer& b) {
    return {std::pow(a.value, b.value), set_union(a.deps, b.deps)};
}
inline HessianTracer pow(const HessianTracer& a, const HessianTracer& b) {
    return detail::tracer_full(a, b, std::pow(a.value, b.value));
}
inline JacobianTracer max(const JacobianTracer& a, const JacobianTracer& b) {
    return {adkit::max(a.value, b.value), set_union(a.deps, b.deps)};
}
inline JacobianTracer min(const JacobianTracer& a, const JacobianTracer& b) {
    return {adkit::min(a.value, b.value), set_union(a.deps, b.deps)};
}
// max/min are piecewise linear: first-order union, second-order union without new pairs.
inline HessianTracer max(const HessianTracer& a, const HessianTracer& b) {
    return {adkit::max(a.value, b.value), set_union(a.grad, b.grad), set_union(a.hess, b.hess)};
}
inline HessianTracer min(const HessianTracer& a, const HessianTracer& b) {
    return {adkit::min(a.value, b.value), set_union(a.grad, b.grad), set_union(a.hess, b.hess)};
}
template <Tracer T, Passive P> T pow(const T& a, P c) { return pow(a, T(c)); }
template <Tracer T, Passive P> T pow(P c, const T& b) { return pow(T(c), b); }
template <Tracer T, Passive P> T max(const T& a, P c) { return max(a, T(c)); }
template <Tracer T, Passive P> T max(P c, const T& b) { return max(T(c), b); }
template <Tracer T, Passive P> T min(const T& a, P c) { return min(a, T(c)); }
template <Tracer T, Passive P> T min(P c, const T& b) { return min(T(c), b); }

}  // namespace adkit
