#pragma once

// Primitive identifiers, double-valued math entry points, and the partial
// derivative rules shared by every scalar type (dual lanes, tape sweeps,
// nested duals).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string_view>
#include <utility>

namespace adkit {

enum class Primitive : std::uint8_t {
    add,
    sub,
    mul,
    div,
    neg,
    pow,
    exp,
    log,
    sin,
    cos,
    tanh,
    sqrt,
    abs,
    max,
    min,
    erf,
    sum,
    // Comparisons carry no tangent; the tape records them as branch guards.
    lt,
    le,
    gt,
    ge,
    eq,
    ne,
    // Opaque call into another backend (DifferentiateWith).
    external,
};

std::string_view primitive_name(Primitive p) noexcept;
std::optional<Primitive> primitive_from_name(std::string_view name) noexcept;

// Plain double versions, so generic code can call adkit::exp(x) for any scalar.
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double tanh(double x) { return std::tanh(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double abs(double x) { return std::fabs(x); }
inline double erf(double x) { return std::erf(x); }
inline double pow(double a, double b) { return std::pow(a, b); }
// Ties select the first argument, matching the derivative convention.
inline double max(double a, double b) { return a >= b ? a : b; }
inline double min(double a, double b) { return a <= b ? a : b; }
inline double primal(double x) { return x; }

namespace rules {

// Unary rules: value(a) and derivative(a, out) where out = value(a).
// Binary rules: partials(a, b, out) -> {d out/d a, d out/d b}.
// All are generic in the value type V so that nested duals reuse them.

struct Neg {
    static constexpr Primitive id = Primitive::neg;
    template <class V> static V value(const V& a) { return -a; }
    template <class V> static V derivative(const V&, const V&) { return V(-1.0); }
};

struct Exp {
    static constexpr Primitive id = Primitive::exp;
    template <class V> static V value(const V& a) { return exp(a); }
    template <class V> static V derivative(const V&, const V& out) { return out; }
};

struct Log {
    static constexpr Primitive id = Primitive::log;
    template <class V> static V value(const V& a) { return log(a); }
    template <class V> static V derivative(const V& a, const V&) { return 1.0 / a; }
};

struct Sin {
    static constexpr Primitive id = Primitive::sin;
    template <class V> static V value(const V& a) { return sin(a); }
    template <class V> static V derivative(const V& a, const V&) { return cos(a); }
};

struct Cos {
    static constexpr Primitive id = Primitive::cos;
    template <class V> static V value(const V& a) { return cos(a); }
    template <class V> static V derivative(const V& a, const V&) { return -sin(a); }
};

struct Tanh {
    static constexpr Primitive id = Primitive::tanh;
    template <class V> static V value(const V& a) { return tanh(a); }
    template <class V> static V derivative(const V&, const V& out) { return 1.0 - out * out; }
};

struct Sqrt {
    static constexpr Primitive id = Primitive::sqrt;
    template <class V> static V value(const V& a) { return sqrt(a); }
    template <class V> static V derivative(const V&, const V& out) { return 0.5 / out; }
};

// abs'(0) = 0.
struct Abs {
    static constexpr Primitive id = Primitive::abs;
    template <class V> static V value(const V& a) { return abs(a); }
    template <class V> static V derivative(const V& a, const V&) {
        const double p = primal(a);
        return V(p > 0.0 ? 1.0 : (p < 0.0 ? -1.0 : 0.0));
    }
};

struct Erf {
    static constexpr Primitive id = Primitive::erf;
    template <class V> static V value(const V& a) { return erf(a); }
    template <class V> static V derivative(const V& a, const V&) {
        return std::numbers::inv_sqrtpi * 2.0 * exp(-(a * a));
    }
};

struct Add {
    static constexpr Primitive id = Primitive::add;
    template <class V> static V value(const V& a, const V& b) { return a + b; }
    template <class V> static std::pair<V, V> partials(const V&, const V&, const V&) {
        return {V(1.0), V(1.0)};
    }
};

struct Sub {
    static constexpr Primitive id = Primitive::sub;
    template <class V> static V value(const V& a, const V& b) { return a - b; }
    template <class V> static std::pair<V, V> partials(const V&, const V&, const V&) {
        return {V(1.0), V(-1.0)};
    }
};

struct Mul {
    static constexpr Primitive id = Primitive::mul;
    template <class V> static V value(const V& a, const V& b) { return a * b; }
    template <class V> static std::pair<V, V> partials(const V& a, const V& b, const V&) {
        return {b, a};
    }
};

struct Div {
    static constexpr Primitive id = Primitive::div;
    template <class V> static V value(const V& a, const V& b) { return a / b; }
    template <class V> static std::pair<V, V> partials(const V&, const V& b, const V& out) {
        return {1.0 / b, -(out / b)};
    }
};

struct Pow {
    static constexpr Primitive id = Primitive::pow;
    template <class V> static V value(const V& a, const V& b) { return pow(a, b); }
    template <class V> static std::pair<V, V> partials(const V& a, const V& b, const V& out) {
        // d/db is only defined for a > 0; elsewhere the exponent is treated as fixed.
        V db = primal(a) > 0.0 ? out * log(a) : V(0.0);
        return {b * pow(a, b - 1.0), db};
    }
};

struct Max {
    static constexpr Primitive id = Primitive::max;
    template <class V> static V value(const V& a, const V& b) { return max(a, b); }
    template <class V> static std::pair<V, V> partials(const V& a, const V& b, const V&) {
        const bool first = primal(a) >= primal(b);
        return {V(first ? 1.0 : 0.0), V(first ? 0.0 : 1.0)};
    }
};

struct Min {
    static constexpr Primitive id = Primitive::min;
    template <class V> static V value(const V& a, const V& b) { return min(a, b); }
    template <class V> static std::pair<V, V> partials(const V& a, const V& b, const V&) {
        const bool first = primal(a) <= primal(b);
        return {V(first ? 1.0 : 0.0), V(first ? 0.0 : 1.0)};
    }
};

}  // namespace rules

/// One row of a backend's primitive table, evaluated in plain doubles.
///
/// Unary primitives fill `derivative`; binary primitives fill `partials`.
/// Comparisons have neither (they carry no tangent). The tangent rule is
/// tangent_out = sum_k partial_k * tangent_k.
struct PrimitiveRule {
    Primitive primitive;
    std::string_view name;
    int arity;
    double (*value1)(double) = nullptr;
    double (*value2)(double, double) = nullptr;
    double (*derivative)(double a, double out) = nullptr;
    std::pair<double, double> (*partials)(double a, double b, double out) = nullptr;

    bool tangent_free() const noexcept { return derivative == nullptr && partials == nullptr; }

    /// Applies the tangent rule; `values` and `tangents` have `arity` entries
    /// (n entries for the sum reduction).
    double tangent(std::span<const double> values, std::span<const double> tangents) const;
};

}  // namespace adkit
