#pragma once

// Forward-mode dual numbers with a fixed-width lane vector of tangents.
//
// Dual<V, W> carries a primal value of type V and W tangent lanes of type V.
// V is double for first-order forward mode and Dual<double, 1> for the nested
// (forward-over-forward) second-order plans.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <type_traits>

#include "adkit/errors.hpp"
#include "adkit/primitives.hpp"

namespace adkit {

template <class T>
concept Passive = std::is_arithmetic_v<T>;

template <class V, int W>
struct Dual {
    static_assert(W >= 1);
    static constexpr int width = W;
    using value_type = V;

    V val{};
    std::array<V, W> d{};

    constexpr Dual() = default;
    template <Passive P>
    constexpr Dual(P c) : val(static_cast<double>(c)) {}
    // Constant lift of the inner value type (only for nested duals).
    template <class U>
        requires(!Passive<U> && std::is_same_v<U, V>)
    constexpr Dual(const U& v) : val(v) {}

    Dual& operator+=(const Dual& o) { return *this = *this + o; }
    Dual& operator-=(const Dual& o) { return *this = *this - o; }
    Dual& operator*=(const Dual& o) { return *this = *this * o; }
    Dual& operator/=(const Dual& o) { return *this = *this / o; }
    template <Passive P> Dual& operator+=(P c) { val += static_cast<double>(c); return *this; }
    template <Passive P> Dual& operator-=(P c) { val -= static_cast<double>(c); return *this; }
    template <Passive P> Dual& operator*=(P c) { return *this = *this * c; }
    template <Passive P> Dual& operator/=(P c) { return *this = *this / c; }

    friend Dual operator+(const Dual& a) { return a; }
    friend Dual operator-(const Dual& a) {
        Dual r;
        r.val = -a.val;
        for (int k = 0; k < W; ++k) r.d[k] = -a.d[k];
        return r;
    }

    friend Dual operator+(const Dual& a, const Dual& b) {
        Dual r;
        r.val = a.val + b.val;
        for (int k = 0; k < W; ++k) r.d[k] = a.d[k] + b.d[k];
        return r;
    }
    friend Dual operator-(const Dual& a, const Dual& b) {
        Dual r;
        r.val = a.val - b.val;
        for (int k = 0; k < W; ++k) r.d[k] = a.d[k] - b.d[k];
        return r;
    }
    // Product rule: b * a' + a * b'.
    friend Dual operator*(const Dual& a, const Dual& b) {
        Dual r;
        r.val = a.val * b.val;
        for (int k = 0; k < W; ++k) r.d[k] = b.val * a.d[k] + a.val * b.d[k];
        return r;
    }
    friend Dual operator/(const Dual& a, const Dual& b) {
        Dual r;
        r.val = a.val / b.val;
        const V pa = 1.0 / b.val;
        const V pb = -(r.val / b.val);
        for (int k = 0; k < W; ++k) r.d[k] = pa * a.d[k] + pb * b.d[k];
        return r;
    }

    template <Passive P> friend Dual operator+(const Dual& a, P c) {
        Dual r = a;
        r.val = a.val + static_cast<double>(c);
        return r;
    }
    template <Passive P> friend Dual operator+(P c, const Dual& a) {
        Dual r = a;
        r.val = static_cast<double>(c) + a.val;
        return r;
    }
    template <Passive P> friend Dual operator-(const Dual& a, P c) {
        Dual r = a;
        r.val = a.val - static_cast<double>(c);
        return r;
    }
    template <Passive P> friend Dual operator-(P c, const Dual& a) {
        Dual r = -a;
        r.val = static_cast<double>(c) - a.val;
        return r;
    }
    template <Passive P> friend Dual operator*(const Dual& a, P c) {
        const double s = static_cast<double>(c);
        Dual r;
        r.val = a.val * s;
        for (int k = 0; k < W; ++k) r.d[k] = a.d[k] * s;
        return r;
    }
    template <Passive P> friend Dual operator*(P c, const Dual& a) {
        const double s = static_cast<double>(c);
        Dual r;
        r.val = s * a.val;
        for (int k = 0; k < W; ++k) r.d[k] = s * a.d[k];
        return r;
    }
    template <Passive P> friend Dual operator/(const Dual& a, P c) {
        const double s = static_cast<double>(c);
        Dual r;
        r.val = a.val / s;
        for (int k = 0; k < W; ++k) r.d[k] = a.d[k] / s;
        return r;
    }
    template <Passive P> friend Dual operator/(P c, const Dual& a) { return Dual(c) / a; }

    // Comparisons look at primal values only.
    friend bool operator<(const Dual& a, const Dual& b) { return a.val < b.val; }
    friend bool operator<=(const Dual& a, const Dual& b) { return a.val <= b.val; }
    friend bool operator>(const Dual& a, const Dual& b) { return a.val > b.val; }
    friend bool operator>=(const Dual& a, const Dual& b) { return a.val >= b.val; }
    friend bool operator==(const Dual& a, const Dual& b) { return a.val == b.val; }
    friend bool operator!=(const Dual& a, const Dual& b) { return a.val != b.val; }
    template <Passive P> friend bool operator<(const Dual& a, P c) { return a.val < c; }
    template <Passive P> friend bool operator<=(const Dual& a, P c) { return a.val <= c; }
    template <Passive P> friend bool operator>(const Dual& a, P c) { return a.val > c; }
    template <Passive P> friend bool operator>=(const Dual& a, P c) { return a.val >= c; }
    template <Passive P> friend bool operator==(const Dual& a, P c) { return a.val == c; }
    template <Passive P> friend bool operator!=(const Dual& a, P c) { return a.val != c; }
    template <Passive P> friend bool operator<(P c, const Dual& a) { return c < a.val; }
    template <Passive P> friend bool operator<=(P c, const Dual& a) { return c <= a.val; }
    template <Passive P> friend bool operator>(P c, const Dual& a) { return c > a.val; }
    template <Passive P> friend bool operator>=(P c, const Dual& a) { return c >= a.val; }
};

template <class T> struct is_dual : std::false_type {};
template <class V, int W> struct is_dual<Dual<V, W>> : std::true_type {};
template <class T> inline constexpr bool is_dual_v = is_dual<T>::value;

template <class V, int W>
double primal(const Dual<V, W>& x) {
    return primal(x.val);
}

namespace detail {

template <class Rule, class V, int W>
Dual<V, W> dual_unary(const Dual<V, W>& a) {
    Dual<V, W> r;
    r.val = Rule::value(a.val);
    const V g = Rule::derivative(a.val, r.val);
    for (int k = 0; k < W; ++k) r.d[k] = g * a.d[k];
    return r;
}

template <class Rule, class V, int W>
Dual<V, W> dual_binary(const Dual<V, W>& a, const Dual<V, W>& b) {
    Dual<V, W> r;
    r.val = Rule::value(a.val, b.val);
    const auto [pa, pb] = Rule::partials(a.val, b.val, r.val);
    for (int k = 0; k < W; ++k) r.d[k] = pa * a.d[k] + pb * b.d[k];
    return r;
}

[[noreturn]] void throw_unsupported_dual_primitive(Primitive p);

}  // namespace detail

template <class V, int W> Dual<V, W> exp(const Dual<V, W>& a) { return detail::dual_unary<rules::Exp>(a); }
template <class V, int W> Dual<V, W> log(const Dual<V, W>& a) { return detail::dual_unary<rules::Log>(a); }
template <class V, int W> Dual<V, W> sin(const Dual<V, W>& a) { return detail::dual_unary<rules::Sin>(a); }
template <class V, int W> Dual<V, W> cos(const Dual<V, W>& a) { return detail::dual_unary<rules::Cos>(a); }
template <class V, int W> Dual<V, W> tanh(const Dual<V, W>& a) { return detail::dual_unary<rules::Tanh>(a); }
template <class V, int W> Dual<V, W> sqrt(const Dual<V, W>& a) { return detail::dual_unary<rules::Sqrt>(a); }
template <class V, int W> Dual<V, W> abs(const Dual<V, W>& a) { return detail::dual_unary<rules::Abs>(a); }

// erf has no forward rule registered; functions using it need the tape
// backend or a DifferentiateWith wrapper.
template <class V, int W> Dual<V, W> erf(const Dual<V, W>&) {
    detail::throw_unsupported_dual_primitive(Primitive::erf);
}

template <class V, int W>
Dual<V, W> pow(const Dual<V, W>& a, const Dual<V, W>& b) {
    return detail::dual_binary<rules::Pow>(a, b);
}
template <class V, int W, Passive P>
Dual<V, W> pow(const Dual<V, W>& a, P c) {
    const double e = static_cast<double>(c);
    Dual<V, W> r;
    r.val = pow(a.val, V(e));
    const V g = e * pow(a.val, V(e - 1.0));
    for (int k = 0; k < W; ++k) r.d[k] = g * a.d[k];
    return r;
}
template <class V, int W, Passive P>
Dual<V, W> pow(P c, const Dual<V, W>& b) {
    return detail::dual_binary<rules::Pow>(Dual<V, W>(c), b);
}

template <class V, int W>
Dual<V, W> max(const Dual<V, W>& a, const Dual<V, W>& b) { return detail::dual_binary<rules::Max>(a, b); }
template <class V, int W>
Dual<V, W> min(const Dual<V, W>& a, const Dual<V, W>& b) { return detail::dual_binary<rules::Min>(a, b); }
template <class V, int W, Passive P>
Dual<V, W> max(const Dual<V, W>& a, P c) { return max(a, Dual<V, W>(c)); }
template <class V, int W, Passive P>
Dual<V, W> max(P c, const Dual<V, W>& b) { return max(Dual<V, W>(c), b); }
template <class V, int W, Passive P>
Dual<V, W> min(const Dual<V, W>& a, P c) { return min(a, Dual<V, W>(c)); }
template <class V, int W, Passive P>
Dual<V, W> min(P c, const Dual<V, W>& b) { return min(Dual<V, W>(c), b); }

/// Rule table of the forward (dual-number) backend.
std::span<const PrimitiveRule> forward_primitive_rules();
/// Looks up a primitive in the forward table; empty when no rule is registered.
std::optional<PrimitiveRule> lookup_forward_rule(Primitive p);
std::optional<PrimitiveRule> lookup_forward_rule(std::string_view name);

}  // namespace adkit
