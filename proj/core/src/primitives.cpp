#include "adkit/primitives.hpp"

#include <array>
#include <string>

#include "adkit/dual.hpp"
#include "adkit/errors.hpp"

namespace adkit {

namespace {

constexpr std::array<std::string_view, 24> kNames = {
    "add", "sub", "mul", "div", "neg", "pow", "exp", "log", "sin", "cos", "tanh", "sqrt",
    "abs", "max", "min", "erf", "sum", "lt",  "le",  "gt",  "ge",  "eq",  "ne",  "external",
};

template <class R>
PrimitiveRule unary_rule() {
    return {R::id, primitive_name(R::id), 1, +[](double a) { return R::value(a); }, nullptr,
            +[](double a, double out) { return R::derivative(a, out); }, nullptr};
}

template <class R>
PrimitiveRule binary_rule() {
    return {R::id,
            primitive_name(R::id),
            2,
            nullptr,
            +[](double a, double b) { return R::value(a, b); },
            nullptr,
            +[](double a, double b, double out) { return R::partials(a, b, out); }};
}

PrimitiveRule compare_rule(Primitive p, double (*v)(double, double)) {
    return {p, primitive_name(p), 2, nullptr, v, nullptr, nullptr};
}

// erf is deliberately absent: it is the tape-only primitive.
const std::array<PrimitiveRule, 22>& forward_table() {
    static const std::array<PrimitiveRule, 22> table = {
        binary_rule<rules::Add>(),
        binary_rule<rules::Sub>(),
        binary_rule<rules::Mul>(),
        binary_rule<rules::Div>(),
        unary_rule<rules::Neg>(),
        binary_rule<rules::Pow>(),
        unary_rule<rules::Exp>(),
        unary_rule<rules::Log>(),
        unary_rule<rules::Sin>(),
        unary_rule<rules::Cos>(),
        unary_rule<rules::Tanh>(),
        unary_rule<rules::Sqrt>(),
        unary_rule<rules::Abs>(),
        binary_rule<rules::Max>(),
        binary_rule<rules::Min>(),
        PrimitiveRule{Primitive::sum, primitive_name(Primitive::sum), -1, nullptr, nullptr, nullptr, nullptr},
        compare_rule(Primitive::lt, +[](double a, double b) { return a < b ? 1.0 : 0.0; }),
        compare_rule(Primitive::le, +[](double a, double b) { return a <= b ? 1.0 : 0.0; }),
        compare_rule(Primitive::gt, +[](double a, double b) { return a > b ? 1.0 : 0.0; }),
        compare_rule(Primitive::ge, +[](double a, double b) { return a >= b ? 1.0 : 0.0; }),
        compare_rule(Primitive::eq, +[](double a, double b) { return a == b ? 1.0 : 0.0; }),
        compare_rule(Primitive::ne, +[](double a, double b) { return a != b ? 1.0 : 0.0; }),
    };
    return table;
}

}  // namespace

std::string_view primitive_name(Primitive p) noexcept {
    const auto i = static_cast<std::size_t>(p);
    return i < kNames.size() ? kNames[i] : std::string_view("unknown");
}

std::optional<Primitive> primitive_from_name(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kNames.size(); ++i)
        if (kNames[i] == name) return static_cast<Primitive>(i);
    return std::nullopt;
}

double PrimitiveRule::tangent(std::span<const double> values, std::span<const double> tangents) const {
    if (primitive == Primitive::sum) {
        double t = 0.0;
        for (double d : tangents) t += d;
        return t;
    }
    if (tangent_free()) return 0.0;
    if (arity == 1) {
        const double out = value1(values[0]);
        return derivative(values[0], out) * tangents[0];
    }
    const double out = value2(values[0], values[1]);
    const auto [pa, pb] = partials(values[0], values[1], out);
    return pa * tangents[0] + pb * tangents[1];
}

std::span<const PrimitiveRule> forward_primitive_rules() {
    return forward_table();
}

std::optional<PrimitiveRule> lookup_forward_rule(Primitive p) {
    for (const PrimitiveRule& r : forward_table())
        if (r.primitive == p) return r;
    return std::nullopt;
}

std::optional<PrimitiveRule> lookup_forward_rule(std::string_view name) {
    const auto p = primitive_from_name(name);
    if (!p) return std::nullopt;
    return lookup_forward_rule(*p);
}

namespace detail {

void throw_unsupported_dual_primitive(Primitive p) {
    throw UnsupportedPrimitive("", "dual",
                               "no forward rule registered for primitive '" + std::string(primitive_name(p)) + "'");
}

}  // namespace detail

}  // namespace adkit
