#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <ranges>
#include <span>
#include <string>
#include <tuple>
#include <type_traits>
#include <vector>

#include "adkit/context.hpp"
#include "adkit/dual.hpp"
#include "adkit/errors.hpp"
#include "adkit/tape.hpp"
#include "adkit/tracer.hpp"

namespace adkit {

/// Array shape; functions operate on the flattened (row-major) elements.
class Shape {
public:
    Shape() = default;
    Shape(std::size_t n) : dims_{n} {}
    Shape(std::initializer_list<std::size_t> dims) : dims_(dims) {}
    explicit Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {}

    std::size_t size() const noexcept {
        return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1}, std::multiplies<>());
    }
    std::span<const std::size_t> dims() const noexcept { return dims_; }
    std::string to_string() const;

    friend bool operator==(const Shape&, const Shape&) = default;

private:
    std::vector<std::size_t> dims_{1};
};

// Scalar types every differentiable function is instantiated for.
using Dual1 = Dual<double, 1>;
using Dual4 = Dual<double, 4>;
using Dual8 = Dual<double, 8>;
using Dual16 = Dual<double, 16>;
// Forward-over-forward: outer lane (Dual1) inside inner gradient lanes.
using NestedDual1 = Dual<Dual1, 1>;
using NestedDual8 = Dual<Dual1, 8>;

template <class... Ts> struct TypeList {};
using ScalarTypes = TypeList<double, Dual1, Dual4, Dual8, Dual16, TapeVar, JacobianTracer, HessianTracer,
                             NestedDual1, NestedDual8>;

/// Element type of the span a function body receives.
template <class Span>
using scalar_t = std::remove_cv_t<typename std::remove_cvref_t<Span>::element_type>;

template <class S>
using Evaluator = std::function<void(std::span<const S> x, std::span<S> y, const ContextView<S>& ctx)>;

namespace detail {

template <class List> struct EvaluatorTuple;
template <class... Ts> struct EvaluatorTuple<TypeList<Ts...>> {
    using type = std::tuple<Evaluator<Ts>...>;
};
using EvaluatorTable = EvaluatorTuple<ScalarTypes>::type;

struct FunctionImpl {
    std::string name;
    Shape input_shape;
    Shape output_shape;
    bool in_place = false;
    EvaluatorTable evaluators;
    // Set for DifferentiateWith wrappers.
    std::shared_ptr<const void> wrapped;
};

template <class S, class R>
void store_result(R&& r, std::span<S> y) {
    if constexpr (std::is_convertible_v<R, S> && !std::ranges::range<std::remove_cvref_t<R>>) {
        if (y.size() != 1)
            throw ShapeMismatch("", "", "function returned a scalar but declares " + std::to_string(y.size()) +
                                            " outputs");
        y[0] = static_cast<S>(std::forward<R>(r));
    } else {
        static_assert(std::ranges::sized_range<std::remove_cvref_t<R>>,
                      "out-of-place functions must return a scalar or a sized range of scalars");
        if (std::ranges::size(r) != y.size())
            throw ShapeMismatch("", "", "function returned " + std::to_string(std::ranges::size(r)) +
                                            " outputs, declared " + std::to_string(y.size()));
        std::ranges::copy(r, y.begin());
    }
}

template <class S, class F>
Evaluator<S> out_of_place_evaluator(std::shared_ptr<const F> f) {
    return [f](std::span<const S> x, std::span<S> y, const ContextView<S>& ctx) {
        if constexpr (std::is_invocable_v<const F&, std::span<const S>, const ContextView<S>&>)
            store_result<S>((*f)(x, ctx), y);
        else
            store_result<S>((*f)(x), y);
    };
}

template <class S, class F>
Evaluator<S> in_place_evaluator(std::shared_ptr<const F> f) {
    return [f](std::span<const S> x, std::span<S> y, const ContextView<S>& ctx) {
        if constexpr (std::is_invocable_v<const F&, std::span<S>, std::span<const S>, const ContextView<S>&>)
            (*f)(y, x, ctx);
        else
            (*f)(y, x);
    };
}

template <bool InPlace, class F, class... Ts>
EvaluatorTable make_table(std::shared_ptr<const F> f, TypeList<Ts...>) {
    if constexpr (InPlace)
        return EvaluatorTable(in_place_evaluator<Ts>(f)...);
    else
        return EvaluatorTable(out_of_place_evaluator<Ts>(f)...);
}

}  // namespace detail

/// A function differentiable with respect to its first argument.
///
/// The body is a generic callable instantiated for every scalar type in
/// ScalarTypes. Out-of-place bodies have the form `(x)` or `(x, ctx)` and
/// return a scalar or a range; in-place bodies have the form `(y, x)` or
/// `(y, x, ctx)` and write into y. Function values are immutable and cheap
/// to copy.
class Function {
public:
    Function() = default;
    explicit Function(std::shared_ptr<const detail::FunctionImpl> impl) : impl_(std::move(impl)) {}

    const std::string& name() const { return impl_->name; }
    const Shape& input_shape() const { return impl_->input_shape; }
    const Shape& output_shape() const { return impl_->output_shape; }
    std::size_t input_size() const { return impl_->input_shape.size(); }
    std::size_t output_size() const { return impl_->output_shape.size(); }
    bool in_place() const { return impl_->in_place; }
    bool is_wrapper() const { return impl_->wrapped != nullptr; }
    const void* identity() const noexcept { return impl_.get(); }
    explicit operator bool() const noexcept { return impl_ != nullptr; }

    template <class S>
    void eval(std::span<const S> x, std::span<S> y, const ContextView<S>& ctx) const {
        std::get<Evaluator<S>>(impl_->evaluators)(x, y, ctx);
    }

    /// Plain evaluation; Cache buffers in ctx are used as scratch.
    std::vector<double> operator()(std::span<const double> x, ContextArgs ctx = {}) const;
    void evaluate(std::span<const double> x, std::span<double> y, ContextArgs ctx = {}) const;

    const detail::FunctionImpl& impl() const { return *impl_; }

private:
    std::shared_ptr<const detail::FunctionImpl> impl_;
};

template <class F>
Function make_function(std::string name, Shape input, Shape output, F body) {
    auto f = std::make_shared<const F>(std::move(body));
    auto impl = std::make_shared<detail::FunctionImpl>();
    impl->name = std::move(name);
    impl->input_shape = std::move(input);
    impl->output_shape = std::move(output);
    impl->in_place = false;
    impl->evaluators = detail::make_table<false>(f, ScalarTypes{});
    return Function(std::move(impl));
}

template <class F>
Function make_inplace_function(std::string name, Shape input, Shape output, F body) {
    auto f = std::make_shared<const F>(std::move(body));
    auto impl = std::make_shared<detail::FunctionImpl>();
    impl->name = std::move(name);
    impl->input_shape = std::move(input);
    impl->output_shape = std::move(output);
    impl->in_place = true;
    impl->evaluators = detail::make_table<true>(f, ScalarTypes{});
    return Function(std::move(impl));
}

/// Left-to-right sum; with active scalars this records n - 1 additions.
template <class S>
S sum(std::span<const S> x) {
    if (x.empty()) return S(0.0);
    S s = x[0];
    for (std::size_t i = 1; i < x.size(); ++i) s = s + x[i];
    return s;
}
template <class S>
S sum(std::span<S> x) {
    return sum(std::span<const S>(x));
}

}  // namespace adkit
