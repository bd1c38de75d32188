#include "adkit/fallbacks.hpp"

#include <algorithm>

#include "adkit/operators.hpp"
#include "engine.hpp"

namespace adkit {
namespace {

// Owned copy of a context list: Constant payloads copied, Caches given fresh buffers.
class OwnedContexts {
public:
    OwnedContexts() = default;
    explicit OwnedContexts(std::span<const Context> src) : data_(src.size()) {
        for (std::size_t i = 0; i < src.size(); ++i) {
            if (src[i].kind() == Context::Kind::constant)
                data_[i].assign(src[i].data().begin(), src[i].data().end());
            else
                data_[i].assign(src[i].size(), 0.0);
        }
        for (std::size_t i = 0; i < src.size(); ++i)
            items_.push_back(src[i].kind() == Context::Kind::constant ? Context::constant(data_[i])
                                                                       : Context::cache(data_[i]));
    }
    ContextArgs args() const { return ContextArgs(std::span<const Context>(items_)); }

private:
    std::vector<std::vector<double>> data_;
    std::vector<Context> items_;
};

class WrappedOp final : public ExternalOp {
public:
    WrappedOp(Function f, Backend substitute, std::span<const Context> ctx)
        : f_(std::move(f)), substitute_(std::move(substitute)), ctx_(ctx), x_(f_.input_size()),
          seed_(1, f_.output_size()) {}

    std::size_t input_size() const override { return f_.input_size(); }
    std::size_t output_size() const override { return f_.output_size(); }

    void forward(std::span<const double> x, std::span<double> y) override {
        std::copy(x.begin(), x.end(), x_.begin());
        f_.evaluate(x_, y, ctx_.args());
    }

    void pullback(std::span<const double> ybar, std::span<double> xbar) override {
        std::copy(ybar.begin(), ybar.end(), seed_.row(0).begin());
        const Batch g = adkit::pullback(f_, substitute_, x_, seed_, ctx_.args());
        for (std::size_t i = 0; i < xbar.size(); ++i) xbar[i] += g(0, i);
    }

private:
    Function f_;
    Backend substitute_;
    OwnedContexts ctx_;
    std::vector<double> x_;
    Batch seed_;
};

template <class S>
Evaluator<S> wrapper_evaluator(const Function& f, const Backend& sub) {
    if constexpr (std::is_same_v<S, double>) {
        return [f](std::span<const double> x, std::span<double> y, const ContextView<double>& ctx) {
            f.eval<double>(x, y, ctx);
        };
    } else if constexpr (std::is_same_v<S, NestedDual1> || std::is_same_v<S, NestedDual8>) {
        return [f, sub](std::span<const S>, std::span<S>, const ContextView<S>&) {
            throw UnsupportedOperator("", sub.id(),
                                      "DifferentiateWith wrapper '" + f.name() +
                                          "' serves first-order derivatives only");
        };
    } else if constexpr (is_dual_v<S>) {
        return [f, sub](std::span<const S> x, std::span<S> y, const ContextView<S>& ctx) {
            constexpr int W = S::width;
            const std::size_t n = x.size();
            const std::size_t m = y.size();
            std::vector<double> xv(n), yv(m);
            for (std::size_t i = 0; i < n; ++i) xv[i] = x[i].val;
            detail::ScratchContexts scratch(ContextSignature::of(ContextArgs(ctx.descriptors())));
            const ContextArgs args = scratch.bind(ctx.descriptors());
            f.evaluate(xv, yv, args);
            Batch seeds(W, n);
            bool any = false;
            for (int l = 0; l < W; ++l)
                for (std::size_t i = 0; i < n; ++i) {
                    seeds(l, i) = x[i].d[l];
                    any = any || x[i].d[l] != 0.0;
                }
            for (std::size_t j = 0; j < m; ++j) y[j] = S(yv[j]);
            if (!any) return;
            const Batch t = adkit::pushforward(f, sub, xv, seeds, args);
            for (std::size_t j = 0; j < m; ++j)
                for (int l = 0; l < W; ++l) y[j].d[l] = t(l, j);
        };
    } else if constexpr (std::is_same_v<S, TapeVar>) {
        return [f, sub](std::span<const TapeVar> x, std::span<TapeVar> y, const ContextView<TapeVar>& ctx) {
            const std::size_t m = y.size();
            std::vector<double> yv(m);
            Tape* tape = detail::active_tape();
            if (!tape) {
                std::vector<double> xv(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) xv[i] = x[i].value;
                OwnedContexts owned(ctx.descriptors());
                f.evaluate(xv, yv, owned.args());
                for (std::size_t j = 0; j < m; ++j) y[j] = TapeVar(yv[j]);
                return;
            }
            auto op = std::make_shared<WrappedOp>(f, sub, ctx.descriptors());
            const std::int32_t first = tape->add_external(std::move(op), x, yv);
            for (std::size_t j = 0; j < m; ++j) y[j] = TapeVar(yv[j], first + static_cast<std::int32_t>(j));
        };
    } else if constexpr (std::is_same_v<S, JacobianTracer>) {
        return [f](std::span<const JacobianTracer> x, std::span<JacobianTracer> y,
                   const ContextView<JacobianTracer>& ctx) {
            std::vector<double> xv(x.size()), yv(y.size());
            IndexSet deps;
            for (std::size_t i = 0; i < x.size(); ++i) {
                xv[i] = x[i].value;
                deps = set_union(deps, x[i].deps);
            }
            OwnedContexts owned(ctx.descriptors());
            f.evaluate(xv, yv, owned.args());
            for (std::size_t j = 0; j < y.size(); ++j) y[j] = JacobianTracer(yv[j], deps);
        };
    } else {
        static_assert(std::is_same_v<S, HessianTracer>);
        return [f](std::span<const HessianTracer> x, std::span<HessianTracer> y,
                   const ContextView<HessianTracer>& ctx) {
            std::vector<double> xv(x.size()), yv(y.size());
            IndexSet grad;
            PairSet hess;
            for (std::size_t i = 0; i < x.size(); ++i) {
                xv[i] = x[i].value;
                grad = set_union(grad, x[i].grad);
                hess = set_union(hess, x[i].hess);
            }
            hess = set_union(hess, cross_pairs(grad, grad));
            OwnedContexts owned(ctx.descriptors());
            f.evaluate(xv, yv, owned.args());
            for (std::size_t j = 0; j < y.size(); ++j) y[j] = HessianTracer(yv[j], grad, hess);
        };
    }
}

template <class... Ts>
detail::EvaluatorTable wrapper_table(const Function& f, const Backend& sub, TypeList<Ts...>) {
    return detail::EvaluatorTable(wrapper_evaluator<Ts>(f, sub)...);
}

}  // namespace

Function differentiate_with(const Function& f, const Backend& substitute) {
    if (!f) throw ShapeMismatch("", substitute.id(), "empty function");
    auto impl = std::make_shared<detail::FunctionImpl>();
    impl->name = "DifferentiateWith(" + f.name() + "," + substitute.id() + ")";
    impl->input_shape = f.input_shape();
    impl->output_shape = f.output_shape();
    impl->in_place = false;
    impl->evaluators = wrapper_table(f, substitute, ScalarTypes{});
    impl->wrapped = std::make_shared<const Backend>(substitute);
    return Function(std::move(impl));
}

Batch second_order_hvp(const Backend& so, const Function& f, Preparation& prep, std::span<const double> x,
                       const Batch& seeds, ContextArgs ctx) {
    if (so.kind() != Backend::Kind::second_order)
        throw PreparationMismatch("hvp", so.id(), "second_order_hvp needs a second_order backend");
    return hvp(f, prep, so, x, seeds, ctx);
}

}  // namespace adkit
