#include "engine.hpp"

#include <algorithm>

#include "adkit/sparse.hpp"
#include "adkit/tape.hpp"

namespace adkit {
namespace detail {

void Engine::unsupported(Operator op, const std::string& why) const {
    throw UnsupportedOperator(std::string(operator_name(op)), backend_id_, why);
}

const Batch& Engine::identity(std::size_t n) {
    if (identity_.rows() != n || identity_.cols() != n) identity_ = DenseMatrix::identity(n);
    return identity_;
}

void Engine::pushforward(const Function&, XSpan, const Batch&, ContextArgs, std::span<double>, Batch&) {
    unsupported(Operator::pushforward, "no pushforward on this preparation");
}

void Engine::pullback(const Function&, XSpan, const Batch&, ContextArgs, std::span<double>, Batch&) {
    unsupported(Operator::pullback, "no pullback on this preparation");
}

void Engine::derivative(const Function& f, double x, ContextArgs ctx, std::span<double> y, std::span<double> out) {
    pushforward(f, XSpan(&x, 1), seed1_, ctx, y, scratch_);
    std::copy(scratch_.row(0).begin(), scratch_.row(0).end(), out.begin());
}

void Engine::gradient(const Function& f, XSpan x, ContextArgs ctx, double* y, std::span<double> grad) {
    pullback(f, x, seed1_, ctx, y ? std::span<double>(y, 1) : std::span<double>(), scratch_);
    std::copy(scratch_.row(0).begin(), scratch_.row(0).end(), grad.begin());
}

void Engine::jacobian(const Function& f, XSpan x, ContextArgs ctx, std::span<double> y, Matrix& out) {
    const std::size_t n = x.size();
    const std::size_t m = f.output_size();
    DenseMatrix& J = dense_out(out, m, n);
    if (side_ == JacobianSide::pushforward) {
        pushforward(f, x, identity(n), ctx, y, scratch_);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) J(i, j) = scratch_(j, i);
    } else {
        pullback(f, x, identity(m), ctx, y, scratch_);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) J(i, j) = scratch_(i, j);
    }
}

void Engine::second_derivative(const Function&, double, ContextArgs, std::span<double>, std::span<double>) {
    unsupported(Operator::second_derivative, "no second-order plan on this preparation");
}

void Engine::hvp(const Function&, XSpan, const Batch&, ContextArgs, double*, Batch&) {
    unsupported(Operator::hvp, "no second-order plan on this preparation");
}

void Engine::hessian(const Function& f, XSpan x, ContextArgs ctx, double* y, Matrix& out) {
    const std::size_t n = x.size();
    hvp(f, x, identity(n), ctx, y, scratch_);
    DenseMatrix& H = dense_out(out, n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double v = 0.5 * (scratch_(j, i) + scratch_(i, j));
            H(i, j) = v;
            H(j, i) = v;
        }
}

DenseMatrix& dense_out(Matrix& out, std::size_t rows, std::size_t cols) {
    if (out.is_sparse()) out = Matrix(DenseMatrix(rows, cols));
    DenseMatrix& d = out.dense();
    if (d.rows() != rows || d.cols() != cols) d.reshape(rows, cols);
    return d;
}

ScratchContexts::ScratchContexts(const ContextSignature& sig) : buffers_(sig.size()) {
    items_.reserve(sig.size());
    for (std::size_t i = 0; i < sig.size(); ++i) {
        if (sig.kinds[i] == Context::Kind::cache) buffers_[i].assign(sig.sizes[i], 0.0);
        items_.push_back(Context::constant({}));
    }
}

ContextArgs ScratchContexts::bind(std::span<const Context> descriptors) {
    for (std::size_t i = 0; i < descriptors.size() && i < items_.size(); ++i)
        items_[i] = descriptors[i].kind() == Context::Kind::constant ? Context::constant(descriptors[i].data())
                                                                     : Context::cache(buffers_[i]);
    return ContextArgs(std::span<const Context>(items_.data(), std::min(items_.size(), descriptors.size())));
}

namespace {

[[noreturn]] void no_second_order(Operator op, const Backend& b) {
    throw UnsupportedOperator(std::string(operator_name(op)), b.id(), "mixed-mode backends serve first-order operators only");
}

}  // namespace

std::unique_ptr<Engine> make_engine(Operator op, const Function& f, const Backend& b, XSpan x, ContextArgs ctx,
                                    CallStats& stats) {
    switch (b.kind()) {
        case Backend::Kind::forward:
            if (is_second_order(op)) return make_second_order_engine(op, f, Backend::second_order(b, b), x, ctx, stats);
            return make_forward_engine(op, f, b, x, ctx, stats);
        case Backend::Kind::reverse:
            if (is_second_order(op)) return make_second_order_engine(op, f, Backend::second_order(b, b), x, ctx, stats);
            return make_tape_engine(op, f, b, x, ctx, stats);
        case Backend::Kind::finite_diff:
            if (is_second_order(op)) return make_second_order_engine(op, f, Backend::second_order(b, b), x, ctx, stats);
            return make_fd_engine(op, f, b, x, ctx, stats);
        case Backend::Kind::second_order:
            if (is_second_order(op)) return make_second_order_engine(op, f, b, x, ctx, stats);
            return make_engine(op, f, b.inner(), x, ctx, stats);
        case Backend::Kind::mixed_mode:
            switch (op) {
                case Operator::pushforward:
                case Operator::derivative: return make_engine(op, f, b.forward_half(), x, ctx, stats);
                case Operator::pullback:
                case Operator::gradient: return make_engine(op, f, b.reverse_half(), x, ctx, stats);
                case Operator::jacobian:
                    return jacobian_side(b, IoSize{x.size(), f.output_size()}) == JacobianSide::pushforward
                               ? make_engine(op, f, b.forward_half(), x, ctx, stats)
                               : make_engine(op, f, b.reverse_half(), x, ctx, stats);
                default: no_second_order(op, b);
            }
        case Backend::Kind::sparse:
            if (op == Operator::jacobian || op == Operator::hessian) return make_sparse_engine(op, f, b, x, ctx, stats);
            return make_engine(op, f, b.dense(), x, ctx, stats);
    }
    no_second_order(op, b);
}

}  // namespace detail

Preparation::Preparation(Operator op, const Function& f, const Backend& b, Signature sig, OperatorPlan plan)
    : op_(op),
      backend_(b),
      function_(f.identity()),
      signature_(std::move(sig)),
      plan_(std::move(plan)),
      stats_(std::make_unique<CallStats>()) {}

Preparation::Preparation(Preparation&&) noexcept = default;
Preparation& Preparation::operator=(Preparation&&) noexcept = default;
Preparation::~Preparation() = default;

const SeedBank* Preparation::seed_bank() const { return engine_ ? engine_->seed_bank() : nullptr; }
const Tape* Preparation::tape() const { return engine_ ? engine_->tape() : nullptr; }
const SparsityPattern* Preparation::pattern() const { return engine_ ? engine_->pattern() : nullptr; }
const Coloring* Preparation::coloring() const { return engine_ ? engine_->coloring() : nullptr; }

void Preparation::set_engine(std::unique_ptr<detail::Engine> e) {
    engine_ = std::move(e);
}

Preparation prepare(Operator op, const Function& f, const Backend& backend, std::span<const double> typical_input,
                    ContextArgs contexts) {
    const std::string op_name(operator_name(op));
    if (!f) throw ShapeMismatch(op_name, backend.id(), "empty function");
    const std::size_t n = f.input_size();
    const std::size_t m = f.output_size();
    if (typical_input.size() != n)
        throw ShapeMismatch(op_name, backend.id(),
                            "typical input has " + std::to_string(typical_input.size()) + " elements, function '" +
                                f.name() + "' expects shape " + f.input_shape().to_string());
    if ((op == Operator::derivative || op == Operator::second_derivative) && n != 1)
        throw ShapeMismatch(op_name, backend.id(), "needs a scalar input, function '" + f.name() + "' has shape " +
                                                       f.input_shape().to_string());
    if ((op == Operator::gradient || op == Operator::hvp || op == Operator::hessian) && m != 1)
        throw ShapeMismatch(op_name, backend.id(), "needs a scalar output, function '" + f.name() +
                                                       "' has output shape " + f.output_shape().to_string());

    OperatorPlan plan = resolve(op, backend, IoSize{n, m});
    Preparation prep(op, f, backend, Signature{n, m, ContextSignature::of(contexts)}, std::move(plan));
    prep.set_engine(detail::make_engine(op, f, backend, typical_input, contexts, prep.mutable_stats()));
    return prep;
}

}  // namespace adkit
