#include "adkit/finite_diff.hpp"

#include <algorithm>
#include <cmath>

#include "engine.hpp"
#include "fd_kernel.hpp"

namespace adkit {

double fd_step(std::span<const double> x, std::span<const double> v, const StepRule& rule) {
    if (!rule.relative) return rule.base_step;
    double scale = 1.0;
    for (std::size_t i = 0; i < x.size() && i < v.size(); ++i)
        if (v[i] != 0.0) scale = std::max(scale, std::fabs(x[i]));
    return rule.base_step * scale;
}

namespace detail {

FdKernel::FdKernel(const StepRule& rule, std::size_t n, std::size_t m, std::size_t contexts)
    : rule_(rule), xp_(n), f0_(m), fp_(m), fm_(m), unit_(n), contexts_(contexts) {}

void FdKernel::check_finite(std::span<const double> values, double h) const {
    for (double v : values)
        if (!std::isfinite(v))
            throw NonFiniteResult("", "fd", "perturbed evaluation is not finite (step " + std::to_string(h) + ")");
}

void FdKernel::evaluate(const Function& f, std::span<const double> x, ContextArgs ctx, std::span<double> y,
                        CallStats* stats) {
    f.eval<double>(x, y, contexts_.bind(ctx));
    if (stats) stats->evaluations += 1;
}

void FdKernel::begin(const Function& f, XSpan x, ContextArgs ctx, CallStats* stats) {
    evaluate(f, x, ctx, f0_, stats);
    if (rule_.scheme == FdScheme::forward) check_finite(f0_, 0.0);
}

// Divides by the step actually realized along the dominant coordinate of v,
// so differences of functions linear in that coordinate are exact.
void FdKernel::direction(const Function& f, XSpan x, XSpan v, ContextArgs ctx, std::span<double> out,
                         CallStats* stats) {
    const double h = fd_step(x, v, rule_);
    std::size_t k = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (std::fabs(v[i]) > std::fabs(v[k])) k = i;
    const bool snap = !v.empty() && v[k] != 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) xp_[i] = x[i] + h * v[i];
    const double hi = snap ? xp_[k] : 0.0;
    evaluate(f, xp_, ctx, fp_, stats);
    check_finite(fp_, h);
    if (rule_.scheme == FdScheme::central) {
        for (std::size_t i = 0; i < x.size(); ++i) xp_[i] = x[i] - h * v[i];
        evaluate(f, xp_, ctx, fm_, stats);
        check_finite(fm_, h);
        const double span = snap ? (hi - xp_[k]) / v[k] : 2.0 * h;
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = (fp_[j] - fm_[j]) / span;
    } else {
        const double span = snap ? (hi - x[k]) / v[k] : h;
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = (fp_[j] - f0_[j]) / span;
    }
}

void FdKernel::columns(const Function& f, XSpan x, ContextArgs ctx, Batch& cols, CallStats* stats) {
    const std::size_t n = x.size();
    cols.reshape(n, f0_.size());
    std::fill(unit_.begin(), unit_.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        unit_[i] = 1.0;
        direction(f, x, unit_, ctx, cols.row(i), stats);
        unit_[i] = 0.0;
    }
}

namespace {

class FiniteDiffEngine final : public Engine {
public:
    FiniteDiffEngine(CallStats& stats, const Backend& b, JacobianSide side, const Function& f)
        : Engine(stats, b.id(), side), kernel_(b.finite_diff_options().step, f.input_size(), f.output_size(), 0) {}

    void pushforward(const Function& f, XSpan x, const Batch& seeds, ContextArgs ctx, std::span<double> y,
                     Batch& out) override {
        kernel_.begin(f, x, ctx, &stats());
        if (out.rows() != seeds.rows() || out.cols() != f.output_size()) out.reshape(seeds.rows(), f.output_size());
        for (std::size_t k = 0; k < seeds.rows(); ++k) kernel_.direction(f, x, seeds.row(k), ctx, out.row(k), &stats());
        stats().pushforwards += seeds.rows();
        copy_primal(y);
    }

    // Rows of the assembled Jacobian, combined by each cotangent.
    void pullback(const Function& f, XSpan x, const Batch& seeds, ContextArgs ctx, std::span<double> y,
                  Batch& out) override {
        const std::size_t n = x.size();
        const std::size_t m = f.output_size();
        kernel_.begin(f, x, ctx, &stats());
        kernel_.columns(f, x, ctx, cols_, &stats());
        if (out.rows() != seeds.rows() || out.cols() != n) out.reshape(seeds.rows(), n);
        for (std::size_t k = 0; k < seeds.rows(); ++k)
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < m; ++j) s += seeds(k, j) * cols_(i, j);
                out(k, i) = s;
            }
        stats().pullbacks += seeds.rows();
        copy_primal(y);
    }

private:
    void copy_primal(std::span<double> y) const {
        const auto f0 = kernel_.primal();
        std::copy(f0.begin(), f0.begin() + static_cast<std::ptrdiff_t>(y.size()), y.begin());
    }

    FdKernel kernel_;
    Batch cols_;
};

}  // namespace

std::unique_ptr<Engine> make_fd_engine(Operator op, const Function& f, const Backend& b, XSpan x, ContextArgs ctx,
                                       CallStats& stats) {
    (void)op;
    (void)ctx;
    return std::make_unique<FiniteDiffEngine>(stats, b, jacobian_side(b, IoSize{x.size(), f.output_size()}), f);
}

}  // namespace detail

std::vector<double> fd_pushforward(const Function& f, std::span<const double> x, std::span<const double> v,
                                   const StepRule& rule, ContextArgs ctx) {
    if (x.size() != f.input_size() || v.size() != f.input_size())
        throw ShapeMismatch("pushforward", "fd", "input and direction must have " + std::to_string(f.input_size()) +
                                                     " elements");
    detail::FdKernel k(rule, x.size(), f.output_size(), ctx.size());
    k.begin(f, x, ctx, nullptr);
    std::vector<double> out(f.output_size());
    k.direction(f, x, v, ctx, out, nullptr);
    return out;
}

DenseMatrix fd_jacobian(const Function& f, std::span<const double> x, const StepRule& rule, ContextArgs ctx) {
    if (x.size() != f.input_size())
        throw ShapeMismatch("jacobian", "fd", "input must have " + std::to_string(f.input_size()) + " elements");
    detail::FdKernel k(rule, x.size(), f.output_size(), ctx.size());
    k.begin(f, x, ctx, nullptr);
    Batch cols;
    k.columns(f, x, ctx, cols, nullptr);
    return cols.transposed();
}

std::vector<double> fd_pullback(const Function& f, std::span<const double> x, std::span<const double> w,
                                const StepRule& rule, ContextArgs ctx) {
    if (w.size() != f.output_size())
        throw ShapeMismatch("pullback", "fd", "cotangent must have " + std::to_string(f.output_size()) + " elements");
    const DenseMatrix J = fd_jacobian(f, x, rule, ctx);
    std::vector<double> out(J.cols(), 0.0);
    for (std::size_t i = 0; i < J.cols(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < J.rows(); ++j) s += w[j] * J(j, i);
        out[i] = s;
    }
    return out;
}

}  // namespace adkit
