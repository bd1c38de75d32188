#include "adkit/reverse.hpp"

#include <vector>

namespace adkit {

Tape record(const Function& f, std::span<const double> x, ContextArgs ctx, BranchPolicy policy) {
    if (x.size() != f.input_size())
        throw ShapeMismatch("", "tape", "input has " + std::to_string(x.size()) + " elements, function '" +
                                            f.name() + "' expects " + std::to_string(f.input_size()));
    Tape tape;
    tape.begin(x, policy);
    CacheStore<TapeVar> caches(ContextSignature::of(ctx));
    std::vector<TapeVar> xs(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) xs[i] = tape.input(i);
    std::vector<TapeVar> ys(f.output_size());
    {
        detail::RecordingScope scope(tape);
        f.eval<TapeVar>(xs, ys, caches.view(ctx));
    }
    tape.finish(ys);
    return tape;
}

}  // namespace adkit

#include <cstring>

#include "engine.hpp"

namespace adkit::detail {
namespace {

class TapeEngine final : public Engine, public TapeAccess {
public:
    TapeEngine(CallStats& stats, const Backend& b, JacobianSide side, const Function& f, XSpan x, ContextArgs ctx)
        : Engine(stats, b.id(), side), policy_(b.reverse_options().branch_policy) {
        record_at(f, x, ctx);
        y_.resize(f.output_size());
        unit_.resize(f.output_size());
    }

    Tape& refreshed(const Function& f, XSpan x, ContextArgs ctx) override {
        if (constants_changed(ctx)) record_at(f, x, ctx);
        return tape_;
    }

    void pullback(const Function& f, XSpan x, const Batch& seeds, ContextArgs ctx, std::span<double> y,
                  Batch& out) override {
        Tape& t = refreshed(f, x, ctx);
        t.replay(x, y_);
        if (out.rows() != seeds.rows() || out.cols() != x.size()) out.reshape(seeds.rows(), x.size());
        for (std::size_t k = 0; k < seeds.rows(); ++k) t.reverse_sweep(seeds.row(k), out.row(k));
        stats().pullbacks += seeds.rows();
        std::copy(y_.begin(), y_.begin() + static_cast<std::ptrdiff_t>(y.size()), y.begin());
    }

    // Transpose fallback: assemble J from pullbacks, then apply J.
    void pushforward(const Function& f, XSpan x, const Batch& seeds, ContextArgs ctx, std::span<double> y,
                     Batch& out) override {
        const std::size_t n = x.size();
        const std::size_t m = y_.size();
        Tape& t = refreshed(f, x, ctx);
        t.replay(x, y_);
        rows_.reshape(m, n);
        for (std::size_t j = 0; j < m; ++j) {
            std::fill(unit_.begin(), unit_.end(), 0.0);
            unit_[j] = 1.0;
            t.reverse_sweep(unit_, rows_.row(j));
        }
        stats().pullbacks += m;
        out.reshape(seeds.rows(), m);
        for (std::size_t k = 0; k < seeds.rows(); ++k)
            for (std::size_t j = 0; j < m; ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) s += rows_(j, i) * seeds(k, i);
                out(k, j) = s;
            }
        std::copy(y_.begin(), y_.begin() + static_cast<std::ptrdiff_t>(y.size()), y.begin());
    }

    void gradient(const Function& f, XSpan x, ContextArgs ctx, double* y, std::span<double> grad) override {
        Tape& t = refreshed(f, x, ctx);
        t.replay(x, y_);
        unit_[0] = 1.0;
        t.reverse_sweep(unit_, grad);
        stats().pullbacks += 1;
        if (y) *y = y_[0];
    }

    const Tape* tape() const override { return &tape_; }

private:
    void record_at(const Function& f, XSpan x, ContextArgs ctx) {
        tape_ = record(f, x, ctx, policy_);
        stats().records += 1;
        constants_.assign(ctx.size(), {});
        for (std::size_t i = 0; i < ctx.size(); ++i)
            if (ctx[i].kind() == Context::Kind::constant)
                constants_[i].assign(ctx[i].data().begin(), ctx[i].data().end());
    }

    // Constants are embedded as literals, so a changed payload means a stale tape.
    bool constants_changed(ContextArgs ctx) const {
        for (std::size_t i = 0; i < ctx.size() && i < constants_.size(); ++i) {
            if (ctx[i].kind() != Context::Kind::constant) continue;
            const auto d = ctx[i].data();
            if (d.size() != constants_[i].size() ||
                (!d.empty() && std::memcmp(d.data(), constants_[i].data(), d.size() * sizeof(double)) != 0))
                return true;
        }
        return false;
    }

    BranchPolicy policy_;
    Tape tape_;
    std::vector<std::vector<double>> constants_;
    std::vector<double> y_;
    std::vector<double> unit_;
    Batch rows_;
};

}  // namespace

std::unique_ptr<Engine> make_tape_engine(Operator op, const Function& f, const Backend& b, XSpan x, ContextArgs ctx,
                                         CallStats& stats) {
    (void)op;
    return std::make_unique<TapeEngine>(stats, b, jacobian_side(b, IoSize{x.size(), f.output_size()}), f, x, ctx);
}

}  // namespace adkit::detail
