#include <algorithm>
#include <cmath>

#include "adkit/finite_diff.hpp"
#include "adkit/tape.hpp"
#include "engine.hpp"

namespace adkit::detail {
namespace {

constexpr std::size_t kHvpLanes = 8;

void check_finite(std::span<const double> v, const char* op) {
    for (double e : v)
        if (!std::isfinite(e)) throw NonFiniteResult(op, "fd", "perturbed derivative evaluation is not finite");
}

// Forward lanes pushed through a recorded tape and swept back in the same lane type.
template <int L>
struct TapeLanes {
    using D = Dual<double, L>;
    std::vector<D> x, values, adjoints, xbar;
    D y[1];

    void fit(const Tape& t) {
        x.resize(t.input_count());
        xbar.resize(t.input_count());
        values.resize(t.slot_count());
        adjoints.resize(t.slot_count());
    }
};

class DualOverTape final : public Engine {
public:
    DualOverTape(CallStats& stats, const Backend& so, const Function& f, XSpan x, ContextArgs ctx)
        : Engine(stats, so.id(), JacobianSide::pushforward) {
        inner_ = make_tape_engine(Operator::gradient, f, so.inner(), x, ctx, stats);
        access_ = dynamic_cast<TapeAccess*>(inner_.get());
        m_ = f.output_size();
        ys_.resize(m_);
        ys8_.resize(m_);
        seed_.resize(m_);
    }

    void hvp(const Function& f, XSpan x, const Batch& seeds, ContextArgs ctx, double* y, Batch& out) override {
        Tape& t = access_->refreshed(f, x, ctx);
        const std::size_t n = x.size();
        const std::size_t k = seeds.rows();
        if (out.rows() != k || out.cols() != n) out.reshape(k, n);
        if (k == 1) {
            run<1>(t, one_, x, seeds, 0, 1, out);
        } else {
            for (std::size_t b0 = 0; b0 < k; b0 += kHvpLanes)
                run<8>(t, eight_, x, seeds, b0, std::min(kHvpLanes, k - b0), out);
        }
        if (k == 0 && y) *y = t.replay(x)[0];
        stats().hvps += k;
        if (y && k > 0) *y = last_primal_;
    }

    void second_derivative(const Function& f, double x, ContextArgs ctx, std::span<double> y,
                           std::span<double> out) override {
        Tape& t = access_->refreshed(f, XSpan(&x, 1), ctx);
        one_.fit(t);
        one_.x[0].val = x;
        one_.x[0].d[0] = 1.0;
        t.forward_pass<Dual1>(one_.x, one_.values, ys_);
        for (std::size_t j = 0; j < m_; ++j) {
            std::fill(seed_.begin(), seed_.end(), Dual1(0.0));
            seed_[j] = Dual1(1.0);
            t.reverse_pass<Dual1>(one_.values, seed_, one_.adjoints, one_.xbar);
            out[j] = one_.xbar[0].d[0];
        }
        for (std::size_t j = 0; j < y.size(); ++j) y[j] = ys_[j].val;
    }

    const Tape* tape() const override { return inner_->tape(); }

private:
    template <int L>
    void run(Tape& t, TapeLanes<L>& lanes, XSpan x, const Batch& seeds, std::size_t b0, std::size_t count,
             Batch& out) {
        using D = Dual<double, L>;
        lanes.fit(t);
        for (std::size_t i = 0; i < x.size(); ++i) {
            lanes.x[i].val = x[i];
            for (int l = 0; l < L; ++l) lanes.x[i].d[l] = static_cast<std::size_t>(l) < count ? seeds(b0 + l, i) : 0.0;
        }
        t.forward_pass<D>(lanes.x, lanes.values, std::span<D>(lanes.y, 1));
        const D one(1.0);
        t.reverse_pass<D>(lanes.values, std::span<const D>(&one, 1), lanes.adjoints, lanes.xbar);
        for (std::size_t l = 0; l < count; ++l)
            for (std::size_t i = 0; i < x.size(); ++i) out(b0 + l, i) = lanes.xbar[i].d[l];
        last_primal_ = lanes.y[0].val;
    }

    std::unique_ptr<Engine> inner_;
    TapeAccess* access_ = nullptr;
    std::size_t m_ = 0;
    TapeLanes<1> one_;
    TapeLanes<8> eight_;
    std::vector<Dual1> ys_, seed_;
    std::vector<Dual8> ys8_;
    double last_primal_ = 0.0;
};

// Forward over forward: outer direction in the inner value, gradient lanes outside.
class DualOverDual final : public Engine {
public:
    DualOverDual(CallStats& stats, const Backend& so, const Function& f, ContextArgs ctx)
        : Engine(stats, so.id(), JacobianSide::pushforward),
          x1_(f.input_size()),
          x8_(f.input_size()),
          y1_(f.output_size()),
          y8_(f.output_size()),
          c1_(ContextSignature::of(ctx)),
          c8_(ContextSignature::of(ctx)) {}

    void hvp(const Function& f, XSpan x, const Batch& seeds, ContextArgs ctx, double* y, Batch& out) override {
        const std::size_t n = x.size();
        const std::size_t k = seeds.rows();
        if (out.rows() != k || out.cols() != n) out.reshape(k, n);
        for (std::size_t s = 0; s < k; ++s) {
            if (n == 1) {
                x1_[0].val = Dual1(x[0]);
                x1_[0].val.d[0] = seeds(s, 0);
                x1_[0].d[0] = Dual1(1.0);
                f.eval<NestedDual1>(x1_, y1_, c1_.view(ctx));
                out(s, 0) = y1_[0].d[0].d[0];
                if (y) *y = y1_[0].val.val;
                continue;
            }
            for (std::size_t b0 = 0; b0 < n; b0 += kHvpLanes) {
                const std::size_t count = std::min(kHvpLanes, n - b0);
                for (std::size_t i = 0; i < n; ++i) {
                    x8_[i].val = Dual1(x[i]);
                    x8_[i].val.d[0] = seeds(s, i);
                    for (std::size_t l = 0; l < kHvpLanes; ++l) x8_[i].d[l] = Dual1(l < count && i == b0 + l ? 1.0 : 0.0);
                }
                f.eval<NestedDual8>(x8_, y8_, c8_.view(ctx));
                for (std::size_t l = 0; l < count; ++l) out(s, b0 + l) = y8_[0].d[l].d[0];
            }
            if (y) *y = y8_[0].val.val;
        }
        stats().hvps += k;
    }

    void second_derivative(const Function& f, double x, ContextArgs ctx, std::span<double> y,
                           std::span<double> out) override {
        x1_[0].val = Dual1(x);
        x1_[0].val.d[0] = 1.0;
        x1_[0].d[0] = Dual1(1.0);
        f.eval<NestedDual1>(x1_, y1_, c1_.view(ctx));
        for (std::size_t j = 0; j < y1_.size(); ++j) out[j] = y1_[j].d[0].d[0];
        for (std::size_t j = 0; j < y.size(); ++j) y[j] = y1_[j].val.val;
    }

private:
    std::vector<NestedDual1> x1_;
    std::vector<NestedDual8> x8_;
    std::vector<NestedDual1> y1_;
    std::vector<NestedDual8> y8_;
    CacheStore<NestedDual1> c1_;
    CacheStore<NestedDual8> c8_;
};

// Difference quotients of the gradient evaluated in single-lane dual arithmetic.
class DualOverFd final : public Engine {
public:
    DualOverFd(CallStats& stats, const Backend& so, const Function& f, ContextArgs ctx)
        : Engine(stats, so.id(), JacobianSide::pushforward),
          rule_(so.inner().finite_diff_options().step),
          xd_(f.input_size()),
          xp_(f.input_size()),
          fp_(f.output_size()),
          fm_(f.output_size()),
          f0_(f.output_size()),
          caches_(ContextSignature::of(ctx)),
          unit_(f.input_size()) {}

    void hvp(const Function& f, XSpan x, const Batch& seeds, ContextArgs ctx, double* y, Batch& out) override {
        const std::size_t n = x.size();
        const std::size_t k = seeds.rows();
        if (out.rows() != k || out.cols() != n) out.reshape(k, n);
        for (std::size_t s = 0; s < k; ++s) {
            for (std::size_t i = 0; i < n; ++i) {
                xd_[i].val = x[i];
                xd_[i].d[0] = seeds(s, i);
            }
            base(f, ctx);
            for (std::size_t i = 0; i < n; ++i) {
                unit_[i] = 1.0;
                const double h = fd_step(x, unit_, rule_);
                unit_[i] = 0.0;
                out(s, i) = quotient(f, ctx, i, h)[0];
            }
        }
        if (y) {
            for (std::size_t i = 0; i < n; ++i) xp_[i] = Dual1(x[i]);
            eval(f, ctx, f0_);
            *y = f0_[0].val;
        }
        stats().hvps += k;
    }

    void second_derivative(const Function& f, double x, ContextArgs ctx, std::span<double> y,
                           std::span<double> out) override {
        xd_[0].val = x;
        xd_[0].d[0] = 1.0;
        base(f, ctx);
        const double one = 1.0;
        const double h = fd_step(XSpan(&x, 1), XSpan(&one, 1), rule_);
        const auto q = quotient(f, ctx, 0, h);
        std::copy(q.begin(), q.end(), out.begin());
        if (y.empty()) return;
        xp_[0] = Dual1(x);
        eval(f, ctx, f0_);
        for (std::size_t j = 0; j < y.size(); ++j) y[j] = f0_[j].val;
    }

private:
    void eval(const Function& f, ContextArgs ctx, std::vector<Dual1>& y) {
        f.eval<Dual1>(xp_, y, caches_.view(ctx));
        stats().evaluations += 1;
        for (const Dual1& v : y)
            if (!std::isfinite(v.val) || !std::isfinite(v.d[0]))
                throw NonFiniteResult("", "fd", "perturbed evaluation is not finite");
    }

    void base(const Function& f, ContextArgs ctx) {
        if (rule_.scheme != FdScheme::forward) return;
        std::copy(xd_.begin(), xd_.end(), xp_.begin());
        eval(f, ctx, f0_);
    }

    // Tangent part of the difference quotient along coordinate i.
    std::span<const double> quotient(const Function& f, ContextArgs ctx, std::size_t i, double h) {
        q_.resize(fp_.size());
        std::copy(xd_.begin(), xd_.end(), xp_.begin());
        xp_[i].val += h;
        eval(f, ctx, fp_);
        if (rule_.scheme == FdScheme::central) {
            xp_[i].val = xd_[i].val - h;
            eval(f, ctx, fm_);
            for (std::size_t j = 0; j < q_.size(); ++j) q_[j] = (fp_[j].d[0] - fm_[j].d[0]) / (2.0 * h);
        } else {
            for (std::size_t j = 0; j < q_.size(); ++j) q_[j] = (fp_[j].d[0] - f0_[j].d[0]) / h;
        }
        return q_;
    }

    StepRule rule_;
    std::vector<Dual1> xd_, xp_, fp_, fm_, f0_;
    CacheStore<Dual1> caches_;
    std::vector<double> unit_, q_;
};

// Finite differences of the inner first derivative.
class FdOverInner final : public Engine {
public:
    FdOverInner(Operator op, CallStats& stats, const Backend& so, const Function& f, XSpan x, ContextArgs ctx)
        : Engine(stats, so.id(), JacobianSide::pushforward),
          rule_(so.outer().finite_diff_options().step),
          xp_(f.input_size()),
          gp_(std::max(f.input_size(), f.output_size())),
          gm_(gp_.size()),
          g0_(gp_.size()),
          y_(f.output_size()),
          primal_(ctx.size()) {
        const Operator first = op == Operator::second_derivative ? Operator::derivative : Operator::gradient;
        inner_ = make_engine(first, f, so.inner(), x, ctx, stats);
    }

    void hvp(const Function& f, XSpan x, const Batch& seeds, ContextArgs ctx, double* y, Batch& out) override {
        const std::size_t n = x.size();
        const std::size_t k = seeds.rows();
        if (out.rows() != k || out.cols() != n) out.reshape(k, n);
        const std::span<double> gp(gp_.data(), n), gm(gm_.data(), n), g0(g0_.data(), n);
        if (rule_.scheme == FdScheme::forward) gradient_at(f, x, ctx, g0);
        for (std::size_t s = 0; s < k; ++s) {
            const auto v = seeds.row(s);
            const double h = fd_step(x, v, rule_);
            for (std::size_t i = 0; i < n; ++i) xp_[i] = x[i] + h * v[i];
            gradient_at(f, xp_, ctx, gp);
            if (rule_.scheme == FdScheme::central) {
                for (std::size_t i = 0; i < n; ++i) xp_[i] = x[i] - h * v[i];
                gradient_at(f, xp_, ctx, gm);
                for (std::size_t i = 0; i < n; ++i) out(s, i) = (gp[i] - gm[i]) / (2.0 * h);
            } else {
                for (std::size_t i = 0; i < n; ++i) out(s, i) = (gp[i] - g0[i]) / h;
            }
        }
        stats().hvps += k;
        if (y) {
            f.eval<double>(x, y_, primal_.bind(ctx));
            *y = y_[0];
        }
    }

    void second_derivative(const Function& f, double x, ContextArgs ctx, std::span<double> y,
                           std::span<double> out) override {
        const std::size_t m = y_.size();
        const std::span<double> gp(gp_.data(), m), gm(gm_.data(), m), g0(g0_.data(), m);
        const double one = 1.0;
        const double h = fd_step(XSpan(&x, 1), XSpan(&one, 1), rule_);
        inner_->derivative(f, x + h, ctx, {}, gp);
        check_finite(gp, "second_derivative");
        if (rule_.scheme == FdScheme::central) {
            inner_->derivative(f, x - h, ctx, {}, gm);
            check_finite(gm, "second_derivative");
            for (std::size_t j = 0; j < m; ++j) out[j] = (gp[j] - gm[j]) / (2.0 * h);
        } else {
            inner_->derivative(f, x, ctx, {}, g0);
            for (std::size_t j = 0; j < m; ++j) out[j] = (gp[j] - g0[j]) / h;
        }
        if (!y.empty()) f.eval<double>(XSpan(&x, 1), y, primal_.bind(ctx));
    }

    const Tape* tape() const override { return inner_->tape(); }

private:
    void gradient_at(const Function& f, XSpan at, ContextArgs ctx, std::span<double> g) {
        inner_->gradient(f, at, ctx, nullptr, g);
        check_finite(g, "hvp");
    }

    StepRule rule_;
    std::unique_ptr<Engine> inner_;
    std::vector<double> xp_, gp_, gm_, g0_, y_;
    PrimalContexts primal_;
};

}  // namespace

std::unique_ptr<Engine> make_second_order_engine(Operator op, const Function& f, const Backend& so, XSpan x,
                                                 ContextArgs ctx, CallStats& stats) {
    const Backend& outer = so.outer();
    const Backend& inner = so.inner();
    const std::string opname(operator_name(op));
    switch (outer.kind()) {
        case Backend::Kind::forward:
            switch (inner.kind()) {
                case Backend::Kind::reverse: return std::make_unique<DualOverTape>(stats, so, f, x, ctx);
                case Backend::Kind::forward:
                    if (f.in_place())
                        throw UnsupportedOperator(opname, so.id(),
                                                  "forward-over-forward requires out-of-place functions; '" + f.name() +
                                                      "' is in-place");
                    return std::make_unique<DualOverDual>(stats, so, f, ctx);
                case Backend::Kind::finite_diff: return std::make_unique<DualOverFd>(stats, so, f, ctx);
                default: break;
            }
            break;
        case Backend::Kind::finite_diff:
            if (inner.kind() == Backend::Kind::finite_diff && !outer.finite_diff_options().nested)
                throw UnsupportedOperator(opname, so.id(), "finite differences of finite differences need fd(nested)");
            if (inner.kind() == Backend::Kind::forward || inner.kind() == Backend::Kind::reverse ||
                inner.kind() == Backend::Kind::finite_diff)
                return std::make_unique<FdOverInner>(op, stats, so, f, x, ctx);
            break;
        case Backend::Kind::reverse:
            throw UnsupportedOperator(opname, so.id(),
                                      "reverse-mode outer differentiation is not implemented; use second_order(dual," +
                                          inner.id() + ")");
        default: break;
    }
    throw UnsupportedOperator(opname, so.id(), "second-order components must be dual, tape or fd backends");
}

}  // namespace adkit::detail
