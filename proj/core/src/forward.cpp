#include "adkit/forward.hpp"

#include <algorithm>

#include "engine.hpp"

namespace adkit {

int lane_width_for(std::size_t lanes) {
    if (lanes <= 1) return 1;
    if (lanes <= 4) return 4;
    if (lanes <= 8) return 8;
    return 16;
}

namespace detail {
namespace {

template <int W>
class ForwardEngine final : public Engine {
public:
    using D = Dual<double, W>;

    ForwardEngine(CallStats& stats, const Backend& b, JacobianSide side, const Function& f, int chunk,
                  std::size_t directions, ContextArgs ctx)
        : Engine(stats, b.id(), side),
          chunk_(std::min(chunk, W)),
          xd_(f.input_size()),
          yd_(f.output_size()),
          caches_(ContextSignature::of(ctx)) {
        bank_.directions = directions;
        bank_.chunk_size = chunk;
        bank_.lane_width = W;
        for (std::size_t b0 = 0; b0 < directions; b0 += static_cast<std::size_t>(chunk_))
            bank_.chunks.emplace_back(b0, std::min(directions, b0 + static_cast<std::size_t>(chunk_)));
    }

    void pushforward(const Function& f, XSpan x, const Batch& seeds, ContextArgs ctx, std::span<double> y,
                     Batch& out) override {
        const std::size_t k = seeds.rows();
        const std::size_t m = yd_.size();
        if (out.rows() != k || out.cols() != m) out.reshape(k, m);
        if (k == 0) {
            load(x, [](std::size_t, int) { return 0.0; });
            run(f, ctx);
        }
        for (std::size_t b0 = 0; b0 < k; b0 += static_cast<std::size_t>(chunk_)) {
            const int lanes = static_cast<int>(std::min<std::size_t>(chunk_, k - b0));
            load(x, [&](std::size_t i, int l) { return l < lanes ? seeds(b0 + l, i) : 0.0; });
            run(f, ctx);
            for (int l = 0; l < lanes; ++l)
                for (std::size_t j = 0; j < m; ++j) out(b0 + l, j) = yd_[j].d[l];
            stats().pushforwards += static_cast<std::size_t>(lanes);
        }
        write_primal(y);
    }

    // Transpose fallback: assemble J from pushforwards, then apply J^T.
    void pullback(const Function& f, XSpan x, const Batch& seeds, ContextArgs ctx, std::span<double> y,
                  Batch& out) override {
        const std::size_t n = xd_.size();
        const std::size_t m = yd_.size();
        jacobian_columns(f, x, ctx);
        out.reshape(seeds.rows(), n);
        for (std::size_t k = 0; k < seeds.rows(); ++k)
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < m; ++j) s += seeds(k, j) * columns_(i, j);
                out(k, i) = s;
            }
        write_primal(y);
    }

    void gradient(const Function& f, XSpan x, ContextArgs ctx, double* y, std::span<double> grad) override {
        const std::size_t n = xd_.size();
        if (n == 0) {
            load(x, [](std::size_t, int) { return 0.0; });
            run(f, ctx);
        }
        for (std::size_t b0 = 0; b0 < n; b0 += static_cast<std::size_t>(chunk_)) {
            const int lanes = static_cast<int>(std::min<std::size_t>(chunk_, n - b0));
            load(x, [&](std::size_t i, int l) { return l < lanes && i == b0 + l ? 1.0 : 0.0; });
            run(f, ctx);
            for (int l = 0; l < lanes; ++l) grad[b0 + l] = yd_[0].d[l];
            stats().pushforwards += static_cast<std::size_t>(lanes);
        }
        if (y) *y = yd_[0].val;
    }

    void jacobian(const Function& f, XSpan x, ContextArgs ctx, std::span<double> y, Matrix& out) override {
        const std::size_t n = xd_.size();
        const std::size_t m = yd_.size();
        jacobian_columns(f, x, ctx);
        DenseMatrix& J = dense_out(out, m, n);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) J(i, j) = columns_(j, i);
        write_primal(y);
    }

    const SeedBank* seed_bank() const override { return &bank_; }

private:
    template <class Lane>
    void load(XSpan x, Lane lane) {
        for (std::size_t i = 0; i < xd_.size(); ++i) {
            xd_[i].val = x[i];
            for (int l = 0; l < W; ++l) xd_[i].d[l] = lane(i, l);
        }
    }

    void run(const Function& f, ContextArgs ctx) {
        f.eval<D>(xd_, yd_, caches_.view(ctx));
    }

    void write_primal(std::span<double> y) const {
        for (std::size_t j = 0; j < y.size(); ++j) y[j] = yd_[j].val;
    }

    // columns_(i, :) = J e_i.
    void jacobian_columns(const Function& f, XSpan x, ContextArgs ctx) {
        const std::size_t n = xd_.size();
        const std::size_t m = yd_.size();
        columns_.reshape(n, m);
        if (n == 0) {
            load(x, [](std::size_t, int) { return 0.0; });
            run(f, ctx);
        }
        for (std::size_t b0 = 0; b0 < n; b0 += static_cast<std::size_t>(chunk_)) {
            const int lanes = static_cast<int>(std::min<std::size_t>(chunk_, n - b0));
            load(x, [&](std::size_t i, int l) { return l < lanes && i == b0 + l ? 1.0 : 0.0; });
            run(f, ctx);
            for (int l = 0; l < lanes; ++l)
                for (std::size_t j = 0; j < m; ++j) columns_(b0 + l, j) = yd_[j].d[l];
            stats().pushforwards += static_cast<std::size_t>(lanes);
        }
    }

    int chunk_;
    std::vector<D> xd_;
    std::vector<D> yd_;
    CacheStore<D> caches_;
    SeedBank bank_;
    Batch columns_;
};

template <int W>
std::unique_ptr<Engine> build(CallStats& stats, const Backend& b, JacobianSide side, const Function& f, int chunk,
                              std::size_t directions, ContextArgs ctx) {
    return std::make_unique<ForwardEngine<W>>(stats, b, side, f, chunk, directions, ctx);
}

}  // namespace

std::unique_ptr<Engine> make_forward_engine(Operator op, const Function& f, const Backend& b, XSpan x,
                                            ContextArgs ctx, CallStats& stats) {
    if (f.in_place())
        throw UnsupportedOperator(std::string(operator_name(op)), b.id(),
                                  "the dual backend requires out-of-place functions; '" + f.name() + "' is in-place");
    const std::size_t n = x.size();
    const int chunk = b.forward_options().chunk_size;
    std::size_t directions = 0;
    std::size_t lanes = static_cast<std::size_t>(chunk);
    switch (op) {
        case Operator::derivative:
            directions = 1;
            lanes = 1;
            break;
        case Operator::gradient:
        case Operator::jacobian:
        case Operator::pullback:
            directions = n;
            lanes = std::min<std::size_t>(static_cast<std::size_t>(chunk), std::max<std::size_t>(n, 1));
            break;
        default:
            break;
    }
    const JacobianSide side = jacobian_side(b, IoSize{n, f.output_size()});
    switch (lane_width_for(lanes)) {
        case 1: return build<1>(stats, b, side, f, chunk, directions, ctx);
        case 4: return build<4>(stats, b, side, f, chunk, directions, ctx);
        case 8: return build<8>(stats, b, side, f, chunk, directions, ctx);
        default: return build<16>(stats, b, side, f, chunk, directions, ctx);
    }
}

}  // namespace detail

DualEvalResult dual_eval(const Function& f, std::span<const double> x, const Batch& directions, int chunk_size,
                         ContextArgs ctx) {
    if (directions.rows() == 0) throw ShapeMismatch("pushforward", "dual", "no directions given");
    if (directions.cols() != f.input_size() || x.size() != f.input_size())
        throw ShapeMismatch("pushforward", "dual", "directions and input must have " + std::to_string(f.input_size()) +
                                                       " elements");
    const Backend b = Backend::dual(ForwardOptions{chunk_size, false});
    CallStats stats;
    auto engine = detail::make_forward_engine(Operator::pushforward, f, b, x, ctx, stats);
    DualEvalResult r;
    r.primal.resize(f.output_size());
    engine->pushforward(f, x, directions, ctx, r.primal, r.tangents);
    return r;
}

}  // namespace adkit
