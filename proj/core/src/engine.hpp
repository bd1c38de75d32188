#pragma once

// Per-preparation executors. Not installed.

#include <memory>
#include <span>
#include <string>

#include "adkit/backend.hpp"
#include "adkit/context.hpp"
#include "adkit/function.hpp"
#include "adkit/matrix.hpp"
#include "adkit/plan.hpp"
#include "adkit/preparation.hpp"

namespace adkit {

class SparsityPattern;
struct Coloring;

namespace detail {

using XSpan = std::span<const double>;

/// Executes the operators one preparation was built for. `y` spans are
/// empty (or `y` pointers null) when the caller does not want the primal.
class Engine {
public:
    Engine(CallStats& stats, std::string backend_id, JacobianSide side)
        : stats_(&stats), backend_id_(std::move(backend_id)), side_(side) {}
    virtual ~Engine() = default;
    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    virtual void pushforward(const Function& f, XSpan x, const Batch& seeds, ContextArgs ctx, std::span<double> y,
                             Batch& out);
    virtual void pullback(const Function& f, XSpan x, const Batch& seeds, ContextArgs ctx, std::span<double> y,
                          Batch& out);
    virtual void derivative(const Function& f, double x, ContextArgs ctx, std::span<double> y,
                            std::span<double> out);
    virtual void gradient(const Function& f, XSpan x, ContextArgs ctx, double* y, std::span<double> grad);
    virtual void jacobian(const Function& f, XSpan x, ContextArgs ctx, std::span<double> y, Matrix& out);
    virtual void second_derivative(const Function& f, double x, ContextArgs ctx, std::span<double> y,
                                   std::span<double> out);
    virtual void hvp(const Function& f, XSpan x, const Batch& seeds, ContextArgs ctx, double* y, Batch& out);
    virtual void hessian(const Function& f, XSpan x, ContextArgs ctx, double* y, Matrix& out);

    virtual const SeedBank* seed_bank() const { return nullptr; }
    virtual const Tape* tape() const { return nullptr; }
    virtual const SparsityPattern* pattern() const { return nullptr; }
    virtual const Coloring* coloring() const { return nullptr; }

    const std::string& backend_id() const noexcept { return backend_id_; }

protected:
    [[noreturn]] void unsupported(Operator op, const std::string& why) const;
    CallStats& stats() noexcept { return *stats_; }
    const Batch& identity(std::size_t n);

    // Scratch for the derived operators.
    Batch scratch_;
    Batch seed1_{1, 1, 1.0};
    std::vector<double> y_scratch_;

private:
    CallStats* stats_;
    std::string backend_id_;
    JacobianSide side_;
    Batch identity_;
};

/// Builds the engine realizing `op` on `b` for f at the typical input x.
std::unique_ptr<Engine> make_engine(Operator op, const Function& f, const Backend& b, XSpan x, ContextArgs ctx,
                                    CallStats& stats);

std::unique_ptr<Engine> make_forward_engine(Operator op, const Function& f, const Backend& b, XSpan x,
                                            ContextArgs ctx, CallStats& stats);
std::unique_ptr<Engine> make_tape_engine(Operator op, const Function& f, const Backend& b, XSpan x, ContextArgs ctx,
                                         CallStats& stats);
std::unique_ptr<Engine> make_fd_engine(Operator op, const Function& f, const Backend& b, XSpan x, ContextArgs ctx,
                                       CallStats& stats);
std::unique_ptr<Engine> make_second_order_engine(Operator op, const Function& f, const Backend& so, XSpan x,
                                                 ContextArgs ctx, CallStats& stats);
std::unique_ptr<Engine> make_sparse_engine(Operator op, const Function& f, const Backend& b, XSpan x, ContextArgs ctx,
                                           CallStats& stats);

/// Tape engine access for forward-over-reverse plans.
class TapeAccess {
public:
    virtual ~TapeAccess() = default;
    /// The tape, re-recorded first if a Constant context changed since recording.
    virtual Tape& refreshed(const Function& f, XSpan x, ContextArgs ctx) = 0;
};

/// Dense result storage of the given shape, reusing `out` when it already fits.
DenseMatrix& dense_out(Matrix& out, std::size_t rows, std::size_t cols);

/// Double-typed copies of a context list: Constants alias the caller's data,
/// Caches get private scratch buffers.
class ScratchContexts {
public:
    ScratchContexts() = default;
    explicit ScratchContexts(const ContextSignature& sig);
    ContextArgs bind(std::span<const Context> descriptors);

private:
    std::vector<std::vector<double>> buffers_;
    std::vector<Context> items_;
};

}  // namespace detail
}  // namespace adkit
