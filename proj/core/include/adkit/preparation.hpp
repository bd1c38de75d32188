#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adkit/backend.hpp"
#include "adkit/context.hpp"
#include "adkit/function.hpp"
#include "adkit/plan.hpp"

namespace adkit {

class Tape;
class SparsityPattern;
struct Coloring;

namespace detail {
class Engine;
}

/// Work counters, incremented by every call through a preparation
/// (including nested preparations).
struct CallStats {
    std::size_t pushforwards = 0;  // directional derivatives issued (one per seed)
    std::size_t pullbacks = 0;     // vector-Jacobian products issued (one per seed)
    std::size_t hvps = 0;          // Hessian-vector products issued (one per seed)
    std::size_t evaluations = 0;   // primal or perturbed evaluations (finite differences)
    std::size_t records = 0;       // tapes recorded (preparation + re-records)
};

/// Chunk partition of the directions processed by the forward backend.
struct SeedBank {
    std::size_t directions = 0;
    int chunk_size = 0;
    int lane_width = 0;  // storage width of the dual lanes (>= chunk_size)
    std::vector<std::pair<std::size_t, std::size_t>> chunks;  // [begin, end)
};

/// Input signature a preparation is valid for.
struct Signature {
    std::size_t input_size = 0;
    std::size_t output_size = 0;
    ContextSignature contexts;
};

/// One-time setup for repeated differentiation of one (operator, function,
/// backend, input signature).
///
/// Opaque and process-local. Holds mutable workspaces: at most one call may
/// use a preparation at a time; it may move between threads between calls.
class Preparation {
public:
    Preparation(Operator op, const Function& f, const Backend& b, Signature sig, OperatorPlan plan);
    Preparation(Preparation&&) noexcept;
    Preparation& operator=(Preparation&&) noexcept;
    ~Preparation();

    Operator op() const noexcept { return op_; }
    const Backend& backend() const noexcept { return backend_; }
    const Signature& signature() const noexcept { return signature_; }
    const OperatorPlan& plan() const noexcept { return plan_; }
    const void* function_identity() const noexcept { return function_; }

    const CallStats& stats() const noexcept { return *stats_; }
    void reset_stats() noexcept { *stats_ = CallStats{}; }

    // Introspection of backend payloads; null when not applicable.
    const SeedBank* seed_bank() const;
    const Tape* tape() const;
    const SparsityPattern* pattern() const;
    const Coloring* coloring() const;

    detail::Engine& engine() { return *engine_; }
    CallStats& mutable_stats() noexcept { return *stats_; }
    void set_engine(std::unique_ptr<detail::Engine> e);

private:
    Operator op_;
    Backend backend_;
    const void* function_;
    Signature signature_;
    OperatorPlan plan_;
    std::unique_ptr<CallStats> stats_;
    std::unique_ptr<detail::Engine> engine_;
};

/// Builds a preparation from a typical input of the right size.
///
/// Throws ShapeMismatch on a malformed input or an operator/shape precondition
/// violation, UnsupportedOperator when the backend cannot realize `op`.
Preparation prepare(Operator op, const Function& f, const Backend& backend, std::span<const double> typical_input,
                    ContextArgs contexts = {});
inline Preparation prepare(Operator op, const Function& f, const Backend& backend, double typical_input,
                           ContextArgs contexts = {}) {
    return prepare(op, f, backend, std::span<const double>(&typical_input, 1), contexts);
}

}  // namespace adkit
