#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adkit/backend.hpp"

namespace adkit {

/// The eight differentiation operators.
enum class Operator {
    pushforward,
    pullback,
    derivative,
    gradient,
    jacobian,
    second_derivative,
    hvp,
    hessian,
};

inline constexpr Operator all_operators[] = {
    Operator::pushforward, Operator::pullback,          Operator::derivative, Operator::gradient,
    Operator::jacobian,    Operator::second_derivative, Operator::hvp,        Operator::hessian,
};

std::string_view operator_name(Operator op) noexcept;
std::optional<Operator> operator_from_name(std::string_view name) noexcept;
bool is_second_order(Operator op) noexcept;

/// How many times a step runs per call of the step before it.
enum class Repeat {
    once,
    per_input,       // ×n, once per input basis vector
    per_output,      // ×m, once per output basis vector
    per_color,       // ×colors, once per column (or symmetric) color
    per_row_color,   // ×colors, once per row color
    per_seed,        // once per seed in the caller's batch
};

/// How a step relates to the previous one.
enum class Link {
    start,
    derives,    // "⇒": realized by
    composes,   // "∘": the previous step differentiates this map
    alongside,  // "+": second half of a bidirectional sparse plan
};

struct PlanStep {
    Operator op;
    std::string backend;
    Repeat repeat = Repeat::once;
    Link link = Link::derives;
    bool native = false;

    friend bool operator==(const PlanStep&, const PlanStep&) = default;
};

/// Resolved fallback chain for one operator on one backend.
///
/// The chain always bottoms out in native pushforward/pullback steps. It is
/// stored in every Preparation for introspection.
struct OperatorPlan {
    Operator op;
    std::string backend;
    std::vector<PlanStep> chain;

    /// e.g. "hessian ⇒ hvp×n ⇒ pushforward(dual) ∘ gradient(tape) ⇒ pullback(tape)".
    std::string to_string() const;
    bool terminates_natively() const;
    /// First step with the given operator, or null.
    const PlanStep* find(Operator op) const;

    friend bool operator==(const OperatorPlan&, const OperatorPlan&) = default;
};

/// Input/output element counts, when known; steers the Jacobian orientation.
struct IoSize {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
};

/// Resolves the derivation chain for `op` on `backend`. Pure function of the
/// operator, the backend (capabilities and parameters) and the sizes.
/// Throws UnsupportedOperator when neither a native operator nor a chain exists.
OperatorPlan resolve(Operator op, const Backend& backend, std::optional<IoSize> sizes = std::nullopt);

enum class JacobianSide { pushforward, pullback };

/// Orientation of a dense Jacobian: pushforward when both sides are native and
/// the map is square, otherwise the side with fewer seeds.
JacobianSide jacobian_side(const Backend& backend, std::optional<IoSize> sizes);

}  // namespace adkit
