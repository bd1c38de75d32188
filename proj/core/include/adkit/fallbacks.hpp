#pragma once

// Backend combination: SecondOrder and MixedMode live in Backend; this header
// adds backend translation (DifferentiateWith) and the explicit
// forward-over-reverse entry point.

#include <span>
#include <vector>

#include "adkit/backend.hpp"
#include "adkit/context.hpp"
#include "adkit/function.hpp"
#include "adkit/matrix.hpp"
#include "adkit/preparation.hpp"

namespace adkit {

/// Wraps f so that any outer backend differentiates it through `substitute`.
///
/// Evaluating the wrapper calls f directly. Under the dual backend the tangent
/// lanes come from substitute's Jacobian at the primal point; under the tape
/// backend the wrapper is recorded as a single opaque node whose pullback is
/// substitute's pullback; sparsity detection treats it as dense.
Function differentiate_with(const Function& f, const Backend& substitute);

/// Hessian-vector products through a SecondOrder backend: pushforward of the
/// inner gradient map. `prep` must be an hvp preparation for `so`.
Batch second_order_hvp(const Backend& so, const Function& f, Preparation& prep, std::span<const double> x,
                       const Batch& seeds, ContextArgs ctx = {});

}  // namespace adkit
