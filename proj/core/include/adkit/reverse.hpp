#pragma once

// Tape-recording reverse-mode backend: standalone entry points.

#include <span>

#include "adkit/context.hpp"
#include "adkit/function.hpp"
#include "adkit/tape.hpp"

namespace adkit {

/// Records the primitive trace of f at x. Cache writes are traced; Constant
/// values are embedded as literals. Throws UnsupportedPrimitive, and
/// TraceEscape under BranchPolicy::reject when f compares tracked values.
Tape record(const Function& f, std::span<const double> x, ContextArgs ctx = {},
            BranchPolicy policy = BranchPolicy::freeze);

}  // namespace adkit
