#pragma once

// Dual-number forward-mode backend: standalone entry points. Operator-level
// access goes through prepare()/pushforward() with Backend::dual().

#include <cstddef>
#include <span>
#include <vector>

#include "adkit/context.hpp"
#include "adkit/dual.hpp"
#include "adkit/function.hpp"
#include "adkit/matrix.hpp"

namespace adkit {

struct DualEvalResult {
    std::vector<double> primal;
    Batch tangents;  // one output-sized tangent per direction
};

/// Evaluates f on dual numbers along every direction, chunk_size lanes per pass.
/// Throws UnsupportedPrimitive if f applies a primitive without a forward rule,
/// UnsupportedOperator for in-place functions.
DualEvalResult dual_eval(const Function& f, std::span<const double> x, const Batch& directions, int chunk_size = 8,
                         ContextArgs ctx = {});

/// Dual lane storage width used for `lanes` active lanes (1, 4, 8 or 16).
int lane_width_for(std::size_t lanes);

}  // namespace adkit
