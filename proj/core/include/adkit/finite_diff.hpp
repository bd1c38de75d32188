#pragma once

#include <span>
#include <vector>

#include "adkit/backend.hpp"
#include "adkit/context.hpp"
#include "adkit/function.hpp"
#include "adkit/matrix.hpp"

namespace adkit {

/// Step actually used along direction v at x: base_step, scaled by
/// max(1, |x_i|) over the coordinates where v is nonzero when relative.
double fd_step(std::span<const double> x, std::span<const double> v, const StepRule& rule);

/// Central: (f(x+hv) - f(x-hv)) / 2h. Forward: (f(x+hv) - f(x)) / h.
/// Throws NonFiniteResult if a perturbed evaluation is not finite.
std::vector<double> fd_pushforward(const Function& f, std::span<const double> x, std::span<const double> v,
                                   const StepRule& rule = {}, ContextArgs ctx = {});

/// Column i is fd_pushforward along e_i.
DenseMatrix fd_jacobian(const Function& f, std::span<const double> x, const StepRule& rule = {},
                        ContextArgs ctx = {});

/// Rows of fd_jacobian combined by w: J^T w from the same evaluations.
std::vector<double> fd_pullback(const Function& f, std::span<const double> x, std::span<const double> w,
                                const StepRule& rule = {}, ContextArgs ctx = {});

}  // namespace adkit
