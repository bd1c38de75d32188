#pragma once

#include <span>
#include <vector>

#include "adkit/backend.hpp"
#include "adkit/context.hpp"
#include "adkit/function.hpp"
#include "adkit/matrix.hpp"
#include "adkit/preparation.hpp"

namespace adkit::detail {

/// Difference quotients in plain doubles with preallocated buffers.
class FdKernel {
public:
    FdKernel(const StepRule& rule, std::size_t n, std::size_t m, std::size_t contexts);

    /// Evaluates f(x); the forward scheme reuses it as the base point.
    void begin(const Function& f, std::span<const double> x, ContextArgs ctx, CallStats* stats);
    void direction(const Function& f, std::span<const double> x, std::span<const double> v, ContextArgs ctx,
                   std::span<double> out, CallStats* stats);
    /// cols(i, :) = derivative along e_i.
    void columns(const Function& f, std::span<const double> x, ContextArgs ctx, Batch& cols, CallStats* stats);

    std::span<const double> primal() const noexcept { return f0_; }
    const StepRule& rule() const noexcept { return rule_; }

private:
    void evaluate(const Function& f, std::span<const double> x, ContextArgs ctx, std::span<double> y,
                  CallStats* stats);
    void check_finite(std::span<const double> values, double h) const;

    StepRule rule_;
    std::vector<double> xp_, f0_, fp_, fm_, unit_;
    PrimalContexts contexts_;
};

}  // namespace adkit::detail
