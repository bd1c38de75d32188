#pragma once

// The eight operators, each in four variants:
//   op(...)                    out-of-place, derivative only
//   value_and_op(...)          out-of-place, primal value and derivative
//   op_into(out, ...)          in-place, derivative only
//   value_and_op_into(...)     in-place, primal value and derivative
// plus an unprepared convenience overload that prepares on the fly.
//
// Every prepared call checks that the preparation matches the operator,
// backend, function, input size and context signature (PreparationMismatch).

#include <span>
#include <utility>
#include <vector>

#include "adkit/backend.hpp"
#include "adkit/context.hpp"
#include "adkit/function.hpp"
#include "adkit/matrix.hpp"
#include "adkit/preparation.hpp"

namespace adkit {

using Vector = std::vector<double>;
using XSpan = std::span<const double>;

// Jacobian-vector products; seeds has one input-sized direction per row.
Batch pushforward(const Function& f, Preparation& prep, const Backend& b, XSpan x, const Batch& seeds,
                  ContextArgs ctx = {});
std::pair<Vector, Batch> value_and_pushforward(const Function& f, Preparation& prep, const Backend& b, XSpan x,
                                               const Batch& seeds, ContextArgs ctx = {});
void pushforward_into(Batch& out, const Function& f, Preparation& prep, const Backend& b, XSpan x,
                      const Batch& seeds, ContextArgs ctx = {});
void value_and_pushforward_into(std::span<double> y, Batch& out, const Function& f, Preparation& prep,
                                const Backend& b, XSpan x, const Batch& seeds, ContextArgs ctx = {});
Batch pushforward(const Function& f, const Backend& b, XSpan x, const Batch& seeds, ContextArgs ctx = {});

// Vector-Jacobian products; seeds has one output-sized direction per row.
Batch pullback(const Function& f, Preparation& prep, const Backend& b, XSpan x, const Batch& seeds,
               ContextArgs ctx = {});
std::pair<Vector, Batch> value_and_pullback(const Function& f, Preparation& prep, const Backend& b, XSpan x,
                                            const Batch& seeds, ContextArgs ctx = {});
void pullback_into(Batch& out, const Function& f, Preparation& prep, const Backend& b, XSpan x, const Batch& seeds,
                   ContextArgs ctx = {});
void value_and_pullback_into(std::span<double> y, Batch& out, const Function& f, Preparation& prep,
                             const Backend& b, XSpan x, const Batch& seeds, ContextArgs ctx = {});
Batch pullback(const Function& f, const Backend& b, XSpan x, const Batch& seeds, ContextArgs ctx = {});

// Scalar input.
Vector derivative(const Function& f, Preparation& prep, const Backend& b, double x, ContextArgs ctx = {});
std::pair<Vector, Vector> value_and_derivative(const Function& f, Preparation& prep, const Backend& b, double x,
                                               ContextArgs ctx = {});
void derivative_into(std::span<double> out, const Function& f, Preparation& prep, const Backend& b, double x,
                     ContextArgs ctx = {});
void value_and_derivative_into(std::span<double> y, std::span<double> out, const Function& f, Preparation& prep,
                               const Backend& b, double x, ContextArgs ctx = {});
Vector derivative(const Function& f, const Backend& b, double x, ContextArgs ctx = {});

// Scalar output.
Vector gradient(const Function& f, Preparation& prep, const Backend& b, XSpan x, ContextArgs ctx = {});
std::pair<double, Vector> value_and_gradient(const Function& f, Preparation& prep, const Backend& b, XSpan x,
                                             ContextArgs ctx = {});
void gradient_into(std::span<double> grad, const Function& f, Preparation& prep, const Backend& b, XSpan x,
                   ContextArgs ctx = {});
double value_and_gradient_into(std::span<double> grad, const Function& f, Preparation& prep, const Backend& b,
                               XSpan x, ContextArgs ctx = {});
Vector gradient(const Function& f, const Backend& b, XSpan x, ContextArgs ctx = {});

// Output-count x input-count; sparse storage when the backend is sparse.
Matrix jacobian(const Function& f, Preparation& prep, const Backend& b, XSpan x, ContextArgs ctx = {});
std::pair<Vector, Matrix> value_and_jacobian(const Function& f, Preparation& prep, const Backend& b, XSpan x,
                                             ContextArgs ctx = {});
void jacobian_into(Matrix& out, const Function& f, Preparation& prep, const Backend& b, XSpan x,
                   ContextArgs ctx = {});
void value_and_jacobian_into(std::span<double> y, Matrix& out, const Function& f, Preparation& prep,
                             const Backend& b, XSpan x, ContextArgs ctx = {});
Matrix jacobian(const Function& f, const Backend& b, XSpan x, ContextArgs ctx = {});

// Scalar input.
Vector second_derivative(const Function& f, Preparation& prep, const Backend& b, double x, ContextArgs ctx = {});
std::pair<Vector, Vector> value_and_second_derivative(const Function& f, Preparation& prep, const Backend& b,
                                                      double x, ContextArgs ctx = {});
void second_derivative_into(std::span<double> out, const Function& f, Preparation& prep, const Backend& b,
                            double x, ContextArgs ctx = {});
void value_and_second_derivative_into(std::span<double> y, std::span<double> out, const Function& f,
                                      Preparation& prep, const Backend& b, double x, ContextArgs ctx = {});
Vector second_derivative(const Function& f, const Backend& b, double x, ContextArgs ctx = {});

// Hessian-vector products; scalar output, input-sized seeds.
Batch hvp(const Function& f, Preparation& prep, const Backend& b, XSpan x, const Batch& seeds,
          ContextArgs ctx = {});
std::pair<double, Batch> value_and_hvp(const Function& f, Preparation& prep, const Backend& b, XSpan x,
                                       const Batch& seeds, ContextArgs ctx = {});
void hvp_into(Batch& out, const Function& f, Preparation& prep, const Backend& b, XSpan x, const Batch& seeds,
              ContextArgs ctx = {});
double value_and_hvp_into(Batch& out, const Function& f, Preparation& prep, const Backend& b, XSpan x,
                          const Batch& seeds, ContextArgs ctx = {});
Batch hvp(const Function& f, const Backend& b, XSpan x, const Batch& seeds, ContextArgs ctx = {});

// Symmetric; sparse storage when the backend is sparse.
Matrix hessian(const Function& f, Preparation& prep, const Backend& b, XSpan x, ContextArgs ctx = {});
std::pair<double, Matrix> value_and_hessian(const Function& f, Preparation& prep, const Backend& b, XSpan x,
                                            ContextArgs ctx = {});
void hessian_into(Matrix& out, const Function& f, Preparation& prep, const Backend& b, XSpan x,
                  ContextArgs ctx = {});
double value_and_hessian_into(Matrix& out, const Function& f, Preparation& prep, const Backend& b, XSpan x,
                              ContextArgs ctx = {});
Matrix hessian(const Function& f, const Backend& b, XSpan x, ContextArgs ctx = {});

}  // namespace adkit
