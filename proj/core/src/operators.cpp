#include "adkit/operators.hpp"

#include "engine.hpp"

namespace adkit {
namespace {

std::string name_of(Operator op) { return std::string(operator_name(op)); }

void check(Operator op, const Function& f, const Preparation& prep, const Backend& b, std::size_t n,
           ContextArgs ctx) {
    const std::string on = name_of(op);
    if (prep.op() != op)
        throw PreparationMismatch(on, b.id(), "preparation was built for " + name_of(prep.op()));
    if (!(prep.backend() == b))
        throw PreparationMismatch(on, b.id(), "preparation was built for backend " + prep.backend().id());
    if (prep.function_identity() != f.identity())
        throw PreparationMismatch(on, b.id(), "preparation was built for a different function than '" + f.name() + "'");
    if (n != prep.signature().input_size)
        throw PreparationMismatch(on, b.id(), "input has " + std::to_string(n) + " elements, preparation expects " +
                                                  std::to_string(prep.signature().input_size));
    if (!prep.signature().contexts.matches(ctx))
        throw PreparationMismatch(on, b.id(), "context kinds or sizes differ from the preparation");
}

void check_size(Operator op, const Backend& b, const char* what, std::size_t got, std::size_t want) {
    if (got != want)
        throw ShapeMismatch(name_of(op), b.id(), std::string(what) + " has " + std::to_string(got) +
                                                     " entries, expected " + std::to_string(want));
}

void check_seeds(Operator op, const Backend& b, const Batch& seeds, std::size_t want) {
    if (seeds.cols() != want)
        throw ShapeMismatch(name_of(op), b.id(), "seeds have " + std::to_string(seeds.cols()) +
                                                     " columns, expected " + std::to_string(want));
}

}  // namespace

// pushforward

void value_and_pushforward_into(std::span<double> y, Batch& out, const Function& f, Preparation& prep,
                                const Backend& b, XSpan x, const Batch& seeds, ContextArgs ctx) {
    check(Operator::pushforward, f, prep, b, x.size(), ctx);
    check_seeds(Operator::pushforward, b, seeds, f.input_size());
    if (!y.empty()) check_size(Operator::pushforward, b, "output buffer", y.size(), f.output_size());
    prep.engine().pushforward(f, x, seeds, ctx, y, out);
}
void pushforward_into(Batch& out, const Function& f, Preparation& prep, const Backend& b, XSpan x,
                      const Batch& seeds, ContextArgs ctx) {
    value_and_pushforward_into({}, out, f, prep, b, x, seeds, ctx);
}
std::pair<Vector, Batch> value_and_pushforward(const Function& f, Preparation& prep, const Backend& b, XSpan x,
                                               const Batch& seeds, ContextArgs ctx) {
    std::pair<Vector, Batch> r{Vector(f.output_size()), Batch()};
    value_and_pushforward_into(r.first, r.second, f, prep, b, x, seeds, ctx);
    return r;
}
Batch pushforward(const Function& f, Preparation& prep, const Backend& b, XSpan x, const Batch& seeds,
                  ContextArgs ctx) {
    Batch out;
    pushforward_into(out, f, prep, b, x, seeds, ctx);
    return out;
}
Batch pushforward(const Function& f, const Backend& b, XSpan x, const Batch& seeds, ContextArgs ctx) {
    Preparation prep = prepare(Operator::pushforward, f, b, x, ctx);
    return pushforward(f, prep, b, x, seeds, ctx);
}

// pullback

void value_and_pullback_into(std::span<double> y, Batch& out, const Function& f, Preparation& prep,
                             const Backend& b, XSpan x, const Batch& seeds, ContextArgs ctx) {
    check(Operator::pullback, f, prep, b, x.size(), ctx);
    check_seeds(Operator::pullback, b, seeds, f.output_size());
    if (!y.empty()) check_size(Operator::pullback, b, "output buffer", y.size(), f.output_size());
    prep.engine().pullback(f, x, seeds, ctx, y, out);
}
void pullback_into(Batch& out, const Function& f, Preparation& prep, const Backend& b, XSpan x, const Batch& seeds,
                   ContextArgs ctx) {
    value_and_pullback_into({}, out, f, prep, b, x, seeds, ctx);
}
std::pair<Vector, Batch> value_and_pullback(const Function& f, Preparation& prep, const Backend& b, XSpan x,
                                            const Batch& seeds, ContextArgs ctx) {
    std::pair<Vector, Batch> r{Vector(f.output_size()), Batch()};
    value_and_pullback_into(r.first, r.second, f, prep, b, x, seeds, ctx);
    return r;
}
Batch pullback(const Function& f, Preparation& prep, const Backend& b, XSpan x, const Batch& seeds,
               ContextArgs ctx) {
    Batch out;
    pullback_into(out, f, prep, b, x, seeds, ctx);
    return out;
}
Batch pullback(const Function& f, const Backend& b, XSpan x, const Batch& seeds, ContextArgs ctx) {
    Preparation prep = prepare(Operator::pullback, f, b, x, ctx);
    return pullback(f, prep, b, x, seeds, ctx);
}

// derivative

void value_and_derivative_into(std::span<double> y, std::span<double> out, const Function& f, Preparation& prep,
                               const Backend& b, double x, ContextArgs ctx) {
    check(Operator::derivative, f, prep, b, 1, ctx);
    check_size(Operator::derivative, b, "derivative buffer", out.size(), f.output_size());
    if (!y.empty()) check_size(Operator::derivative, b, "output buffer", y.size(), f.output_size());
    prep.engine().derivative(f, x, ctx, y, out);
}
void derivative_into(std::span<double> out, const Function& f, Preparation& prep, const Backend& b, double x,
                     ContextArgs ctx) {
    value_and_derivative_into({}, out, f, prep, b, x, ctx);
}
std::pair<Vector, Vector> value_and_derivative(const Function& f, Preparation& prep, const Backend& b, double x,
                                               ContextArgs ctx) {
    std::pair<Vector, Vector> r{Vector(f.output_size()), Vector(f.output_size())};
    value_and_derivative_into(r.first, r.second, f, prep, b, x, ctx);
    return r;
}
Vector derivative(const Function& f, Preparation& prep, const Backend& b, double x, ContextArgs ctx) {
    Vector out(f.output_size());
    derivative_into(out, f, prep, b, x, ctx);
    return out;
}
Vector derivative(const Function& f, const Backend& b, double x, ContextArgs ctx) {
    Preparation prep = prepare(Operator::derivative, f, b, x, ctx);
    return derivative(f, prep, b, x, ctx);
}

// gradient

namespace {
void gradient_impl(double* y, std::span<double> grad, const Function& f, Preparation& prep, const Backend& b, XSpan x,
                   ContextArgs ctx) {
    check(Operator::gradient, f, prep, b, x.size(), ctx);
    check_size(Operator::gradient, b, "gradient buffer", grad.size(), f.input_size());
    prep.engine().gradient(f, x, ctx, y, grad);
}
}  // namespace

double value_and_gradient_into(std::span<double> grad, const Function& f, Preparation& prep, const Backend& b,
                               XSpan x, ContextArgs ctx) {
    double y = 0.0;
    gradient_impl(&y, grad, f, prep, b, x, ctx);
    return y;
}
void gradient_into(std::span<double> grad, const Function& f, Preparation& prep, const Backend& b, XSpan x,
                   ContextArgs ctx) {
    gradient_impl(nullptr, grad, f, prep, b, x, ctx);
}
std::pair<double, Vector> value_and_gradient(const Function& f, Preparation& prep, const Backend& b, XSpan x,
                                             ContextArgs ctx) {
    std::pair<double, Vector> r{0.0, Vector(f.input_size())};
    r.first = value_and_gradient_into(r.second, f, prep, b, x, ctx);
    return r;
}
Vector gradient(const Function& f, Preparation& prep, const Backend& b, XSpan x, ContextArgs ctx) {
    Vector g(f.input_size());
    gradient_into(g, f, prep, b, x, ctx);
    return g;
}
Vector gradient(const Function& f, const Backend& b, XSpan x, ContextArgs ctx) {
    Preparation prep = prepare(Operator::gradient, f, b, x, ctx);
    return gradient(f, prep, b, x, ctx);
}

// jacobian

void value_and_jacobian_into(std::span<double> y, Matrix& out, const Function& f, Preparation& prep,
                             const Backend& b, XSpan x, ContextArgs ctx) {
    check(Operator::jacobian, f, prep, b, x.size(), ctx);
    if (!y.empty()) check_size(Operator::jacobian, b, "output buffer", y.size(), f.output_size());
    prep.engine().jacobian(f, x, ctx, y, out);
}
void jacobian_into(Matrix& out, const Function& f, Preparation& prep, const Backend& b, XSpan x, ContextArgs ctx) {
    value_and_jacobian_into({}, out, f, prep, b, x, ctx);
}
std::pair<Vector, Matrix> value_and_jacobian(const Function& f, Preparation& prep, const Backend& b, XSpan x,
                                             ContextArgs ctx) {
    std::pair<Vector, Matrix> r{Vector(f.output_size()), Matrix()};
    value_and_jacobian_into(r.first, r.second, f, prep, b, x, ctx);
    return r;
}
Matrix jacobian(const Function& f, Preparation& prep, const Backend& b, XSpan x, ContextArgs ctx) {
    Matrix out;
    jacobian_into(out, f, prep, b, x, ctx);
    return out;
}
Matrix jacobian(const Function& f, const Backend& b, XSpan x, ContextArgs ctx) {
    Preparation prep = prepare(Operator::jacobian, f, b, x, ctx);
    return jacobian(f, prep, b, x, ctx);
}

// second_derivative

void value_and_second_derivative_into(std::span<double> y, std::span<double> out, const Function& f,
                                      Preparation& prep, const Backend& b, double x, ContextArgs ctx) {
    check(Operator::second_derivative, f, prep, b, 1, ctx);
    check_size(Operator::second_derivative, b, "derivative buffer", out.size(), f.output_size());
    if (!y.empty()) check_size(Operator::second_derivative, b, "output buffer", y.size(), f.output_size());
    prep.engine().second_derivative(f, x, ctx, y, out);
}
void second_derivative_into(std::span<double> out, const Function& f, Preparation& prep, const Backend& b,
                            double x, ContextArgs ctx) {
    value_and_second_derivative_into({}, out, f, prep, b, x, ctx);
}
std::pair<Vector, Vector> value_and_second_derivative(const Function& f, Preparation& prep, const Backend& b,
                                                      double x, ContextArgs ctx) {
    std::pair<Vector, Vector> r{Vector(f.output_size()), Vector(f.output_size())};
    value_and_second_derivative_into(r.first, r.second, f, prep, b, x, ctx);
    return r;
}
Vector second_derivative(const Function& f, Preparation& prep, const Backend& b, double x, ContextArgs ctx) {
    Vector out(f.output_size());
    second_derivative_into(out, f, prep, b, x, ctx);
    return out;
}
Vector second_derivative(const Function& f, const Backend& b, double x, ContextArgs ctx) {
    Preparation prep = prepare(Operator::second_derivative, f, b, x, ctx);
    return second_derivative(f, prep, b, x, ctx);
}

// hvp

namespace {
void hvp_impl(double* y, Batch& out, const Function& f, Preparation& prep, const Backend& b, XSpan x,
              const Batch& seeds, ContextArgs ctx) {
    check(Operator::hvp, f, prep, b, x.size(), ctx);
    check_seeds(Operator::hvp, b, seeds, f.input_size());
    prep.engine().hvp(f, x, seeds, ctx, y, out);
}
}  // namespace

double value_and_hvp_into(Batch& out, const Function& f, Preparation& prep, const Backend& b, XSpan x,
                          const Batch& seeds, ContextArgs ctx) {
    double y = 0.0;
    hvp_impl(&y, out, f, prep, b, x, seeds, ctx);
    return y;
}
void hvp_into(Batch& out, const Function& f, Preparation& prep, const Backend& b, XSpan x, const Batch& seeds,
              ContextArgs ctx) {
    hvp_impl(nullptr, out, f, prep, b, x, seeds, ctx);
}
std::pair<double, Batch> value_and_hvp(const Function& f, Preparation& prep, const Backend& b, XSpan x,
                                       const Batch& seeds, ContextArgs ctx) {
    std::pair<double, Batch> r;
    r.first = value_and_hvp_into(r.second, f, prep, b, x, seeds, ctx);
    return r;
}
Batch hvp(const Function& f, Preparation& prep, const Backend& b, XSpan x, const Batch& seeds, ContextArgs ctx) {
    Batch out;
    hvp_into(out, f, prep, b, x, seeds, ctx);
    return out;
}
Batch hvp(const Function& f, const Backend& b, XSpan x, const Batch& seeds, ContextArgs ctx) {
    Preparation prep = prepare(Operator::hvp, f, b, x, ctx);
    return hvp(f, prep, b, x, seeds, ctx);
}

// hessian

namespace {
void hessian_impl(double* y, Matrix& out, const Function& f, Preparation& prep, const Backend& b, XSpan x,
                  ContextArgs ctx) {
    check(Operator::hessian, f, prep, b, x.size(), ctx);
    prep.engine().hessian(f, x, ctx, y, out);
}
}  // namespace

double value_and_hessian_into(Matrix& out, const Function& f, Preparation& prep, const Backend& b, XSpan x,
                              ContextArgs ctx) {
    double y = 0.0;
    hessian_impl(&y, out, f, prep, b, x, ctx);
    return y;
}
void hessian_into(Matrix& out, const Function& f, Preparation& prep, const Backend& b, XSpan x, ContextArgs ctx) {
    hessian_impl(nullptr, out, f, prep, b, x, ctx);
}
std::pair<double, Matrix> value_and_hessian(const Function& f, Preparation& prep, const Backend& b, XSpan x,
                                            ContextArgs ctx) {
    std::pair<double, Matrix> r;
    r.first = value_and_hessian_into(r.second, f, prep, b, x, ctx);
    return r;
}
Matrix hessian(const Function& f, Preparation& prep, const Backend& b, XSpan x, ContextArgs ctx) {
    Matrix out;
    hessian_into(out, f, prep, b, x, ctx);
    return out;
}
Matrix hessian(const Function& f, const Backend& b, XSpan x, ContextArgs ctx) {
    Preparation prep = prepare(Operator::hessian, f, b, x, ctx);
    return hessian(f, prep, b, x, ctx);
}

}  // namespace adkit
