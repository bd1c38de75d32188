#include "adkit/function.hpp"

namespace adkit {

std::string Shape::to_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (i > 0) s += ",";
        s += std::to_string(dims_[i]);
    }
    return s + ")";
}

std::vector<double> Function::operator()(std::span<const double> x, ContextArgs ctx) const {
    std::vector<double> y(output_size());
    evaluate(x, y, ctx);
    return y;
}

void Function::evaluate(std::span<const double> x, std::span<double> y, ContextArgs ctx) const {
    if (x.size() != input_size())
        throw ShapeMismatch("", "", "function '" + name() + "' expects " + std::to_string(input_size()) +
                                        " inputs, got " + std::to_string(x.size()));
    if (y.size() != output_size())
        throw ShapeMismatch("", "", "function '" + name() + "' has " + std::to_string(output_size()) +
                                        " outputs, buffer has " + std::to_string(y.size()));
    PrimalContexts primal(ctx.size());
    eval<double>(x, y, primal.bind(ctx));
}

}  // namespace adkit
