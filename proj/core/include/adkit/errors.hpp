#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adkit {

/// Typed diagnostic raised by every adkit entry point.
///
/// Each error carries the operator and backend involved (either may be empty
/// when not applicable) plus a free-form detail string with shape information.
class Error : public std::runtime_error {
public:
    Error(std::string_view category, std::string op, std::string backend, std::string detail);

    const std::string& category() const noexcept { return category_; }
    const std::string& op() const noexcept { return op_; }
    const std::string& backend() const noexcept { return backend_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::string category_;
    std::string op_;
    std::string backend_;
    std::string detail_;
};

#define ADKIT_DEFINE_ERROR(Name)                                                       \
    class Name : public Error {                                                        \
    public:                                                                            \
        Name(std::string op, std::string backend, std::string detail)                  \
            : Error(#Name, std::move(op), std::move(backend), std::move(detail)) {}    \
    }

/// The backend (and its fallback chain) cannot realize the requested operator.
ADKIT_DEFINE_ERROR(UnsupportedOperator);
/// The function applied a primitive with no rule registered for the active backend.
ADKIT_DEFINE_ERROR(UnsupportedPrimitive);
/// An input, seed, output buffer or context has the wrong size.
ADKIT_DEFINE_ERROR(ShapeMismatch);
/// A Preparation was used with an operator, backend, function or input signature
/// it was not built for.
ADKIT_DEFINE_ERROR(PreparationMismatch);
/// A finite-difference evaluation produced NaN or Inf.
ADKIT_DEFINE_ERROR(NonFiniteResult);
/// A recorded tape cannot be trusted at the current input (value-dependent branch).
ADKIT_DEFINE_ERROR(TraceEscape);
/// Harness configuration names something unknown or is otherwise malformed.
ADKIT_DEFINE_ERROR(ConfigError);

#undef ADKIT_DEFINE_ERROR

}  // namespace adkit
