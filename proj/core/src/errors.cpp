#include "adkit/errors.hpp"

namespace adkit {

namespace {

std::string compose(std::string_view category, const std::string& op, const std::string& backend,
                    const std::string& detail) {
    std::string msg(category);
    if (!op.empty() || !backend.empty()) {
        msg += " [";
        if (!op.empty()) msg += "op=" + op;
        if (!op.empty() && !backend.empty()) msg += ", ";
        if (!backend.empty()) msg += "backend=" + backend;
        msg += "]";
    }
    if (!detail.empty()) msg += ": " + detail;
    return msg;
}

}  // namespace

Error::Error(std::string_view category, std::string op, std::string backend, std::string detail)
    : std::runtime_error(compose(category, op, backend, detail)),
      category_(category),
      op_(std::move(op)),
      backend_(std::move(backend)),
      detail_(std::move(detail)) {}

}  // namespace adkit
