#include "adkit/context.hpp"

namespace adkit {

ContextSignature ContextSignature::of(ContextArgs args) {
    ContextSignature sig;
    sig.kinds.reserve(args.size());
    sig.sizes.reserve(args.size());
    for (const Context& c : args) {
        sig.kinds.push_back(c.kind());
        sig.sizes.push_back(c.size());
    }
    return sig;
}

bool ContextSignature::matches(ContextArgs args) const noexcept {
    if (args.size() != kinds.size()) return false;
    for (std::size_t i = 0; i < args.size(); ++i)
        if (args[i].kind() != kinds[i] || args[i].size() != sizes[i]) return false;
    return true;
}

}  // namespace adkit
