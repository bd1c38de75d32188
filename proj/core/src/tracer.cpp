#include "adkit/tracer.hpp"

#include <algorithm>
#include <iterator>

namespace adkit {

IndexSet set_union(const IndexSet& a, const IndexSet& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    IndexSet r;
    r.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r));
    return r;
}

PairSet set_union(const PairSet& a, const PairSet& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    PairSet r;
    r.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r));
    return r;
}

PairSet cross_pairs(const IndexSet& a, const IndexSet& b) {
    PairSet r;
    r.reserve(a.size() * b.size());
    for (std::int32_t i : a)
        for (std::int32_t j : b) r.emplace_back(std::min(i, j), std::max(i, j));
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    return r;
}

HessianTracer operator/(const HessianTracer& a, const HessianTracer& b) {
    const double v = a.value / b.value;
    if (b.grad.empty()) return {v, a.grad, set_union(a.hess, b.hess)};
    if (a.grad.empty()) return detail::tracer_nonlinear(b, v);
    return detail::tracer_full(a, b, v);
}

namespace detail {

HessianTracer tracer_nonlinear(const HessianTracer& a, double value) {
    return {value, a.grad, set_union(a.hess, cross_pairs(a.grad, a.grad))};
}

HessianTracer tracer_linear(const HessianTracer& a, double value) {
    return {value, a.grad, a.hess};
}

HessianTracer tracer_full(const HessianTracer& a, const HessianTracer& b, double value) {
    IndexSet g = set_union(a.grad, b.grad);
    PairSet h = set_union(set_union(a.hess, b.hess), cross_pairs(g, g));
    return {value, std::move(g), std::move(h)};
}

}  // namespace detail

}  // namespace adkit
