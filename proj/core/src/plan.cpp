#include "adkit/plan.hpp"

#include <array>

namespace adkit {

namespace {

constexpr std::array<std::string_view, 8> kOperatorNames = {
    "pushforward", "pullback", "derivative", "gradient", "jacobian", "second_derivative", "hvp", "hessian",
};

std::string_view repeat_suffix(Repeat r) {
    switch (r) {
        case Repeat::per_input: return "×n";
        case Repeat::per_output: return "×m";
        case Repeat::per_color:
        case Repeat::per_row_color: return "×colors";
        default: return "";
    }
}

std::string_view link_symbol(Link l) {
    switch (l) {
        case Link::derives: return " ⇒ ";
        case Link::composes: return " ∘ ";
        case Link::alongside: return " + ";
        default: return "";
    }
}

[[noreturn]] void unsupported(Operator op, const Backend& b, std::string detail) {
    throw UnsupportedOperator(std::string(operator_name(op)), b.id(), std::move(detail));
}

bool is_plain(const Backend& b) {
    const auto k = b.kind();
    return k == Backend::Kind::forward || k == Backend::Kind::reverse || k == Backend::Kind::finite_diff;
}

bool pushforward_by_transpose(const Backend& b) {
    return b.kind() == Backend::Kind::reverse && b.reverse_options().transpose_fallback;
}

bool pullback_by_transpose(const Backend& b) {
    return b.kind() == Backend::Kind::forward && b.forward_options().transpose_fallback;
}

class ChainBuilder {
public:
    ChainBuilder(Operator op, const Backend& b) : root_op_(op), root_(b) {}

    void step(Operator op, std::string backend, Repeat r, Link l, bool native) {
        chain_.push_back(PlanStep{op, std::move(backend), r, l, native});
    }

    // Lowest level for one plain backend: native, transpose fallback, or unsupported.
    void pushforward(const Backend& b, Repeat r, Link l) {
        if (b.has(Capability::native_pushforward)) {
            step(Operator::pushforward, b.id(), r, l, true);
        } else if (pushforward_by_transpose(b)) {
            step(Operator::pushforward, "", r, l, false);
            step(Operator::pullback, b.id(), Repeat::per_output, Link::derives, true);
        } else {
            unsupported(root_op_, root_, "backend '" + b.id() + "' has no pushforward and its transpose fallback is disabled");
        }
    }

    void pullback(const Backend& b, Repeat r, Link l) {
        if (b.has(Capability::native_pullback)) {
            step(Operator::pullback, b.id(), r, l, true);
        } else if (pullback_by_transpose(b)) {
            step(Operator::pullback, "", r, l, false);
            step(Operator::pushforward, b.id(), Repeat::per_input, Link::derives, true);
        } else {
            unsupported(root_op_, root_,
                        "backend '" + b.id() +
                            "' has no pullback; jacobian-transpose assembly is disabled (enable transpose_fallback)");
        }
    }

    void gradient_tail(const Backend& b) {
        if (b.has(Capability::native_pullback))
            pullback(b, Repeat::once, Link::derives);
        else
            pushforward(b, Repeat::per_input, Link::derives);
    }

    void derivative_tail(const Backend& b) { pushforward(b, Repeat::once, Link::derives); }

    void jacobian_tail(const Backend& b, std::optional<IoSize> sizes) {
        if (jacobian_side(b, sizes) == JacobianSide::pushforward)
            pushforward(b, Repeat::per_input, Link::derives);
        else
            pullback(b, Repeat::per_output, Link::derives);
    }

    // hvp chain below an "hvp" step: pushforward(outer) ∘ gradient(inner) ⇒ ...
    void hvp_tail(const Backend& so) {
        const Backend& outer = so.outer();
        const Backend& inner = so.inner();
        check_second_order(so);
        step(Operator::pushforward, outer.id(), Repeat::per_seed, Link::derives, true);
        step(Operator::gradient, inner.id(), Repeat::once, Link::composes, false);
        gradient_tail(inner);
    }

    void second_derivative_tail(const Backend& so) {
        const Backend& outer = so.outer();
        const Backend& inner = so.inner();
        check_second_order(so);
        step(Operator::derivative, outer.id(), Repeat::once, Link::derives, false);
        step(Operator::derivative, inner.id(), Repeat::once, Link::composes, false);
        derivative_tail(inner);
    }

    void check_second_order(const Backend& so) {
        const Backend& outer = so.outer();
        const Backend& inner = so.inner();
        if (!is_plain(outer) || !is_plain(inner))
            unsupported(root_op_, root_, "second-order components must be dual, tape or fd backends");
        if (outer.kind() == Backend::Kind::reverse)
            unsupported(root_op_, root_,
                        "reverse-mode outer differentiation is not implemented; use second_order(dual," + inner.id() + ")");
        if (outer.kind() == Backend::Kind::finite_diff && inner.kind() == Backend::Kind::finite_diff &&
            !outer.finite_diff_options().nested)
            unsupported(root_op_, root_, "finite differences of finite differences need fd(nested)");
    }

    OperatorPlan finish() { return OperatorPlan{root_op_, root_.id(), std::move(chain_)}; }

private:
    Operator root_op_;
    const Backend& root_;
    std::vector<PlanStep> chain_;
};

Backend as_second_order(const Backend& b) {
    if (b.kind() == Backend::Kind::second_order) return b;
    return Backend::second_order(b, b);
}

void build(ChainBuilder& cb, Operator op, const Backend& b, std::optional<IoSize> sizes, const Backend& root) {
    switch (b.kind()) {
        case Backend::Kind::second_order:
            if (!is_second_order(op)) return build(cb, op, b.inner(), sizes, root);
            break;
        case Backend::Kind::mixed_mode:
            switch (op) {
                case Operator::pushforward:
                case Operator::derivative: return build(cb, op, b.forward_half(), sizes, root);
                case Operator::pullback:
                case Operator::gradient: return build(cb, op, b.reverse_half(), sizes, root);
                case Operator::jacobian:
                    if (jacobian_side(b, sizes) == JacobianSide::pushforward)
                        cb.pushforward(b.forward_half(), Repeat::per_input, Link::derives);
                    else
                        cb.pullback(b.reverse_half(), Repeat::per_output, Link::derives);
                    return;
                default:
                    unsupported(op, root, "mixed-mode backends serve first-order operators only");
            }
        case Backend::Kind::sparse:
            if (op == Operator::jacobian) {
                const Backend& d = b.dense();
                if (d.kind() == Backend::Kind::mixed_mode) {
                    cb.pushforward(d.forward_half(), Repeat::per_color, Link::derives);
                    cb.pullback(d.reverse_half(), Repeat::per_row_color, Link::alongside);
                } else if (jacobian_side(d, sizes) == JacobianSide::pushforward) {
                    cb.pushforward(d.kind() == Backend::Kind::second_order ? d.inner() : d, Repeat::per_color,
                                   Link::derives);
                } else {
                    cb.pullback(d.kind() == Backend::Kind::second_order ? d.inner() : d, Repeat::per_row_color,
                                Link::derives);
                }
                return;
            }
            if (op == Operator::hessian) {
                cb.step(Operator::hvp, "", Repeat::per_color, Link::derives, false);
                cb.hvp_tail(as_second_order(b.dense()));
                return;
            }
            return build(cb, op, b.dense(), sizes, root);
        default:
            break;
    }

    switch (op) {
        case Operator::pushforward:
            if (b.has(Capability::native_pushforward))
                cb.step(Operator::pushforward, b.id(), Repeat::per_seed, Link::derives, true);
            else if (pushforward_by_transpose(b))
                cb.step(Operator::pullback, b.id(), Repeat::per_output, Link::derives, true);
            else
                unsupported(op, root, "backend '" + b.id() + "' has no pushforward and its transpose fallback is disabled");
            return;
        case Operator::pullback:
            if (b.has(Capability::native_pullback))
                cb.step(Operator::pullback, b.id(), Repeat::per_seed, Link::derives, true);
            else if (pullback_by_transpose(b))
                cb.step(Operator::pushforward, b.id(), Repeat::per_input, Link::derives, true);
            else
                unsupported(op, root,
                            "backend '" + b.id() +
                                "' has no pullback; jacobian-transpose assembly is disabled (enable transpose_fallback)");
            return;
        case Operator::derivative: cb.derivative_tail(b); return;
        case Operator::gradient: cb.gradient_tail(b); return;
        case Operator::jacobian: cb.jacobian_tail(b, sizes); return;
        case Operator::hvp: cb.hvp_tail(as_second_order(b)); return;
        case Operator::hessian:
            cb.step(Operator::hvp, "", Repeat::per_input, Link::derives, false);
            cb.hvp_tail(as_second_order(b));
            return;
        case Operator::second_derivative: cb.second_derivative_tail(as_second_order(b)); return;
    }
}

}  // namespace

std::string_view operator_name(Operator op) noexcept {
    return kOperatorNames[static_cast<std::size_t>(op)];
}

std::optional<Operator> operator_from_name(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kOperatorNames.size(); ++i)
        if (kOperatorNames[i] == name) return static_cast<Operator>(i);
    return std::nullopt;
}

bool is_second_order(Operator op) noexcept {
    return op == Operator::second_derivative || op == Operator::hvp || op == Operator::hessian;
}

std::string OperatorPlan::to_string() const {
    std::string s;
    for (const PlanStep& st : chain) {
        s += link_symbol(st.link);
        s += operator_name(st.op);
        s += repeat_suffix(st.repeat);
        if (!st.backend.empty()) s += "(" + st.backend + ")";
    }
    return s;
}

bool OperatorPlan::terminates_natively() const {
    return !chain.empty() && chain.back().native &&
           (chain.back().op == Operator::pushforward || chain.back().op == Operator::pullback);
}

const PlanStep* OperatorPlan::find(Operator op) const {
    for (const PlanStep& st : chain)
        if (st.op == op) return &st;
    return nullptr;
}

JacobianSide jacobian_side(const Backend& backend, std::optional<IoSize> sizes) {
    const Backend* b = &backend;
    if (b->kind() == Backend::Kind::second_order) b = &b->inner();
    if (b->kind() == Backend::Kind::sparse) b = &b->dense();
    const bool fwd = b->has(Capability::native_pushforward);
    const bool rev = b->has(Capability::native_pullback);
    if (fwd && !rev) return JacobianSide::pushforward;
    if (rev && !fwd) return JacobianSide::pullback;
    if (!sizes || sizes->inputs == sizes->outputs) return JacobianSide::pushforward;
    return sizes->inputs < sizes->outputs ? JacobianSide::pushforward : JacobianSide::pullback;
}

OperatorPlan resolve(Operator op, const Backend& backend, std::optional<IoSize> sizes) {
    ChainBuilder cb(op, backend);
    cb.step(op, "", Repeat::once, Link::start, false);
    build(cb, op, backend, sizes, backend);
    return cb.finish();
}

}  // namespace adkit
