#include "adkit/tape.hpp"

#include <algorithm>
#include <string>


namespace adkit {

namespace detail {

Tape*& active_tape() noexcept {
    thread_local Tape* tape = nullptr;
    return tape;
}

std::int32_t push_node(Tape& t, const TapeNode& n, double value) {
    t.nodes_.push_back(n);
    t.values_.push_back(value);
    return static_cast<std::int32_t>(t.input_count_ + t.nodes_.size() - 1);
}

void push_guard(Tape& t, const BranchGuard& g) {
    t.guards_.push_back(g);
}

TapeVar record_unary(Primitive op, const TapeVar& a, double value) {
    Tape* t = active_tape();
    if (t == nullptr || !a.active()) return TapeVar(value);
    return TapeVar(value, push_node(*t, TapeNode{op, a.slot, -1, 0.0}, value));
}

TapeVar record_binary(Primitive op, const TapeVar& a, const TapeVar& b, double value) {
    Tape* t = active_tape();
    if (t == nullptr || (!a.active() && !b.active())) return TapeVar(value);
    TapeNode n{op, a.slot, b.slot, 0.0};
    if (!a.active()) n.lit = a.value;
    if (!b.active()) n.lit = b.value;
    return TapeVar(value, push_node(*t, n, value));
}

bool record_compare(Primitive op, const TapeVar& a, const TapeVar& b, bool outcome) {
    Tape* t = active_tape();
    if (t == nullptr || (!a.active() && !b.active())) return outcome;
    if (t->branch_policy() == BranchPolicy::reject)
        throw TraceEscape("", "tape",
                          "comparison '" + std::string(primitive_name(op)) +
                              "' on a tracked value while recording with the reject policy");
    BranchGuard g{op, a.slot, b.slot, 0.0, outcome};
    if (!a.active()) g.lit = a.value;
    if (!b.active()) g.lit = b.value;
    push_guard(*t, g);
    return outcome;
}

}  // namespace detail

namespace {

template <class Rule, class V>
V apply_unary(const V& a) {
    if constexpr (is_dual_v<V>)
        return detail::dual_unary<Rule>(a);
    else
        return Rule::value(a);
}

template <class Rule, class V>
V apply_binary(const V& a, const V& b) {
    if constexpr (is_dual_v<V>)
        return detail::dual_binary<Rule>(a, b);
    else
        return Rule::value(a, b);
}

template <class Rule, class V>
void accumulate_unary(std::span<V> adj, std::int32_t a, const V& va, const V& out, const V& g) {
    if (a >= 0) adj[a] += g * Rule::derivative(va, out);
}

template <class Rule, class V>
void accumulate_binary(std::span<V> adj, const TapeNode& n, const V& va, const V& vb, const V& out, const V& g) {
    const auto [pa, pb] = Rule::partials(va, vb, out);
    if (n.a >= 0) adj[n.a] += g * pa;
    if (n.b >= 0) adj[n.b] += g * pb;
}

bool compare(Primitive cmp, double a, double b) {
    switch (cmp) {
        case Primitive::lt: return a < b;
        case Primitive::le: return a <= b;
        case Primitive::gt: return a > b;
        case Primitive::ge: return a >= b;
        case Primitive::eq: return a == b;
        case Primitive::ne: return a != b;
        default: return false;
    }
}

}  // namespace

std::size_t Tape::count(Primitive p) const noexcept {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [p](const TapeNode& n) {
        return n.op == p;
    }));
}

void Tape::begin(std::span<const double> x, BranchPolicy policy) {
    input_count_ = x.size();
    policy_ = policy;
    recorded_input_.assign(x.begin(), x.end());
    nodes_.clear();
    guards_.clear();
    output_slots_.clear();
    output_constants_.clear();
    externals_.clear();
    values_.assign(x.begin(), x.end());
    adjoints_.clear();
}

void Tape::finish(std::span<const TapeVar> outputs) {
    output_slots_.resize(outputs.size());
    output_constants_.resize(outputs.size());
    for (std::size_t j = 0; j < outputs.size(); ++j) {
        output_slots_[j] = outputs[j].slot;
        output_constants_[j] = outputs[j].value;
    }
    adjoints_.assign(slot_count(), 0.0);
}

std::int32_t Tape::add_external(std::shared_ptr<ExternalOp> op, std::span<const TapeVar> args, std::span<double> y) {
    ExternalCall call;
    call.op = std::move(op);
    call.args.resize(args.size());
    call.arg_literals.resize(args.size());
    call.x_buf.resize(args.size());
    for (std::size_t k = 0; k < args.size(); ++k) {
        call.args[k] = args[k].slot;
        call.arg_literals[k] = args[k].value;
        call.x_buf[k] = args[k].value;
    }
    const std::size_t m = call.op->output_size();
    call.y_buf.resize(m);
    call.ybar_buf.resize(m);
    call.xbar_buf.resize(args.size());
    call.op->forward(call.x_buf, call.y_buf);
    std::copy(call.y_buf.begin(), call.y_buf.end(), y.begin());

    const auto index = static_cast<std::int32_t>(externals_.size());
    call.first_slot = static_cast<std::int32_t>(slot_count());
    const std::int32_t first = call.first_slot;
    externals_.push_back(std::move(call));
    for (std::size_t k = 0; k < m; ++k)
        detail::push_node(*this, TapeNode{Primitive::external, index, static_cast<std::int32_t>(k), 0.0}, y[k]);
    return first;
}

template <class V>
void Tape::check_guards(std::span<const V> values) const {
    for (const BranchGuard& g : guards_) {
        const double a = g.a >= 0 ? primal(values[g.a]) : g.lit;
        const double b = g.b >= 0 ? primal(values[g.b]) : g.lit;
        if (compare(g.cmp, a, b) != g.outcome)
            throw TraceEscape("", "tape",
                              "recorded comparison '" + std::string(primitive_name(g.cmp)) +
                                  "' changes outcome at the current input; re-prepare at this input");
    }
}

template <class V>
void Tape::forward_pass(std::span<const V> x, std::span<V> values, std::span<V> y) {
    if (x.size() != input_count_)
        throw PreparationMismatch("", "tape",
                                  "tape recorded for " + std::to_string(input_count_) + " inputs, got " +
                                      std::to_string(x.size()));
    const std::size_t n = input_count_;
    std::copy(x.begin(), x.end(), values.begin());
    const std::size_t count = nodes_.size();
    for (std::size_t i = 0; i < count; ++i) {
        const TapeNode& node = nodes_[i];
        V& out = values[n + i];
        if (node.op == Primitive::external) {
            if constexpr (std::is_same_v<V, double>) {
                ExternalCall& call = externals_[static_cast<std::size_t>(node.a)];
                if (node.b == 0) {
                    for (std::size_t k = 0; k < call.args.size(); ++k)
                        call.x_buf[k] = call.args[k] >= 0 ? values[call.args[k]] : call.arg_literals[k];
                    call.op->forward(call.x_buf, call.y_buf);
                }
                out = call.y_buf[static_cast<std::size_t>(node.b)];
                continue;
            } else {
                throw UnsupportedOperator("", "tape",
                                          "opaque external calls support first-order passes only");
            }
        }
        const V va = node.a >= 0 ? values[node.a] : V(node.lit);
        const V vb = node.b >= 0 ? values[node.b] : V(node.lit);
        switch (node.op) {
            case Primitive::add: out = va + vb; break;
            case Primitive::sub: out = va - vb; break;
            case Primitive::mul: out = va * vb; break;
            case Primitive::div: out = va / vb; break;
            case Primitive::neg: out = -va; break;
            case Primitive::pow: out = apply_binary<rules::Pow>(va, vb); break;
            case Primitive::exp: out = apply_unary<rules::Exp>(va); break;
            case Primitive::log: out = apply_unary<rules::Log>(va); break;
            case Primitive::sin: out = apply_unary<rules::Sin>(va); break;
            case Primitive::cos: out = apply_unary<rules::Cos>(va); break;
            case Primitive::tanh: out = apply_unary<rules::Tanh>(va); break;
            case Primitive::sqrt: out = apply_unary<rules::Sqrt>(va); break;
            case Primitive::abs: out = apply_unary<rules::Abs>(va); break;
            case Primitive::erf: out = apply_unary<rules::Erf>(va); break;
            case Primitive::max: out = apply_binary<rules::Max>(va, vb); break;
            case Primitive::min: out = apply_binary<rules::Min>(va, vb); break;
            default:
                throw UnsupportedPrimitive("", "tape",
                                           "cannot replay primitive '" + std::string(primitive_name(node.op)) + "'");
        }
    }
    if (policy_ == BranchPolicy::check) check_guards<V>(values);
    for (std::size_t j = 0; j < output_slots_.size(); ++j)
        y[j] = output_slots_[j] >= 0 ? values[output_slots_[j]] : V(output_constants_[j]);
}

template <class V>
void Tape::reverse_pass(std::span<const V> values, std::span<const V> seed, std::span<V> adjoints,
                        std::span<V> xbar) {
    if (seed.size() != output_slots_.size())
        throw ShapeMismatch("pullback", "tape",
                            "seed has " + std::to_string(seed.size()) + " entries, tape has " +
                                std::to_string(output_slots_.size()) + " outputs");
    std::fill(adjoints.begin(), adjoints.end(), V(0.0));
    for (std::size_t j = 0; j < output_slots_.size(); ++j)
        if (output_slots_[j] >= 0) adjoints[output_slots_[j]] += seed[j];

    const std::size_t n = input_count_;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        const TapeNode& node = nodes_[i];
        const V g = adjoints[n + i];
        if (node.op == Primitive::external) {
            if constexpr (std::is_same_v<V, double>) {
                if (node.b != 0) continue;
                ExternalCall& call = externals_[static_cast<std::size_t>(node.a)];
                const std::size_t m = call.y_buf.size();
                for (std::size_t k = 0; k < m; ++k) call.ybar_buf[k] = adjoints[call.first_slot + k];
                std::fill(call.xbar_buf.begin(), call.xbar_buf.end(), 0.0);
                call.op->pullback(call.ybar_buf, call.xbar_buf);
                for (std::size_t k = 0; k < call.args.size(); ++k)
                    if (call.args[k] >= 0) adjoints[call.args[k]] += call.xbar_buf[k];
                continue;
            } else {
                throw UnsupportedOperator("", "tape",
                                          "opaque external calls support first-order passes only");
            }
        }
        const V va = node.a >= 0 ? values[node.a] : V(node.lit);
        const V vb = node.b >= 0 ? values[node.b] : V(node.lit);
        const V& out = values[n + i];
        switch (node.op) {
            case Primitive::add:
                if (node.a >= 0) adjoints[node.a] += g;
                if (node.b >= 0) adjoints[node.b] += g;
                break;
            case Primitive::sub:
                if (node.a >= 0) adjoints[node.a] += g;
                if (node.b >= 0) adjoints[node.b] -= g;
                break;
            case Primitive::mul:
                if (node.a >= 0) adjoints[node.a] += g * vb;
                if (node.b >= 0) adjoints[node.b] += g * va;
                break;
            case Primitive::div: accumulate_binary<rules::Div>(adjoints, node, va, vb, out, g); break;
            case Primitive::neg:
                if (node.a >= 0) adjoints[node.a] -= g;
                break;
            case Primitive::pow: accumulate_binary<rules::Pow>(adjoints, node, va, vb, out, g); break;
            case Primitive::exp: accumulate_unary<rules::Exp>(adjoints, node.a, va, out, g); break;
            case Primitive::log: accumulate_unary<rules::Log>(adjoints, node.a, va, out, g); break;
            case Primitive::sin: accumulate_unary<rules::Sin>(adjoints, node.a, va, out, g); break;
            case Primitive::cos: accumulate_unary<rules::Cos>(adjoints, node.a, va, out, g); break;
            case Primitive::tanh: accumulate_unary<rules::Tanh>(adjoints, node.a, va, out, g); break;
            case Primitive::sqrt: accumulate_unary<rules::Sqrt>(adjoints, node.a, va, out, g); break;
            case Primitive::abs: accumulate_unary<rules::Abs>(adjoints, node.a, va, out, g); break;
            case Primitive::erf: accumulate_unary<rules::Erf>(adjoints, node.a, va, out, g); break;
            case Primitive::max: accumulate_binary<rules::Max>(adjoints, node, va, vb, out, g); break;
            case Primitive::min: accumulate_binary<rules::Min>(adjoints, node, va, vb, out, g); break;
            default:
                throw UnsupportedPrimitive("", "tape",
                                           "cannot differentiate primitive '" + std::string(primitive_name(node.op)) +
                                               "'");
        }
    }
    std::copy(adjoints.begin(), adjoints.begin() + static_cast<std::ptrdiff_t>(n), xbar.begin());
}

void Tape::replay(std::span<const double> x, std::span<double> y) {
    if (y.size() != output_slots_.size())
        throw ShapeMismatch("", "tape", "output buffer has " + std::to_string(y.size()) + " entries, tape has " +
                                            std::to_string(output_slots_.size()) + " outputs");
    values_.resize(slot_count());
    forward_pass<double>(x, values_, y);
}

std::vector<double> Tape::replay(std::span<const double> x) {
    std::vector<double> y(output_count());
    replay(x, y);
    return y;
}

void Tape::reverse_sweep(std::span<const double> seed, std::span<double> xbar) {
    if (xbar.size() != input_count_)
        throw ShapeMismatch("pullback", "tape", "cotangent buffer has " + std::to_string(xbar.size()) +
                                                    " entries, expected " + std::to_string(input_count_));
    adjoints_.resize(slot_count());
    reverse_pass<double>(values_, seed, adjoints_, xbar);
}

std::vector<double> Tape::reverse_sweep(std::span<const double> seed) {
    std::vector<double> xbar(input_count_);
    reverse_sweep(seed, xbar);
    return xbar;
}

#define ADKIT_TAPE_INSTANTIATE(V)                                                                          \
    template void Tape::forward_pass<V>(std::span<const V>, std::span<V>, std::span<V>);                    \
    template void Tape::reverse_pass<V>(std::span<const V>, std::span<const V>, std::span<V>, std::span<V>); \
    template void Tape::check_guards<V>(std::span<const V>) const;
using TapeLane1 = Dual<double, 1>;
using TapeLane4 = Dual<double, 4>;
using TapeLane8 = Dual<double, 8>;
using TapeLane16 = Dual<double, 16>;
ADKIT_TAPE_INSTANTIATE(double)
ADKIT_TAPE_INSTANTIATE(TapeLane1)
ADKIT_TAPE_INSTANTIATE(TapeLane4)
ADKIT_TAPE_INSTANTIATE(TapeLane8)
ADKIT_TAPE_INSTANTIATE(TapeLane16)
#undef ADKIT_TAPE_INSTANTIATE

}  // namespace adkit
