#include "adkit/backend.hpp"

#include <charconv>
#include <cstdio>
#include <vector>

namespace adkit {

namespace {

constexpr int kMaxChunk = 16;

template <class... Fs> struct overloaded : Fs... { using Fs::operator()...; };
template <class... Fs> overloaded(Fs...) -> overloaded<Fs...>;

std::string format_step(double h) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", h);
    return buf;
}

std::string with_options(std::string name, const std::vector<std::string>& opts) {
    if (opts.empty()) return name;
    name += "(";
    for (std::size_t i = 0; i < opts.size(); ++i) {
        if (i > 0) name += ",";
        name += opts[i];
    }
    return name + ")";
}

[[noreturn]] void wrong_kind(const char* accessor, const Backend& b) {
    throw ConfigError("", b.id(), std::string("backend has no ") + accessor);
}

}  // namespace

Backend Backend::dual(ForwardOptions options) {
    if (options.chunk_size < 1 || options.chunk_size > kMaxChunk)
        throw ConfigError("", "dual", "chunk size must be between 1 and 16, got " + std::to_string(options.chunk_size));
    return Backend(detail::ForwardNode{options});
}

Backend Backend::tape(ReverseOptions options) {
    return Backend(detail::ReverseNode{options});
}

Backend Backend::finite_diff(FiniteDiffOptions options) {
    if (!(options.step.base_step > 0.0))
        throw ConfigError("", "fd", "base step must be positive");
    return Backend(detail::FiniteDiffNode{options});
}

Backend Backend::second_order(Backend outer, Backend inner) {
    return Backend(std::make_shared<const detail::SecondOrderNode>(detail::SecondOrderNode{std::move(outer), std::move(inner)}));
}

Backend Backend::mixed_mode(Backend forward, Backend reverse) {
    if (!forward.has(Capability::native_pushforward))
        throw ConfigError("", forward.id(), "forward half of a mixed-mode backend needs native pushforward");
    if (!reverse.has(Capability::native_pullback))
        throw ConfigError("", reverse.id(), "reverse half of a mixed-mode backend needs native pullback");
    return Backend(std::make_shared<const detail::MixedModeNode>(detail::MixedModeNode{std::move(forward), std::move(reverse)}));
}

Backend Backend::sparse(Backend dense) {
    if (dense.kind() == Kind::sparse) throw ConfigError("", dense.id(), "sparse backends do not nest");
    return Backend(std::make_shared<const detail::SparseNode>(detail::SparseNode{std::move(dense)}));
}

Backend::Kind Backend::kind() const noexcept {
    return static_cast<Kind>(node_.index());
}

Mode Backend::mode() const noexcept {
    switch (kind()) {
        case Kind::forward: return Mode::forward;
        case Kind::reverse: return Mode::reverse;
        case Kind::finite_diff: return Mode::finite_difference;
        default: return Mode::composite;
    }
}

Capabilities Backend::capabilities() const noexcept {
    using C = Capability;
    switch (kind()) {
        case Kind::forward: return {C::native_pushforward, C::supports_batched_seeds};
        case Kind::reverse: return {C::native_pullback, C::supports_batched_seeds, C::supports_in_place_functions};
        case Kind::finite_diff:
            return {C::native_pushforward, C::native_pullback, C::supports_batched_seeds, C::supports_in_place_functions};
        case Kind::second_order: return inner().capabilities();
        case Kind::mixed_mode: {
            Capabilities caps{C::native_pushforward, C::native_pullback, C::supports_batched_seeds};
            if (forward_half().has(C::supports_in_place_functions) && reverse_half().has(C::supports_in_place_functions))
                caps.add(C::supports_in_place_functions);
            return caps;
        }
        case Kind::sparse: return dense().capabilities();
    }
    return {};
}

std::string Backend::id() const {
    return std::visit(
        overloaded{
            [](const detail::ForwardNode& n) {
                std::vector<std::string> opts;
                if (n.options.chunk_size != ForwardOptions{}.chunk_size)
                    opts.push_back("chunk=" + std::to_string(n.options.chunk_size));
                if (n.options.transpose_fallback) opts.emplace_back("transpose");
                return with_options("dual", opts);
            },
            [](const detail::ReverseNode& n) {
                std::vector<std::string> opts;
                if (n.options.branch_policy == BranchPolicy::check) opts.emplace_back("branch=check");
                if (n.options.branch_policy == BranchPolicy::reject) opts.emplace_back("branch=reject");
                if (!n.options.transpose_fallback) opts.emplace_back("notranspose");
                return with_options("tape", opts);
            },
            [](const detail::FiniteDiffNode& n) {
                std::vector<std::string> opts;
                const StepRule def{};
                if (n.options.step.scheme == FdScheme::forward) opts.emplace_back("forward");
                if (n.options.step.base_step != def.base_step) opts.push_back("step=" + format_step(n.options.step.base_step));
                if (!n.options.step.relative) opts.emplace_back("absolute");
                if (n.options.nested) opts.emplace_back("nested");
                return with_options("fd", opts);
            },
            [](const std::shared_ptr<const detail::SecondOrderNode>& n) {
                return "second_order(" + n->outer.id() + "," + n->inner.id() + ")";
            },
            [](const std::shared_ptr<const detail::MixedModeNode>& n) {
                return "mixed(" + n->forward.id() + "," + n->reverse.id() + ")";
            },
            [](const std::shared_ptr<const detail::SparseNode>& n) { return "sparse(" + n->dense.id() + ")"; },
        },
        node_);
}

const ForwardOptions& Backend::forward_options() const {
    if (const auto* n = std::get_if<detail::ForwardNode>(&node_)) return n->options;
    wrong_kind("forward options", *this);
}

const ReverseOptions& Backend::reverse_options() const {
    if (const auto* n = std::get_if<detail::ReverseNode>(&node_)) return n->options;
    wrong_kind("reverse options", *this);
}

const FiniteDiffOptions& Backend::finite_diff_options() const {
    if (const auto* n = std::get_if<detail::FiniteDiffNode>(&node_)) return n->options;
    wrong_kind("finite-difference options", *this);
}

const Backend& Backend::outer() const {
    if (const auto* n = std::get_if<std::shared_ptr<const detail::SecondOrderNode>>(&node_)) return (*n)->outer;
    wrong_kind("outer component", *this);
}

const Backend& Backend::inner() const {
    if (const auto* n = std::get_if<std::shared_ptr<const detail::SecondOrderNode>>(&node_)) return (*n)->inner;
    wrong_kind("inner component", *this);
}

const Backend& Backend::forward_half() const {
    if (const auto* n = std::get_if<std::shared_ptr<const detail::MixedModeNode>>(&node_)) return (*n)->forward;
    wrong_kind("forward half", *this);
}

const Backend& Backend::reverse_half() const {
    if (const auto* n = std::get_if<std::shared_ptr<const detail::MixedModeNode>>(&node_)) return (*n)->reverse;
    wrong_kind("reverse half", *this);
}

const Backend& Backend::dense() const {
    if (const auto* n = std::get_if<std::shared_ptr<const detail::SparseNode>>(&node_)) return (*n)->dense;
    wrong_kind("dense component", *this);
}

bool operator==(const Backend& a, const Backend& b) {
    if (a.node_.index() != b.node_.index()) return false;
    switch (a.kind()) {
        case Backend::Kind::forward: {
            const auto& x = a.forward_options();
            const auto& y = b.forward_options();
            return x.chunk_size == y.chunk_size && x.transpose_fallback == y.transpose_fallback;
        }
        case Backend::Kind::reverse: {
            const auto& x = a.reverse_options();
            const auto& y = b.reverse_options();
            return x.branch_policy == y.branch_policy && x.transpose_fallback == y.transpose_fallback;
        }
        case Backend::Kind::finite_diff: {
            const auto& x = a.finite_diff_options();
            const auto& y = b.finite_diff_options();
            return x.step == y.step && x.nested == y.nested;
        }
        case Backend::Kind::second_order: return a.outer() == b.outer() && a.inner() == b.inner();
        case Backend::Kind::mixed_mode: return a.forward_half() == b.forward_half() && a.reverse_half() == b.reverse_half();
        case Backend::Kind::sparse: return a.dense() == b.dense();
    }
    return false;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_top_level(std::string_view s, std::string_view whole) {
    std::vector<std::string_view> parts;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '(') ++depth;
        if (s[i] == ')' && --depth < 0) throw ConfigError("", std::string(whole), "unbalanced parentheses");
        if (s[i] == ',' && depth == 0) {
            parts.push_back(trim(s.substr(start, i - start)));
            start = i + 1;
        }
    }
    if (depth != 0) throw ConfigError("", std::string(whole), "unbalanced parentheses");
    parts.push_back(trim(s.substr(start)));
    return parts;
}

Backend parse(std::string_view text, std::string_view whole) {
    text = trim(text);
    std::string_view name = text;
    std::vector<std::string_view> args;
    if (const auto open = text.find('('); open != std::string_view::npos) {
        if (text.back() != ')') throw ConfigError("", std::string(whole), "expected ')' at end of '" + std::string(text) + "'");
        name = trim(text.substr(0, open));
        args = split_top_level(text.substr(open + 1, text.size() - open - 2), whole);
        if (args.size() == 1 && args[0].empty()) args.clear();
    }
    auto bad = [&](std::string_view what) -> ConfigError {
        return ConfigError("", std::string(whole), std::string(what));
    };

    if (name == "dual") {
        ForwardOptions o;
        for (std::string_view a : args) {
            if (a == "transpose") {
                o.transpose_fallback = true;
            } else if (a.starts_with("chunk=")) {
                const auto v = a.substr(6);
                const auto res = std::from_chars(v.data(), v.data() + v.size(), o.chunk_size);
                if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw bad("invalid chunk size");
            } else {
                throw bad("unknown dual option '" + std::string(a) + "'");
            }
        }
        return Backend::dual(o);
    }
    if (name == "tape") {
        ReverseOptions o;
        for (std::string_view a : args) {
            if (a == "branch=freeze") o.branch_policy = BranchPolicy::freeze;
            else if (a == "branch=check") o.branch_policy = BranchPolicy::check;
            else if (a == "branch=reject") o.branch_policy = BranchPolicy::reject;
            else if (a == "notranspose") o.transpose_fallback = false;
            else throw bad("unknown tape option '" + std::string(a) + "'");
        }
        return Backend::tape(o);
    }
    if (name == "fd") {
        FiniteDiffOptions o;
        for (std::string_view a : args) {
            if (a == "forward") {
                o.step.scheme = FdScheme::forward;
            } else if (a == "central") {
                o.step.scheme = FdScheme::central;
            } else if (a == "absolute") {
                o.step.relative = false;
            } else if (a == "nested") {
                o.nested = true;
            } else if (a.starts_with("step=")) {
                const std::string v(a.substr(5));
                try {
                    std::size_t used = 0;
                    o.step.base_step = std::stod(v, &used);
                    if (used != v.size()) throw bad("invalid step");
                } catch (const std::logic_error&) {
                    throw bad("invalid step '" + v + "'");
                }
            } else {
                throw bad("unknown fd option '" + std::string(a) + "'");
            }
        }
        return Backend::finite_diff(o);
    }
    if (name == "second_order" || name == "mixed") {
        if (args.size() != 2) throw bad(std::string(name) + " takes two backends");
        Backend a = parse(args[0], whole);
        Backend b = parse(args[1], whole);
        return name == "mixed" ? Backend::mixed_mode(std::move(a), std::move(b))
                               : Backend::second_order(std::move(a), std::move(b));
    }
    if (name == "sparse") {
        if (args.size() != 1) throw bad("sparse takes one backend");
        return Backend::sparse(parse(args[0], whole));
    }
    throw bad("unknown backend '" + std::string(name) + "'");
}

}  // namespace

Backend parse_backend(std::string_view text) {
    if (trim(text).empty()) throw ConfigError("", "", "empty backend id");
    return parse(text, text);
}

}  // namespace adkit
