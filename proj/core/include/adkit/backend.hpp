#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <variant>

#include "adkit/tape.hpp"

namespace adkit {

enum class Mode { forward, reverse, finite_difference, composite };

enum class Capability : std::uint8_t {
    native_pushforward = 1,
    native_pullback = 2,
    supports_batched_seeds = 4,
    supports_in_place_functions = 8,
};

class Capabilities {
public:
    constexpr Capabilities() = default;
    constexpr Capabilities(std::initializer_list<Capability> caps) {
        for (Capability c : caps) bits_ |= static_cast<std::uint8_t>(c);
    }
    constexpr bool has(Capability c) const noexcept { return (bits_ & static_cast<std::uint8_t>(c)) != 0; }
    constexpr Capabilities& add(Capability c) noexcept {
        bits_ |= static_cast<std::uint8_t>(c);
        return *this;
    }
    friend constexpr bool operator==(Capabilities, Capabilities) = default;

private:
    std::uint8_t bits_ = 0;
};

enum class FdScheme { forward, central };

/// Step selection for finite differences.
struct StepRule {
    FdScheme scheme = FdScheme::central;
    double base_step = std::cbrt(std::numeric_limits<double>::epsilon());
    // When set, the step is base_step * max(1, |x_i|) over the perturbed coordinates.
    bool relative = true;

    friend bool operator==(const StepRule&, const StepRule&) = default;
};

struct ForwardOptions {
    int chunk_size = 8;
    // Allow pullback by assembling the Jacobian from pushforwards.
    bool transpose_fallback = false;
};

struct ReverseOptions {
    BranchPolicy branch_policy = BranchPolicy::freeze;
    // Allow pushforward by assembling the Jacobian from pullbacks.
    bool transpose_fallback = true;
};

struct FiniteDiffOptions {
    StepRule step{};
    // Allow finite differences of finite differences for second-order operators.
    bool nested = false;
};

class Backend;

namespace detail {

struct ForwardNode { ForwardOptions options; };
struct ReverseNode { ReverseOptions options; };
struct FiniteDiffNode { FiniteDiffOptions options; };
struct SecondOrderNode;
struct MixedModeNode;
struct SparseNode;

using BackendNode = std::variant<ForwardNode, ReverseNode, FiniteDiffNode, std::shared_ptr<const SecondOrderNode>,
                                 std::shared_ptr<const MixedModeNode>, std::shared_ptr<const SparseNode>>;

}  // namespace detail

/// Choice of AD implementation plus its parameters. Immutable, cheap to copy,
/// freely shareable across threads.
class Backend {
public:
    enum class Kind { forward, reverse, finite_diff, second_order, mixed_mode, sparse };

    static Backend dual(ForwardOptions options = {});
    static Backend tape(ReverseOptions options = {});
    static Backend finite_diff(FiniteDiffOptions options = {});
    /// Differentiates `inner`'s first derivative with `outer` (hvp = pushforward(outer) of gradient(inner)).
    static Backend second_order(Backend outer, Backend inner);
    /// Forward half for column groups, reverse half for row groups of a sparse Jacobian.
    static Backend mixed_mode(Backend forward, Backend reverse);
    /// Sparse Jacobians/Hessians via pattern detection and coloring around `dense`.
    static Backend sparse(Backend dense);

    Kind kind() const noexcept;
    Mode mode() const noexcept;
    Capabilities capabilities() const noexcept;
    bool has(Capability c) const noexcept { return capabilities().has(c); }
    /// Textual id, e.g. "dual", "second_order(dual,tape)", "dual(chunk=4)".
    std::string id() const;

    const ForwardOptions& forward_options() const;
    const ReverseOptions& reverse_options() const;
    const FiniteDiffOptions& finite_diff_options() const;
    /// Components of composite backends.
    const Backend& outer() const;
    const Backend& inner() const;
    const Backend& forward_half() const;
    const Backend& reverse_half() const;
    const Backend& dense() const;

    /// Structural equality (kind and parameters); does not allocate.
    friend bool operator==(const Backend& a, const Backend& b);

private:
    explicit Backend(detail::BackendNode node) : node_(std::move(node)) {}
    detail::BackendNode node_;
};

namespace detail {
struct SecondOrderNode { Backend outer, inner; };
struct MixedModeNode { Backend forward, reverse; };
struct SparseNode { Backend dense; };
}  // namespace detail

/// Parses ids produced by Backend::id(): dual, dual(chunk=K), tape, fd,
/// fd(forward), second_order(A,B), mixed(A,B), sparse(A). Throws ConfigError.
Backend parse_backend(std::string_view text);

}  // namespace adkit
