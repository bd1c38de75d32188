#pragma once

// Execution tape for the reverse-mode backend.
//
// Slots [0, input_count) hold the inputs; node i writes slot input_count + i.
// Operand indices of -1 refer to the node's literal instead of a slot, which
// is how constants (including Constant contexts) are embedded in the tape.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <type_traits>
#include <vector>

#include "adkit/dual.hpp"
#include "adkit/errors.hpp"
#include "adkit/primitives.hpp"

namespace adkit {

struct TapeNode {
    Primitive op;
    std::int32_t a = -1;
    std::int32_t b = -1;
    double lit = 0.0;
};

/// Comparison observed during recording, with the outcome that was frozen.
struct BranchGuard {
    Primitive cmp;
    std::int32_t a = -1;
    std::int32_t b = -1;
    double lit = 0.0;
    bool outcome = false;
};

enum class BranchPolicy {
    freeze,  // replay follows the recorded branch silently
    check,   // replay raises TraceEscape when a recorded comparison flips
    reject,  // recording raises TraceEscape as soon as a tracked comparison occurs
};

/// Opaque multi-output call recorded on a tape (DifferentiateWith).
class ExternalOp {
public:
    virtual ~ExternalOp() = default;
    virtual std::size_t input_size() const = 0;
    virtual std::size_t output_size() const = 0;
    /// Evaluates at x and retains what is needed for pullback at x.
    virtual void forward(std::span<const double> x, std::span<double> y) = 0;
    /// Adds J(x)^T ybar into xbar for the x of the last forward call.
    virtual void pullback(std::span<const double> ybar, std::span<double> xbar) = 0;
};

class Tape;

/// Active scalar used while recording. Slot -1 marks a passive (constant) value.
struct TapeVar {
    double value = 0.0;
    std::int32_t slot = -1;

    constexpr TapeVar() = default;
    template <Passive P>
    constexpr TapeVar(P c) : value(static_cast<double>(c)) {}
    constexpr TapeVar(double v, std::int32_t s) : value(v), slot(s) {}

    bool active() const noexcept { return slot >= 0; }

    TapeVar& operator+=(const TapeVar& o);
    TapeVar& operator-=(const TapeVar& o);
    TapeVar& operator*=(const TapeVar& o);
    TapeVar& operator/=(const TapeVar& o);
};

inline double primal(const TapeVar& x) { return x.value; }

namespace detail {

/// Tape under construction on this thread, or null when not recording.
Tape*& active_tape() noexcept;

std::int32_t push_node(Tape& t, const TapeNode& n, double value);
void push_guard(Tape& t, const BranchGuard& g);

TapeVar record_unary(Primitive op, const TapeVar& a, double value);
TapeVar record_binary(Primitive op, const TapeVar& a, const TapeVar& b, double value);
bool record_compare(Primitive op, const TapeVar& a, const TapeVar& b, bool outcome);

}  // namespace detail

inline TapeVar operator+(const TapeVar& a) { return a; }
inline TapeVar operator-(const TapeVar& a) { return detail::record_unary(Primitive::neg, a, -a.value); }
inline TapeVar operator+(const TapeVar& a, const TapeVar& b) {
    return detail::record_binary(Primitive::add, a, b, a.value + b.value);
}
inline TapeVar operator-(const TapeVar& a, const TapeVar& b) {
    return detail::record_binary(Primitive::sub, a, b, a.value - b.value);
}
inline TapeVar operator*(const TapeVar& a, const TapeVar& b) {
    return detail::record_binary(Primitive::mul, a, b, a.value * b.value);
}
inline TapeVar operator/(const TapeVar& a, const TapeVar& b) {
    return detail::record_binary(Primitive::div, a, b, a.value / b.value);
}
template <Passive P> TapeVar operator+(const TapeVar& a, P c) { return a + TapeVar(c); }
template <Passive P> TapeVar operator+(P c, const TapeVar& a) { return TapeVar(c) + a; }
template <Passive P> TapeVar operator-(const TapeVar& a, P c) { return a - TapeVar(c); }
template <Passive P> TapeVar operator-(P c, const TapeVar& a) { return TapeVar(c) - a; }
template <Passive P> TapeVar operator*(const TapeVar& a, P c) { return a * TapeVar(c); }
template <Passive P> TapeVar operator*(P c, const TapeVar& a) { return TapeVar(c) * a; }
template <Passive P> TapeVar operator/(const TapeVar& a, P c) { return a / TapeVar(c); }
template <Passive P> TapeVar operator/(P c, const TapeVar& a) { return TapeVar(c) / a; }

inline TapeVar& TapeVar::operator+=(const TapeVar& o) { return *this = *this + o; }
inline TapeVar& TapeVar::operator-=(const TapeVar& o) { return *this = *this - o; }
inline TapeVar& TapeVar::operator*=(const TapeVar& o) { return *this = *this * o; }
inline TapeVar& TapeVar::operator/=(const TapeVar& o) { return *this = *this / o; }

#define ADKIT_TAPE_COMPARE(sym, prim)                                                           \
    inline bool operator sym(const TapeVar& a, const TapeVar& b) {                              \
        return detail::record_compare(Primitive::prim, a, b, a.value sym b.value);              \
    }                                                                                           \
    template <Passive P> bool operator sym(const TapeVar& a, P c) { return a sym TapeVar(c); }  \
    template <Passive P> bool operator sym(P c, const TapeVar& a) { return TapeVar(c) sym a; }
ADKIT_TAPE_COMPARE(<, lt)
ADKIT_TAPE_COMPARE(<=, le)
ADKIT_TAPE_COMPARE(>, gt)
ADKIT_TAPE_COMPARE(>=, ge)
ADKIT_TAPE_COMPARE(==, eq)
ADKIT_TAPE_COMPARE(!=, ne)
#undef ADKIT_TAPE_COMPARE

inline TapeVar exp(const TapeVar& a) { return detail::record_unary(Primitive::exp, a, std::exp(a.value)); }
inline TapeVar log(const TapeVar& a) { return detail::record_unary(Primitive::log, a, std::log(a.value)); }
inline TapeVar sin(const TapeVar& a) { return detail::record_unary(Primitive::sin, a, std::sin(a.value)); }
inline TapeVar cos(const TapeVar& a) { return detail::record_unary(Primitive::cos, a, std::cos(a.value)); }
inline TapeVar tanh(const TapeVar& a) { return detail::record_unary(Primitive::tanh, a, std::tanh(a.value)); }
inline TapeVar sqrt(const TapeVar& a) { return detail::record_unary(Primitive::sqrt, a, std::sqrt(a.value)); }
inline TapeVar abs(const TapeVar& a) { return detail::record_unary(Primitive::abs, a, std::fabs(a.value)); }
inline TapeVar erf(const TapeVar& a) { return detail::record_unary(Primitive::erf, a, std::erf(a.value)); }
inline TapeVar pow(const TapeVar& a, const TapeVar& b) {
    return detail::record_binary(Primitive::pow, a, b, std::pow(a.value, b.value));
}
template <Passive P> TapeVar pow(const TapeVar& a, P c) { return pow(a, TapeVar(c)); }
template <Passive P> TapeVar pow(P c, const TapeVar& b) { return pow(TapeVar(c), b); }
inline TapeVar max(const TapeVar& a, const TapeVar& b) {
    return detail::record_binary(Primitive::max, a, b, adkit::max(a.value, b.value));
}
inline TapeVar min(const TapeVar& a, const TapeVar& b) {
    return detail::record_binary(Primitive::min, a, b, adkit::min(a.value, b.value));
}
template <Passive P> TapeVar max(const TapeVar& a, P c) { return max(a, TapeVar(c)); }
template <Passive P> TapeVar max(P c, const TapeVar& b) { return max(TapeVar(c), b); }
template <Passive P> TapeVar min(const TapeVar& a, P c) { return min(a, TapeVar(c)); }
template <Passive P> TapeVar min(P c, const TapeVar& b) { return min(TapeVar(c), b); }

/// Recorded primitive trace plus the workspaces needed to replay and sweep it.
///
/// A Tape is exclusive-use: replay and sweep mutate its value and adjoint
/// buffers. Distinct tapes may be used from different threads.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;
    Tape(Tape&&) noexcept = default;
    Tape& operator=(Tape&&) noexcept = default;

    std::size_t input_count() const noexcept { return input_count_; }
    std::size_t output_count() const noexcept { return output_slots_.size(); }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t slot_count() const noexcept { return input_count_ + nodes_.size(); }
    std::size_t count(Primitive p) const noexcept;

    std::span<const TapeNode> nodes() const noexcept { return nodes_; }
    std::span<const BranchGuard> guards() const noexcept { return guards_; }
    std::span<const double> recorded_input() const noexcept { return recorded_input_; }
    /// Output slot per output; -1 for outputs that did not depend on the input.
    std::span<const std::int32_t> output_slots() const noexcept { return output_slots_; }
    BranchPolicy branch_policy() const noexcept { return policy_; }

    /// Recomputes every slot at x and writes the outputs to y.
    void replay(std::span<const double> x, std::span<double> y);
    std::vector<double> replay(std::span<const double> x);

    /// Accumulates adjoints in reverse order from the last replay; returns J^T seed.
    void reverse_sweep(std::span<const double> seed, std::span<double> xbar);
    std::vector<double> reverse_sweep(std::span<const double> seed);

    /// Lane-generic passes used by forward-over-reverse plans. `values` and
    /// `adjoints` must have slot_count() entries.
    template <class V>
    void forward_pass(std::span<const V> x, std::span<V> values, std::span<V> y);
    template <class V>
    void reverse_pass(std::span<const V> values, std::span<const V> seed, std::span<V> adjoints,
                      std::span<V> xbar);

    // Recording interface (used by the recorder and tests).
    void begin(std::span<const double> x, BranchPolicy policy);
    TapeVar input(std::size_t i) const { return TapeVar(recorded_input_[i], static_cast<std::int32_t>(i)); }
    void finish(std::span<const TapeVar> outputs);
    /// Records an opaque call; evaluates it at the args' values into y and
    /// returns the slot of the first output (outputs occupy consecutive slots).
    std::int32_t add_external(std::shared_ptr<ExternalOp> op, std::span<const TapeVar> args, std::span<double> y);

private:
    friend std::int32_t detail::push_node(Tape&, const TapeNode&, double);
    friend void detail::push_guard(Tape&, const BranchGuard&);

    struct ExternalCall {
        std::shared_ptr<ExternalOp> op;
        std::vector<std::int32_t> args;
        std::vector<double> arg_literals;
        std::int32_t first_slot = 0;
        std::vector<double> x_buf, y_buf, ybar_buf, xbar_buf;
    };

    template <class V>
    void check_guards(std::span<const V> values) const;

    std::size_t input_count_ = 0;
    BranchPolicy policy_ = BranchPolicy::freeze;
    std::vector<double> recorded_input_;
    std::vector<TapeNode> nodes_;
    std::vector<BranchGuard> guards_;
    std::vector<std::int32_t> output_slots_;
    std::vector<double> output_constants_;
    std::vector<ExternalCall> externals_;
    std::vector<double> values_;
    std::vector<double> adjoints_;
};

namespace detail {

/// Installs a tape as the thread's recorder for the lifetime of the guard,
/// restoring the previous one afterwards (recordings may nest).
class RecordingScope {
public:
    explicit RecordingScope(Tape& t) : previous_(active_tape()) { active_tape() = &t; }
    ~RecordingScope() { active_tape() = previous_; }
    RecordingScope(const RecordingScope&) = delete;
    RecordingScope& operator=(const RecordingScope&) = delete;

private:
    Tape* previous_;
};

}  // namespace detail

}  // namespace adkit
