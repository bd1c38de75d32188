#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "adkit/errors.hpp"

namespace adkit {

/// Non-differentiated extra argument of a function.
///
/// A Constant is a fixed parameter that no operator ever writes. A Cache is
/// scratch storage the function may overwrite; its pre-call contents never
/// influence results. Both are non-owning views.
class Context {
public:
    enum class Kind { constant, cache };

    static Context constant(std::span<const double> data) { return Context(Kind::constant, data, {}); }
    static Context cache(std::span<double> buffer) { return Context(Kind::cache, buffer, buffer); }

    Kind kind() const noexcept { return kind_; }
    std::size_t size() const noexcept { return view_.size(); }
    std::span<const double> data() const noexcept { return view_; }
    /// Writable buffer of a Cache; empty for Constants.
    std::span<double> buffer() const noexcept { return buffer_; }

private:
    Context(Kind k, std::span<const double> view, std::span<double> buffer)
        : kind_(k), view_(view), buffer_(buffer) {}

    Kind kind_;
    std::span<const double> view_;
    std::span<double> buffer_;
};

inline Context Constant(std::span<const double> data) { return Context::constant(data); }
inline Context Cache(std::span<double> buffer) { return Context::cache(buffer); }

/// Non-owning list of contexts passed to an operator call.
///
/// Constructible from a braced list, which lives until the end of the full
/// expression containing the call.
class ContextArgs {
public:
    ContextArgs() = default;
    ContextArgs(std::initializer_list<Context> list) : items_(list.begin(), list.size()) {}
    ContextArgs(std::span<const Context> items) : items_(items) {}
    ContextArgs(const std::vector<Context>& items) : items_(items) {}

    std::size_t size() const noexcept { return items_.size(); }
    bool empty() const noexcept { return items_.empty(); }
    const Context& operator[](std::size_t i) const { return items_[i]; }
    std::span<const Context> items() const noexcept { return items_; }
    auto begin() const noexcept { return items_.begin(); }
    auto end() const noexcept { return items_.end(); }

private:
    std::span<const Context> items_;
};

/// Shape of a context list, recorded at preparation time.
struct ContextSignature {
    std::vector<Context::Kind> kinds;
    std::vector<std::size_t> sizes;

    static ContextSignature of(ContextArgs args);
    bool matches(ContextArgs args) const noexcept;
    std::size_t size() const noexcept { return kinds.size(); }
};

/// What a function body sees of its contexts when evaluated with scalar type S.
///
/// Constants are always plain doubles. Caches are typed in the active scalar
/// type: the caller's buffer for double evaluations, a widened copy owned by
/// the preparation for every other scalar type.
template <class S>
class ContextView {
public:
    ContextView() = default;
    ContextView(std::span<const Context> args, std::span<const std::span<S>> caches)
        : args_(args), caches_(caches) {}

    std::size_t size() const noexcept { return args_.size(); }

    std::span<const double> constant(std::size_t i) const {
        check(i, Context::Kind::constant);
        return args_[i].data();
    }
    std::span<S> cache(std::size_t i) const {
        check(i, Context::Kind::cache);
        return caches_[i];
    }
    std::span<const Context> descriptors() const noexcept { return args_; }

private:
    void check(std::size_t i, Context::Kind k) const {
        if (i >= args_.size() || args_[i].kind() != k)
            throw ShapeMismatch("", "", "context index out of range or of the wrong kind");
    }

    std::span<const Context> args_;
    std::span<const std::span<S>> caches_;
};

/// Per-scalar-type cache storage held by a preparation.
template <class S>
class CacheStore {
public:
    CacheStore() = default;
    explicit CacheStore(const ContextSignature& sig) : storage_(sig.size()), spans_(sig.size()) {
        for (std::size_t i = 0; i < sig.size(); ++i) {
            if (sig.kinds[i] == Context::Kind::cache) storage_[i].assign(sig.sizes[i], S{});
            spans_[i] = storage_[i];
        }
    }
    CacheStore(CacheStore&& o) noexcept = default;
    CacheStore& operator=(CacheStore&& o) noexcept = default;

    ContextView<S> view(ContextArgs args) const { return ContextView<S>(args.items(), spans_); }

private:
    std::vector<std::vector<S>> storage_;
    std::vector<std::span<S>> spans_;
};

/// Double-typed views onto the caller's own Cache buffers.
class PrimalContexts {
public:
    PrimalContexts() = default;
    explicit PrimalContexts(std::size_t n) : spans_(n) {}

    ContextView<double> bind(ContextArgs args) {
        if (spans_.size() < args.size()) spans_.resize(args.size());
        for (std::size_t i = 0; i < args.size(); ++i) spans_[i] = args[i].buffer();
        return ContextView<double>(args.items(), std::span<const std::span<double>>(spans_.data(), args.size()));
    }

private:
    std::vector<std::span<double>> spans_;
};

}  // namespace adkit
