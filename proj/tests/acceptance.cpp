// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "oracles.hpp"

using namespace adkit;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

Function sumsq(std::size_t n) {
    return make_function("sumsq", n, 1, [](auto x) {
        using S = scalar_t<decltype(x)>;
        S s = x[0] * x[0];
        for (std::size_t i = 1; i < x.size(); ++i) s = s + x[i] * x[i];
        return s;
    });
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(ADKIT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
        if (c == '"')
            quoted = !quoted;
        else if (c == ',' && !quoted) {
            out.push_back(cur);
            cur.clear();
        } else
            cur += c;
    }
    out.push_back(cur);
    return out;
}

std::vector<std::map<std::string, std::string>> read_csv(const std::filesystem::path& p, std::string& header) {
    std::ifstream is(p);
    std::getline(is, header);
    const auto cols = split_csv(header);
    std::vector<std::map<std::string, std::string>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        std::map<std::string, std::string> r;
        for (std::size_t k = 0; k < cols.size() && k < cells.size(); ++k) r[cols[k]] = cells[k];
        r["#cells"] = std::to_string(cells.size());
        rows.push_back(std::move(r));
    }
    return rows;
}

std::filesystem::path scratch_dir() {
    auto d = std::filesystem::temp_directory_path() / ("adkit_acceptance_" + std::to_string(::getpid()));
    std::filesystem::create_directories(d);
    return d;
}

Outcome gradient_correctness() {
    Outcome o;
    const auto t0 = Clock::now();
    const std::vector<Backend> exact = {
        Backend::dual(), Backend::tape(), Backend::second_order(Backend::dual(), Backend::tape()),
        Backend::mixed_mode(Backend::dual(), Backend::tape())};
    const std::vector<Backend> approx = {Backend::finite_diff()};
    std::mt19937_64 rng(1);
    for (std::size_t n : {10u, 100u, 1000u}) {
        const Function f = sumsq(n);
        const auto x = oracle::random_vector(rng, n);
        double norm = 0;
        for (double v : x) norm += v * v;
        norm = std::sqrt(norm);
        for (const Backend& b : exact) {
            const Vector g = gradient(f, b, x);
            double err = 0;
            for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::fabs(g[i] - 2 * x[i]));
            o.require(err == 0.0, b.id() + " n=" + std::to_string(n) + " err=" + fmt(err));
        }
        for (const Backend& b : approx) {
            const Vector g = gradient(f, b, x);
            double err = 0;
            for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::fabs(g[i] - 2 * x[i]));
            o.require(err <= 1e-6 * std::max(1.0, norm), b.id() + " n=" + std::to_string(n) + " err=" + fmt(err));
        }
    }
    const double secs = seconds_since(t0);
    o.require(secs < 1.0, "took " + fmt(secs) + " s");
    if (o.ok) o.detail = "exact for AD backends, FD within bound, " + fmt(secs) + " s";
    return o;
}

Outcome cross_backend_equivalence() {
    Outcome o;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<std::size_t> dim(1, 8);
    const Backend fwd = Backend::dual();
    const Backend rev = Backend::tape();
    const Backend fwd_t = Backend::dual({.transpose_fallback = true});
    for (int t = 0; t < 25; ++t) {
        const std::size_t n = dim(rng), m = dim(rng);
        const auto p = oracle::PolyMap::random(rng, n, m);
        const Function f = p.function();
        const auto x = oracle::random_vector(rng, n);
        Preparation pf = prepare(Operator::jacobian, f, fwd, x);
        Preparation pr = prepare(Operator::jacobian, f, rev, x);
        o.require(pf.plan().find(Operator::pushforward) != nullptr, "dual jacobian not via pushforward");
        o.require(pr.plan().find(Operator::pullback) != nullptr, "tape jacobian not via pullback");
        const DenseMatrix Jf = jacobian(f, pf, fwd, x).to_dense();
        const DenseMatrix Jr = jacobian(f, pr, rev, x).to_dense();
        const DenseMatrix Jc = oracle::central_jacobian(f, x);
        const DenseMatrix Jfd = jacobian(f, Backend::finite_diff(), x).to_dense();
        // Pullback realized through the pushforward transpose fallback.
        const DenseMatrix JfT = pullback(f, fwd_t, x, DenseMatrix::identity(m));
        // Pushforward realized through the pullback transpose fallback.
        const DenseMatrix JrT = pushforward(f, rev, x, DenseMatrix::identity(n)).transposed();
        const std::string tag = "map " + std::to_string(t) + " (" + std::to_string(n) + "x" + std::to_string(m) + ")";
        o.require(oracle::max_abs_diff(Jf, Jc) <= 1e-6, tag + " pushforward vs FD oracle");
        o.require(oracle::max_abs_diff(Jr, Jc) <= 1e-6, tag + " pullback vs FD oracle");
        o.require(oracle::max_abs_diff(Jfd, Jc) <= 1e-6, tag + " fd backend vs FD oracle");
        o.require(oracle::max_abs_diff(Jf, Jr) <= 1e-10, tag + " dual vs tape");
        o.require(oracle::max_abs_diff(Jf, p.jacobian(x)) <= 1e-10, tag + " dual vs closed form");
        o.require(oracle::max_abs_diff(JfT, Jf) <= 1e-10, tag + " forward transpose fallback");
        o.require(oracle::max_abs_diff(JrT, Jr) <= 1e-10, tag + " reverse transpose fallback");
    }
    const double secs = seconds_since(t0);
    o.require(secs < 10.0, "took " + fmt(secs) + " s");
    if (o.ok) o.detail = "25 maps agree, " + fmt(secs) + " s";
    return o;
}

Function quadratic_form(std::size_t n) {
    return make_function("quadratic_form", n, 1, [](auto x, const auto& ctx) {
        using S = scalar_t<decltype(x)>;
        const auto A = ctx.constant(0);
        const std::size_t n = x.size();
        S s(0.0);
        for (std::size_t i = 0; i < n; ++i) {
            S row(0.0);
            for (std::size_t j = 0; j < n; ++j) row = row + A[i * n + j] * x[j];
            s = s + x[i] * row;
        }
        return s;
    });
}

Outcome hvp_forward_over_reverse() {
    Outcome o;
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> dim(1, 12);
    const Backend so = Backend::second_order(Backend::dual(), Backend::tape());
    for (int t = 0; t < 10; ++t) {
        const std::size_t n = dim(rng);
        std::vector<double> A(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) A[i * n + j] = A[j * n + i] = oracle::random_vector(rng, 1)[0];
        const Function f = quadratic_form(n);
        const auto x = oracle::random_vector(rng, n);
        const std::vector<Context> ctx{Context::constant(A)};
        Batch v(3, n);
        for (double& e : v.data()) e = oracle::random_vector(rng, 1)[0];
        const Batch hv = hvp(f, so, x, v, ctx);
        for (std::size_t k = 0; k < 3; ++k)
            for (std::size_t i = 0; i < n; ++i) {
                double ref = 0;
                for (std::size_t j = 0; j < n; ++j) ref += (A[i * n + j] + A[j * n + i]) * v(k, j);
                o.require(std::fabs(hv(k, i) - ref) <= 1e-10, "hvp mismatch n=" + std::to_string(n));
            }
        const DenseMatrix H = hessian(f, so, x, ctx).to_dense();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                o.require(std::fabs(H(i, j) - (A[i * n + j] + A[j * n + i])) <= 1e-12, "hessian mismatch");
                o.require(std::fabs(H(i, j) - H(j, i)) <= 1e-12, "hessian not symmetric");
            }
    }
    if (o.ok) o.detail = "10 quadratic forms";
    return o;
}

Outcome fallback_chain() {
    Outcome o;
    const Backend so = Backend::second_order(Backend::dual(), Backend::tape());
    const OperatorPlan g = resolve(Operator::gradient, Backend::tape());
    o.require(g.chain.size() == 2 && g.chain[1].op == Operator::pullback && g.chain[1].native,
              "gradient: " + g.to_string());
    const OperatorPlan h = resolve(Operator::hvp, so);
    const PlanStep* pf = h.find(Operator::pushforward);
    const PlanStep* gr = h.find(Operator::gradient);
    o.require(pf && gr && pf->backend == "dual" && gr->backend == "tape" && gr->link == Link::composes,
              "hvp: " + h.to_string());
    const OperatorPlan H = resolve(Operator::hessian, so);
    o.require(H.chain.size() > 1 && H.chain[1].op == Operator::hvp && H.chain[1].repeat == Repeat::per_input,
              "hessian: " + H.to_string());
    o.require(H.terminates_natively(), "hessian chain does not end in a native step");

    for (std::size_t n : {1u, 5u, 9u}) {
        const Function f = sumsq(n);
        const std::vector<double> x(n, 0.5);
        Preparation prep = prepare(Operator::hessian, f, so, x);
        o.require(prep.plan() == resolve(Operator::hessian, so, IoSize{n, 1}), "preparation plan differs");
        prep.reset_stats();
        hessian(f, prep, so, x);
        o.require(prep.stats().hvps == n,
                  "n=" + std::to_string(n) + " issued " + std::to_string(prep.stats().hvps) + " hvps");
    }
    if (o.ok) o.detail = H.to_string() + "; hvps == n";
    return o;
}

Outcome sparsity() {
    Outcome o;
    const std::size_t n = 32;
    const Function f = make_function("stencil", n, n, [](auto x) {
        using S = scalar_t<decltype(x)>;
        const std::size_t n = x.size();
        std::vector<S> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            S v = x[i] * x[i] * x[i] - 2.0 * x[i];
            if (i > 0) v = v + x[i - 1];
            if (i + 1 < n) v = v + x[i + 1];
            y[i] = v;
        }
        return y;
    });
    std::mt19937_64 rng(5);
    const auto x = oracle::random_vector(rng, n);
    const SparsityPattern p = detect_jacobian_pattern(f, x);
    bool exact = p.nrows() == n && p.ncols() == n;
    for (std::size_t i = 0; i < n && exact; ++i)
        for (std::size_t j = 0; j < n; ++j) exact = exact && p.contains(i, j) == (i <= j + 1 && j <= i + 1);
    o.require(exact, "detected pattern is not tridiagonal");

    const Backend sb = Backend::sparse(Backend::dual());
    Preparation prep = prepare(Operator::jacobian, f, sb, x);
    const Coloring* c = prep.coloring();
    o.require(c && c->num_colors() <= 3, "coloring uses more than 3 colors");
    if (!c) return o;
    o.require(oracle::columns_orthogonal(*prep.pattern(), c->column_colors), "jacobian coloring not orthogonal");
    prep.reset_stats();
    const SparseMatrix J = sparse_jacobian(f, prep, sb, x);
    o.require(prep.stats().pushforwards == c->num_colors(),
              std::to_string(prep.stats().pushforwards) + " pushforwards for " + std::to_string(c->num_colors()) +
                  " colors");
    o.require(oracle::max_abs_diff(J.to_dense(), jacobian(f, Backend::dual(), x).to_dense()) <= 1e-10,
              "sparse jacobian differs from dense");

    const Function g = make_function("chain", n, 1, [](auto x) {
        using S = scalar_t<decltype(x)>;
        S s(0.0);
        for (std::size_t i = 0; i + 1 < x.size(); ++i) s = s + x[i] * x[i + 1];
        return s;
    });
    const Backend so = Backend::second_order(Backend::dual(), Backend::tape());
    const Backend sh = Backend::sparse(so);
    Preparation hp = prepare(Operator::hessian, g, sh, x);
    const Coloring* hc = hp.coloring();
    o.require(hc && hc->num_colors() <= 3, "hessian coloring uses more than 3 colors");
    if (!hc) return o;
    o.require(oracle::is_star_coloring(*hp.pattern(), hc->column_colors), "hessian coloring is not a star coloring");
    hp.reset_stats();
    const SparseMatrix H = sparse_hessian(g, hp, sh, x);
    o.require(hp.stats().hvps <= 3, std::to_string(hp.stats().hvps) + " hvps");
    o.require(oracle::max_abs_diff(H.to_dense(), hessian(g, so, x).to_dense()) <= 1e-10,
              "sparse hessian differs from dense");

    // Every other coloring the library emits for these patterns.
    for (Partition part : {Partition::column, Partition::row, Partition::bidirectional}) {
        const Coloring k = greedy_color(p, part);
        o.require(oracle::columns_orthogonal(p, k.column_colors), "column colors not orthogonal");
        o.require(oracle::rows_orthogonal(p, k.row_colors), "row colors not orthogonal");
    }
    if (o.ok)
        o.detail = std::to_string(c->num_colors()) + " colors, " + std::to_string(prep.stats().pushforwards) +
                   " pushforwards, " + std::to_string(hp.stats().hvps) + " hvps";
    return o;
}

Outcome preparation_impact(const std::filesystem::path& dir) {
    Outcome o;
    const auto t0 = Clock::now();
    const auto csv = dir / "prep.csv";
    const int rc = run_cli("bench --scenarios sumsq_gradient --backends dual,tape --sizes 1000 --prepared both --out " +
                           csv.string());
    o.require(rc == 0, "adkit bench exited with " + std::to_string(rc));
    std::string header;
    const auto rows = read_csv(csv, header);
    double tape_prep = -1, tape_unprep = -1;
    long dual_allocs = -1;
    for (const auto& r : rows) {
        const bool prepared = r.at("prepared") == "true";
        if (r.at("backend") == "tape") (prepared ? tape_prep : tape_unprep) = std::stod(r.at("time_ns_median"));
        if (r.at("backend") == "dual" && prepared) dual_allocs = std::stol(r.at("allocs"));
    }
    o.require(tape_prep > 0 && tape_unprep > 0, "missing tape rows");
    o.require(2.0 * tape_prep <= tape_unprep,
              "tape prepared " + fmt(tape_prep) + " ns vs unprepared " + fmt(tape_unprep) + " ns");
    o.require(dual_allocs == 0, "dual prepared allocs = " + std::to_string(dual_allocs));
    const double secs = seconds_since(t0);
    o.require(secs < 60.0, "took " + fmt(secs) + " s");
    if (o.ok)
        o.detail = "tape speedup " + fmt(tape_unprep / tape_prep) + "x, dual prepared allocs 0, " + fmt(secs) + " s";
    return o;
}

Outcome context_semantics() {
    Outcome o;
    const std::size_t n = 6;
    std::mt19937_64 rng(7);
    const std::vector<double> A = oracle::random_vector(rng, n * n);
    const auto x = oracle::random_vector(rng, n);

    auto body = [n](auto x, auto get) {
        using S = scalar_t<decltype(x)>;
        S s(0.0);
        for (std::size_t i = 0; i < n; ++i) {
            S row(0.0);
            for (std::size_t j = 0; j < n; ++j) row = row + get(i * n + j) * x[j];
            s = s + x[i] * row;
        }
        return s;
    };
    const Function as_constant = make_function("qf_constant", n, 1, [body](auto x, const auto& ctx) {
        const auto a = ctx.constant(0);
        return body(x, [a](std::size_t k) { return a[k]; });
    });
    const Function inlined = make_function("qf_inlined", n, 1, [body, A](auto x) {
        return body(x, [&A](std::size_t k) { return A[k]; });
    });
    const std::vector<Context> cctx{Context::constant(A)};
    const Backend so = Backend::second_order(Backend::dual(), Backend::tape());
    for (const Backend& b : {Backend::dual(), Backend::tape(), Backend::finite_diff(), so}) {
        o.require(gradient(as_constant, b, x, cctx) == gradient(inlined, b, x), "gradient differs on " + b.id());
    }
    for (const Backend& b : {Backend::dual(), so}) {
        o.require(hessian(as_constant, b, x, cctx) == hessian(inlined, b, x), "hessian differs on " + b.id());
    }

    // Cache contents before a call must not leak into any result.
    const Function with_cache = make_function("cached", n, n, [](auto x, const auto& ctx) {
        using S = scalar_t<decltype(x)>;
        auto buf = ctx.cache(0);
        const std::size_t n = x.size();
        for (std::size_t i = 0; i < n; ++i) buf[i] = x[i] * x[i];
        std::vector<S> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = buf[i] * x[(i + 1) % n] + buf[(i + 2) % n];
        return y;
    });
    const Function inplace_cache = make_inplace_function("cached_inplace", n, n, [](auto y, auto x, const auto& ctx) {
        auto buf = ctx.cache(0);
        const std::size_t n = x.size();
        for (std::size_t i = 0; i < n; ++i) buf[i] = x[i] * x[i];
        for (std::size_t i = 0; i < n; ++i) y[i] = buf[i] * x[(i + 1) % n] + buf[(i + 2) % n];
    });
    std::vector<double> cache(n, 0.0);
    const std::vector<Context> kctx{Context::cache(cache)};
    auto scramble = [&] {
        for (double& c : cache) c = oracle::random_vector(rng, 1, -1e6, 1e6)[0];
    };
    const std::vector<std::pair<Function, Backend>> cases = {
        {with_cache, Backend::dual()}, {with_cache, Backend::tape()}, {with_cache, Backend::finite_diff()},
        {inplace_cache, Backend::tape()}, {inplace_cache, Backend::finite_diff()}};
    for (const auto& [f, b] : cases) {
        Preparation prep = prepare(Operator::jacobian, f, b, x, kctx);
        std::fill(cache.begin(), cache.end(), 0.0);
        const auto [y0, J0] = value_and_jacobian(f, prep, b, x, kctx);
        for (int rep = 0; rep < 3; ++rep) {
            scramble();
            const auto [y1, J1] = value_and_jacobian(f, prep, b, x, kctx);
            o.require(y0 == y1 && J0 == J1, "cache contents changed output on " + b.id() + " for " + f.name());
            scramble();
            o.require(jacobian(f, b, x, kctx) == J0, "cache contents changed unprepared output on " + b.id());
        }
    }
    if (o.ok) o.detail = "constant vs inlined bitwise equal; scrambled caches change no bit";
    return o;
}

Outcome differentiate_with_check() {
    Outcome o;
    const Function f = make_function("erf_sum", 5, 1, [](auto x) {
        using S = scalar_t<decltype(x)>;
        S s(0.0);
        for (std::size_t i = 0; i < x.size(); ++i) s = s + adkit::erf(x[i]) * x[(i + 1) % x.size()];
        return s;
    });
    std::mt19937_64 rng(8);
    const auto x = oracle::random_vector(rng, 5);
    bool threw = false;
    try {
        gradient(f, Backend::dual(), x);
    } catch (const UnsupportedPrimitive&) {
        threw = true;
    }
    o.require(threw, "dual backend did not raise UnsupportedPrimitive");
    const Function w = differentiate_with(f, Backend::tape());
    Vector gw;
    try {
        gw = gradient(w, Backend::dual(), x);
    } catch (const std::exception& e) {
        o.require(false, std::string("wrapped gradient failed: ") + e.what());
        return o;
    }
    const Vector gt = gradient(f, Backend::tape(), x);
    o.require(gw == gt, "wrapped gradient differs from tape gradient");
    if (o.ok) o.detail = "UnsupportedPrimitive unwrapped; wrapped gradient bitwise equal to tape";
    return o;
}

Outcome harness_contract(const std::filesystem::path& dir) {
    Outcome o;
    const auto csv = dir / "suite.csv";
    const int rc = run_cli("bench --scenarios sumsq_gradient --backends dual,tape,fd --sizes 100,1000,10000 "
                           "--prepared both --out " + csv.string());
    o.require(rc == 0, "bench exited with " + std::to_string(rc));
    std::string header;
    const auto rows = read_csv(csv, header);
    const std::string expected =
        "scenario,backend,operator,size,prepared,samples,time_ns_min,time_ns_median,allocs,status,max_abs_err";
    o.require(header == expected, "unexpected header: " + header);
    o.require(rows.size() == 18, std::to_string(rows.size()) + " rows");
    std::set<std::string> cells;
    for (const auto& r : rows) {
        o.require(r.at("#cells") == "11", "row with " + r.at("#cells") + " cells");
        o.require(r.at("status") == "pass", "cell status " + r.at("status"));
        o.require(r.at("prepared") == "true" || r.at("prepared") == "false", "bad prepared field");
        try {
            o.require(std::stoul(r.at("samples")) > 0, "zero samples");
            o.require(std::stod(r.at("time_ns_median")) > 0, "zero median");
            std::stod(r.at("max_abs_err"));
            std::stoul(r.at("allocs"));
        } catch (const std::exception&) {
            o.require(false, "non-numeric field");
        }
        cells.insert(r.at("backend") + "/" + r.at("size") + "/" + r.at("prepared"));
    }
    o.require(cells.size() == 18, "duplicate cells");
    const int bad = run_cli("bench --scenarios selftest_wrong_reference --backends dual --sizes 10 --samples 3 --out " +
                            (dir / "bad.csv").string());
    o.require(bad == 1, "corrupted reference exited with " + std::to_string(bad));
    const int cfg = run_cli("bench --scenarios sumsq_gradient --backends nonsense --out " + (dir / "x.csv").string());
    o.require(cfg == 2, "config error exited with " + std::to_string(cfg));
    if (o.ok) o.detail = "18 rows, exit 0; corrupted reference exit 1";
    return o;
}

}  // namespace

int main() {
    const auto dir = scratch_dir();
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"gradient correctness", gradient_correctness},
        {"cross-backend and fallback equivalence", cross_backend_equivalence},
        {"hvp forward-over-reverse", hvp_forward_over_reverse},
        {"fallback chain structure", fallback_chain},
        {"sparsity", sparsity},
        {"preparation impact", [&] { return preparation_impact(dir); }},
        {"context semantics", context_semantics},
        {"DifferentiateWith", differentiate_with_check},
        {"harness contract", [&] { return harness_contract(dir); }},
    };
    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o.ok = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failures += o.ok ? 0 : 1;
        std::cout << "criterion " << k + 1 << " " << (o.ok ? "PASS" : "FAIL") << " " << criteria[k].first << ": "
                  << o.detail << std::endl;
    }
    std::filesystem::remove_all(dir);
    return failures == 0 ? 0 : 1;
}
