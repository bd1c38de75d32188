#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "adkit/harness.hpp"

namespace adkit::harness {

std::string_view status_name(Status s) noexcept {
    switch (s) {
        case Status::pass: return "pass";
        case Status::fail: return "fail";
        case Status::skip: return "skip";
        case Status::xfail: return "xfail";
    }
    return "?";
}

std::vector<const Scenario*> select_scenarios(std::string_view list) {
    std::vector<const Scenario*> out;
    if (list == "all") {
        for (const Scenario& s : builtin_scenarios())
            if (s.in_all) out.push_back(&s);
        return out;
    }
    std::stringstream ss{std::string(list)};
    std::string name;
    while (std::getline(ss, name, ','))
        if (!name.empty()) out.push_back(&find_scenario(name));
    if (out.empty()) throw ConfigError("", "", "no scenarios given");
    return out;
}

std::vector<Backend> select_backends(std::string_view list) {
    std::vector<Backend> out;
    int depth = 0;
    std::string cur;
    auto flush = [&] {
        const auto b = cur.find_first_not_of(' ');
        const auto e = cur.find_last_not_of(' ');
        if (b != std::string::npos) out.push_back(parse_backend(cur.substr(b, e - b + 1)));
        cur.clear();
    };
    for (char c : list) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == ',' && depth == 0)
            flush();
        else
            cur += c;
    }
    flush();
    if (out.empty()) throw ConfigError("", "", "no backends given");
    return out;
}

double default_tolerance(const Backend& b) {
    return b.id().find("fd") != std::string::npos ? 1e-4 : 1e-8;
}

namespace {

using Clock = std::chrono::steady_clock;

DenseMatrix row_of(std::span<const double> v) {
    DenseMatrix r(1, v.size());
    std::copy(v.begin(), v.end(), r.data().begin());
    return r;
}

// Output buffers and call dispatch for one operator.
struct Runner {
    Operator op;
    Function f;
    Backend b;
    std::span<const double> x;
    const Batch* seeds;
    ContextArgs ctx;

    Batch batch;
    Matrix matrix;
    std::vector<double> vec;
    std::vector<double> value;

    enum Variant { plain, value_and, into, value_and_into };

    // Runs one variant and returns the derivative shaped like the reference.
    DenseMatrix run(Preparation& prep, Variant v) {
        value.clear();
        const double x0 = x.empty() ? 0.0 : x[0];
        const std::size_t m = f.output_size();
        const std::size_t n = f.input_size();
        switch (op) {
            case Operator::pushforward:
                switch (v) {
                    case plain: return pushforward(f, prep, b, x, *seeds, ctx);
                    case value_and: {
                        auto [y, t] = value_and_pushforward(f, prep, b, x, *seeds, ctx);
                        value = y;
                        return t;
                    }
                    case into: pushforward_into(batch, f, prep, b, x, *seeds, ctx); return batch;
                    case value_and_into:
                        value.resize(m);
                        value_and_pushforward_into(value, batch, f, prep, b, x, *seeds, ctx);
                        return batch;
                }
                break;
            case Operator::pullback:
                switch (v) {
                    case plain: return pullback(f, prep, b, x, *seeds, ctx);
                    case value_and: {
                        auto [y, t] = value_and_pullback(f, prep, b, x, *seeds, ctx);
                        value = y;
                        return t;
                    }
                    case into: pullback_into(batch, f, prep, b, x, *seeds, ctx); return batch;
                    case value_and_into:
                        value.resize(m);
                        value_and_pullback_into(value, batch, f, prep, b, x, *seeds, ctx);
                        return batch;
                }
                break;
            case Operator::derivative:
                vec.resize(m);
                switch (v) {
                    case plain: return row_of(derivative(f, prep, b, x0, ctx));
                    case value_and: {
                        auto [y, d] = value_and_derivative(f, prep, b, x0, ctx);
                        value = y;
                        return row_of(d);
                    }
                    case into: derivative_into(vec, f, prep, b, x0, ctx); return row_of(vec);
                    case value_and_into:
                        value.resize(m);
                        value_and_derivative_into(value, vec, f, prep, b, x0, ctx);
                        return row_of(vec);
                }
                break;
            case Operator::gradient:
                vec.resize(n);
                switch (v) {
                    case plain: return row_of(gradient(f, prep, b, x, ctx));
                    case value_and: {
                        auto [y, g] = value_and_gradient(f, prep, b, x, ctx);
                        value = {y};
                        return row_of(g);
                    }
                    case into: gradient_into(vec, f, prep, b, x, ctx); return row_of(vec);
                    case value_and_into: value = {value_and_gradient_into(vec, f, prep, b, x, ctx)}; return row_of(vec);
                }
                break;
            case Operator::jacobian:
                switch (v) {
                    case plain: return jacobian(f, prep, b, x, ctx).to_dense();
                    case value_and: {
                        auto [y, J] = value_and_jacobian(f, prep, b, x, ctx);
                        value = y;
                        return J.to_dense();
                    }
                    case into: jacobian_into(matrix, f, prep, b, x, ctx); return matrix.to_dense();
                    case value_and_into:
                        value.resize(m);
                        value_and_jacobian_into(value, matrix, f, prep, b, x, ctx);
                        return matrix.to_dense();
                }
                break;
            case Operator::second_derivative:
                vec.resize(m);
                switch (v) {
                    case plain: return row_of(second_derivative(f, prep, b, x0, ctx));
                    case value_and: {
                        auto [y, d] = value_and_second_derivative(f, prep, b, x0, ctx);
                        value = y;
                        return row_of(d);
                    }
                    case into: second_derivative_into(vec, f, prep, b, x0, ctx); return row_of(vec);
                    case value_and_into:
                        value.resize(m);
                        value_and_second_derivative_into(value, vec, f, prep, b, x0, ctx);
                        return row_of(vec);
                }
                break;
            case Operator::hvp:
                switch (v) {
                    case plain: return hvp(f, prep, b, x, *seeds, ctx);
                    case value_and: {
                        auto [y, h] = value_and_hvp(f, prep, b, x, *seeds, ctx);
                        value = {y};
                        return h;
                    }
                    case into: hvp_into(batch, f, prep, b, x, *seeds, ctx); return batch;
                    case value_and_into: value = {value_and_hvp_into(batch, f, prep, b, x, *seeds, ctx)}; return batch;
                }
                break;
            case Operator::hessian:
                switch (v) {
                    case plain: return hessian(f, prep, b, x, ctx).to_dense();
                    case value_and: {
                        auto [y, H] = value_and_hessian(f, prep, b, x, ctx);
                        value = {y};
                        return H.to_dense();
                    }
                    case into: hessian_into(matrix, f, prep, b, x, ctx); return matrix.to_dense();
                    case value_and_into: value = {value_and_hessian_into(matrix, f, prep, b, x, ctx)}; return matrix.to_dense();
                }
                break;
        }
        return {};
    }

    // The timed call: in-place variant, result left in the buffers.
    void timed(Preparation& prep) {
        const double x0 = x.empty() ? 0.0 : x[0];
        switch (op) {
            case Operator::pushforward: pushforward_into(batch, f, prep, b, x, *seeds, ctx); break;
            case Operator::pullback: pullback_into(batch, f, prep, b, x, *seeds, ctx); break;
            case Operator::derivative: derivative_into(vec, f, prep, b, x0, ctx); break;
            case Operator::gradient: gradient_into(vec, f, prep, b, x, ctx); break;
            case Operator::jacobian: jacobian_into(matrix, f, prep, b, x, ctx); break;
            case Operator::second_derivative: second_derivative_into(vec, f, prep, b, x0, ctx); break;
            case Operator::hvp: hvp_into(batch, f, prep, b, x, *seeds, ctx); break;
            case Operator::hessian: hessian_into(matrix, f, prep, b, x, ctx); break;
        }
    }

    void size_buffers() {
        const std::size_t m = f.output_size();
        const std::size_t n = f.input_size();
        if (op == Operator::derivative || op == Operator::second_derivative) vec.assign(m, 0.0);
        if (op == Operator::gradient) vec.assign(n, 0.0);
    }

    DenseMatrix timed_result() const {
        switch (op) {
            case Operator::pushforward:
            case Operator::pullback:
            case Operator::hvp: return batch;
            case Operator::jacobian:
            case Operator::hessian: return matrix.to_dense();
            default: return row_of(vec);
        }
    }
};

// Largest entrywise difference; infinity on a shape mismatch or NaN.
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
    double e = 0.0;
    for (std::size_t k = 0; k < a.data().size(); ++k) {
        const double d = std::fabs(a.data()[k] - b.data()[k]);
        if (std::isnan(d)) return INFINITY;
        e = std::max(e, d);
    }
    return e;
}

double max_abs(const DenseMatrix& a) {
    double e = 0.0;
    for (double v : a.data()) e = std::max(e, std::fabs(v));
    return e;
}

Status classify(double err, double tol, const Scenario& s, const Backend& b) {
    if (err <= tol) return Status::pass;
    return s.expected_failure && s.expected_failure(b) ? Status::xfail : Status::fail;
}

Status error_status(const Scenario& s, const Backend& b) {
    return s.expected_failure && s.expected_failure(b) ? Status::xfail : Status::fail;
}

std::string format(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

std::string csv_field(const std::string& v) {
    if (v.find_first_of(",\"") == std::string::npos) return v;
    std::string q = "\"";
    for (char c : v) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

}  // namespace

CheckReport check(const Scenario& s, Instance& inst, const Backend& b, std::optional<double> tol) {
    CheckReport r;
    r.scenario = s.name;
    r.backend = b.id();
    r.op = s.op;
    r.size = inst.x.size();
    const double t = tol.value_or(default_tolerance(b));
    std::vector<Context> ctxv = inst.contexts();
    const ContextArgs ctx(ctxv);
    Runner run{s.op, inst.f, b, inst.x, &inst.seeds, ctx, {}, {}, {}, {}};
    try {
        Preparation prep = prepare(s.op, inst.f, b, inst.typical_input(), ctx);
        const std::vector<double> y = inst.f(inst.x, ctx);
        const double scale = std::max(1.0, max_abs(inst.reference));
        for (auto v : {Runner::plain, Runner::value_and, Runner::into, Runner::value_and_into}) {
            const DenseMatrix got = run.run(prep, v);
            const double e = max_abs_diff(got, inst.reference);
            r.max_abs_err = std::max(r.max_abs_err, e);
            r.max_rel_err = std::max(r.max_rel_err, e / scale);
            if (v == Runner::value_and || v == Runner::value_and_into) {
                const double ev = max_abs_diff(row_of(run.value), row_of(y));
                r.max_abs_err = std::max(r.max_abs_err, ev);
                if (ev > t) r.reason = "primal value differs from a plain evaluation";
            }
        }
        r.status = classify(r.max_abs_err, t, s, b);
    } catch (const UnsupportedOperator& e) {
        r.status = Status::skip;
        r.reason = e.what();
    } catch (const UnsupportedPrimitive& e) {
        r.status = Status::skip;
        r.reason = e.what();
    } catch (const Error& e) {
        r.status = error_status(s, b);
        r.reason = e.what();
        r.max_abs_err = INFINITY;
    }
    return r;
}

BenchmarkRecord bench(const Scenario& s, Instance& inst, const Backend& b, bool prepared, const BenchOptions& opts,
                      std::optional<double> tol) {
    BenchmarkRecord r;
    r.scenario = s.name;
    r.backend = b.id();
    r.op = s.op;
    r.size = inst.x.size();
    r.prepared = prepared;
    std::vector<Context> ctxv = inst.contexts();
    const ContextArgs ctx(ctxv);
    Runner run{s.op, inst.f, b, inst.x, &inst.seeds, ctx, {}, {}, {}, {}};
    run.size_buffers();
    const auto typical = inst.typical_input();
    try {
        std::optional<Preparation> prep;
        auto once = [&] {
            if (prepared) {
                run.timed(*prep);
            } else {
                Preparation p = prepare(s.op, inst.f, b, typical, ctx);
                run.timed(p);
            }
        };
        if (prepared) prep.emplace(prepare(s.op, inst.f, b, typical, ctx));
        for (std::size_t w = 0; w < opts.warmup; ++w) once();

        std::vector<double> times;
        times.reserve(std::max<std::size_t>(opts.max_samples, 1));
        const std::size_t a0 = allocation_count();
        const auto start = Clock::now();
        const auto budget = std::chrono::duration<double, std::milli>(opts.budget_ms);
        do {
            const auto t0 = Clock::now();
            once();
            const auto t1 = Clock::now();
            times.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count());
        } while (times.size() < opts.max_samples && Clock::now() - start < budget);
        const std::size_t a1 = allocation_count();

        r.samples = times.size();
        r.allocs = (a1 - a0 + r.samples - 1) / r.samples;
        std::sort(times.begin(), times.end());
        r.time_ns_min = times.front();
        const std::size_t k = times.size();
        r.time_ns_median = k % 2 ? times[k / 2] : 0.5 * (times[k / 2 - 1] + times[k / 2]);
        r.max_abs_err = max_abs_diff(run.timed_result(), inst.reference);
        r.status = classify(r.max_abs_err, tol.value_or(default_tolerance(b)), s, b);
    } catch (const UnsupportedOperator& e) {
        r.status = Status::skip;
        r.reason = e.what();
    } catch (const UnsupportedPrimitive& e) {
        r.status = Status::skip;
        r.reason = e.what();
    } catch (const Error& e) {
        r.status = error_status(s, b);
        r.reason = e.what();
        r.max_abs_err = INFINITY;
    }
    return r;
}

void write_csv(std::ostream& os, const std::vector<BenchmarkRecord>& records) {
    os << kCsvHeader << '\n';
    for (const BenchmarkRecord& r : records) {
        os << r.scenario << ',' << csv_field(r.backend) << ',' << operator_name(r.op) << ',' << r.size << ','
           << (r.prepared ? "true" : "false") << ',' << r.samples << ',' << format("%.0f", r.time_ns_min) << ','
           << format("%.0f", r.time_ns_median) << ',' << r.allocs << ',' << status_name(r.status) << ','
           << format("%.3e", r.max_abs_err) << '\n';
    }
}

void write_markdown(std::ostream& os, const std::vector<BenchmarkRecord>& records) {
    os << "| scenario | backend | operator | size | prepared | samples | min (ns) | median (ns) | allocs | status | "
          "max abs err |\n";
    os << "|---|---|---|---:|---|---:|---:|---:|---:|---|---:|\n";
    for (const BenchmarkRecord& r : records) {
        os << "| " << r.scenario << " | " << r.backend << " | " << operator_name(r.op) << " | " << r.size << " | "
           << (r.prepared ? "yes" : "no") << " | " << r.samples << " | " << format("%.0f", r.time_ns_min) << " | "
           << format("%.0f", r.time_ns_median) << " | " << r.allocs << " | " << status_name(r.status) << " | "
           << format("%.2e", r.max_abs_err) << " |\n";
    }
}

namespace {

std::vector<std::size_t> sizes_for(const SuiteConfig& cfg, const Scenario& s) {
    return cfg.sizes.empty() ? std::vector<std::size_t>{s.default_size} : cfg.sizes;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ConfigError("", "", "cannot open '" + path + "' for writing");
    return f;
}

}  // namespace

int run_suite(const SuiteConfig& cfg, std::ostream& log) {
    const auto scenarios = select_scenarios(cfg.scenarios);
    const auto backends = select_backends(cfg.backends);
    if (cfg.prepared.empty()) throw ConfigError("", "", "no prepared modes given");
    std::ofstream csv, md;
    if (!cfg.csv_path.empty()) csv = open_out(cfg.csv_path);
    if (!cfg.markdown_path.empty()) md = open_out(cfg.markdown_path);

    std::vector<BenchmarkRecord> records;
    for (const Scenario* s : scenarios)
        for (std::size_t n : sizes_for(cfg, *s)) {
            Instance inst = s->make(n);
            for (const Backend& b : backends)
                for (bool prepared : cfg.prepared) {
                    BenchmarkRecord r = bench(*s, inst, b, prepared, cfg.options, cfg.tolerance);
                    log << s->name << ' ' << r.backend << " n=" << r.size << (prepared ? " prepared" : " unprepared")
                        << ' ' << status_name(r.status) << " median " << format("%.0f", r.time_ns_median) << " ns";
                    if (!r.reason.empty()) log << " (" << r.reason << ')';
                    log << '\n';
                    records.push_back(std::move(r));
                }
        }
    if (csv.is_open())
        write_csv(csv, records);
    else
        write_csv(log, records);
    if (md.is_open()) write_markdown(md, records);
    const bool failed =
        std::any_of(records.begin(), records.end(), [](const BenchmarkRecord& r) { return r.status == Status::fail; });
    return failed ? 1 : 0;
}

int run_checks(const SuiteConfig& cfg, std::ostream& log) {
    const auto scenarios = select_scenarios(cfg.scenarios);
    const auto backends = select_backends(cfg.backends);
    bool failed = false;
    for (const Scenario* s : scenarios)
        for (std::size_t n : sizes_for(cfg, *s)) {
            Instance inst = s->make(n);
            for (const Backend& b : backends) {
                const CheckReport r = check(*s, inst, b, cfg.tolerance);
                failed = failed || r.status == Status::fail;
                log << status_name(r.status) << ' ' << s->name << ' ' << r.backend << " n=" << r.size
                    << " max_abs_err=" << format("%.3e", r.max_abs_err)
                    << " max_rel_err=" << format("%.3e", r.max_rel_err);
                if (!r.reason.empty()) log << " (" << r.reason << ')';
                log << '\n';
            }
        }
    return failed ? 1 : 0;
}

void write_scenario_pattern(std::ostream& os, const Scenario& s) {
    Instance inst = s.make(s.default_size);
    std::vector<Context> ctxv = inst.contexts();
    const ContextArgs ctx(ctxv);
    if (is_second_order(s.op) && inst.f.output_size() == 1)
        write_pattern(os, detect_hessian_pattern(inst.f, inst.x, ctx));
    else
        write_pattern(os, detect_jacobian_pattern(inst.f, inst.x, ctx));
}

}  // namespace adkit::harness
