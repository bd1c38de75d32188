#pragma once

// Scenario-based correctness checks and prepared/unprepared benchmarks.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adkit/adkit.hpp"

namespace adkit::harness {

enum class Status { pass, fail, skip, xfail };
std::string_view status_name(Status s) noexcept;

/// One concrete problem: function, evaluation point and reference derivative.
///
/// The reference is shaped like the operator's result: one row per seed for
/// pushforward/pullback/hvp, a single row for derivative/gradient/
/// second_derivative, the full matrix for jacobian/hessian.
struct Instance {
    Function f;
    std::vector<double> x;
    std::vector<double> prep_x;  // typical input for prepare(); empty means x
    Batch seeds;
    std::vector<std::vector<double>> context_data;
    std::vector<Context::Kind> context_kinds;
    DenseMatrix reference;

    std::vector<Context> contexts();
    std::span<const double> typical_input() const { return prep_x.empty() ? x : prep_x; }
};

struct Scenario {
    std::string name;
    Operator op;
    std::string description;
    std::size_t default_size = 10;
    bool in_all = true;  // selected by "all"
    std::function<Instance(std::size_t n)> make;
    /// Backends for which a wrong result is the documented outcome.
    std::function<bool(const Backend&)> expected_failure;
};

const std::vector<Scenario>& builtin_scenarios();
/// Throws ConfigError for unknown names.
const Scenario& find_scenario(std::string_view name);
/// "all" or a comma-separated list of names.
std::vector<const Scenario*> select_scenarios(std::string_view list);
/// Comma-separated backend ids; commas inside parentheses do not split.
std::vector<Backend> select_backends(std::string_view list);

/// Default tolerance: 1e-4 for backends involving finite differences, else 1e-8.
double default_tolerance(const Backend& b);

struct CheckReport {
    std::string scenario;
    std::string backend;
    Operator op{};
    std::size_t size = 0;
    Status status = Status::pass;
    double max_abs_err = 0.0;
    double max_rel_err = 0.0;
    std::string reason;
};

/// Runs the four variants of the scenario operator and compares each with the
/// reference. Failures are reported, never thrown.
CheckReport check(const Scenario& s, Instance& inst, const Backend& b, std::optional<double> tol = std::nullopt);

struct BenchOptions {
    std::size_t max_samples = 100;
    double budget_ms = 1000.0;
    std::size_t warmup = 2;
};

struct BenchmarkRecord {
    std::string scenario;
    std::string backend;
    Operator op{};
    std::size_t size = 0;
    bool prepared = true;
    std::size_t samples = 0;
    double time_ns_min = 0.0;
    double time_ns_median = 0.0;
    std::size_t allocs = 0;  // per call, rounded up
    Status status = Status::pass;
    double max_abs_err = 0.0;
    std::string reason;
};

/// Times the in-place variant. prepared=false times prepare() plus the call.
BenchmarkRecord bench(const Scenario& s, Instance& inst, const Backend& b, bool prepared, const BenchOptions& opts,
                      std::optional<double> tol = std::nullopt);

struct SuiteConfig {
    std::string scenarios = "all";
    std::string backends;
    std::vector<std::size_t> sizes;  // empty: each scenario's default size
    std::vector<bool> prepared{true, false};
    std::string csv_path;       // empty: CSV to the log stream
    std::string markdown_path;  // optional
    BenchOptions options;
    std::optional<double> tolerance;
};

/// Cross product of scenarios x backends x sizes x prepared. Returns the
/// process exit status: 0 when no cell failed, 1 otherwise. Throws ConfigError.
int run_suite(const SuiteConfig& cfg, std::ostream& log);
/// Correctness only (all four variants per cell); same exit convention.
int run_checks(const SuiteConfig& cfg, std::ostream& log);

inline constexpr const char* kCsvHeader =
    "scenario,backend,operator,size,prepared,samples,time_ns_min,time_ns_median,allocs,status,max_abs_err";
void write_csv(std::ostream& os, const std::vector<BenchmarkRecord>& records);
void write_markdown(std::ostream& os, const std::vector<BenchmarkRecord>& records);

/// Writes the scenario's Jacobian (or Hessian, for second-order operators)
/// pattern at its default size in the sparse text format.
void write_scenario_pattern(std::ostream& os, const Scenario& s);

/// Global operator new calls since process start.
std::size_t allocation_count() noexcept;

}  // namespace adkit::harness
