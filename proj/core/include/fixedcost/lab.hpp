#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fixedcost/dual_pricer.hpp"
#include "fixedcost/limit_solver.hpp"
#include "fixedcost/primal_hedger.hpp"

namespace fixedcost {

enum class Mode {
    price_binomial,
    price_limit,
    converge,
    verify_hedge,
    scheme,
    oracle_primal,
    partition_check,
    fixed_kappa_sweep,
};

std::string to_string(Mode m);
Mode parse_mode(const std::string& text);

/// One experiment, ingested from a single JSON document. Every field has an explicit default
/// and the full resolved config is echoed next to the results.
struct ExperimentConfig {
    Mode mode = Mode::price_binomial;

    double s0 = 100.0;
    double sigma = 0.2;
    double kappa = 0.5;
    std::string payoff = "call:100";

    int n = 16;
    std::vector<int> n_list{16, 32, 64, 128};
    std::optional<int> run_cap;

    int m_max = 16;
    int nx = 801;
    std::optional<int> nt;

    std::uint64_t seed = 0;
    bool exhaustive = true;
    std::uint64_t samples = 100000;
    std::optional<double> capital;

    std::string rho = "0:1";

    std::string partition_csv;
    std::vector<double> b_values{1.0};
    std::optional<double> hypothesis_tolerance;

    std::string out_dir;
    bool record_runtime = true;
    bool parallel_rows = false;

    static ExperimentConfig from_json(const std::string& text);
    static ExperimentConfig load(const std::filesystem::path& file);
    [[nodiscard]] std::string to_json() const;
    /// Throws InputError on invalid combinations (n_list not strictly increasing, bad payoff, ...).
    void validate() const;
};

struct ConvergenceRow {
    int n = 0;
    double kappa_over_n = 0.0;
    double dual_value = 0.0;
    double payoff_part = 0.0;
    double cost_part = 0.0;
    double hjb_value = 0.0;
    double abs_gap = 0.0;
    double rel_gap = 0.0;
    double runtime_ms = 0.0;
};

struct FixedKappaRow {
    int n = 0;
    double kappa = 0.0;
    double dual_value = 0.0;
    double crr_value = 0.0;
    ExtendedReal bound = 0.0;
    double ratio = 0.0;  ///< dual_value / bound, 0 when the bound is infinite
    double runtime_ms = 0.0;
};

/// Numeric table with a fixed column order; +inf cells round-trip as "inf".
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    friend bool operator==(const Table&, const Table&) = default;
};

/// solve_dual at kappa / n for every n in the list against one HJB reference.
std::vector<ConvergenceRow> run_converge(const ExperimentConfig& config);
/// solve_dual at fixed kappa for every n with the buy-and-hold bound alongside.
std::vector<FixedKappaRow> run_fixed_kappa_sweep(const ExperimentConfig& config);

Table to_table(const std::vector<ConvergenceRow>& rows);
Table to_table(const std::vector<FixedKappaRow>& rows);
std::vector<ConvergenceRow> convergence_rows(const Table& table);

enum class ReportFormat { csv, json };

std::string emit_csv(const Table& table);
Table parse_csv(const std::string& text);
/// {"config": <config>, "columns": [...], "rows": [[...], ...]}
std::string emit_json(const Table& table, const std::string& config_json = "{}");
Table parse_json_table(const std::string& text);
/// Writes <dir>/<name>.csv or .json; IO failures raise std::runtime_error naming the path.
std::filesystem::path emit_report(const Table& table, ReportFormat format, const std::filesystem::path& dir,
                                  const std::string& name, const std::string& config_json = "{}");

std::string solution_json(const DualSolution& solution);
/// JSON array of {remaining, disp, a, b}.
std::string policy_json(const DualPolicy& policy);
DualPolicy policy_from_json(const std::string& text, int n);
std::string verify_report_json(const VerifyReport& report);
/// CSV t,x,m of the multiplier field, every `time_stride`-th step.
std::string policy_field_csv(const LimitSolution& solution, int time_stride = 1);

/// Reads one time per line (first column of a CSV, '#' comments and a non-numeric header skipped).
std::vector<double> read_time_column(const std::filesystem::path& file);

struct ExperimentOutput {
    std::string summary_json;  ///< single JSON document describing the result
    std::optional<Table> table;
};

/// Dispatches on config.mode; files are written only by persist().
ExperimentOutput run_experiment(const ExperimentConfig& config);
/// Writes <out>/<mode>.json, <out>/<mode>.csv (if tabular) and <out>/<mode>.config.json.
void persist(const ExperimentOutput& output, const ExperimentConfig& config);

}  // namespace fixedcost
