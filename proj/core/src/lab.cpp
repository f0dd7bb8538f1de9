#include "fixedcost/lab.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "fixedcost/error.hpp"
#include "fixedcost/scheme_builder.hpp"
#include "json.hpp"

namespace fixedcost {

using nlohmann::json;

namespace {

constexpr std::pair<Mode, const char*> kModeNames[] = {
    {Mode::price_binomial, "price_binomial"}, {Mode::price_limit, "price_limit"},
    {Mode::converge, "converge"},             {Mode::verify_hedge, "verify_hedge"},
    {Mode::scheme, "scheme"},                 {Mode::oracle_primal, "oracle_primal"},
    {Mode::partition_check, "partition_check"}, {Mode::fixed_kappa_sweep, "fixed_kappa_sweep"},
};

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

double parse_double_cell(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\r' || text.back() == '\t')) text.remove_suffix(1);
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw InputError("report: cannot parse number '" + std::string(text) + "'");
    return v;
}

json number_or_inf(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double from_number_or_inf(const json& j) {
    if (j.is_string()) return parse_double_cell(j.get<std::string>());
    return j.get<double>();
}

json extended(ExtendedReal v) { return v.is_infinite() ? json("inf") : json(v.value()); }

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

BinomialSpec spec_for(const ExperimentConfig& c, int n, double kappa) { return BinomialSpec::make(c.s0, c.sigma, n, kappa); }

HjbGrid grid_for(const ExperimentConfig& c) {
    HjbGrid g = HjbGrid::centered(c.s0, c.sigma, c.m_max, c.nx);
    if (c.nt) g.nt = *c.nt;
    return g;
}

std::string read_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw InputError("cannot open " + file.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::filesystem::path& file, const std::string& content) {
    if (file.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(file.parent_path(), ec);
        if (ec) throw std::runtime_error("cannot create directory " + file.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
    out << content;
    if (!out) throw std::runtime_error("write failed for " + file.string());
}

}  // namespace

std::string to_string(Mode m) {
    for (const auto& [mode, name] : kModeNames)
        if (mode == m) return name;
    return "unknown";
}

Mode parse_mode(const std::string& text) {
    std::string norm = text;
    std::replace(norm.begin(), norm.end(), '-', '_');
    for (const auto& [mode, name] : kModeNames)
        if (norm == name) return mode;
    throw InputError("config: unknown mode '" + text + "'");
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw InputError("config: expected a JSON object");
    ExperimentConfig c;
    try {
        if (j.contains("mode")) c.mode = parse_mode(j["mode"].get<std::string>());
        const json market = j.value("market", json::object());
        c.s0 = market.value("s0", c.s0);
        c.sigma = market.value("sigma", c.sigma);
        c.kappa = market.value("kappa", c.kappa);
        c.payoff = j.value("payoff", c.payoff);
        c.n = j.value("n", c.n);
        c.n_list = j.value("n_list", c.n_list);
        if (j.contains("run_cap") && !j["run_cap"].is_null()) c.run_cap = j["run_cap"].get<int>();
        c.m_max = j.value("m_max", c.m_max);
        c.nx = j.value("nx", c.nx);
        if (j.contains("nt") && !j["nt"].is_null()) c.nt = j["nt"].get<int>();
        c.seed = j.value("seed", c.seed);
        c.exhaustive = j.value("exhaustive", c.exhaustive);
        c.samples = j.value("samples", c.samples);
        if (j.contains("capital") && !j["capital"].is_null()) c.capital = j["capital"].get<double>();
        c.rho = j.value("rho", c.rho);
        c.partition_csv = j.value("partition_csv", c.partition_csv);
        c.b_values = j.value("b_values", c.b_values);
        if (j.contains("hypothesis_tolerance") && !j["hypothesis_tolerance"].is_null())
            c.hypothesis_tolerance = j["hypothesis_tolerance"].get<double>();
        c.out_dir = j.value("out_dir", c.out_dir);
        c.record_runtime = j.value("record_runtime", c.record_runtime);
        c.parallel_rows = j.value("parallel_rows", c.parallel_rows);
    } catch (const json::exception& e) {
        throw InputError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& file) { return from_json(read_file(file)); }

std::string ExperimentConfig::to_json() const {
    json j;
    j["mode"] = to_string(mode);
    j["market"] = {{"s0", s0}, {"sigma", sigma}, {"kappa", kappa}};
    j["payoff"] = payoff;
    j["n"] = n;
    j["n_list"] = n_list;
    j["run_cap"] = run_cap ? json(*run_cap) : json(nullptr);
    j["m_max"] = m_max;
    j["nx"] = nx;
    j["nt"] = nt ? json(*nt) : json(nullptr);
    j["seed"] = seed;
    j["exhaustive"] = exhaustive;
    j["samples"] = samples;
    j["capital"] = capital ? json(*capital) : json(nullptr);
    j["rho"] = rho;
    j["partition_csv"] = partition_csv;
    j["b_values"] = b_values;
    j["hypothesis_tolerance"] = hypothesis_tolerance ? json(*hypothesis_tolerance) : json(nullptr);
    j["out_dir"] = out_dir;
    j["record_runtime"] = record_runtime;
    j["parallel_rows"] = parallel_rows;
    return j.dump(2);
}

void ExperimentConfig::validate() const {
    BinomialSpec::make(s0, sigma, std::max(n, 1), kappa);
    (void)Payoff::parse(payoff);
    if (n < 1) throw InputError("config: n must be >= 1");
    if (n_list.empty()) throw InputError("config: n_list must not be empty");
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        if (n_list[i] < 1) throw InputError("config: n_list entries must be >= 1");
        if (i > 0 && n_list[i] <= n_list[i - 1]) throw InputError("config: n_list must be strictly increasing");
    }
    if (run_cap && *run_cap < 1) throw InputError("config: run_cap must be >= 1");
    if (m_max < 1) throw InputError("config: m_max must be >= 1");
    if (nx < 3) throw InputError("config: nx must be >= 3");
    if (!exhaustive && samples == 0) throw InputError("config: samples must be positive");
    (void)RhoSchedule::parse(rho);
    if (b_values.empty()) throw InputError("config: b_values must not be empty");
    if (mode == Mode::partition_check && partition_csv.empty())
        throw InputError("config: partition_check needs partition_csv");
    if (!out_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        if (ec || !std::filesystem::is_directory(out_dir))
            throw InputError("config: output directory '" + out_dir + "' is not writable");
    }
}

std::vector<ConvergenceRow> run_converge(const ExperimentConfig& config) {
    const Payoff payoff = Payoff::parse(config.payoff);
    const auto limit = solve_hjb(config.s0, config.sigma, config.kappa, payoff, grid_for(config),
                                 HjbOptions{std::nullopt, false});
    std::vector<ConvergenceRow> rows(config.n_list.size());
    std::string failure;
#pragma omp parallel for schedule(dynamic) if (config.parallel_rows)
    for (std::size_t i = 0; i < config.n_list.size(); ++i) {
        const int n = config.n_list[i];
        try {
            const auto start = std::chrono::steady_clock::now();
            const auto spec = spec_for(config, n, config.kappa / n);
            const auto sol = solve_dual(spec, payoff, config.run_cap);
            ConvergenceRow& row = rows[i];
            row.n = n;
            row.kappa_over_n = spec.kappa;
            row.dual_value = sol.value;
            row.payoff_part = sol.payoff_part;
            row.cost_part = sol.cost_part;
            row.hjb_value = limit.value_at_s0;
            row.abs_gap = std::abs(sol.value - limit.value_at_s0);
            row.rel_gap = row.abs_gap / std::abs(limit.value_at_s0);
            row.runtime_ms = config.record_runtime ? elapsed_ms(start) : 0.0;
        } catch (const std::exception& e) {
#pragma omp critical
            failure = "converge: n = " + std::to_string(n) + ": " + e.what();
        }
    }
    if (!failure.empty()) throw InputError(failure);
    return rows;
}

std::vector<FixedKappaRow> run_fixed_kappa_sweep(const ExperimentConfig& config) {
    const Payoff payoff = Payoff::parse(config.payoff);
    const ExtendedReal bound = buy_and_hold_bound(config.s0, payoff);
    std::vector<FixedKappaRow> rows;
    for (int n : config.n_list) {
        const auto start = std::chrono::steady_clock::now();
        const auto spec = spec_for(config, n, config.kappa);
        const auto sol = solve_dual(spec, payoff, config.run_cap);
        FixedKappaRow row;
        row.n = n;
        row.kappa = config.kappa;
        row.dual_value = sol.value;
        row.crr_value = crr_price(spec, payoff);
        row.bound = bound;
        row.ratio = bound.is_finite() && bound.value() > 0.0 ? sol.value / bound.value() : 0.0;
        row.runtime_ms = config.record_runtime ? elapsed_ms(start) : 0.0;
        rows.push_back(row);
    }
    return rows;
}

Table to_table(const std::vector<ConvergenceRow>& rows) {
    Table t{{"n", "kappa_over_n", "dual_value", "payoff_part", "cost_part", "hjb_value", "abs_gap", "rel_gap",
             "runtime_ms"},
            {}};
    for (const auto& r : rows)
        t.rows.push_back({static_cast<double>(r.n), r.kappa_over_n, r.dual_value, r.payoff_part, r.cost_part,
                          r.hjb_value, r.abs_gap, r.rel_gap, r.runtime_ms});
    return t;
}

Table to_table(const std::vector<FixedKappaRow>& rows) {
    Table t{{"n", "kappa", "dual_value", "crr_value", "buy_and_hold_bound", "ratio", "runtime_ms"}, {}};
    for (const auto& r : rows)
        t.rows.push_back({static_cast<double>(r.n), r.kappa, r.dual_value, r.crr_value,
                          r.bound.is_infinite() ? std::numeric_limits<double>::infinity() : r.bound.value(), r.ratio,
                          r.runtime_ms});
    return t;
}

std::vector<ConvergenceRow> convergence_rows(const Table& table) {
    if (table.columns != to_table(std::vector<ConvergenceRow>{}).columns)
        throw InputError("report: table does not have the convergence columns");
    std::vector<ConvergenceRow> rows;
    for (const auto& r : table.rows)
        rows.push_back({static_cast<int>(r[0]), r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8]});
    return rows;
}

std::string emit_csv(const Table& table) {
    std::string out;
    for (std::size_t c = 0; c < table.columns.size(); ++c) out += (c ? "," : "") + table.columns[c];
    out += '\n';
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size()) throw InputError("report: row width does not match the header");
        for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + format_double(row[c]);
        out += '\n';
    }
    return out;
}

Table parse_csv(const std::string& text) {
    Table t;
    std::istringstream in(text);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (header) {
            t.columns = cells;
            header = false;
            continue;
        }
        if (cells.size() != t.columns.size()) throw InputError("report: CSV row width does not match the header");
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(parse_double_cell(c));
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string emit_json(const Table& table, const std::string& config_json) {
    json j;
    j["config"] = json::parse(config_json);
    j["columns"] = table.columns;
    j["rows"] = json::array();
    for (const auto& row : table.rows) {
        json r = json::array();
        for (double v : row) r.push_back(number_or_inf(v));
        j["rows"].push_back(r);
    }
    return j.dump(2) + "\n";
}

Table parse_json_table(const std::string& text) {
    try {
        const json j = json::parse(text);
        Table t;
        t.columns = j.at("columns").get<std::vector<std::string>>();
        for (const auto& r : j.at("rows")) {
            std::vector<double> row;
            for (const auto& v : r) row.push_back(from_number_or_inf(v));
            t.rows.push_back(std::move(row));
        }
        return t;
    } catch (const json::exception& e) {
        throw InputError(std::string("report: invalid JSON table: ") + e.what());
    }
}

std::filesystem::path emit_report(const Table& table, ReportFormat format, const std::filesystem::path& dir,
                                  const std::string& name, const std::string& config_json) {
    const auto file = dir / (name + (format == ReportFormat::csv ? ".csv" : ".json"));
    write_file(file, format == ReportFormat::csv ? emit_csv(table) : emit_json(table, config_json));
    return file;
}

std::string solution_json(const DualSolution& solution) {
    json j{{"value", solution.value},
           {"payoff_part", solution.payoff_part},
           {"cost_part", solution.cost_part},
           {"expected_interventions", solution.expected_interventions}};
    return j.dump();
}

std::string policy_json(const DualPolicy& policy) {
    json arr = json::array();
    policy.for_each([&](DualState s, RunChoice c) {
        arr.push_back({{"remaining", s.remaining}, {"disp", s.disp}, {"a", c.up}, {"b", c.down}});
    });
    return arr.dump();
}

DualPolicy policy_from_json(const std::string& text, int n) {
    DualPolicy p(n);
    try {
        for (const auto& e : json::parse(text))
            p.set({e.at("remaining").get<int>(), e.at("disp").get<int>()}, {e.at("a").get<int>(), e.at("b").get<int>()});
    } catch (const json::exception& e) {
        throw InputError(std::string("policy: invalid JSON: ") + e.what());
    }
    return p;
}

std::string verify_report_json(const VerifyReport& report) {
    json j{{"min_surplus", report.min_surplus},
           {"worst_path", report.worst_path.to_string()},
           {"paths_checked", report.paths_checked}};
    return j.dump();
}

std::string policy_field_csv(const LimitSolution& solution, int time_stride) {
    if (time_stride < 1) throw InputError("policy field: stride must be >= 1");
    if (solution.policy_field.empty()) throw InputError("policy field: solution kept no policy field");
    const auto& g = solution.grid;
    std::string out = "t,x,m\n";
    for (int k = 0; k < g.nt; k += time_stride)
        for (int i = 0; i < g.nx; ++i)
            out += format_double(static_cast<double>(k) / g.nt) + "," + format_double(g.x(i)) + "," +
                   std::to_string(solution.multiplier(k, i)) + "\n";
    return out;
}

std::vector<double> read_time_column(const std::filesystem::path& file) {
    std::istringstream in(read_file(file));
    std::vector<double> out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::string cell = line.substr(0, line.find(','));
        try {
            out.push_back(parse_double_cell(cell));
        } catch (const InputError&) {
            if (!first) throw InputError("partition csv " + file.string() + ": bad time '" + cell + "'");
        }
        first = false;
    }
    return out;
}

ExperimentOutput run_experiment(const ExperimentConfig& config) {
    config.validate();
    const Payoff payoff = Payoff::parse(config.payoff);
    ExperimentOutput out;
    json summary;
    summary["mode"] = to_string(config.mode);
    switch (config.mode) {
        case Mode::price_binomial: {
            const auto spec = spec_for(config, config.n, config.kappa);
            const auto sol = solve_dual(spec, payoff, config.run_cap);
            summary["n"] = config.n;
            summary["value"] = sol.value;
            summary["payoff_part"] = sol.payoff_part;
            summary["cost_part"] = sol.cost_part;
            summary["expected_interventions"] = sol.expected_interventions;
            summary["crr_price"] = crr_price(spec, payoff);
            summary["buy_and_hold_bound"] = extended(buy_and_hold_bound(config.s0, payoff));
            break;
        }
        case Mode::price_limit: {
            const auto grid = grid_for(config);
            const auto sol = solve_hjb(config.s0, config.sigma, config.kappa, payoff, grid, HjbOptions{std::nullopt, false});
            summary["value"] = sol.value_at_s0;
            summary["bs_price"] = bs_price(config.s0, config.sigma, payoff);
            summary["m_max"] = grid.m_max;
            summary["nx"] = grid.nx;
            summary["nt"] = grid.nt;
            summary["x_min"] = grid.x_min;
            summary["x_max"] = grid.x_max;
            break;
        }
        case Mode::converge: {
            out.table = to_table(run_converge(config));
            summary["rows"] = out.table->rows.size();
            break;
        }
        case Mode::fixed_kappa_sweep: {
            out.table = to_table(run_fixed_kappa_sweep(config));
            summary["rows"] = out.table->rows.size();
            break;
        }
        case Mode::verify_hedge: {
            const auto spec = spec_for(config, config.n, config.kappa);
            const auto sol = solve_dual(spec, payoff);
            const double x = config.capital.value_or(sol.value);
            VerifyMode mode = Exhaustive{};
            if (!config.exhaustive) mode = Sampled{config.samples, config.seed};
            const auto report = verify_tree(build_replication(spec, payoff, sol.policy), payoff, x, mode);
            summary = json::parse(verify_report_json(report));
            summary["mode"] = to_string(config.mode);
            summary["capital"] = x;
            summary["dual_value"] = sol.value;
            break;
        }
        case Mode::scheme: {
            const auto spec = spec_for(config, config.n, config.kappa);
            const auto rho = RhoSchedule::parse(config.rho);
            const auto sol = eval_scheme(spec, payoff, rho);
            summary["n"] = config.n;
            summary["value"] = sol.value;
            summary["payoff_part"] = sol.payoff_part;
            summary["cost_part"] = sol.cost_part;
            summary["expected_interventions"] = sol.expected_interventions;
            summary["interventions_per_step"] = sol.expected_interventions / config.n;
            summary["cost_asymptote"] = scheme_cost_asymptote(rho);
            summary["dual_value"] = solve_dual(spec, payoff, config.run_cap).value;
            json lambdas = json::array();
            for (const auto& plan : plan_scheme(rho, config.n))
                lambdas.push_back({{"rho", plan.rho}, {"lambda", plan.lambda}, {"realized_lambda", plan.realized_lambda}});
            summary["intervals"] = lambdas;
            break;
        }
        case Mode::oracle_primal: {
            const auto spec = spec_for(config, config.n, config.kappa);
            const auto primal = brute_force_primal(spec, payoff);
            const auto dual = solve_dual(spec, payoff);
            summary["n"] = config.n;
            summary["primal_value"] = primal.value;
            summary["dual_value"] = dual.value;
            summary["gap"] = primal.value - dual.value;
            summary["pattern"] = primal.pattern;
            json holdings = json::object();
            for (const auto& [node, h] : primal.holdings) holdings[node.empty() ? "root" : node] = h;
            summary["holdings"] = holdings;
            break;
        }
        case Mode::partition_check: {
            const auto part = DeterministicPartition::from_times(read_time_column(config.partition_csv), config.n);
            const auto check = partition_lower_bound_check(part, TabulatedFunction{config.b_values},
                                                           config.hypothesis_tolerance.value_or(0.0));
            summary["n"] = config.n;
            summary["lhs"] = check.lhs;
            summary["inverse_step_integral"] = check.inverse_step_integral;
            summary["rhs"] = check.rhs;
            summary["slack"] = check.slack;
            summary["hypothesis_holds"] = check.hypothesis_holds;
            summary["hypothesis_deviation"] = check.hypothesis_deviation;
            summary["hypothesis_tolerance"] = check.hypothesis_tolerance;
            break;
        }
    }
    out.summary_json = summary.dump(2) + "\n";
    return out;
}

void persist(const ExperimentOutput& output, const ExperimentConfig& config) {
    if (config.out_dir.empty()) return;
    const std::filesystem::path dir(config.out_dir);
    const std::string name = to_string(config.mode);
    write_file(dir / (name + ".config.json"), config.to_json() + "\n");
    write_file(dir / (name + ".json"), output.summary_json);
    if (output.table) {
        emit_report(*output.table, ReportFormat::csv, dir, name, config.to_json());
        emit_report(*output.table, ReportFormat::json, dir, name + ".table", config.to_json());
    }
}

}  // namespace fixedcost
