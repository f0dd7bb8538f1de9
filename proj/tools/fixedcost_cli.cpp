#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fixedcost/error.hpp"
#include "fixedcost/lab.hpp"
#include "json.hpp"

namespace {

using namespace fixedcost;

struct Flags {
    std::optional<std::string> config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;

    std::optional<double> s0, sigma, kappa;
    std::optional<std::string> payoff;
    std::optional<int> n;
    std::optional<std::vector<int>> n_list;
    std::optional<int> run_cap;
    std::optional<int> m_max, nx, nt;
    bool exhaustive = false;
    std::optional<std::uint64_t> samples;
    std::optional<double> capital;
    std::optional<std::string> rho;
    std::optional<std::string> partition;
    std::optional<std::vector<double>> b_values;
    std::optional<double> hypothesis_tolerance;
    bool parallel_rows = false;
    bool no_runtime = false;
    std::optional<std::string> policy_out;
    int time_stride = 1;
};

void add_market(CLI::App* cmd, Flags& f) {
    cmd->add_option("--s0", f.s0, "Initial price");
    cmd->add_option("--sigma", f.sigma, "Volatility over the horizon");
    cmd->add_option("--kappa", f.kappa, "Fixed cost per trade");
    cmd->add_option("--payoff", f.payoff, "call:K | put:K | straddle:K | power:p[,cap] | pwl:x,s;... | identity");
}

void add_grid(CLI::App* cmd, Flags& f) {
    cmd->add_option("--mmax", f.m_max, "Largest volatility multiplier");
    cmd->add_option("--nx", f.nx, "Log-price grid points");
    cmd->add_option("--nt", f.nt, "Time steps (default: smallest stable)");
}

ExperimentConfig resolve(Mode mode, const Flags& f) {
    ExperimentConfig c = f.config ? ExperimentConfig::load(*f.config) : ExperimentConfig{};
    c.mode = mode;
    if (f.out) c.out_dir = *f.out;
    if (f.seed) c.seed = *f.seed;
    if (f.s0) c.s0 = *f.s0;
    if (f.sigma) c.sigma = *f.sigma;
    if (f.kappa) c.kappa = *f.kappa;
    if (f.payoff) c.payoff = *f.payoff;
    if (f.n) c.n = *f.n;
    if (f.n_list) c.n_list = *f.n_list;
    if (f.run_cap) c.run_cap = *f.run_cap;
    if (f.m_max) c.m_max = *f.m_max;
    if (f.nx) c.nx = *f.nx;
    if (f.nt) c.nt = *f.nt;
    if (f.samples) c.exhaustive = false, c.samples = *f.samples;
    if (f.exhaustive) c.exhaustive = true;
    if (f.capital) c.capital = *f.capital;
    if (f.rho) c.rho = *f.rho;
    if (f.partition) c.partition_csv = *f.partition;
    if (f.b_values) c.b_values = *f.b_values;
    if (f.hypothesis_tolerance) c.hypothesis_tolerance = *f.hypothesis_tolerance;
    if (f.parallel_rows) c.parallel_rows = true;
    if (f.no_runtime) c.record_runtime = false;
    c.validate();
    return c;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
}

void write_policy_output(const ExperimentConfig& c, const Flags& f) {
    if (!f.policy_out) return;
    const Payoff payoff = Payoff::parse(c.payoff);
    if (c.mode == Mode::price_binomial) {
        const auto sol = solve_dual(BinomialSpec::make(c.s0, c.sigma, c.n, c.kappa), payoff, c.run_cap);
        write_text(*f.policy_out, policy_json(sol.policy) + "\n");
    } else if (c.mode == Mode::price_limit) {
        HjbGrid grid = HjbGrid::centered(c.s0, c.sigma, c.m_max, c.nx);
        if (c.nt) grid.nt = *c.nt;
        const auto sol = solve_hjb(c.s0, c.sigma, c.kappa, payoff, grid);
        write_text(*f.policy_out, policy_field_csv(sol, f.time_stride));
    }
}

void print_error(const char* kind, const std::string& message) {
    std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fixed-cost super-replication lab"};
    app.require_subcommand(1);
    Flags f;
    app.add_option("--config", f.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
    app.add_option("--out", f.out, "Output directory for reports");
    app.add_option("--seed", f.seed, "Random seed");

    struct Command {
        const char* name;
        Mode mode;
        const char* help;
    };
    const Command commands[] = {
        {"price-binomial", Mode::price_binomial, "Dual price on the binomial tree"},
        {"price-limit", Mode::price_limit, "Continuous-time limit price from the HJB equation"},
        {"converge", Mode::converge, "Binomial prices at kappa/n against the limit"},
        {"verify-hedge", Mode::verify_hedge, "Pathwise check of the replicating strategy"},
        {"scheme", Mode::scheme, "Evaluate a volatility-multiplier schedule on the tree"},
        {"oracle-primal", Mode::oracle_primal, "Brute-force primal price (n <= 3)"},
        {"partition-check", Mode::partition_check, "Intervention count lower bound for a partition"},
        {"fixed-kappa-sweep", Mode::fixed_kappa_sweep, "Binomial prices at fixed kappa"},
    };
    std::vector<std::pair<CLI::App*, Mode>> subs;
    for (const auto& cmd : commands) {
        CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
        sub->fallthrough();
        add_market(sub, f);
        subs.emplace_back(sub, cmd.mode);
        switch (cmd.mode) {
            case Mode::price_binomial:
                sub->add_option("--n", f.n, "Time steps");
                sub->add_option("--run-cap", f.run_cap, "Largest run length");
                sub->add_option("--policy-out", f.policy_out, "Write the optimal policy as JSON");
                break;
            case Mode::price_limit:
                add_grid(sub, f);
                sub->add_option("--policy-out", f.policy_out, "Write the multiplier field as CSV (t,x,m)");
                sub->add_option("--time-stride", f.time_stride, "Keep every k-th time step in the field");
                break;
            case Mode::converge:
                add_grid(sub, f);
                sub->add_option("--n-list", f.n_list, "Increasing list of step counts")->delimiter(',');
                sub->add_option("--run-cap", f.run_cap, "Largest run length");
                sub->add_flag("--parallel-rows", f.parallel_rows, "Compute rows in parallel");
                sub->add_flag("--no-runtime", f.no_runtime, "Write runtime_ms as 0");
                break;
            case Mode::fixed_kappa_sweep:
                sub->add_option("--n-list", f.n_list, "Increasing list of step counts")->delimiter(',');
                sub->add_option("--run-cap", f.run_cap, "Largest run length");
                sub->add_flag("--no-runtime", f.no_runtime, "Write runtime_ms as 0");
                break;
            case Mode::verify_hedge:
                sub->add_option("--n", f.n, "Time steps");
                sub->add_flag("--exhaustive", f.exhaustive, "Check all 2^n paths");
                sub->add_option("--samples", f.samples, "Check this many sampled paths instead");
                sub->add_option("--capital", f.capital, "Initial capital (default: dual price)");
                break;
            case Mode::scheme:
                sub->add_option("--n", f.n, "Time steps");
                sub->add_option("--rho", f.rho, "Schedule t0:rho0,t1:rho1,...");
                sub->add_option("--run-cap", f.run_cap, "Largest run length for the dual reference");
                break;
            case Mode::oracle_primal:
                sub->add_option("--n", f.n, "Time steps (<= 3)");
                break;
            case Mode::partition_check:
                sub->add_option("--n", f.n, "Grid resolution");
                sub->add_option("--partition", f.partition, "CSV of partition times")->check(CLI::ExistingFile);
                sub->add_option("--b", f.b_values, "Step profile b on a uniform grid")->delimiter(',');
                sub->add_option("--hypothesis-tol", f.hypothesis_tolerance, "Tolerance for the profile check");
                break;
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("validation", e.what());
        return 1;
    }

    try {
        Mode mode{};
        for (const auto& [sub, m] : subs)
            if (sub->parsed()) mode = m;
        const ExperimentConfig config = resolve(mode, f);
        const ExperimentOutput output = run_experiment(config);
        persist(output, config);
        write_policy_output(config, f);
        std::cout << (output.table ? emit_csv(*output.table) : output.summary_json);
        return 0;
    } catch (const InputError& e) {
        print_error("validation", e.what());
        return 1;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 2;
    }
}
