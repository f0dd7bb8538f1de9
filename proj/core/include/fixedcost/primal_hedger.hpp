#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fixedcost/dual_pricer.hpp"
#include "fixedcost/market.hpp"
#include "fixedcost/payoff.hpp"

namespace fixedcost {

/// One stop of the replication tree. Non-terminal nodes hold the replicating delta
/// over the span to the next stop; child totals include the kappa charged on arrival.
struct StopNode {
    DualState state;
    double price = 0.0;
    double value = 0.0;  ///< capital required at this stop, after any charge on arrival
    bool terminal = false;
    RunChoice choice{};
    double delta = 0.0;
    double up_total = 0.0;    ///< child value + kappa if the up-stop is interior
    double down_total = 0.0;  ///< child value + kappa if the down-stop is interior
    DualState up_child{};
    DualState down_child{};
};

/// Stopped binomial tree of a policy, stored as a DAG keyed by DualState.
class ReplicationTree {
public:
    ReplicationTree() = default;
    ReplicationTree(BinomialSpec spec, StateGrid<std::optional<StopNode>> nodes)
        : spec_(spec), nodes_(std::move(nodes)) {}

    [[nodiscard]] const BinomialSpec& spec() const { return spec_; }
    [[nodiscard]] const StopNode& root() const { return node({spec_.n, 0}); }
    [[nodiscard]] const StopNode& node(DualState s) const;
    [[nodiscard]] bool has_node(DualState s) const;

private:
    BinomialSpec spec_;
    StateGrid<std::optional<StopNode>> nodes_;
};

struct Intervention {
    int time = 0;          ///< grid index in [0, n)
    double holding = 0.0;  ///< new position after the trade
    bool charged = false;  ///< false only for the free trade at time 0
};

/// Per-path record of the level-passage hedge.
struct HedgeLedger {
    PathWord path;
    std::vector<Intervention> interventions;
    double gains = 0.0;    ///< trading gains net of kappa charges
    double charges = 0.0;  ///< kappa * number of charged interventions
    double terminal_price = 0.0;
    double payoff = 0.0;
    double initial_capital = 0.0;
    double surplus = 0.0;  ///< initial_capital + gains - payoff

    /// Gains recomputed from the intervention list and the path.
    [[nodiscard]] double recompute_gains(const BinomialSpec& spec) const;
};

struct VerifyReport {
    double min_surplus = 0.0;
    PathWord worst_path;
    std::uint64_t paths_checked = 0;
};

struct Exhaustive {};
struct Sampled {
    std::uint64_t count = 0;
    std::uint64_t seed = 0;
};
using VerifyMode = std::variant<Exhaustive, Sampled>;

inline constexpr int kMaxExhaustiveSteps = 22;
inline constexpr int kMaxBruteForceSteps = 3;

/// Replication deltas on the stopped tree: delta = (V+ - V-) / (s u^a - s d^b).
ReplicationTree build_replication(const BinomialSpec& spec, const Payoff& payoff, const DualPolicy& policy);

/// Runs the truncated level-passage strategy along one path. From each stop with choice (a, b)
/// the position is rebalanced when the displacement since the stop first reaches +a or -b;
/// a level reached only at the horizon triggers no trade. initial_capital defaults to the root value.
HedgeLedger run_hedge_on_path(const ReplicationTree& tree, const Payoff& payoff, const PathWord& path,
                              std::optional<double> initial_capital = std::nullopt);

/// Q-expectation of the frictionless trading gains sum delta * (S_next - S_stop) over the tree.
double expected_trading_gains(const ReplicationTree& tree);

/// Minimum surplus over all (or sampled) paths of the optimal dual policy's hedge with capital x.
VerifyReport verify_superreplication(const BinomialSpec& spec, const Payoff& payoff, double x, VerifyMode mode);
/// Same, for a prebuilt tree.
VerifyReport verify_tree(const ReplicationTree& tree, const Payoff& payoff, double x, VerifyMode mode);

/// Brute-force super-replication price over every adapted intervention pattern (n <= 3).
struct PrimalOracleResult {
    double value = 0.0;
    /// Interior intervention nodes of the optimal pattern, as path prefixes ("+", "-+", ...).
    std::vector<std::string> pattern;
    /// Holdings of the optimal strategy keyed by node prefix ("" is the root).
    std::vector<std::pair<std::string, double>> holdings;
};
PrimalOracleResult brute_force_primal(const BinomialSpec& spec, const Payoff& payoff);

}  // namespace fixedcost
