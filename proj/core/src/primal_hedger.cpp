#include "fixedcost/primal_hedger.hpp"

#include <cmath>
#include <limits>

#include "fixedcost/error.hpp"

namespace fixedcost {

const StopNode& ReplicationTree::node(DualState s) const {
    if (!has_node(s)) throw InputError("replication tree: no node at " + s.to_string());
    return *nodes_[s];
}

bool ReplicationTree::has_node(DualState s) const { return nodes_.contains(s) && nodes_[s].has_value(); }

ReplicationTree build_replication(const BinomialSpec& spec, const Payoff& payoff, const DualPolicy& policy) {
    const auto reach = reachable_states(spec, policy);
    const auto values = policy_values(spec, payoff, policy);
    const int n = spec.n;
    StateGrid<std::optional<StopNode>> nodes(n);
    for (int r = 0; r <= n; ++r) {
        for (int d = -(n - r); d <= n - r; ++d) {
            const DualState s{r, d};
            if (!reach[s]) continue;
            StopNode node;
            node.state = s;
            node.price = spec.price_at(d);
            node.value = values[s];
            node.terminal = r == 0;
            if (!node.terminal) {
                node.choice = policy.at(s);
                node.up_child = {r - node.choice.up, d + node.choice.up};
                node.down_child = {r - node.choice.down, d - node.choice.down};
                node.up_total = values[node.up_child] + (node.up_child.remaining > 0 ? spec.kappa : 0.0);
                node.down_total = values[node.down_child] + (node.down_child.remaining > 0 ? spec.kappa : 0.0);
                const double s_up = spec.price_at(node.up_child.disp);
                const double s_dn = spec.price_at(node.down_child.disp);
                node.delta = (node.up_total - node.down_total) / (s_up - s_dn);
            }
            nodes[s] = node;
        }
    }
    return ReplicationTree(spec, std::move(nodes));
}

double HedgeLedger::recompute_gains(const BinomialSpec& spec) const {
    const int n = path.size();
    std::vector<int> disp(static_cast<std::size_t>(n) + 1, 0);
    for (int t = 0; t < n; ++t) disp[static_cast<std::size_t>(t) + 1] = disp[static_cast<std::size_t>(t)] + path.steps[static_cast<std::size_t>(t)];
    double g = 0.0;
    int charged = 0;
    for (std::size_t i = 0; i < interventions.size(); ++i) {
        const int from = interventions[i].time;
        const int to = i + 1 < interventions.size() ? interventions[i + 1].time : n;
        g += interventions[i].holding *
             (spec.price_at(disp[static_cast<std::size_t>(to)]) - spec.price_at(disp[static_cast<std::size_t>(from)]));
        if (interventions[i].charged) ++charged;
    }
    return g - spec.kappa * charged;
}

namespace {

// Prices s0 u^d for d in [-n, n], index d + n.
std::vector<double> price_table(const BinomialSpec& spec) {
    std::vector<double> t(static_cast<std::size_t>(2 * spec.n + 1));
    for (int d = -spec.n; d <= spec.n; ++d) t[static_cast<std::size_t>(d + spec.n)] = spec.price_at(d);
    return t;
}

struct PathOutcome {
    double surplus;
    double gains;
};

// Allocation-free core of run_hedge_on_path, used by the verifier.
template <class StepFn, class OnTrade>
PathOutcome hedge_core(const ReplicationTree& tree, const Payoff& payoff, const std::vector<double>& prices,
                       double x, StepFn step_at, OnTrade on_trade) {
    const BinomialSpec& spec = tree.spec();
    const int n = spec.n;
    const StopNode* node = &tree.root();
    double holding = node->delta;
    on_trade(0, holding, false);
    int disp = 0;
    int stop_disp = 0;
    double gains = 0.0;
    for (int t = 1; t <= n; ++t) {
        const int prev = disp;
        disp += step_at(t - 1);
        gains += holding * (prices[static_cast<std::size_t>(disp + n)] - prices[static_cast<std::size_t>(prev + n)]);
        if (node->terminal) continue;
        const int moved = disp - stop_disp;
        const bool hit_up = moved == node->choice.up;
        const bool hit_down = moved == -node->choice.down;
        if (!hit_up && !hit_down) continue;
        if (t == n) break;  // reached at the horizon: no trade, nothing charged
        node = &tree.node(hit_up ? node->up_child : node->down_child);
        if (node->terminal) throw std::logic_error("hedge: terminal stop reached before the horizon");
        stop_disp = disp;
        holding = node->delta;
        gains -= spec.kappa;
        on_trade(t, holding, true);
    }
    const double f = payoff(prices[static_cast<std::size_t>(disp + n)]);
    return {x + gains - f, gains};
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Word `w` of the sampled path `index`; counter-based so results do not depend on threading.
std::uint64_t sample_bits(std::uint64_t seed, std::uint64_t index, int word) {
    return splitmix64(splitmix64(seed ^ splitmix64(index)) + static_cast<std::uint64_t>(word));
}

}  // namespace

HedgeLedger run_hedge_on_path(const ReplicationTree& tree, const Payoff& payoff, const PathWord& path,
                              std::optional<double> initial_capital) {
    const BinomialSpec& spec = tree.spec();
    if (path.size() != spec.n)
        throw InputError("hedge: path length " + std::to_string(path.size()) + " != n = " + std::to_string(spec.n));
    HedgeLedger ledger;
    ledger.path = path;
    ledger.initial_capital = initial_capital.value_or(tree.root().value);
    const auto prices = price_table(spec);
    auto out = hedge_core(
        tree, payoff, prices, ledger.initial_capital,
        [&](int i) { return static_cast<int>(path.steps[static_cast<std::size_t>(i)]); },
        [&](int t, double h, bool charged) {
            ledger.interventions.push_back({t, h, charged});
            if (charged) ledger.charges += spec.kappa;
        });
    ledger.gains = out.gains;
    ledger.surplus = out.surplus;
    ledger.terminal_price = terminal_price(spec, path);
    ledger.payoff = payoff(ledger.terminal_price);
    return ledger;
}

double expected_trading_gains(const ReplicationTree& tree) {
    const BinomialSpec& spec = tree.spec();
    const int n = spec.n;
    StateGrid<double> g(n, 0.0);
    for (int r = 1; r <= n; ++r)
        for (int d = -(n - r); d <= n - r; ++d) {
            const DualState s{r, d};
            if (!tree.has_node(s)) continue;
            const StopNode& node = tree.node(s);
            const double p = martingale_prob(spec, node.choice);
            const double s_up = spec.price_at(node.up_child.disp);
            const double s_dn = spec.price_at(node.down_child.disp);
            g[s] = p * (node.delta * (s_up - node.price) + g[node.up_child]) +
                   (1.0 - p) * (node.delta * (s_dn - node.price) + g[node.down_child]);
        }
    return g[{n, 0}];
}

VerifyReport verify_tree(const ReplicationTree& tree, const Payoff& payoff, double x, VerifyMode mode) {
    const BinomialSpec& spec = tree.spec();
    const int n = spec.n;
    const auto prices = price_table(spec);
    const bool exhaustive = std::holds_alternative<Exhaustive>(mode);
    if (exhaustive && n > kMaxExhaustiveSteps)
        throw InputError("verify: exhaustive mode supports n <= " + std::to_string(kMaxExhaustiveSteps) +
                         "; use sampled mode for n = " + std::to_string(n));
    const std::uint64_t total = exhaustive ? (std::uint64_t{1} << n) : std::get<Sampled>(mode).count;
    const std::uint64_t seed = exhaustive ? 0 : std::get<Sampled>(mode).seed;

    auto bit_of = [&](std::uint64_t index, int i) -> int {
        if (exhaustive) return ((index >> i) & 1U) ? 1 : -1;
        return ((sample_bits(seed, index, i / 64) >> (i % 64)) & 1U) ? 1 : -1;
    };

    double best = std::numeric_limits<double>::infinity();
    std::uint64_t best_index = 0;
#pragma omp parallel
    {
        double local = std::numeric_limits<double>::infinity();
        std::uint64_t local_index = 0;
#pragma omp for schedule(static)
        for (std::int64_t k = 0; k < static_cast<std::int64_t>(total); ++k) {
            const auto index = static_cast<std::uint64_t>(k);
            auto out = hedge_core(tree, payoff, prices, x, [&](int i) { return bit_of(index, i); },
                                  [](int, double, bool) {});
            if (out.surplus < local || (out.surplus == local && index < local_index)) {
                local = out.surplus;
                local_index = index;
            }
        }
#pragma omp critical
        {
            if (local < best || (local == best && local_index < best_index)) {
                best = local;
                best_index = local_index;
            }
        }
    }

    VerifyReport report;
    report.min_surplus = best;
    report.paths_checked = total;
    report.worst_path.steps.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) report.worst_path.steps[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(bit_of(best_index, i));
    return report;
}

VerifyReport verify_superreplication(const BinomialSpec& spec, const Payoff& payoff, double x, VerifyMode mode) {
    spec.validate();
    if (std::holds_alternative<Exhaustive>(mode) && spec.n > kMaxExhaustiveSteps)
        throw InputError("verify: exhaustive mode supports n <= " + std::to_string(kMaxExhaustiveSteps) +
                         "; use sampled mode for n = " + std::to_string(spec.n));
    if (const auto* s = std::get_if<Sampled>(&mode); s && s->count == 0)
        throw InputError("verify: sampled mode needs a positive path count");
    const auto sol = solve_dual(spec, payoff);
    return verify_tree(build_replication(spec, payoff, sol.policy), payoff, x, mode);
}

}  // namespace fixedcost
