#pragma once

#include <compare>
#include <optional>
#include <string>
#include <vector>

#include "fixedcost/market.hpp"
#include "fixedcost/payoff.hpp"

namespace fixedcost {

/// A stop of the dual stopping system: `remaining` lattice steps to the horizon,
/// price s0 * u^disp.
struct DualState {
    int remaining = 0;
    int disp = 0;

    friend constexpr auto operator<=>(const DualState&, const DualState&) = default;
    [[nodiscard]] std::string to_string() const;
};

/// Run lengths to the next stop: `up` consecutive up-moves or `down` consecutive down-moves.
struct RunChoice {
    int up = 1;
    int down = 1;

    friend constexpr bool operator==(const RunChoice&, const RunChoice&) = default;
};

/// Dense storage over the (remaining, disp) lattice of an n-step model:
/// remaining in [0, n], |disp| <= n - remaining.
template <class T>
class StateGrid {
public:
    StateGrid() = default;
    explicit StateGrid(int n, const T& fill = T{}) : n_(n), offsets_(static_cast<std::size_t>(n) + 2) {
        std::size_t total = 0;
        for (int r = 0; r <= n; ++r) {
            offsets_[static_cast<std::size_t>(r)] = total;
            total += static_cast<std::size_t>(2 * (n - r) + 1);
        }
        offsets_[static_cast<std::size_t>(n) + 1] = total;
        cells_.assign(total, fill);
    }

    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] bool contains(DualState s) const {
        return s.remaining >= 0 && s.remaining <= n_ && s.disp >= -(n_ - s.remaining) && s.disp <= n_ - s.remaining;
    }
    T& operator[](DualState s) { return cells_[index(s)]; }
    const T& operator[](DualState s) const { return cells_[index(s)]; }

private:
    [[nodiscard]] std::size_t index(DualState s) const {
        return offsets_[static_cast<std::size_t>(s.remaining)] +
               static_cast<std::size_t>(s.disp + (n_ - s.remaining));
    }

    int n_ = 0;
    std::vector<std::size_t> offsets_;
    std::vector<T> cells_;
};

/// Markov encoding of a monotone-run stopping system: one RunChoice per non-terminal stop.
class DualPolicy {
public:
    DualPolicy() = default;
    explicit DualPolicy(int n) : choices_(n) {}

    /// a = b = 1 at every non-terminal state.
    static DualPolicy finest(int n);
    /// Same choice at every state, truncated to the remaining steps.
    static DualPolicy uniform(int n, int run_length);

    [[nodiscard]] int n() const { return choices_.n(); }
    void set(DualState s, RunChoice c);
    void erase(DualState s);
    [[nodiscard]] const RunChoice* find(DualState s) const;
    /// Throws InputError naming the state when no choice is stored.
    [[nodiscard]] const RunChoice& at(DualState s) const;

    /// Visits every stored (state, choice) in order of increasing remaining, then disp.
    template <class F>
    void for_each(F&& f) const {
        for (int r = 1; r <= n(); ++r)
            for (int d = -(n() - r); d <= n() - r; ++d)
                if (const auto& c = choices_[DualState{r, d}]) f(DualState{r, d}, *c);
    }

    friend bool operator==(const DualPolicy& a, const DualPolicy& b);

private:
    StateGrid<std::optional<RunChoice>> choices_;
};

struct DualSolution {
    double value = 0.0;
    double payoff_part = 0.0;
    double cost_part = 0.0;
    double expected_interventions = 0.0;
    DualPolicy policy;
};

/// The unique p with p * u^a + (1 - p) * d^b = 1.
double martingale_prob(const BinomialSpec& spec, RunChoice choice);

/// Minimizes E_Q[f(S_n) + kappa * N] over monotone-run stopping systems by backward induction
/// on (remaining, disp). Interior stops cost kappa, stops at the horizon are free.
/// run_cap limits a, b <= run_cap (defaults to n, the exhaustive search).
/// Ties resolve to the lexicographically smallest (a + b, a).
DualSolution solve_dual(const BinomialSpec& spec, const Payoff& payoff, std::optional<int> run_cap = std::nullopt);

/// Value and decomposition of a given stopping system under its own martingale measure.
/// Throws InputError when a reachable state has no (or an infeasible) choice.
DualSolution eval_fixed_policy(const BinomialSpec& spec, const Payoff& payoff, const DualPolicy& policy);

/// Splits every run into unit steps. The result stops at every grid time, so it is the
/// finest system on the whole lattice; every stop of `policy` is kept.
DualPolicy refine_policy(const DualPolicy& policy, const BinomialSpec& spec);

/// Value lattice W of `policy` including unreachable states that carry a choice.
/// W(0, d) = f(s0 u^d); used by the replication builder.
StateGrid<double> policy_values(const BinomialSpec& spec, const Payoff& payoff, const DualPolicy& policy);

/// States visited with positive Q-probability starting from (n, 0).
StateGrid<char> reachable_states(const BinomialSpec& spec, const DualPolicy& policy);

}  // namespace fixedcost
