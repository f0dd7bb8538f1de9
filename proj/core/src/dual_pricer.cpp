#include "fixedcost/dual_pricer.hpp"

#include <cmath>
#include <limits>

#include "fixedcost/error.hpp"

namespace fixedcost {

std::string DualState::to_string() const {
    return "(remaining=" + std::to_string(remaining) + ", disp=" + std::to_string(disp) + ")";
}

DualPolicy DualPolicy::finest(int n) { return uniform(n, 1); }

DualPolicy DualPolicy::uniform(int n, int run_length) {
    if (run_length < 1) throw InputError("policy: run length must be >= 1");
    DualPolicy p(n);
    for (int r = 1; r <= n; ++r) {
        int len = std::min(run_length, r);
        for (int d = -(n - r); d <= n - r; d += 2) p.set({r, d}, {len, len});
    }
    return p;
}

void DualPolicy::set(DualState s, RunChoice c) {
    if (!choices_.contains(s) || s.remaining == 0) throw InputError("policy: state " + s.to_string() + " is not a stop");
    choices_[s] = c;
}

void DualPolicy::erase(DualState s) {
    if (choices_.contains(s)) choices_[s].reset();
}

const RunChoice* DualPolicy::find(DualState s) const {
    if (!choices_.contains(s)) return nullptr;
    const auto& c = choices_[s];
    return c ? &*c : nullptr;
}

const RunChoice& DualPolicy::at(DualState s) const {
    const RunChoice* c = find(s);
    if (c == nullptr) throw InputError("policy: no run choice for state " + s.to_string());
    return *c;
}

bool operator==(const DualPolicy& a, const DualPolicy& b) {
    if (a.n() != b.n()) return false;
    for (int r = 1; r <= a.n(); ++r)
        for (int d = -(a.n() - r); d <= a.n() - r; ++d) {
            const RunChoice* ca = a.find({r, d});
            const RunChoice* cb = b.find({r, d});
            if ((ca == nullptr) != (cb == nullptr)) return false;
            if (ca != nullptr && !(*ca == *cb)) return false;
        }
    return true;
}

double martingale_prob(const BinomialSpec& spec, RunChoice choice) {
    const double ua = spec.up_pow(choice.up);
    const double db = spec.up_pow(-choice.down);
    return (1.0 - db) / (ua - db);
}

namespace {

struct Layered {
    StateGrid<double> value;
    StateGrid<double> payoff_part;
    StateGrid<double> interventions;
};

void check_spec_matches(const BinomialSpec& spec, const DualPolicy& policy) {
    spec.validate();
    if (policy.n() != spec.n)
        throw InputError("policy: built for n = " + std::to_string(policy.n()) + ", model has n = " +
                         std::to_string(spec.n));
}

// Backward evaluation of value, E_Q[f] and E_Q[N] over the states flagged in `active`.
Layered evaluate(const BinomialSpec& spec, const Payoff& payoff, const DualPolicy& policy,
                 const StateGrid<char>& active) {
    const int n = spec.n;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    Layered out{StateGrid<double>(n, nan), StateGrid<double>(n, nan), StateGrid<double>(n, nan)};
    for (int d = -n; d <= n; ++d) {
        double f = payoff(spec.price_at(d));
        out.value[{0, d}] = f;
        out.payoff_part[{0, d}] = f;
        out.interventions[{0, d}] = 0.0;
    }
    for (int r = 1; r <= n; ++r) {
        for (int d = -(n - r); d <= n - r; ++d) {
            const DualState s{r, d};
            if (!active[s]) continue;
            const RunChoice& c = policy.at(s);
            const double p = martingale_prob(spec, c);
            const DualState up{r - c.up, d + c.up};
            const DualState dn{r - c.down, d - c.down};
            const double iu = up.remaining > 0 ? 1.0 : 0.0;
            const double id = dn.remaining > 0 ? 1.0 : 0.0;
            out.value[s] = p * (out.value[up] + spec.kappa * iu) + (1.0 - p) * (out.value[dn] + spec.kappa * id);
            out.payoff_part[s] = p * out.payoff_part[up] + (1.0 - p) * out.payoff_part[dn];
            out.interventions[s] = p * (out.interventions[up] + iu) + (1.0 - p) * (out.interventions[dn] + id);
        }
    }
    return out;
}

}  // namespace

StateGrid<char> reachable_states(const BinomialSpec& spec, const DualPolicy& policy) {
    check_spec_matches(spec, policy);
    const int n = spec.n;
    StateGrid<char> reach(n, 0);
    reach[{n, 0}] = 1;
    for (int r = n; r >= 1; --r) {
        for (int d = -(n - r); d <= n - r; ++d) {
            const DualState s{r, d};
            if (!reach[s]) continue;
            const RunChoice& c = policy.at(s);
            if (c.up < 1 || c.down < 1 || c.up > r || c.down > r)
                throw InputError("policy: run choice (" + std::to_string(c.up) + "," + std::to_string(c.down) +
                                 ") infeasible at state " + s.to_string());
            reach[{r - c.up, d + c.up}] = 1;
            reach[{r - c.down, d - c.down}] = 1;
        }
    }
    return reach;
}

DualSolution eval_fixed_policy(const BinomialSpec& spec, const Payoff& payoff, const DualPolicy& policy) {
    const auto reach = reachable_states(spec, policy);
    const auto layers = evaluate(spec, payoff, policy, reach);
    const DualState root{spec.n, 0};
    DualSolution sol;
    sol.value = layers.value[root];
    sol.payoff_part = layers.payoff_part[root];
    sol.expected_interventions = layers.interventions[root];
    sol.cost_part = spec.kappa * sol.expected_interventions;
    sol.policy = policy;
    return sol;
}

StateGrid<double> policy_values(const BinomialSpec& spec, const Payoff& payoff, const DualPolicy& policy) {
    const auto reach = reachable_states(spec, policy);
    return evaluate(spec, payoff, policy, reach).value;
}

DualSolution solve_dual(const BinomialSpec& spec, const Payoff& payoff, std::optional<int> run_cap) {
    spec.validate();
    if (run_cap && *run_cap < 1) throw InputError("solve_dual: run_cap must be >= 1");
    const int n = spec.n;
    const int cap = run_cap ? std::min(*run_cap, n) : n;

    // prob[(a-1) * cap + (b-1)]
    std::vector<double> prob(static_cast<std::size_t>(cap) * static_cast<std::size_t>(cap));
    for (int a = 1; a <= cap; ++a)
        for (int b = 1; b <= cap; ++b)
            prob[static_cast<std::size_t>((a - 1) * cap + (b - 1))] = martingale_prob(spec, {a, b});

    StateGrid<double> value(n, std::numeric_limits<double>::quiet_NaN());
    DualPolicy policy(n);
    for (int d = -n; d <= n; ++d) value[{0, d}] = payoff(spec.price_at(d));

    const double kappa = spec.kappa;
    for (int r = 1; r <= n; ++r) {
        const int lim = std::min(r, cap);
        const int width = n - r;
        // Only states whose disp parity matches the elapsed time are stops.
        const int count = width + 1;
        std::vector<RunChoice> chosen(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(static)
        for (int idx = 0; idx < count; ++idx) {
            const int d = -width + 2 * idx;
            double best = std::numeric_limits<double>::infinity();
            RunChoice best_choice{lim, lim};
            // Enumerate in lexicographic (a + b, a) order; a later candidate must win by more
            // than the tie tolerance.
            for (int sum = 2; sum <= 2 * lim; ++sum) {
                const int a_lo = std::max(1, sum - lim);
                const int a_hi = std::min(lim, sum - 1);
                for (int a = a_lo; a <= a_hi; ++a) {
                    const int b = sum - a;
                    const double p = prob[static_cast<std::size_t>((a - 1) * cap + (b - 1))];
                    const double iu = r - a > 0 ? 1.0 : 0.0;
                    const double id = r - b > 0 ? 1.0 : 0.0;
                    const double v = p * (value[{r - a, d + a}] + kappa * iu) +
                                     (1.0 - p) * (value[{r - b, d - b}] + kappa * id);
                    if (std::isinf(best) || v < best - 1e-13 * std::max(1.0, std::abs(best))) {
                        best = v;
                        best_choice = {a, b};
                    }
                }
            }
            chosen[static_cast<std::size_t>(idx)] = best_choice;
            value[{r, d}] = best;
        }
        for (int idx = 0; idx < count; ++idx) policy.set({r, -width + 2 * idx}, chosen[static_cast<std::size_t>(idx)]);
    }

    DualSolution sol = eval_fixed_policy(spec, payoff, policy);
    sol.value = value[{n, 0}];
    return sol;
}

DualPolicy refine_policy(const DualPolicy& policy, const BinomialSpec& spec) {
    check_spec_matches(spec, policy);
    return DualPolicy::finest(spec.n);
}

}  // namespace fixedcost
