#pragma once

#include <vector>

#include "fixedcost/dual_pricer.hpp"
#include "fixedcost/limit_solver.hpp"
#include "fixedcost/market.hpp"

namespace fixedcost {

/// lambda in (0, 1] with lambda * floor(rho) + (1 - lambda) * (floor(rho) + 1) = rho.
double mixing_fraction(double rho);

/// Run layout of one schedule interval for a constant multiplier.
struct BlockPlan {
    int first_step = 0;  ///< floor(n t_j)
    int end_step = 0;    ///< floor(n t_{j+1}), exclusive
    double rho = 1.0;
    double lambda = 1.0;  ///< target fraction of steps covered by runs of floor(rho)
    int short_run = 1;    ///< floor(rho)
    int block_length = 1; ///< ceil(sqrt(steps in interval)); the last block absorbs the remainder
    std::vector<int> runs;  ///< consecutive run lengths covering [first_step, end_step)
    double realized_lambda = 1.0;  ///< fraction of steps actually covered by runs of floor(rho)
};

/// Block-mixing run plan for an interval [first_step, end_step) with multiplier rho.
BlockPlan plan_interval(int first_step, int end_step, double rho);

/// Run plans for every interval of a constant schedule on an n-step lattice.
std::vector<BlockPlan> plan_scheme(const RhoSchedule& rho, int n);

/// Near-optimal stopping system realizing the multiplier schedule: symmetric runs of floor(rho)
/// and floor(rho) + 1 mixed per block. Price rules are evaluated at the lattice price at each
/// interval start; history rules are not representable as a Markov policy and are rejected.
DualPolicy build_scheme(const RhoSchedule& rho, const BinomialSpec& spec);

/// sum_j (t_{j+1} - t_j) g(rho_j): limit of (total transaction costs) / kappa.
double scheme_cost_asymptote(const RhoSchedule& rho);

/// eval_fixed_policy of build_scheme.
DualSolution eval_scheme(const BinomialSpec& spec, const Payoff& payoff, const RhoSchedule& rho);

/// Piecewise-constant multiplier schedule read off an HJB policy field: per interval, the
/// median of m*(t, x) weighted by the reference lognormal density of x at time t.
RhoSchedule rho_from_policy_field(const LimitSolution& solution, double s0, double sigma, int intervals);

/// Deterministic partition 0 = t_0 < ... < t_K = 1 of [0, 1] on the grid {k / n}.
struct DeterministicPartition {
    int n = 1;
    std::vector<int> ticks;  ///< n * t_k, strictly increasing from 0 to n

    /// Rounds times to the n-grid; repeated points are merged.
    static DeterministicPartition from_times(const std::vector<double>& times, int n);
    static DeterministicPartition uniform(int n, int step);
    /// Cycles through `pattern` step lengths; the final step is truncated at n.
    static DeterministicPartition cyclic(int n, const std::vector<int>& pattern);

    void validate() const;
    [[nodiscard]] int max_step() const;
    /// Interior stops t_k < 1, excluding t_0.
    [[nodiscard]] int interventions() const { return static_cast<int>(ticks.size()) - 2; }
};

/// Piecewise-constant function on a uniform partition of [0, 1].
struct TabulatedFunction {
    std::vector<double> values;

    static TabulatedFunction constant(double v) { return {{v}}; }
    [[nodiscard]] double operator()(double t) const;
    /// Exact integral of h(b(t)) over [0, t_end].
    template <class H>
    [[nodiscard]] double integrate(H h, double t_end = 1.0) const {
        const double cell = 1.0 / static_cast<double>(values.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double lo = static_cast<double>(i) * cell;
            if (lo >= t_end) break;
            acc += h(values[i]) * (std::min(lo + cell, t_end) - lo);
        }
        return acc;
    }
};

struct PartitionCheck {
    double lhs = 0.0;               ///< N / n
    double inverse_step_integral = 0.0;  ///< integral of 1 / b_n = (N + 1) / n
    double rhs = 0.0;               ///< integral of g(b)
    double slack = 0.0;             ///< lhs - rhs
    double hypothesis_deviation = 0.0;  ///< sup_t |int_0^t a_n - int_0^t (b - 1)/2|
    double hypothesis_tolerance = 0.0;
    bool hypothesis_holds = false;
};

/// Compares N / n of a deterministic partition with the integral of g(b); the inequality
/// N / n >= int g(b) is only meaningful when the integrated run-position profile a_n matches
/// (b - 1) / 2, which is checked and reported. tolerance <= 0 selects max_step^2 / n.
PartitionCheck partition_lower_bound_check(const DeterministicPartition& partition, const TabulatedFunction& b,
                                           double tolerance = 0.0);

}  // namespace fixedcost
