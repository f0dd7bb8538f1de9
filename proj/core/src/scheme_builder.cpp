#include "fixedcost/scheme_builder.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "fixedcost/error.hpp"

namespace fixedcost {

double mixing_fraction(double rho) {
    if (!(rho >= 1.0)) throw InputError("mixing_fraction: rho must be >= 1");
    return 1.0 + std::floor(rho) - rho;
}

BlockPlan plan_interval(int first_step, int end_step, double rho) {
    BlockPlan plan;
    plan.first_step = first_step;
    plan.end_step = end_step;
    plan.rho = rho;
    plan.lambda = mixing_fraction(rho);
    const int r = static_cast<int>(std::floor(rho));
    plan.short_run = r;
    const int steps = end_step - first_step;
    if (steps < r)
        throw InputError("scheme: interval [" + std::to_string(first_step) + ", " + std::to_string(end_step) +
                         ") is shorter than one run of " + std::to_string(r) + " steps");
    plan.block_length = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(steps))));

    int short_steps = 0;
    if (plan.lambda == 1.0) {
        // Integer multiplier: no mixing, one rhythm across the whole interval.
        plan.block_length = steps;
        plan.runs.assign(static_cast<std::size_t>(steps / r), r);
        short_steps = (steps / r) * r;
        if (steps % r) plan.runs.push_back(steps % r);
    } else {
        const int blocks = std::max(1, steps / plan.block_length);
        int carry = 0;
        for (int b = 0; b < blocks; ++b) {
            const int block = b + 1 < blocks ? plan.block_length : steps - plan.block_length * (blocks - 1);
            const int len = block + carry;
            const int k1 = std::min(static_cast<int>(std::ceil(plan.lambda * len / r - 1e-12)), len / r);
            const int rest = len - k1 * r;
            const int k2 = rest / (r + 1);
            carry = rest - k2 * (r + 1);
            plan.runs.insert(plan.runs.end(), static_cast<std::size_t>(k1), r);
            plan.runs.insert(plan.runs.end(), static_cast<std::size_t>(k2), r + 1);
            short_steps += k1 * r;
        }
        if (carry > 0) plan.runs.push_back(carry);
    }
    plan.realized_lambda = static_cast<double>(short_steps) / steps;
    return plan;
}

namespace {

std::pair<int, int> interval_steps(const RhoSchedule& rho, std::size_t j, int n) {
    const int first = static_cast<int>(std::floor(n * rho.breakpoints[j]));
    const int end = j + 1 == rho.intervals() ? n : static_cast<int>(std::floor(n * rho.breakpoints[j + 1]));
    if (end <= first)
        throw InputError("scheme: interval " + std::to_string(j) + " holds no lattice steps at n = " + std::to_string(n));
    return {first, end};
}

}  // namespace

std::vector<BlockPlan> plan_scheme(const RhoSchedule& rho, int n) {
    rho.validate();
    std::vector<BlockPlan> plans;
    for (std::size_t j = 0; j < rho.intervals(); ++j) {
        auto [first, end] = interval_steps(rho, j, n);
        plans.push_back(plan_interval(first, end, rho.constant_value(j)));
    }
    return plans;
}

DualPolicy build_scheme(const RhoSchedule& rho, const BinomialSpec& spec) {
    rho.validate();
    spec.validate();
    const int n = spec.n;
    DualPolicy policy(n);
    auto slot = [n](int d) { return static_cast<std::size_t>(d + n); };
    std::vector<char> starts(static_cast<std::size_t>(2 * n + 1), 0);
    starts[slot(0)] = 1;

    for (std::size_t j = 0; j < rho.intervals(); ++j) {
        auto [first, end] = interval_steps(rho, j, n);
        std::vector<char> next_starts(starts.size(), 0);
        std::map<double, BlockPlan> plans;
        for (int d = -n; d <= n; ++d) {
            if (!starts[slot(d)]) continue;
            double value = 0.0;
            if (const double* c = std::get_if<double>(&rho.rules[j])) {
                value = *c;
            } else if (const auto* f = std::get_if<RhoSchedule::PriceRule>(&rho.rules[j])) {
                value = (*f)(spec.price_at(d));
            } else {
                throw InputError("scheme: interval " + std::to_string(j) +
                                 " uses a history-dependent rule, which has no Markov stopping system");
            }
            if (!(value >= 1.0)) throw InputError("scheme: multiplier below 1 in interval " + std::to_string(j));
            auto it = plans.find(value);
            if (it == plans.end()) it = plans.emplace(value, plan_interval(first, end, value)).first;

            std::vector<int> frontier{d};
            int t = first;
            for (int len : it->second.runs) {
                std::set<int> reached;
                for (int e : frontier) {
                    const DualState s{n - t, e};
                    const RunChoice c{len, len};
                    if (const RunChoice* old = policy.find(s); old && !(*old == c))
                        throw InputError("scheme: conflicting run choices at state " + s.to_string() +
                                         "; the price rule is not representable on this lattice");
                    policy.set(s, c);
                    reached.insert(e + len);
                    reached.insert(e - len);
                }
                frontier.assign(reached.begin(), reached.end());
                t += len;
            }
            for (int e : frontier) next_starts[slot(e)] = 1;
        }
        starts.swap(next_starts);
    }
    return policy;
}

double scheme_cost_asymptote(const RhoSchedule& rho) {
    rho.validate();
    double acc = 0.0;
    for (std::size_t j = 0; j < rho.intervals(); ++j) acc += rho.length(j) * g_eval(rho.constant_value(j));
    return acc;
}

DualSolution eval_scheme(const BinomialSpec& spec, const Payoff& payoff, const RhoSchedule& rho) {
    return eval_fixed_policy(spec, payoff, build_scheme(rho, spec));
}

RhoSchedule rho_from_policy_field(const LimitSolution& solution, double s0, double sigma, int intervals) {
    if (intervals < 1) throw InputError("rho extraction: need at least one interval");
    if (solution.policy_field.empty()) throw InputError("rho extraction: solution kept no policy field");
    const HjbGrid& grid = solution.grid;
    const double dt = 1.0 / grid.nt;
    std::vector<double> starts, values;
    for (int j = 0; j < intervals; ++j) {
        const double lo = static_cast<double>(j) / intervals;
        const double hi = static_cast<double>(j + 1) / intervals;
        std::vector<double> mass(static_cast<std::size_t>(grid.m_max) + 1, 0.0);
        for (int k = 0; k < grid.nt; ++k) {
            const double t = (k + 0.5) * dt;
            if (t < lo || t >= hi) continue;
            const double mean = std::log(s0) - 0.5 * sigma * sigma * t;
            const double sd = sigma * std::sqrt(t);
            std::vector<double> w(static_cast<std::size_t>(grid.nx));
            double total = 0.0;
            for (int i = 0; i < grid.nx; ++i) {
                const double z = (grid.x(i) - mean) / sd;
                w[static_cast<std::size_t>(i)] = std::exp(-0.5 * z * z);
                total += w[static_cast<std::size_t>(i)];
            }
            if (total <= 0.0) continue;
            for (int i = 0; i < grid.nx; ++i)
                mass[static_cast<std::size_t>(solution.multiplier(k, i))] += w[static_cast<std::size_t>(i)] / total;
        }
        double total = 0.0;
        for (double m : mass) total += m;
        double acc = 0.0;
        int median = 1;
        for (int m = 1; m <= grid.m_max; ++m) {
            acc += mass[static_cast<std::size_t>(m)];
            if (acc >= 0.5 * total) {
                median = m;
                break;
            }
        }
        starts.push_back(lo);
        values.push_back(median);
    }
    return RhoSchedule::piecewise(std::move(starts), std::move(values));
}

DeterministicPartition DeterministicPartition::from_times(const std::vector<double>& times, int n) {
    DeterministicPartition p;
    p.n = n;
    for (double t : times) {
        const double scaled = t * n;
        const double rounded = std::round(scaled);
        if (std::abs(scaled - rounded) > 1e-9 * std::max(1.0, std::abs(scaled)))
            throw InputError("partition: time " + std::to_string(t) + " is not on the 1/" + std::to_string(n) + " grid");
        const int tick = static_cast<int>(rounded);
        if (p.ticks.empty() || tick != p.ticks.back()) p.ticks.push_back(tick);
    }
    p.validate();
    return p;
}

DeterministicPartition DeterministicPartition::uniform(int n, int step) { return cyclic(n, {step}); }

DeterministicPartition DeterministicPartition::cyclic(int n, const std::vector<int>& pattern) {
    if (pattern.empty()) throw InputError("partition: empty step pattern");
    for (int s : pattern)
        if (s < 1) throw InputError("partition: steps must be >= 1");
    DeterministicPartition p;
    p.n = n;
    p.ticks.push_back(0);
    for (std::size_t i = 0; p.ticks.back() < n; ++i) p.ticks.push_back(std::min(n, p.ticks.back() + pattern[i % pattern.size()]));
    p.validate();
    return p;
}

void DeterministicPartition::validate() const {
    if (n < 1) throw InputError("partition: n must be >= 1");
    if (ticks.size() < 2 || ticks.front() != 0 || ticks.back() != n)
        throw InputError("partition: must start at 0 and end at 1");
    for (std::size_t k = 1; k < ticks.size(); ++k)
        if (ticks[k] <= ticks[k - 1]) throw InputError("partition: times must be strictly increasing");
}

int DeterministicPartition::max_step() const {
    int m = 0;
    for (std::size_t k = 1; k < ticks.size(); ++k) m = std::max(m, ticks[k] - ticks[k - 1]);
    return m;
}

double TabulatedFunction::operator()(double t) const {
    if (values.empty()) throw InputError("tabulated function: no values");
    auto i = static_cast<std::size_t>(std::clamp(t, 0.0, 1.0) * static_cast<double>(values.size()));
    return values[std::min(i, values.size() - 1)];
}

PartitionCheck partition_lower_bound_check(const DeterministicPartition& partition, const TabulatedFunction& b,
                                           double tolerance) {
    partition.validate();
    if (b.values.empty()) throw InputError("partition check: b has no values");
    for (double v : b.values)
        if (!(v >= 1.0)) throw InputError("partition check: b must be >= 1");
    const int n = partition.n;
    PartitionCheck out;
    out.lhs = static_cast<double>(partition.interventions()) / n;
    for (std::size_t k = 1; k < partition.ticks.size(); ++k) {
        const int step = partition.ticks[k] - partition.ticks[k - 1];
        out.inverse_step_integral += (static_cast<double>(step) / n) / step;
    }
    out.rhs = b.integrate([](double y) { return g_eval(y); });
    out.slack = out.lhs - out.rhs;

    // a_n on the unit cell (i/n, (i+1)/n] inside step (t_k, t_{k+1}] equals n t_{k+1} - (i + 1):
    // the number of moves left in the current run.
    std::vector<double> cum(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> level(static_cast<std::size_t>(n), 0.0);
    std::size_t k = 1;
    for (int i = 0; i < n; ++i) {
        while (partition.ticks[k] < i + 1) ++k;
        level[static_cast<std::size_t>(i)] = partition.ticks[k] - (i + 1);
        cum[static_cast<std::size_t>(i) + 1] = cum[static_cast<std::size_t>(i)] + level[static_cast<std::size_t>(i)] / n;
    }
    auto a_integral = [&](double t) {
        const int i = std::min(n - 1, static_cast<int>(std::floor(t * n)));
        return cum[static_cast<std::size_t>(i)] + level[static_cast<std::size_t>(i)] * (t - static_cast<double>(i) / n);
    };
    std::vector<double> points;
    for (int i = 0; i <= n; ++i) points.push_back(static_cast<double>(i) / n);
    for (std::size_t c = 0; c <= b.values.size(); ++c) points.push_back(static_cast<double>(c) / static_cast<double>(b.values.size()));
    std::sort(points.begin(), points.end());
    double worst = 0.0;
    for (double t : points) {
        const double target = b.integrate([](double y) { return 0.5 * (y - 1.0); }, t);
        worst = std::max(worst, std::abs(a_integral(t) - target));
    }
    out.hypothesis_deviation = worst;
    const double m = partition.max_step();
    out.hypothesis_tolerance = tolerance > 0.0 ? tolerance : m * m / n;
    out.hypothesis_holds = worst <= out.hypothesis_tolerance;
    return out;
}

}  // namespace fixedcost
