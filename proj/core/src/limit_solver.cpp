#include "fixedcost/limit_solver.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <string>

#include "fixedcost/error.hpp"

namespace fixedcost {

double g_eval(double y) {
    if (!(y >= 1.0)) throw InputError("g: argument must be >= 1, got " + std::to_string(y));
    const double m = std::floor(y);
    if (y == m) return 1.0 / m;
    return (m + 1.0 - y) / m + (y - m) / (m + 1.0);
}

int optimal_multiplier(double curv, double kappa, int m_max) {
    if (m_max < 1) throw InputError("optimal_multiplier: m_max must be >= 1");
    const double a = std::max(curv, 0.0);
    auto objective = [&](int m) { return a * m + kappa / m; };
    if (a == 0.0) return kappa > 0.0 ? m_max : 1;
    const double root = std::sqrt(kappa / a);
    const int c = static_cast<int>(std::clamp(std::floor(root), 1.0, static_cast<double>(m_max)));
    int best = std::max(1, c - 1);
    double best_value = objective(best);
    for (int m = best + 1; m <= std::min(m_max, c + 1); ++m) {
        const double v = objective(m);
        if (v < best_value) {
            best = m;
            best_value = v;
        }
    }
    return best;
}

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double bs_call(double s0, double sigma, double strike) {
    if (strike <= 0.0) return s0 - strike;
    const double d1 = (std::log(s0 / strike) + 0.5 * sigma * sigma) / sigma;
    return s0 * norm_cdf(d1) - strike * norm_cdf(d1 - sigma);
}

double bs_put(double s0, double sigma, double strike) {
    if (strike <= 0.0) return 0.0;
    const double d1 = (std::log(s0 / strike) + 0.5 * sigma * sigma) / sigma;
    return strike * norm_cdf(sigma - d1) - s0 * norm_cdf(-d1);
}

// E f(s0 exp(sigma Z - sigma^2/2)) by composite Simpson on z in [-12, 12].
double lognormal_expectation(double s0, double sigma, const Payoff& payoff) {
    constexpr int kPanels = 8000;
    constexpr double kLo = -12.0, kHi = 12.0;
    const double h = (kHi - kLo) / kPanels;
    double acc = 0.0;
    for (int i = 0; i <= kPanels; ++i) {
        const double z = kLo + i * h;
        const double w = (i == 0 || i == kPanels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        const double density = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
        acc += w * density * payoff(s0 * std::exp(sigma * z - 0.5 * sigma * sigma));
    }
    return acc * h / 3.0;
}

}  // namespace

double bs_price(double s0, double sigma, const Payoff& payoff) {
    if (!(s0 > 0.0) || !(sigma > 0.0)) throw InputError("bs_price: s0 and sigma must be positive");
    return std::visit(
        [&](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, payoff_kind::Call>) {
                return bs_call(s0, sigma, k.strike);
            } else if constexpr (std::is_same_v<K, payoff_kind::Put>) {
                return bs_put(s0, sigma, k.strike);
            } else if constexpr (std::is_same_v<K, payoff_kind::Straddle>) {
                return bs_call(s0, sigma, k.strike) + bs_put(s0, sigma, k.strike);
            } else if constexpr (std::is_same_v<K, payoff_kind::PiecewiseLinear>) {
                // f = f(0) + slope_0 s + sum_k (slope_k - slope_{k-1}) (s - x_k)^+
                double v = k.value_at_zero + k.slopes.front() * s0;
                for (std::size_t i = 1; i < k.breakpoints.size(); ++i)
                    v += (k.slopes[i] - k.slopes[i - 1]) * bs_call(s0, sigma, k.breakpoints[i]);
                return v;
            } else {
                if (std::isinf(k.cap))
                    return std::pow(s0, k.exponent) * std::exp(0.5 * sigma * sigma * k.exponent * (k.exponent - 1.0));
                return lognormal_expectation(s0, sigma, payoff);
            }
        },
        payoff.kind());
}

namespace {

// Three-point s^2 V_ss on a uniform log grid: L = up_w (V+ - V) + down_w (V- - V).
struct CurvatureWeights {
    double up_w;
    double down_w;
};

CurvatureWeights curvature_weights(double dx) {
    const double e = std::exp(dx);
    const double span = e - 1.0 / e;
    return {2.0 / (span * (e - 1.0)), 2.0 / (span * (1.0 - 1.0 / e))};
}

}  // namespace

int HjbGrid::min_time_steps(double sigma) const {
    if (nx < 3 || !(x_max > x_min)) throw InputError("hjb grid: need nx >= 3 and x_min < x_max");
    const auto w = curvature_weights(dx());
    return static_cast<int>(std::ceil(0.5 * sigma * sigma * m_max * (w.up_w + w.down_w) - 1e-9));
}

HjbGrid HjbGrid::centered(double s0, double sigma, int m_max, int nx) {
    if (!(s0 > 0.0) || !(sigma > 0.0)) throw InputError("hjb grid: s0 and sigma must be positive");
    if (m_max < 1) throw InputError("hjb grid: m_max must be >= 1");
    HjbGrid g;
    const double half = 5.0 * sigma * std::sqrt(static_cast<double>(m_max));
    g.x_min = std::log(s0) - half;
    g.x_max = std::log(s0) + half;
    g.nx = nx;
    g.m_max = m_max;
    g.nt = g.min_time_steps(sigma);
    return g;
}

double LimitSolution::value(int k, int i) const {
    if (value_grid.empty()) throw InputError("limit solution: value grid not kept");
    return value_grid[static_cast<std::size_t>(k) * static_cast<std::size_t>(grid.nx) + static_cast<std::size_t>(i)];
}

int LimitSolution::multiplier(int k, int i) const {
    if (policy_field.empty()) throw InputError("limit solution: policy field not kept");
    return policy_field[static_cast<std::size_t>(i) * static_cast<std::size_t>(grid.nt) + static_cast<std::size_t>(k)];
}

LimitSolution solve_hjb(double s0, double sigma, double kappa, const Payoff& payoff, const HjbGrid& grid,
                        const HjbOptions& options) {
    if (!(s0 > 0.0) || !(sigma > 0.0)) throw InputError("solve_hjb: s0 and sigma must be positive");
    if (!(kappa >= 0.0)) throw InputError("solve_hjb: kappa must be nonnegative");
    if (grid.m_max < 1) throw InputError("solve_hjb: m_max must be >= 1");
    const double x0 = std::log(s0);
    if (!(grid.x_min < x0 && x0 < grid.x_max)) throw InputError("solve_hjb: ln s0 must lie inside (x_min, x_max)");
    const int nt_min = grid.min_time_steps(sigma);
    if (grid.nt < nt_min)
        throw InputError("solve_hjb: CFL violated, nt = " + std::to_string(grid.nt) +
                         " < minimal admissible nt = " + std::to_string(nt_min));
    const auto frozen = options.frozen_multiplier;
    if (frozen && !(*frozen >= 1.0 && *frozen <= grid.m_max))
        throw InputError("solve_hjb: frozen multiplier must lie in [1, m_max]");

    const int nx = grid.nx;
    const int nt = grid.nt;
    const double dt = 1.0 / nt;
    const double half_var = 0.5 * sigma * sigma;
    const auto w = curvature_weights(grid.dx());

    LimitSolution sol;
    sol.grid = grid;
    const auto unx = static_cast<std::size_t>(nx);
    if (options.keep_history) {
        sol.value_grid.resize((static_cast<std::size_t>(nt) + 1) * unx);
        sol.policy_field.resize(unx * static_cast<std::size_t>(nt));
    }

    std::vector<double> v(unx), next(unx);
    for (int i = 0; i < nx; ++i) v[static_cast<std::size_t>(i)] = payoff(std::exp(grid.x(i)));
    if (options.keep_history)
        std::copy(v.begin(), v.end(), sol.value_grid.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(nt) * unx));

    const int frozen_label = frozen ? static_cast<int>(std::lround(*frozen)) : 0;
    const double frozen_cost = frozen ? kappa * g_eval(*frozen) : 0.0;

    for (int k = nt - 1; k >= 0; --k) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < nx; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            // Zero curvature at both ends (convex payoffs are asymptotically affine in s).
            double curvature = 0.0;
            if (i > 0 && i < nx - 1) curvature = w.up_w * (v[ui + 1] - v[ui]) + w.down_w * (v[ui - 1] - v[ui]);
            int m = 0;
            double rate = 0.0;
            if (frozen) {
                m = frozen_label;
                rate = half_var * *frozen * curvature + frozen_cost;
            } else {
                const double a = half_var * std::max(curvature, 0.0);
                m = optimal_multiplier(a, kappa, grid.m_max);
                rate = a * m + kappa / m;
            }
            next[ui] = v[ui] + dt * rate;
            if (options.keep_history) sol.policy_field[ui * static_cast<std::size_t>(nt) + static_cast<std::size_t>(k)] = m;
        }
        v.swap(next);
        if (options.keep_history)
            std::copy(v.begin(), v.end(), sol.value_grid.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(k) * unx));
    }

    sol.initial_slice = v;
    const double pos = (x0 - grid.x_min) / grid.dx();
    const int i0 = std::clamp(static_cast<int>(std::floor(pos)), 0, nx - 2);
    const double frac = pos - i0;
    sol.value_at_s0 = (1.0 - frac) * v[static_cast<std::size_t>(i0)] + frac * v[static_cast<std::size_t>(i0) + 1];
    return sol;
}

RhoSchedule RhoSchedule::constant(double rho) { return piecewise({0.0}, {rho}); }

RhoSchedule RhoSchedule::piecewise(std::vector<double> starts, std::vector<double> values) {
    if (starts.empty() || starts.size() != values.size())
        throw InputError("rho schedule: need matching, nonempty start and value lists");
    RhoSchedule s;
    s.breakpoints = std::move(starts);
    s.breakpoints.push_back(1.0);
    s.rules.assign(values.begin(), values.end());
    s.validate();
    return s;
}

RhoSchedule RhoSchedule::parse(std::string_view text) {
    std::vector<double> starts, values;
    auto number = [&](std::string_view t) {
        while (!t.empty() && t.front() == ' ') t.remove_prefix(1);
        while (!t.empty() && t.back() == ' ') t.remove_suffix(1);
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc{} || ptr != t.data() + t.size())
            throw InputError("rho schedule: cannot parse '" + std::string(t) + "'");
        return v;
    };
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        auto item = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        auto colon = item.find(':');
        if (colon == std::string_view::npos) throw InputError("rho schedule: expected t:rho, got '" + std::string(item) + "'");
        starts.push_back(number(item.substr(0, colon)));
        values.push_back(number(item.substr(colon + 1)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return piecewise(std::move(starts), std::move(values));
}

void RhoSchedule::validate() const {
    if (rules.empty() || breakpoints.size() != rules.size() + 1)
        throw InputError("rho schedule: need one rule per interval");
    if (breakpoints.front() != 0.0 || breakpoints.back() != 1.0)
        throw InputError("rho schedule: breakpoints must start at 0 and end at 1");
    for (std::size_t j = 0; j + 1 < breakpoints.size(); ++j)
        if (!(breakpoints[j + 1] > breakpoints[j])) throw InputError("rho schedule: breakpoints must increase");
    for (const auto& r : rules)
        if (const double* c = std::get_if<double>(&r); c && !(*c >= 1.0))
            throw InputError("rho schedule: multipliers must be >= 1");
}

bool RhoSchedule::all_constant() const {
    return std::all_of(rules.begin(), rules.end(), [](const Rule& r) { return std::holds_alternative<double>(r); });
}

double RhoSchedule::constant_value(std::size_t j) const {
    if (const double* c = std::get_if<double>(&rules.at(j))) return *c;
    throw InputError("rho schedule: interval " + std::to_string(j) + " is not constant");
}

double RhoSchedule::evaluate(std::size_t j, std::span<const double> start_prices) const {
    return std::visit(
        [&](const auto& r) -> double {
            using R = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<R, double>) {
                return r;
            } else if constexpr (std::is_same_v<R, PriceRule>) {
                return r(start_prices.back());
            } else {
                return r(start_prices);
            }
        },
        rules.at(j));
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

McEstimate mc_value(double s0, double sigma, double kappa, const Payoff& payoff, const RhoSchedule& rho,
                    std::uint64_t paths, int steps, std::uint64_t seed, int m_max) {
    if (paths < 1) throw InputError("mc_value: paths must be >= 1");
    if (steps < 1) throw InputError("mc_value: steps per interval must be >= 1");
    if (!(s0 > 0.0) || !(sigma > 0.0)) throw InputError("mc_value: s0 and sigma must be positive");
    rho.validate();
    for (std::size_t j = 0; j < rho.intervals(); ++j)
        if (const double* c = std::get_if<double>(&rho.rules[j]); c && *c > m_max)
            throw InputError("mc_value: multiplier " + std::to_string(*c) + " outside [1, m_max]");

    // Fixed-size chunks summed in order keep the estimate independent of the thread count.
    constexpr std::uint64_t kChunk = 4096;
    const std::uint64_t chunks = (paths + kChunk - 1) / kChunk;
    std::vector<double> chunk_sum(chunks, 0.0), chunk_sq(chunks, 0.0);
    int bad_rule = 0;

#pragma omp parallel for schedule(dynamic)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
        const auto first = static_cast<std::uint64_t>(c) * kChunk;
        const auto last = std::min(paths, first + kChunk);
        double sum = 0.0, sq = 0.0;
        std::vector<double> starts;
        starts.reserve(rho.intervals());
        for (std::uint64_t p = first; p < last; ++p) {
            std::mt19937_64 rng(splitmix64(seed ^ splitmix64(p)));
            std::normal_distribution<double> normal;
            double log_s = std::log(s0);
            double cost = 0.0;
            starts.clear();
            for (std::size_t j = 0; j < rho.intervals(); ++j) {
                starts.push_back(std::exp(log_s));
                double r = rho.evaluate(j, starts);
                if (!(r >= 1.0 && r <= m_max)) {
#pragma omp atomic write
                    bad_rule = 1;
                    r = std::clamp(r, 1.0, static_cast<double>(m_max));
                }
                const double var = sigma * sigma * r;
                const double h = rho.length(j) / steps;
                for (int s = 0; s < steps; ++s) log_s += std::sqrt(var * h) * normal(rng) - 0.5 * var * h;
                cost += rho.length(j) * g_eval(r);
            }
            const double value = payoff(std::exp(log_s)) + kappa * cost;
            sum += value;
            sq += value * value;
        }
        chunk_sum[static_cast<std::size_t>(c)] = sum;
        chunk_sq[static_cast<std::size_t>(c)] = sq;
    }
    if (bad_rule) throw InputError("mc_value: a rho rule returned a multiplier outside [1, m_max]");

    double sum = 0.0, sq = 0.0;
    for (std::uint64_t c = 0; c < chunks; ++c) {
        sum += chunk_sum[c];
        sq += chunk_sq[c];
    }
    const double count = static_cast<double>(paths);
    const double mean = sum / count;
    const double var = paths > 1 ? std::max(0.0, (sq - count * mean * mean) / (count - 1.0)) : 0.0;
    return {mean, std::sqrt(var / count)};
}

}  // namespace fixedcost
