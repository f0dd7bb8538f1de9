#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "fixedcost/payoff.hpp"

namespace fixedcost {

/// Linear interpolation of m -> 1/m on the integers, for y >= 1.
double g_eval(double y);

/// Integer m in [1, m_max] minimizing curv * m + kappa * g(m); ties go to the smaller m.
/// `curv` is the half-variance-weighted curvature 0.5 sigma^2 s^2 V_ss, clamped at 0.
int optimal_multiplier(double curv, double kappa, int m_max);

/// Frictionless constant-volatility price at horizon 1, zero rates.
double bs_price(double s0, double sigma, const Payoff& payoff);

/// Explicit finite-difference grid in log-price over [0, 1].
struct HjbGrid {
    double x_min = 0.0;
    double x_max = 0.0;
    int nx = 801;
    int nt = 0;
    int m_max = 16;

    [[nodiscard]] double dx() const { return (x_max - x_min) / (nx - 1); }
    [[nodiscard]] double x(int i) const { return x_min + i * dx(); }
    /// Smallest nt for which the explicit scheme is monotone at volatility sigma * sqrt(m_max).
    [[nodiscard]] int min_time_steps(double sigma) const;

    /// Domain ln s0 +/- 5 sigma sqrt(m_max), nt = min_time_steps.
    static HjbGrid centered(double s0, double sigma, int m_max = 16, int nx = 801);
};

struct HjbOptions {
    /// Policy evaluation: use this (possibly non-integer) multiplier everywhere instead of minimizing.
    std::optional<double> frozen_multiplier;
    /// Keep the full (nt+1) x nx value grid and nx x nt policy field.
    bool keep_history = true;
};

struct LimitSolution {
    HjbGrid grid;
    double value_at_s0 = 0.0;
    /// Row k holds t = k / nt; row nt is the terminal payoff. Empty unless keep_history.
    std::vector<double> value_grid;
    /// Multiplier used on the step from t_{k+1} back to t_k at node i, stored at [i * nt + k].
    std::vector<int> policy_field;
    /// Values at t = 0 (always kept).
    std::vector<double> initial_slice;

    [[nodiscard]] double value(int k, int i) const;
    [[nodiscard]] int multiplier(int k, int i) const;
};

/// Solves u_t + min_m [ 0.5 sigma^2 m s^2 V_ss + kappa g(m) ] = 0, u(1, x) = f(e^x).
LimitSolution solve_hjb(double s0, double sigma, double kappa, const Payoff& payoff, const HjbGrid& grid,
                        const HjbOptions& options = {});

/// Piecewise-constant volatility-multiplier schedule: rho_j on (t_j, t_{j+1}].
struct RhoSchedule {
    /// Function of the price at the start of its interval.
    using PriceRule = std::function<double(double)>;
    /// Function of all interval-start prices S_{t_0}, ..., S_{t_j}.
    using HistoryRule = std::function<double(std::span<const double>)>;
    using Rule = std::variant<double, PriceRule, HistoryRule>;

    std::vector<double> breakpoints{0.0, 1.0};  ///< t_0 = 0 < ... < t_J = 1
    std::vector<Rule> rules{1.0};

    static RhoSchedule constant(double rho);
    /// Constants per interval starting at the given times (first must be 0).
    static RhoSchedule piecewise(std::vector<double> starts, std::vector<double> values);
    /// Parses "t0:rho0,t1:rho1,...".
    static RhoSchedule parse(std::string_view text);

    void validate() const;
    [[nodiscard]] std::size_t intervals() const { return rules.size(); }
    [[nodiscard]] double length(std::size_t j) const { return breakpoints[j + 1] - breakpoints[j]; }
    [[nodiscard]] bool all_constant() const;
    /// Throws InputError for non-constant rules.
    [[nodiscard]] double constant_value(std::size_t j) const;
    [[nodiscard]] double evaluate(std::size_t j, std::span<const double> start_prices) const;
};

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

/// Monte Carlo value of f(S_1) + kappa * sum_j dt_j g(rho_j) under nu = sigma sqrt(rho_j),
/// simulated exactly in log-space with `steps` substeps per interval. Path i uses its own
/// counter-based stream, so results do not depend on threading.
McEstimate mc_value(double s0, double sigma, double kappa, const Payoff& payoff, const RhoSchedule& rho,
                    std::uint64_t paths, int steps, std::uint64_t seed, int m_max = 16);

}  // namespace fixedcost
