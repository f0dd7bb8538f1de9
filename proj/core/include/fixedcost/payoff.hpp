#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fixedcost {

/// Nonnegative real or +infinity. Never encoded as a float sentinel.
class ExtendedReal {
public:
    struct Infinite {};

    constexpr ExtendedReal(double v) : value_(v) {}  // NOLINT(implicit)
    constexpr ExtendedReal(Infinite) : value_(Infinite{}) {}  // NOLINT(implicit)

    [[nodiscard]] constexpr bool is_infinite() const { return std::holds_alternative<Infinite>(value_); }
    [[nodiscard]] constexpr bool is_finite() const { return !is_infinite(); }
    /// Throws std::bad_variant_access when infinite.
    [[nodiscard]] constexpr double value() const { return std::get<double>(value_); }

    friend constexpr bool operator==(const ExtendedReal&, const ExtendedReal&) = default;

private:
    std::variant<double, Infinite> value_;
};

inline constexpr ExtendedReal::Infinite kInfinite{};

namespace payoff_kind {
struct Call { double strike; };
struct Put { double strike; };
struct Straddle { double strike; };
/// Convex piecewise-linear: slope slopes[k] on [breakpoints[k], breakpoints[k+1]),
/// breakpoints[0] == 0, slopes nondecreasing, f(0) == value_at_zero.
struct PiecewiseLinear {
    std::vector<double> breakpoints;
    std::vector<double> slopes;
    double value_at_zero;
};
/// s^p on [0, cap], continued linearly with slope p*cap^(p-1) above cap.
/// cap = +inf gives the pure power with unbounded slope.
struct PowerCapped { double exponent; double cap; };
}  // namespace payoff_kind

/// Convex European payoff f on [0, inf) with exact f(0) and f'(inf).
class Payoff {
public:
    using Kind = std::variant<payoff_kind::Call, payoff_kind::Put, payoff_kind::Straddle,
                              payoff_kind::PiecewiseLinear, payoff_kind::PowerCapped>;

    static Payoff call(double strike);
    static Payoff put(double strike);
    static Payoff straddle(double strike);
    /// Validates convexity (nondecreasing slopes) and nonnegativity.
    static Payoff piecewise_linear(std::vector<double> breakpoints, std::vector<double> slopes,
                                   double value_at_zero);
    /// Piecewise-linear anchored so that min f = 0 on [0, inf).
    static Payoff piecewise_linear_min_zero(std::vector<double> breakpoints, std::vector<double> slopes);
    /// f(s) = s.
    static Payoff identity();
    static Payoff power_capped(double exponent, double cap = std::numeric_limits<double>::infinity());

    /// Parses "call:K", "put:K", "straddle:K", "pwl:x0,s0;x1,s1;...", "power:p[,cap]", "identity".
    static Payoff parse(std::string_view text);

    [[nodiscard]] double operator()(double s) const { return eval(s); }
    [[nodiscard]] double eval(double s) const { return evaluate<double>(s); }

    /// Evaluation in an arbitrary real type (used by the quad-precision oracle).
    template <class T>
    [[nodiscard]] T evaluate(T s) const;

    [[nodiscard]] double f_at_zero() const;
    [[nodiscard]] ExtendedReal slope_at_infinity() const;
    [[nodiscard]] const Kind& kind() const { return kind_; }
    /// True for payoffs affine on [0, inf).
    [[nodiscard]] bool is_affine() const;
    /// Canonical CLI spelling.
    [[nodiscard]] std::string to_string() const;

private:
    explicit Payoff(Kind k) : kind_(std::move(k)) {}
    Kind kind_;
};

template <class T>
T Payoff::evaluate(T s) const {
    using std::pow;
    return std::visit(
        [&](const auto& k) -> T {
            using K = std::decay_t<decltype(k)>;
            const T zero(0);
            if constexpr (std::is_same_v<K, payoff_kind::Call>) {
                T v = s - T(k.strike);
                return v > zero ? v : zero;
            } else if constexpr (std::is_same_v<K, payoff_kind::Put>) {
                T v = T(k.strike) - s;
                return v > zero ? v : zero;
            } else if constexpr (std::is_same_v<K, payoff_kind::Straddle>) {
                T v = s - T(k.strike);
                return v > zero ? v : T(-v);
            } else if constexpr (std::is_same_v<K, payoff_kind::PiecewiseLinear>) {
                T v(k.value_at_zero);
                for (std::size_t i = 0; i < k.breakpoints.size(); ++i) {
                    T lo(k.breakpoints[i]);
                    if (s <= lo) break;
                    T hi = i + 1 < k.breakpoints.size() ? T(k.breakpoints[i + 1]) : s;
                    T end = s < hi ? s : hi;
                    v += T(k.slopes[i]) * (end - lo);
                }
                return v;
            } else {
                T p(k.exponent);
                if (std::isinf(k.cap) || s <= T(k.cap)) return T(pow(s, p));
                T c(k.cap);
                return T(pow(c, p)) + p * T(pow(c, T(p - T(1)))) * (s - c);
            }
        },
        kind_);
}

}  // namespace fixedcost
