#include "fixedcost/payoff.hpp"

#include <algorithm>
#include <charconv>
#include <optional>
#include <sstream>

#include "fixedcost/error.hpp"

namespace fixedcost {

namespace {

double parse_number(std::string_view text, std::string_view what) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw InputError("payoff: cannot parse " + std::string(what) + " '" + std::string(text) + "'");
    return v;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = text.find(sep, start);
        out.push_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

void require_strike(double k) {
    if (!(k >= 0.0) || !std::isfinite(k)) throw InputError("payoff: strike must be a finite nonnegative number");
}

}  // namespace

Payoff Payoff::call(double strike) {
    require_strike(strike);
    return Payoff(payoff_kind::Call{strike});
}

Payoff Payoff::put(double strike) {
    require_strike(strike);
    return Payoff(payoff_kind::Put{strike});
}

Payoff Payoff::straddle(double strike) {
    require_strike(strike);
    return Payoff(payoff_kind::Straddle{strike});
}

namespace {

void validate_pwl_shape(const std::vector<double>& breakpoints, const std::vector<double>& slopes) {
    if (breakpoints.empty() || breakpoints.size() != slopes.size())
        throw InputError("payoff: pwl needs matching, nonempty breakpoint and slope lists");
    if (breakpoints.front() != 0.0) throw InputError("payoff: pwl first breakpoint must be 0");
    for (std::size_t i = 1; i < breakpoints.size(); ++i) {
        if (!(breakpoints[i] > breakpoints[i - 1])) throw InputError("payoff: pwl breakpoints must increase");
        if (slopes[i] < slopes[i - 1]) throw InputError("payoff: pwl slopes must be nondecreasing (convexity)");
    }
    for (double s : slopes)
        if (!std::isfinite(s)) throw InputError("payoff: pwl slopes must be finite");
}

// Minimum over [0, inf) of the pwl with f(0) = 0; attained at a breakpoint.
double pwl_min_offset(const std::vector<double>& breakpoints, const std::vector<double>& slopes) {
    double v = 0.0, lowest = 0.0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        v += slopes[i] * (breakpoints[i + 1] - breakpoints[i]);
        lowest = std::min(lowest, v);
    }
    return lowest;
}

}  // namespace

Payoff Payoff::piecewise_linear(std::vector<double> breakpoints, std::vector<double> slopes,
                                double value_at_zero) {
    validate_pwl_shape(breakpoints, slopes);
    if (slopes.back() < 0.0 || value_at_zero + pwl_min_offset(breakpoints, slopes) < -1e-12 || !std::isfinite(value_at_zero))
        throw InputError("payoff: pwl must be nonnegative on [0, inf)");
    return Payoff(payoff_kind::PiecewiseLinear{std::move(breakpoints), std::move(slopes), value_at_zero});
}

Payoff Payoff::piecewise_linear_min_zero(std::vector<double> breakpoints, std::vector<double> slopes) {
    validate_pwl_shape(breakpoints, slopes);
    double f0 = -pwl_min_offset(breakpoints, slopes);
    return piecewise_linear(std::move(breakpoints), std::move(slopes), f0);
}

Payoff Payoff::identity() { return piecewise_linear({0.0}, {1.0}, 0.0); }

Payoff Payoff::power_capped(double exponent, double cap) {
    if (!(exponent >= 1.0) || !std::isfinite(exponent)) throw InputError("payoff: power exponent must be >= 1");
    if (!(cap > 0.0)) throw InputError("payoff: power cap must be positive");
    return Payoff(payoff_kind::PowerCapped{exponent, cap});
}

Payoff Payoff::parse(std::string_view text) {
    auto colon = text.find(':');
    std::string_view head = text.substr(0, colon);
    std::string_view body = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
    if (head == "identity" || head == "linear") return identity();
    if (colon == std::string_view::npos)
        throw InputError("payoff: expected <kind>:<args>, got '" + std::string(text) + "'");
    if (head == "call") return call(parse_number(body, "strike"));
    if (head == "put") return put(parse_number(body, "strike"));
    if (head == "straddle") return straddle(parse_number(body, "strike"));
    if (head == "power") {
        auto parts = split(body, ',');
        if (parts.size() > 2) throw InputError("payoff: power expects p or p,cap");
        double cap = parts.size() == 2 ? parse_number(parts[1], "cap") : std::numeric_limits<double>::infinity();
        return power_capped(parse_number(parts[0], "exponent"), cap);
    }
    if (head == "pwl") {
        std::vector<double> xs, ss;
        std::optional<double> f0;
        for (auto pair : split(body, ';')) {
            if (pair.empty()) continue;
            if (pair.substr(0, 3) == "f0=") {
                f0 = parse_number(pair.substr(3), "f0");
                continue;
            }
            auto xy = split(pair, ',');
            if (xy.size() != 2) throw InputError("payoff: pwl pairs must be x,slope");
            xs.push_back(parse_number(xy[0], "breakpoint"));
            ss.push_back(parse_number(xy[1], "slope"));
        }
        if (f0) return piecewise_linear(std::move(xs), std::move(ss), *f0);
        return piecewise_linear_min_zero(std::move(xs), std::move(ss));
    }
    throw InputError("payoff: unknown kind '" + std::string(head) + "'");
}

double Payoff::f_at_zero() const { return eval(0.0); }

ExtendedReal Payoff::slope_at_infinity() const {
    return std::visit(
        [](const auto& k) -> ExtendedReal {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, payoff_kind::Call> || std::is_same_v<K, payoff_kind::Straddle>) {
                return 1.0;
            } else if constexpr (std::is_same_v<K, payoff_kind::Put>) {
                return 0.0;
            } else if constexpr (std::is_same_v<K, payoff_kind::PiecewiseLinear>) {
                return k.slopes.back();
            } else {
                if (std::isinf(k.cap)) return k.exponent == 1.0 ? ExtendedReal(1.0) : ExtendedReal(kInfinite);
                return k.exponent * std::pow(k.cap, k.exponent - 1.0);
            }
        },
        kind_);
}

bool Payoff::is_affine() const {
    if (const auto* k = std::get_if<payoff_kind::PiecewiseLinear>(&kind_))
        return std::all_of(k->slopes.begin(), k->slopes.end(), [&](double s) { return s == k->slopes.front(); });
    if (const auto* k = std::get_if<payoff_kind::PowerCapped>(&kind_)) return k->exponent == 1.0;
    return false;
}

std::string Payoff::to_string() const {
    std::ostringstream os;
    os.precision(17);
    std::visit(
        [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, payoff_kind::Call>) {
                os << "call:" << k.strike;
            } else if constexpr (std::is_same_v<K, payoff_kind::Put>) {
                os << "put:" << k.strike;
            } else if constexpr (std::is_same_v<K, payoff_kind::Straddle>) {
                os << "straddle:" << k.strike;
            } else if constexpr (std::is_same_v<K, payoff_kind::PiecewiseLinear>) {
                os << "pwl:";
                if (k.value_at_zero != -pwl_min_offset(k.breakpoints, k.slopes)) os << "f0=" << k.value_at_zero << ';';
                for (std::size_t i = 0; i < k.breakpoints.size(); ++i)
                    os << (i ? ";" : "") << k.breakpoints[i] << ',' << k.slopes[i];
            } else {
                os << "power:" << k.exponent;
                if (!std::isinf(k.cap)) os << ',' << k.cap;
            }
        },
        kind_);
    return os.str();
}

}  // namespace fixedcost
