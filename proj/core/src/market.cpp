#include "fixedcost/market.hpp"

#include <numeric>

#include "fixedcost/error.hpp"

namespace fixedcost {

BinomialSpec BinomialSpec::make(double s0, double sigma, int n, double kappa) {
    BinomialSpec spec{s0, sigma, n, kappa};
    spec.validate();
    return spec;
}

void BinomialSpec::validate() const {
    if (!(s0 > 0.0) || !std::isfinite(s0)) throw InputError("market: s0 must be positive");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InputError("market: sigma must be positive");
    if (n < 1) throw InputError("market: n must be a positive integer");
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw InputError("market: kappa must be nonnegative");
}

PathWord PathWord::from_bits(std::uint64_t bits, int n) {
    PathWord w;
    w.steps.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) w.steps[static_cast<std::size_t>(i)] = ((bits >> i) & 1U) ? 1 : -1;
    return w;
}

PathWord PathWord::parse(std::string_view text) {
    PathWord w;
    for (char c : text) {
        if (c == '+' || c == 'u' || c == 'U') {
            w.steps.push_back(1);
        } else if (c == '-' || c == 'd' || c == 'D') {
            w.steps.push_back(-1);
        } else {
            throw InputError(std::string("path: unexpected character '") + c + "'");
        }
    }
    return w;
}

int PathWord::displacement() const { return std::accumulate(steps.begin(), steps.end(), 0); }

std::string PathWord::to_string() const {
    std::string s;
    s.reserve(steps.size());
    for (auto z : steps) s.push_back(z > 0 ? '+' : '-');
    return s;
}

double terminal_price(const BinomialSpec& spec, const PathWord& path) {
    if (path.size() != spec.n)
        throw InputError("terminal_price: path length " + std::to_string(path.size()) + " != n = " +
                         std::to_string(spec.n));
    return spec.price_at(path.displacement());
}

double crr_price(const BinomialSpec& spec, const Payoff& payoff) {
    spec.validate();
    const double u = spec.up();
    const double d = spec.down();
    const double p = (1.0 - d) / (u - d);
    const int n = spec.n;
    // values[i] holds the node with displacement 2i - level.
    std::vector<double> values(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) values[static_cast<std::size_t>(i)] = payoff(spec.price_at(2 * i - n));
    for (int level = n - 1; level >= 0; --level)
        for (int i = 0; i <= level; ++i)
            values[static_cast<std::size_t>(i)] =
                p * values[static_cast<std::size_t>(i) + 1] + (1.0 - p) * values[static_cast<std::size_t>(i)];
    return values[0];
}

ExtendedReal buy_and_hold_bound(double s0, const Payoff& payoff) {
    ExtendedReal slope = payoff.slope_at_infinity();
    if (slope.is_infinite()) return kInfinite;
    return payoff.f_at_zero() + s0 * slope.value();
}

}  // namespace fixedcost
