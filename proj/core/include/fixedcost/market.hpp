#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fixedcost/payoff.hpp"

namespace fixedcost {

/// n-step symmetric binomial market S_k = s0 * u^(sum of steps), u = exp(sigma/sqrt(n)), d = 1/u.
/// No interest, no dividends. kappa is the fixed charge per interior transaction.
struct BinomialSpec {
    double s0 = 100.0;
    double sigma = 0.2;
    int n = 1;
    double kappa = 0.0;

    /// Validated constructor.
    static BinomialSpec make(double s0, double sigma, int n, double kappa);
    void validate() const;

    /// Log-price increment per lattice step, sigma/sqrt(n).
    [[nodiscard]] double log_step() const { return sigma / std::sqrt(static_cast<double>(n)); }
    [[nodiscard]] double up() const { return std::exp(log_step()); }
    [[nodiscard]] double down() const { return std::exp(-log_step()); }
    /// u^k for any integer k, computed directly (no cumulative products).
    [[nodiscard]] double up_pow(int k) const { return std::exp(k * log_step()); }
    /// Price at net displacement disp: s0 * u^disp.
    [[nodiscard]] double price_at(int disp) const { return s0 * up_pow(disp); }

    [[nodiscard]] BinomialSpec with_kappa(double k) const {
        BinomialSpec s = *this;
        s.kappa = k;
        return s;
    }
};

/// Sequence of +1/-1 lattice moves.
struct PathWord {
    std::vector<std::int8_t> steps;

    /// Bit i of `bits` set -> step i is +1.
    static PathWord from_bits(std::uint64_t bits, int n);
    /// Parses "+-+-..." (also accepts 'u'/'d').
    static PathWord parse(std::string_view text);

    [[nodiscard]] int size() const { return static_cast<int>(steps.size()); }
    [[nodiscard]] int displacement() const;
    [[nodiscard]] std::string to_string() const;
};

/// s0 * exp(sigma/sqrt(n) * sum of steps). Throws InputError on length mismatch.
double terminal_price(const BinomialSpec& spec, const PathWord& path);

/// Frictionless binomial price E[f(S_n)] under the one-step martingale probability (1-d)/(u-d).
double crr_price(const BinomialSpec& spec, const Payoff& payoff);

/// f(0) + s0 * f'(inf): cost of the static buy-and-hold super-hedge.
ExtendedReal buy_and_hold_bound(double s0, const Payoff& payoff);

}  // namespace fixedcost
