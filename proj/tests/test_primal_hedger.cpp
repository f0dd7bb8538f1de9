#include <cmath>
#include <random>

#include "doctest.h"
#include "fixedcost/error.hpp"
#include "fixedcost/primal_hedger.hpp"

using namespace fixedcost;

TEST_CASE("replication tree deltas") {
    const auto affine_spec = BinomialSpec::make(100.0, 0.2, 6, 0.1);
    const auto affine = build_replication(affine_spec, Payoff::identity(), DualPolicy::uniform(6, 6));
    CHECK(affine.root().delta == doctest::Approx(1.0).epsilon(1e-13));

    const auto one = BinomialSpec::make(100.0, 0.2, 1, 0.0);
    const auto f = Payoff::call(100.0);
    const auto t = build_replication(one, f, DualPolicy::finest(1));
    CHECK(t.root().delta ==
          doctest::Approx((f(100 * one.up()) - f(100 * one.down())) / (100 * one.up() - 100 * one.down())).epsilon(1e-14));

    const auto three = BinomialSpec::make(100.0, 0.2, 3, 0.1);
    const auto sol = solve_dual(three, f);
    const auto tree = build_replication(three, f, sol.policy);
    CHECK(tree.root().value == doctest::Approx(sol.value).epsilon(1e-14));
}

TEST_CASE("delta replicates the child totals") {
    const auto spec = BinomialSpec::make(100.0, 0.2, 10, 0.05);
    const auto f = Payoff::straddle(100.0);
    const auto sol = solve_dual(spec, f);
    const auto tree = build_replication(spec, f, sol.policy);
    sol.policy.for_each([&](DualState s, RunChoice) {
        if (!tree.has_node(s)) return;
        const auto& node = tree.node(s);
        const double ds = node.price * (spec.up_pow(node.choice.up) - spec.up_pow(-node.choice.down));
        CHECK(node.delta * ds == doctest::Approx(node.up_total - node.down_total).epsilon(1e-12));
    });
}

TEST_CASE("hedge ledger on special paths") {
    const int n = 6;
    const auto spec = BinomialSpec::make(100.0, 0.2, n, 0.1);
    const auto f = Payoff::call(100.0);
    const auto finest = build_replication(spec, f, DualPolicy::finest(n));
    const auto up = run_hedge_on_path(finest, f, PathWord::parse("++++++"));
    CHECK(up.interventions.size() == static_cast<std::size_t>(n));
    CHECK(up.charges == doctest::Approx(0.1 * (n - 1)));
    CHECK_FALSE(up.interventions.front().charged);
    for (std::size_t i = 1; i < up.interventions.size(); ++i) CHECK(up.interventions[i].time > up.interventions[i - 1].time);

    // Root runs of 4: an alternating path never reaches +4 or -4 before the horizon.
    DualPolicy wide = DualPolicy::finest(n);
    wide.set({n, 0}, {4, 4});
    const auto tree = build_replication(spec, f, wide);
    const auto led = run_hedge_on_path(tree, f, PathWord::parse("+-+-+-"));
    CHECK(led.interventions.size() == 1);
    CHECK(led.charges == 0.0);

    CHECK_THROWS_AS(run_hedge_on_path(tree, f, PathWord::parse("+-+")), InputError);
}

TEST_CASE("ledger gains match an independent recomputation") {
    std::mt19937_64 rng(8);
    const auto spec = BinomialSpec::make(100.0, 0.3, 12, 0.05);
    const auto f = Payoff::put(105.0);
    const auto sol = solve_dual(spec, f);
    const auto tree = build_replication(spec, f, sol.policy);
    for (int i = 0; i < 300; ++i) {
        const auto led = run_hedge_on_path(tree, f, PathWord::from_bits(rng(), 12), 3.0);
        CHECK(led.recompute_gains(spec) == doctest::Approx(led.gains).epsilon(1e-12));
        CHECK(led.surplus == doctest::Approx(3.0 + led.gains - led.payoff).epsilon(1e-12));
        CHECK(led.terminal_price == doctest::Approx(terminal_price(spec, led.path)).epsilon(1e-14));
    }
}

TEST_CASE("frictionless gains are a martingale under the policy measure") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const auto spec = BinomialSpec::make(100.0, 0.2, 10, 0.1);
        DualPolicy p(10);
        for (int r = 1; r <= 10; ++r)
            for (int d = -(10 - r); d <= 10 - r; d += 2) {
                std::uniform_int_distribution<int> len(1, r);
                p.set({r, d}, {len(rng), len(rng)});
            }
        CHECK(std::abs(expected_trading_gains(build_replication(spec, Payoff::call(100.0), p))) <= 1e-10);
    }
}

TEST_CASE("pathwise super-replication") {
    const auto f = Payoff::call(100.0);
    const auto spec = BinomialSpec::make(100.0, 0.2, 10, 0.05);
    const double x = solve_dual(spec, f).value;
    const auto ok = verify_superreplication(spec, f, x, Exhaustive{});
    CHECK(ok.paths_checked == 1024);
    CHECK(ok.min_surplus >= -1e-9);

    const auto short_capital = verify_superreplication(spec, f, x - 0.01, Exhaustive{});
    CHECK(short_capital.min_surplus < 0.0);
    CHECK(short_capital.min_surplus == doctest::Approx(ok.min_surplus - 0.01).epsilon(1e-12));

    const auto free = spec.with_kappa(0.0);
    const auto exact = verify_superreplication(free, f, crr_price(free, f), Exhaustive{});
    CHECK(std::abs(exact.min_surplus) <= 1e-9);
    const auto tree = build_replication(free, f, solve_dual(free, f).policy);
    for (std::uint64_t bits = 0; bits < 1024; bits += 37)
        CHECK(std::abs(run_hedge_on_path(tree, f, PathWord::from_bits(bits, 10)).surplus) <= 1e-9);
}

TEST_CASE("sampled verification is deterministic") {
    const auto f = Payoff::straddle(100.0);
    const auto spec = BinomialSpec::make(100.0, 0.2, 30, 0.02);
    const double x = solve_dual(spec, f).value;
    const auto a = verify_superreplication(spec, f, x, Sampled{5000, 42});
    const auto b = verify_superreplication(spec, f, x, Sampled{5000, 42});
    CHECK(a.paths_checked == 5000);
    CHECK(a.min_surplus == b.min_surplus);
    CHECK(a.worst_path.to_string() == b.worst_path.to_string());
    CHECK(a.min_surplus >= -1e-9);
    CHECK_THROWS_AS(verify_superreplication(spec, f, x, Exhaustive{}), InputError);
    CHECK_THROWS_AS(verify_superreplication(spec, f, x, Sampled{0, 1}), InputError);
}

TEST_CASE("brute-force primal oracle") {
    const auto f = Payoff::call(100.0);
    const auto one = BinomialSpec::make(100.0, 0.2, 1, 0.3);
    CHECK(brute_force_primal(one, f).value == doctest::Approx(solve_dual(one, f).value).epsilon(1e-12));

    const auto two = BinomialSpec::make(100.0, 0.2, 2, 0.1);
    CHECK(std::abs(brute_force_primal(two, f).value - solve_dual(two, f).value) <= 1e-8);

    const auto three = BinomialSpec::make(100.0, 0.2, 3, 0.0);
    const auto put = Payoff::put(100.0);
    const auto r = brute_force_primal(three, put);
    CHECK(std::abs(r.value - crr_price(three, put)) <= 1e-8);
    CHECK(r.pattern.size() == 6);

    // A prohibitive cost leaves only the time-0 position.
    const auto costly = BinomialSpec::make(100.0, 0.2, 3, 100.0);
    const auto hold = brute_force_primal(costly, f);
    CHECK(hold.pattern.empty());
    CHECK(hold.value == doctest::Approx(solve_dual(costly, f).value).epsilon(1e-10));

    CHECK_THROWS_AS(brute_force_primal(BinomialSpec::make(100.0, 0.2, 4, 0.0), f), InputError);
}
