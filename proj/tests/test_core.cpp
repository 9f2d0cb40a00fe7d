#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "scrip/distribution.hpp"
#include "scrip/ledger.hpp"
#include "scrip/params.hpp"
#include "scrip/rational.hpp"
#include "scrip/rng.hpp"

using namespace scrip;

TEST_CASE("rational parsing and arithmetic") {
    CHECK(Rational::parse("0.2") == Rational(1, 5));
    CHECK(Rational::parse("1/5") == Rational(1, 5));
    CHECK(Rational::parse("2/5") == Rational(2, 5));
    CHECK(Rational::parse("-0.25") == Rational(-1, 4));
    CHECK(Rational::parse("3") == Rational(3));
    CHECK(Rational(2, 4) == Rational(1, 2));
    CHECK((Rational(1, 3) + Rational(1, 6)) == Rational(1, 2));
    CHECK((Rational(1, 2) * Rational(2, 3)) == Rational(1, 3));
    CHECK((Rational(1, 2) - Rational(2, 3)) == Rational(-1, 6));
    CHECK(Rational(1, 5).reciprocal() == Rational(5));
    CHECK(Rational(1, 3) < Rational(1, 2));
    CHECK_THROWS_AS(Rational(1, 0), RangeError);
    CHECK_THROWS_AS(Rational::parse("abc"), IrrationalReward);
}

TEST_CASE("rational overflow is detected") {
    Rational big(1000000007LL, 1);
    Rational huge = big * big;  // ~1e18, still fits
    CHECK_THROWS_AS(huge * big, RationalOverflow);
}

TEST_CASE("rational recovery from doubles") {
    CHECK(Rational::from_double(0.2) == Rational(1, 5));
    CHECK(Rational::from_double(0.4) == Rational(2, 5));
    CHECK(Rational::from_double(1.0 / 3.0) == Rational(1, 3));
    CHECK_THROWS_AS(Rational::from_double(3.14159265358979), IrrationalReward);
    CHECK_THROWS_AS(Rational::from_double(std::nan("")), IrrationalReward);
}

static GameParamsInput base_input() {
    GameParamsInput in;
    in.n = 1000;
    in.bad_prob = Rational(1, 5);
    in.alpha = 0.05;
    in.delta = 0.99;
    in.k = 5;
    in.total_tokens = 2000;
    return in;
}

TEST_CASE("validate_params derives the base unit") {
    SECTION("integral reward needs no subdivision") {
        GameParams p = validate_params(base_input());
        CHECK(p.unit() == 1);
        CHECK(p.reward_units() == 5);
        CHECK(p.cap_units() == 10);
    }
    SECTION("b = 1/3, k = 2") {
        GameParamsInput in = base_input();
        in.bad_prob = Rational(1, 3);
        in.k = 2;
        GameParams p = validate_params(in);
        CHECK(p.unit() == 1);
        CHECK(p.reward_units() == 3);
        CHECK(p.cap_units() == 5);
    }
    SECTION("b = 2/5 subdivides the token") {
        GameParamsInput in = base_input();
        in.bad_prob = Rational(2, 5);
        GameParams p = validate_params(in);
        CHECK(p.unit() == 2);       // 1 token = 2 units
        CHECK(p.reward_units() == 5);  // 2.5 tokens
    }
}

TEST_CASE("validate_params rejects out-of-range values") {
    auto in = base_input();
    in.delta = 1.0;
    CHECK_THROWS_AS(validate_params(in), RangeError);

    in = base_input();
    in.alpha = 0.0;
    CHECK_THROWS_AS(validate_params(in), RangeError);

    in = base_input();
    in.n = 0;
    CHECK_THROWS_AS(validate_params(in), RangeError);

    in = base_input();
    in.bad_prob = Rational(1);
    CHECK_THROWS_AS(validate_params(in), RangeError);

    in = base_input();
    in.k = -1;
    CHECK_THROWS_AS(validate_params(in), RangeError);

    // strategic setting requires kappa > 1 and beta*
    in = base_input();
    in.setting = Setting::Strategic;
    in.beta_star = Rational(1, 20);
    in.bad_prob.reset();
    in.kappa = 1.0;
    CHECK_THROWS_AS(validate_params(in), RangeError);
    in.kappa = 2.0;
    CHECK_NOTHROW(validate_params(in));

    // b and the strategic setting conflict
    in.bad_prob = Rational(1, 5);
    CHECK_THROWS_AS(validate_params(in), RangeError);

    // more tokens than the population can hold
    in = base_input();
    in.total_tokens = 10001;
    CHECK_THROWS_AS(validate_params(in), RangeError);
}

TEST_CASE("counter rng determinism and forking") {
    CounterRng a(42), b(42), c(43);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 100; ++i) {
        uint64_t x = a.next();
        all_equal = all_equal && x == b.next();
        any_diff = any_diff || x != c.next();
    }
    CHECK(all_equal);
    CHECK(any_diff);

    // forks are independent of parent consumption
    CounterRng p1(7), p2(7);
    (void)p1.next();
    CHECK(p1.fork(3).next() == p2.fork(3).next());
    CHECK(p1.fork(3).next() != p1.fork(4).next());
}

TEST_CASE("uniform_choice") {
    CounterRng rng(1);
    SECTION("singleton") {
        std::vector<int> pool{7};
        CHECK(uniform_choice(std::span<const int>(pool), rng) == 7);
    }
    SECTION("empty pool") {
        std::vector<int> pool;
        CHECK_THROWS_AS(uniform_choice(std::span<const int>(pool), rng), EmptyPool);
    }
    SECTION("frequencies on a fixed seed") {
        std::vector<int> pool{1, 2, 3, 4};
        std::array<long long, 5> counts{};
        const int draws = 1000000;
        for (int i = 0; i < draws; ++i) counts[static_cast<size_t>(uniform_choice(std::span<const int>(pool), rng))]++;
        double chi2 = 0;
        for (int v = 1; v <= 4; ++v) {
            double freq = static_cast<double>(counts[static_cast<size_t>(v)]) / draws;
            CHECK(freq == Catch::Approx(0.25).margin(0.002));
            double expect = draws / 4.0;
            chi2 += (counts[static_cast<size_t>(v)] - expect) * (counts[static_cast<size_t>(v)] - expect) / expect;
        }
        CHECK(chi2 < 16.27);  // chi-square(3) at the 0.1% level
    }
}

TEST_CASE("exact bernoulli hits its rational rate") {
    CounterRng rng(5);
    const Rational p(1, 5);
    long long hits = 0;
    const int draws = 1000000;
    for (int i = 0; i < draws; ++i) hits += rng.bernoulli(p) ? 1 : 0;
    CHECK(static_cast<double>(hits) / draws == Catch::Approx(0.2).margin(0.002));
}

TEST_CASE("ledger transfers conserve and respect bounds") {
    GameParams p = validate_params(base_input());
    std::vector<long long> h{3, 0, 9, 2};
    TokenLedger ledger(p.unit(), p.cap_units(), h);
    CHECK(ledger.total_units() == 14);
    ledger.transfer(0, 1, 1);
    CHECK(ledger.holdings_units(0) == 2);
    CHECK(ledger.holdings_units(1) == 1);
    CHECK(ledger.total_units() == 14);
    CHECK_THROWS_AS(ledger.transfer(1, 0, 5), RangeError);   // overdraw
    CHECK_THROWS_AS(ledger.transfer(0, 2, 2), RangeError);   // over cap
    CHECK_THROWS_AS(ledger.transfer(0, 0, 1), RangeError);   // self transfer
}

TEST_CASE("ledger level draws are uniform over the pool") {
    GameParams p = validate_params(base_input());
    // agents: 0,1 below k; 2,3 rich; 4 at zero
    TokenLedger ledger(p.unit(), p.cap_units(), {1, 4, 7, 9, 0});
    CounterRng rng(11);
    std::array<long long, 5> counts{};
    const int draws = 200000;
    for (int i = 0; i < draws; ++i) {
        AgentId a = ledger.draw_below(5, 1, rng);  // pool {0, 4} (1 excluded)
        counts[static_cast<size_t>(a)]++;
    }
    CHECK(counts[1] == 0);
    CHECK(counts[2] == 0);
    CHECK(static_cast<double>(counts[0]) / draws == Catch::Approx(0.5).margin(0.005));
    CHECK(static_cast<double>(counts[4]) / draws == Catch::Approx(0.5).margin(0.005));

    // empty pools report -1 without consuming draws
    CHECK(ledger.draw_at_least(10, -1, rng) == -1);
    TokenLedger solo(p.unit(), p.cap_units(), {3});
    CHECK(solo.draw_below(5, 0, rng) == -1);
}

TEST_CASE("recipient eligibility keeps holdings strictly below the cap") {
    GameParams p = validate_params(base_input());
    TokenLedger ledger(p.unit(), p.cap_units(), {9, 8, 0});
    CHECK_FALSE(ledger.recipient_eligible(0));  // 9 + 1 would reach the cap
    CHECK(ledger.recipient_eligible(1));
    CHECK(ledger.count_recipient_eligible() == 2);
}

TEST_CASE("distribution vector basics") {
    DistributionVector a(std::vector<double>{1.0, 0.0});
    DistributionVector b(std::vector<double>{0.0, 1.0});
    CHECK(euclidean_distance(a, a) == 0.0);
    CHECK(euclidean_distance(a, b) == Catch::Approx(std::sqrt(2.0)));

    DistributionVector c(std::vector<double>{0.5, 0.5});
    DistributionVector d(std::vector<double>{0.25, 0.75});
    CHECK(euclidean_distance(c, d) == Catch::Approx(0.3535533906).epsilon(1e-6));

    // shorter vectors are zero-padded
    DistributionVector e(std::vector<double>{1.0});
    CHECK(euclidean_distance(a, e) == 0.0);
    CHECK(euclidean_distance(b, e) == Catch::Approx(std::sqrt(2.0)));

    DistributionVector f(std::vector<double>{0.2, 0.3, 0.5});
    CHECK(f.is_normalized());
    CHECK(f.mean() == Catch::Approx(1.3));
    CHECK(f.mass_below(2) == Catch::Approx(0.5));
}
