#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "marketlab/equilibria.hpp"
#include "marketlab/settlement.hpp"
#include "oracles.hpp"

using namespace marketlab;

namespace {

MarketConfig make_cfg(std::vector<double> costs, std::vector<double> demands, double bd, double br) {
    MarketConfig cfg;
    for (std::size_t j = 0; j < costs.size(); ++j)
        cfg.generators.push_back({"G" + std::to_string(j + 1), costs[j]});
    for (std::size_t l = 0; l < demands.size(); ++l)
        cfg.loads.push_back({"L" + std::to_string(l + 1), demands[l]});
    cfg.slope_da = bd;
    cfg.slope_rt = br;
    return validate_config(std::move(cfg));
}

MarketConfig pjm4() { return make_cfg({0.1, 0.1, 0.1, 0.1}, {0.2, 25.6, 106.6, 199.6}, 10, 10); }

}  // namespace

TEST_CASE("settle reproduces hand-computed profits") {
    SECTION("competitive PJM scenario") {
        const MarketConfig cfg = pjm4();
        const EquilibriumResult eq = competitive_standard(cfg);
        const SettlementReport s = settle(eq.outcome, cfg);
        for (double pi : s.profits) CHECK(pi == Catch::Approx(344.45).epsilon(1e-12));
        CHECK(s.social_cost == Catch::Approx(4.0 * 0.05 * 83.0 * 83.0).epsilon(1e-12));
    }
    SECTION("zero demand settles to zeros") {
        const MarketConfig cfg = make_cfg({1.0, 1.0}, {0.0}, 1, 1);
        const SettlementReport s = settle(competitive_standard(cfg).outcome, cfg);
        CHECK(s.aggregate_profit == 0.0);
        CHECK(s.aggregate_payment == 0.0);
        CHECK(s.social_cost == 0.0);
    }
    SECTION("two generators, equal split, unit price") {
        MarketConfig cfg = make_cfg({1.0, 1.0}, {2.0}, 1, 1);
        TwoStageOutcome out;
        out.day_ahead.price = 1.0;
        out.real_time.price = 1.0;
        out.day_ahead.gen_dispatch = {0.5, 0.5};
        out.real_time.gen_dispatch = {0.5, 0.5};
        out.day_ahead.load_alloc = {1.0};
        out.real_time.load_alloc = {1.0};
        const SettlementReport s = settle(out, cfg);
        CHECK(s.profits[0] == Catch::Approx(0.5));
        CHECK(s.profits[1] == Catch::Approx(0.5));
    }
}

TEST_CASE("settlement aggregates and merchandising surplus identities") {
    std::mt19937_64 rng(23);
    for (int rep = 0; rep < 40; ++rep) {
        const MarketConfig cfg = oracles::random_config(rng);
        const EquilibriumResult eq = nash_rt_mpm(cfg);
        const SettlementReport s = settle(eq.outcome, cfg);
        double prof = 0.0, pay = 0.0;
        for (double v : s.profits) prof += v;
        for (double v : s.payments) pay += v;
        CHECK(s.aggregate_profit == Catch::Approx(prof).margin(1e-12 * std::max(1.0, std::abs(prof))));
        CHECK(s.aggregate_payment == Catch::Approx(pay).margin(1e-12 * std::max(1.0, std::abs(pay))));
        // both stages clear at uniform prices, so payments equal generator revenue
        const auto& o = eq.outcome;
        const double revenue = o.day_ahead.price * o.day_ahead.total_dispatch() +
                               o.real_time.price * o.real_time.total_dispatch();
        CHECK(std::abs(s.aggregate_payment - revenue) <= balance_tol(s.aggregate_payment));
    }
}

TEST_CASE("normalized metrics spot values") {
    SECTION("day-ahead policy, homogeneous duopoly") {
        // b^r = 1/c, |G|=2, |L|=1: profit ratio 3/4, cost ratio 1
        const MarketConfig cfg = make_cfg({1.0, 1.0}, {5.0}, 1.0, 1.0);
        const NormalizedMetrics m = normalized_metrics(settle(nash_da_mpm(cfg).outcome, cfg),
                                                       settle(competitive_da_mpm(cfg).outcome, cfg));
        CHECK(m.profit_ratio == Catch::Approx(0.75).epsilon(1e-12));
        CHECK(m.cost_ratio == Catch::Approx(1.0).epsilon(1e-12));
    }
    SECTION("standard market, homogeneous duopoly") {
        // b^d = b^r = 1/c, |G|=2, |L|=1: payment ratio 1 + 31/49
        const MarketConfig cfg = make_cfg({1.0, 1.0}, {5.0}, 1.0, 1.0);
        const NormalizedMetrics m = normalized_metrics(settle(nash_standard(cfg).outcome, cfg),
                                                       settle(competitive_standard(cfg).outcome, cfg));
        CHECK(m.payment_ratio == Catch::Approx(1.0 + 31.0 / 49.0).epsilon(1e-12));
    }
    SECTION("zero competitive aggregates raise DivisionByZero") {
        const MarketConfig cfg = make_cfg({1.0, 1.0}, {0.0}, 1, 1);
        const SettlementReport z = settle(competitive_standard(cfg).outcome, cfg);
        CHECK_THROWS_MATCHES(normalized_metrics(z, z), MarketError,
                             Catch::Matchers::Predicate<MarketError>([](const MarketError& e) {
                                 return e.code() == ErrorCode::DivisionByZero;
                             }));
    }
}

TEST_CASE("heterogeneity delta") {
    SECTION("homogeneous fleets have zero delta") {
        CHECK(heterogeneity_delta(make_cfg({1.0, 1.0, 1.0}, {3.0}, 1, 0.7)) ==
              Catch::Approx(0.0).margin(1e-15));
        CHECK(heterogeneity_delta(pjm4()) == Catch::Approx(0.0).margin(1e-15));
    }
    SECTION("hand-computed heterogeneous value") {
        // c=(1,2), b^r=1: C=(2,3), delta = 1/4 + 2/9 - (5/6)^2/(3/2) = 1/108
        const MarketConfig cfg = make_cfg({1.0, 2.0}, {3.0}, 1, 1);
        CHECK(heterogeneity_delta(cfg) == Catch::Approx(1.0 / 108.0).epsilon(1e-12));
    }
    SECTION("single generator is rejected") {
        const MarketConfig cfg = make_cfg({1.0}, {3.0}, 1, 1);
        CHECK_THROWS_MATCHES(heterogeneity_delta(cfg), MarketError,
                             Catch::Matchers::Predicate<MarketError>([](const MarketError& e) {
                                 return e.code() == ErrorCode::TooFewGenerators;
                             }));
    }
    SECTION("delta is nonnegative (Cauchy-Schwarz)") {
        std::mt19937_64 rng(29);
        for (int rep = 0; rep < 100; ++rep)
            CHECK(heterogeneity_delta(oracles::random_config(rng)) >= -1e-15);
    }
}

TEST_CASE("published ratio formulas match settle()-based ratios") {
    std::mt19937_64 rng(31);
    SECTION("day-ahead policy row, heterogeneous and homogeneous") {
        for (int rep = 0; rep < 60; ++rep) {
            oracles::ScenarioOptions opt;
            opt.homogeneous = (rep % 2 == 0);
            const MarketConfig cfg = oracles::random_config(rng, opt);
            const NormalizedMetrics m = normalized_metrics(settle(nash_da_mpm(cfg).outcome, cfg),
                                                           settle(competitive_da_mpm(cfg).outcome, cfg));
            const oracles::RatioRow row = oracles::da_mpm_ratios(cfg);
            CHECK(m.cost_ratio == Catch::Approx(row.cost_ratio).margin(1e-9));
            CHECK(m.profit_ratio == Catch::Approx(row.profit_ratio).margin(1e-9));
            CHECK(m.payment_ratio == Catch::Approx(row.payment_ratio).margin(1e-9));
        }
    }
    SECTION("standard market row, homogeneous") {
        for (int rep = 0; rep < 60; ++rep) {
            oracles::ScenarioOptions opt;
            opt.homogeneous = true;
            const MarketConfig cfg = oracles::random_config(rng, opt);
            const NormalizedMetrics m = normalized_metrics(settle(nash_standard(cfg).outcome, cfg),
                                                           settle(competitive_standard(cfg).outcome, cfg));
            const auto [dd, dr] = load_split_standard(cfg);
            const oracles::RatioRow row = oracles::standard_ratios(cfg, dd, dr);
            CHECK(m.cost_ratio == Catch::Approx(1.0).margin(1e-9));
            CHECK(m.profit_ratio == Catch::Approx(row.profit_ratio).margin(1e-9));
            CHECK(m.payment_ratio == Catch::Approx(row.payment_ratio).margin(1e-9));
        }
    }
}

TEST_CASE("aggregate profit orderings") {
    std::mt19937_64 rng(37);
    SECTION("day-ahead policy mitigates: Nash profit below competitive") {
        for (int rep = 0; rep < 100; ++rep) {
            const MarketConfig cfg = oracles::random_config(rng);
            const double ne = settle(nash_da_mpm(cfg).outcome, cfg).aggregate_profit;
            const double ce = settle(competitive_da_mpm(cfg).outcome, cfg).aggregate_profit;
            CHECK(ne < ce);
        }
    }
    SECTION("standard market: Nash profit above competitive") {
        for (int rep = 0; rep < 100; ++rep) {
            oracles::ScenarioOptions opt;
            opt.homogeneous = true;
            const MarketConfig cfg = oracles::random_config(rng, opt);
            const double ne = settle(nash_standard(cfg).outcome, cfg).aggregate_profit;
            const double ce = settle(competitive_standard(cfg).outcome, cfg).aggregate_profit;
            CHECK(ne > ce);
        }
    }
}
