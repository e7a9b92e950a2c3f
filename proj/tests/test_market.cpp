#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <random>

#include "marketlab/io.hpp"
#include "marketlab/market.hpp"

using namespace marketlab;

namespace {

MarketConfig pjm4() {
    MarketConfig cfg;
    for (int j = 1; j <= 4; ++j) cfg.generators.push_back({"G" + std::to_string(j), 0.1});
    cfg.loads = {{"L1", 0.2}, {"L2", 25.6}, {"L3", 106.6}, {"L4", 199.6}};
    cfg.slope_da = 10.0;
    cfg.slope_rt = 10.0;
    return cfg;
}

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = std::string("mkt_test_") + name;
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("validate_config accepts the PJM scenario and caches aggregates") {
    const MarketConfig cfg = validate_config(pjm4());
    CHECK(cfg.total_demand == Catch::Approx(332.0).epsilon(1e-12));
    CHECK(cfg.sum_cost_inv == Catch::Approx(40.0).epsilon(1e-12));
}

TEST_CASE("validate_config accepts a minimal well-formed config") {
    MarketConfig cfg;
    cfg.generators = {{"g", 1.0}};
    cfg.loads = {{"l", 1.0}};
    cfg.slope_da = 1.0;
    cfg.slope_rt = 1.0;
    CHECK_NOTHROW(validate_config(cfg));
}

TEST_CASE("validate_config rejects bad inputs") {
    MarketConfig cfg = pjm4();
    SECTION("zero day-ahead slope") {
        cfg.slope_da = 0.0;
        CHECK_THROWS_MATCHES(validate_config(cfg), MarketError,
                             Catch::Matchers::Predicate<MarketError>([](const MarketError& e) {
                                 return e.code() == ErrorCode::InvalidSlope;
                             }));
    }
    SECTION("nonpositive cost") {
        cfg.generators[1].cost_coeff = -0.5;
        CHECK_THROWS_MATCHES(validate_config(cfg), MarketError,
                             Catch::Matchers::Predicate<MarketError>([](const MarketError& e) {
                                 return e.code() == ErrorCode::InvalidCost;
                             }));
    }
    SECTION("no participants") {
        cfg.loads.clear();
        CHECK_THROWS_MATCHES(validate_config(cfg), MarketError,
                             Catch::Matchers::Predicate<MarketError>([](const MarketError& e) {
                                 return e.code() == ErrorCode::EmptyParticipants;
                             }));
    }
    SECTION("negative demand") {
        cfg.loads[0].demand = -3.0;
        CHECK_THROWS_MATCHES(validate_config(cfg), MarketError,
                             Catch::Matchers::Predicate<MarketError>([](const MarketError& e) {
                                 return e.code() == ErrorCode::NegativeDemand;
                             }));
    }
}

TEST_CASE("cached sum of inverse costs matches independent summation") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> cost(0.05, 2.0);
    for (int rep = 0; rep < 50; ++rep) {
        MarketConfig cfg;
        const int n = 2 + static_cast<int>(rng() % 5);
        for (int j = 0; j < n; ++j) cfg.generators.push_back({"G" + std::to_string(j), cost(rng)});
        cfg.loads = {{"L1", 10.0}};
        cfg.slope_da = cfg.slope_rt = 1.0;
        const MarketConfig v = validate_config(cfg);
        double expected = 0.0;
        for (const auto& g : v.generators) expected += 1.0 / g.cost_coeff;
        CHECK(v.sum_cost_inv == Catch::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("config JSON round-trip preserves equality") {
    const MarketConfig cfg = validate_config(pjm4());
    const MarketConfig back = config_from_json(config_to_json(cfg));
    REQUIRE(back.n_gens() == cfg.n_gens());
    REQUIRE(back.n_loads() == cfg.n_loads());
    for (std::size_t j = 0; j < cfg.n_gens(); ++j) {
        CHECK(back.generators[j].id == cfg.generators[j].id);
        CHECK(back.generators[j].cost_coeff == cfg.generators[j].cost_coeff);
    }
    for (std::size_t l = 0; l < cfg.n_loads(); ++l) {
        CHECK(back.loads[l].id == cfg.loads[l].id);
        CHECK(back.loads[l].demand == cfg.loads[l].demand);
    }
    CHECK(back.slope_da == cfg.slope_da);
    CHECK(back.slope_rt == cfg.slope_rt);
}

TEST_CASE("demand CSV ingestion") {
    SECTION("PJM rows parse in order") {
        const auto path = write_temp("pjm.csv", "load_id,demand_mw\nL1,0.2\nL2,25.6\nL3,106.6\nL4,199.6\n");
        const auto loads = load_demand_bids(path);
        REQUIRE(loads.size() == 4);
        CHECK(loads[0].id == "L1");
        CHECK(loads[3].demand == Catch::Approx(199.6));
        double sum = 0.0;
        for (const auto& l : loads) sum += l.demand;
        CHECK(sum == Catch::Approx(332.0));
        std::remove(path.c_str());
    }
    SECTION("empty file after header") {
        const auto path = write_temp("empty.csv", "load_id,demand_mw\n");
        CHECK_THROWS_MATCHES(load_demand_bids(path), MarketError,
                             Catch::Matchers::Predicate<MarketError>([](const MarketError& e) {
                                 return e.code() == ErrorCode::EmptyParticipants;
                             }));
        std::remove(path.c_str());
    }
    SECTION("negative demand row") {
        const auto path = write_temp("neg.csv", "load_id,demand_mw\nL1,-3\n");
        CHECK_THROWS_MATCHES(load_demand_bids(path), MarketError,
                             Catch::Matchers::Predicate<MarketError>([](const MarketError& e) {
                                 return e.code() == ErrorCode::NegativeDemand;
                             }));
        std::remove(path.c_str());
    }
    SECTION("malformed row") {
        const auto path = write_temp("bad.csv", "load_id,demand_mw\nL1;3\n");
        CHECK_THROWS_MATCHES(load_demand_bids(path), MarketError,
                             Catch::Matchers::Predicate<MarketError>([](const MarketError& e) {
                                 return e.code() == ErrorCode::ParseError;
                             }));
        std::remove(path.c_str());
    }
}
