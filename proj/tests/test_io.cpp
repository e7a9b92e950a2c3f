#include <catch2/catch_amalgamated.hpp>

#include "marketlab/io.hpp"

using namespace marketlab;

namespace {

MarketConfig pjm4() {
    MarketConfig cfg;
    for (int j = 1; j <= 4; ++j) cfg.generators.push_back({"G" + std::to_string(j), 0.1});
    cfg.loads = {{"L1", 0.2}, {"L2", 25.6}, {"L3", 106.6}, {"L4", 199.6}};
    cfg.slope_da = 10.0;
    cfg.slope_rt = 10.0;
    return validate_config(std::move(cfg));
}

}  // namespace

TEST_CASE("number formatting is stable and normalized") {
    CHECK(fmt_g12(8.3) == "8.3");
    CHECK(fmt_g12(-0.0) == "0");
    CHECK(fmt_g12(1.0 / 3.0) == "0.333333333333");
    CHECK(fmt_g12(332.0) == "332");
    CHECK(fmt_g12(1e-5) == "1e-05");
}

TEST_CASE("config parsing accepts numbers and decimal strings") {
    const auto j = Json::parse(R"({
        "generators": [{"id": "G1", "cost_coeff": "0.1"}, {"id": "G2", "cost_coeff": 0.1}],
        "loads": [{"id": "L1", "demand_mw": 10}],
        "slope_da": "2.5", "slope_rt": 2.5})");
    const MarketConfig cfg = config_from_json(j);
    CHECK(cfg.generators[0].cost_coeff == 0.1);
    CHECK(cfg.generators[1].cost_coeff == 0.1);
    CHECK(cfg.slope_da == 2.5);
}

TEST_CASE("config parsing rejects malformed documents") {
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"generators": []})")), MarketError);
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({
        "generators": [{"id": "G1", "cost_coeff": "abc"}],
        "loads": [{"id": "L1", "demand_mw": 1}],
        "slope_da": 1, "slope_rt": 1})")),
                    MarketError);
}

TEST_CASE("bid profiles round-trip through JSON") {
    const MarketConfig cfg = pjm4();
    const EquilibriumResult eq = nash_standard(cfg);
    const Json j = bids_to_json(eq.outcome.bids, cfg);
    const BidProfile back = bids_from_json(j, cfg);
    for (std::size_t i = 0; i < cfg.n_gens(); ++i) {
        CHECK(back.gen_da[i] == Catch::Approx(eq.outcome.bids.gen_da[i]).epsilon(1e-11));
        CHECK(back.gen_rt[i] == Catch::Approx(eq.outcome.bids.gen_rt[i]).epsilon(1e-11));
    }
    for (std::size_t l = 0; l < cfg.n_loads(); ++l)
        CHECK(back.load_da[l] == Catch::Approx(eq.outcome.bids.load_da[l]).epsilon(1e-11));
}

TEST_CASE("bid profiles enforce per-load totals") {
    const MarketConfig cfg = pjm4();
    Json j = bids_to_json(nash_standard(cfg).outcome.bids, cfg);
    j["load_da"]["L2"] = fmt_g12(999.0);
    CHECK_THROWS_MATCHES(bids_from_json(j, cfg), MarketError,
                         Catch::Matchers::Predicate<MarketError>([](const MarketError& e) {
                             return e.code() == ErrorCode::SplitMismatch;
                         }));
}

TEST_CASE("clear_from_bids reconstructs solver outcomes per regime") {
    const MarketConfig cfg = pjm4();
    for (const auto regime : {Regime::Standard, Regime::RtMPM, Regime::DaMPM, Regime::SlopeStandard}) {
        const EquilibriumResult eq = solve_equilibrium(cfg, regime, Behavior::Nash);
        const TwoStageOutcome re = clear_from_bids(eq.outcome.bids, cfg, regime);
        INFO(regime_name(regime));
        CHECK(re.day_ahead.price ==
              Catch::Approx(eq.outcome.day_ahead.price).margin(1e-9 * 332.0));
        CHECK(re.real_time.price ==
              Catch::Approx(eq.outcome.real_time.price).margin(1e-9 * 332.0));
        for (std::size_t j = 0; j < cfg.n_gens(); ++j)
            CHECK(re.gen_total(j) == Catch::Approx(eq.outcome.gen_total(j)).margin(1e-9 * 332.0));
    }
}

TEST_CASE("equilibrium reports serialize deterministically") {
    const MarketConfig cfg = pjm4();
    const EquilibriumResult eq = nash_da_mpm(cfg);
    const SettlementReport s = settle(eq.outcome, cfg);
    const std::string a = equilibrium_to_json(eq, s, cfg).dump(2);
    const std::string b = equilibrium_to_json(nash_da_mpm(cfg), settle(eq.outcome, cfg), cfg).dump(2);
    CHECK(a == b);
    CHECK(a.find("\"real_time\": \"8.715\"") != std::string::npos);
}

TEST_CASE("sweep grid serialization") {
    SweepGrid g;
    g.name = "demo";
    g.x_label = "x";
    g.y_label = "y";
    g.x_values = {1.0, 2.0};
    g.y_values = {3.0};
    g.cells = {{std::optional<double>(0.5), std::nullopt}};
    g.metric = SweepMetric::CostRatio;

    SECTION("CSV uses nulls for absent cells") {
        CHECK(grids_to_csv({g}) == "x,y,value\n1,3,0.5\n2,3,null\n");
    }
    SECTION("JSON mirrors the grid with nulls") {
        const Json j = grid_to_json(g);
        CHECK(j["cells"][0][0] == "0.5");
        CHECK(j["cells"][0][1].is_null());
        CHECK(j["metric"] == "cost_ratio");
    }
    SECTION("multiple grids are separated by comment headers") {
        SweepGrid h = g;
        h.name = "other";
        const std::string csv = grids_to_csv({g, h});
        CHECK(csv.find("# grid demo\n") != std::string::npos);
        CHECK(csv.find("# grid other\n") != std::string::npos);
    }
}

TEST_CASE("verification report text is deterministic") {
    const MarketConfig cfg = pjm4();
    const EquilibriumResult eq = nash_rt_mpm(cfg);
    const VerificationReport rep = verify_equilibrium(eq, cfg, 1e-5);
    const std::string a = verification_to_text(rep, eq);
    const std::string b = verification_to_text(verify_equilibrium(eq, cfg, 1e-5), eq);
    CHECK(a == b);
    CHECK(a.find("verdict: VERIFIED") != std::string::npos);
}
