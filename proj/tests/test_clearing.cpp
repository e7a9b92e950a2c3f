#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "marketlab/clearing.hpp"
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

}  // namespace

TEST_CASE("intercept clearing spot values") {
    SECTION("symmetric zero intercepts") {
        const StageOutcome st = clear_intercept_stage({0.0, 0.0}, 1.0, 4.0);
        CHECK(st.price == Catch::Approx(2.0));
        CHECK(st.gen_dispatch[0] == Catch::Approx(2.0));
        CHECK(st.gen_dispatch[1] == Catch::Approx(2.0));
    }
    SECTION("asymmetric intercepts") {
        const StageOutcome st = clear_intercept_stage({1.0, -1.0}, 1.0, 4.0);
        CHECK(st.price == Catch::Approx(2.0));
        CHECK(st.gen_dispatch[0] == Catch::Approx(1.0));
        CHECK(st.gen_dispatch[1] == Catch::Approx(3.0));
    }
    SECTION("single generator identity") {
        const StageOutcome st = clear_intercept_stage({0.0}, 2.0, 6.0);
        CHECK(st.price == Catch::Approx(3.0));
        CHECK(st.gen_dispatch[0] == Catch::Approx(6.0));
    }
}

TEST_CASE("intercept clearing balances and price is monotone in demand") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> beta(-5.0, 5.0);
    std::uniform_real_distribution<double> dm(-10.0, 400.0);
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 1 + static_cast<int>(rng() % 5);
        std::vector<double> betas;
        for (int j = 0; j < n; ++j) betas.push_back(beta(rng));
        const double slope = 0.1 + 5.0 * std::generate_canonical<double, 53>(rng);
        const double d1 = dm(rng);
        const double d2 = d1 + 0.5 + 10.0 * std::generate_canonical<double, 53>(rng);
        const StageOutcome a = clear_intercept_stage(betas, slope, d1);
        const StageOutcome b = clear_intercept_stage(betas, slope, d2);
        CHECK(std::abs(a.total_dispatch() - d1) <= balance_tol(d1));
        CHECK(b.price > a.price);
    }
}

TEST_CASE("slope clearing spot values and degeneracy") {
    SECTION("four equal slopes serve the PJM demand") {
        const StageOutcome st = clear_slope_stage({10.0, 10.0, 10.0, 10.0}, 332.0);
        CHECK(st.price == Catch::Approx(8.3));
        for (double g : st.gen_dispatch) CHECK(g == Catch::Approx(83.0));
    }
    SECTION("zero demand clears at zero price") {
        const StageOutcome st = clear_slope_stage({1.0}, 0.0);
        CHECK(st.price == 0.0);
        CHECK(st.gen_dispatch[0] == 0.0);
        CHECK_FALSE(st.degenerate);
    }
    SECTION("no supply against demand") {
        CHECK_THROWS_MATCHES(clear_slope_stage({0.0, 0.0}, 5.0), MarketError,
                             Catch::Matchers::Predicate<MarketError>([](const MarketError& e) {
                                 return e.code() == ErrorCode::DegeneratePrice;
                             }));
    }
    SECTION("no supply, no demand is flagged, not an error") {
        const StageOutcome st = clear_slope_stage({0.0, 0.0}, 0.0);
        CHECK(st.price == 0.0);
        CHECK(st.degenerate);
    }
}

TEST_CASE("social planner closed form") {
    SECTION("PJM scenario") {
        const MarketConfig cfg = make_cfg({0.1, 0.1, 0.1, 0.1}, {0.2, 25.6, 106.6, 199.6}, 10, 10);
        const PlannerSolution sol = social_planner(cfg);
        CHECK(sol.marginal_price == Catch::Approx(8.3).epsilon(1e-12));
        for (double g : sol.dispatch) CHECK(g == Catch::Approx(83.0).epsilon(1e-12));
    }
    SECTION("heterogeneous costs") {
        const MarketConfig cfg = make_cfg({1.0, 2.0}, {3.0}, 1, 1);
        const PlannerSolution sol = social_planner(cfg);
        CHECK(sol.marginal_price == Catch::Approx(2.0));
        CHECK(sol.dispatch[0] == Catch::Approx(2.0));
        CHECK(sol.dispatch[1] == Catch::Approx(1.0));
    }
    SECTION("zero demand") {
        const MarketConfig cfg = make_cfg({1.0, 2.0}, {0.0}, 1, 1);
        const PlannerSolution sol = social_planner(cfg);
        CHECK(sol.marginal_price == 0.0);
        CHECK(sol.dispatch[0] == 0.0);
        CHECK(sol.dispatch[1] == 0.0);
    }
}

TEST_CASE("social planner matches the projected-gradient oracle") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const auto cfg = oracles::random_config(rng);
        const PlannerSolution sol = social_planner(cfg);
        const auto brute = oracles::planner_dispatch(cfg);
        for (std::size_t j = 0; j < cfg.n_gens(); ++j)
            CHECK(sol.dispatch[j] == Catch::Approx(brute[j]).margin(1e-6 * std::max(1.0, cfg.total_demand)));
    }
}

TEST_CASE("augmented planner closed form and KKT residual") {
    SECTION("symmetric example") {
        const MarketConfig cfg = make_cfg({1.0, 1.0}, {2.0}, 1, 1);
        const StageOutcome st = augmented_planner(cfg, {0.0, 0.0}, 2.0);
        CHECK(st.price == Catch::Approx(2.0));
        CHECK(st.gen_dispatch[0] == Catch::Approx(1.0));
        CHECK(st.gen_dispatch[1] == Catch::Approx(1.0));
    }
    SECTION("zero residual demand from zero day-ahead") {
        const MarketConfig cfg = make_cfg({1.0, 1.0}, {2.0}, 1, 1);
        const StageOutcome st = augmented_planner(cfg, {0.0, 0.0}, 0.0);
        CHECK(st.price == 0.0);
        CHECK(st.gen_dispatch[0] == 0.0);
    }
    SECTION("one generator is rejected") {
        const MarketConfig cfg = make_cfg({1.0}, {2.0}, 1, 1);
        CHECK_THROWS_MATCHES(augmented_planner(cfg, {0.0}, 1.0), MarketError,
                             Catch::Matchers::Predicate<MarketError>([](const MarketError& e) {
                                 return e.code() == ErrorCode::TooFewGenerators;
                             }));
    }
    SECTION("KKT residual vanishes on random instances") {
        std::mt19937_64 rng(13);
        std::uniform_real_distribution<double> da(-20.0, 60.0);
        std::uniform_real_distribution<double> dr(-50.0, 200.0);
        for (int rep = 0; rep < 50; ++rep) {
            const auto cfg = oracles::random_config(rng);
            std::vector<double> gen_da;
            for (std::size_t j = 0; j < cfg.n_gens(); ++j) gen_da.push_back(da(rng));
            const double rt_demand = dr(rng);
            const StageOutcome st = augmented_planner(cfg, gen_da, rt_demand);
            const double k = 1.0 / (cfg.slope_rt * static_cast<double>(cfg.n_gens() - 1));
            for (std::size_t j = 0; j < cfg.n_gens(); ++j) {
                const double resid = st.gen_dispatch[j] * k - st.price +
                                     cfg.cost(j) * (gen_da[j] + st.gen_dispatch[j]);
                CHECK(std::abs(resid) < 1e-9 * std::max(1.0, std::abs(st.price)));
            }
            CHECK(std::abs(st.total_dispatch() - rt_demand) <= balance_tol(rt_demand));
        }
    }
    SECTION("matches the projected-gradient oracle") {
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> da(0.0, 40.0);
        for (int rep = 0; rep < 10; ++rep) {
            const auto cfg = oracles::random_config(rng);
            std::vector<double> gen_da;
            for (std::size_t j = 0; j < cfg.n_gens(); ++j) gen_da.push_back(da(rng));
            const double rt_demand = 30.0;
            const StageOutcome st = augmented_planner(cfg, gen_da, rt_demand);
            const auto brute = oracles::augmented_dispatch(cfg, gen_da, rt_demand);
            for (std::size_t j = 0; j < cfg.n_gens(); ++j)
                CHECK(st.gen_dispatch[j] == Catch::Approx(brute[j]).margin(1e-6 * 30.0));
        }
    }
}

TEST_CASE("default-bid clearing lands on the system marginal cost") {
    const MarketConfig cfg = make_cfg({0.5, 1.0, 0.8}, {20.0, 15.0}, 2, 2);
    const double lam = cfg.total_demand / cfg.sum_cost_inv;
    SECTION("day-ahead policy stage") {
        const StageOutcome st = clear_default_da(cfg, cfg.total_demand);
        CHECK(st.price == Catch::Approx(lam).epsilon(1e-12));
        CHECK(std::abs(st.total_dispatch() - cfg.total_demand) <= balance_tol(cfg.total_demand));
    }
    SECTION("real-time policy stage nets out day-ahead dispatch") {
        const std::vector<double> gen_da = {5.0, 1.0, 2.0};
        const double rt_demand = cfg.total_demand - 8.0;
        const StageOutcome st = clear_default_rt(cfg, gen_da, rt_demand);
        CHECK(st.price == Catch::Approx(lam).epsilon(1e-12));
        CHECK(std::abs(st.total_dispatch() - rt_demand) <= balance_tol(rt_demand));
    }
}
