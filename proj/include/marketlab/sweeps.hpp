// Parameter-sweep grids: Nash/competitive ratios over participant counts,
// day-ahead allocation over bid slopes, and the intercept-vs-slope mechanism
// comparison.
#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "marketlab/equilibria.hpp"
#include "marketlab/market.hpp"
#include "marketlab/settlement.hpp"

namespace marketlab {

enum class SweepMetric { ProfitRatio, PaymentRatio, CostRatio, NormalizedDaAllocation };

inline const char* metric_name(SweepMetric m) {
    switch (m) {
        case SweepMetric::ProfitRatio: return "profit_ratio";
        case SweepMetric::PaymentRatio: return "payment_ratio";
        case SweepMetric::CostRatio: return "cost_ratio";
        case SweepMetric::NormalizedDaAllocation: return "normalized_da_allocation";
    }
    return "?";
}

// Absent cells (solver preconditions unmet for that coordinate) stay nullopt
// and serialize as nulls, never zeros.
struct SweepGrid {
    std::string name;
    std::string x_label;
    std::string y_label;
    std::vector<double> x_values;
    std::vector<double> y_values;
    std::vector<std::vector<std::optional<double>>> cells;  // cells[yi][xi]
    SweepMetric metric = SweepMetric::ProfitRatio;
};

namespace detail {

// Rebuilds the market at a sweep coordinate: n_g homogeneous generators,
// n_l equal loads carrying the base aggregate demand, explicit slopes.
inline MarketConfig resize_market(double cost, double total_demand, int n_g, int n_l, double bd,
                                  double br) {
    MarketConfig cfg;
    for (int j = 0; j < n_g; ++j) cfg.generators.push_back({"G" + std::to_string(j + 1), cost});
    for (int l = 0; l < n_l; ++l)
        cfg.loads.push_back({"L" + std::to_string(l + 1), total_demand / n_l});
    cfg.slope_da = bd;
    cfg.slope_rt = br;
    return validate_config(cfg);
}

inline std::optional<double> ratio_cell(const MarketConfig& cfg, Regime regime, SweepMetric metric) {
    try {
        const EquilibriumResult ne = solve_equilibrium(cfg, regime, Behavior::Nash);
        if (metric == SweepMetric::NormalizedDaAllocation) {
            if (cfg.total_demand == 0.0) return std::nullopt;
            return ne.outcome.day_ahead.total_alloc() / cfg.total_demand;
        }
        const EquilibriumResult ce = solve_equilibrium(cfg, regime, Behavior::Competitive);
        const NormalizedMetrics m = normalized_metrics(settle(ne.outcome, cfg), settle(ce.outcome, cfg));
        switch (metric) {
            case SweepMetric::ProfitRatio: return m.profit_ratio;
            case SweepMetric::PaymentRatio: return m.payment_ratio;
            case SweepMetric::CostRatio: return m.cost_ratio;
            default: return std::nullopt;
        }
    } catch (const MarketError&) {
        return std::nullopt;
    }
}

}  // namespace detail

// Nash-vs-competitive ratio grid over participant counts at b^d = b^r = 1/c.
// The base config supplies the (homogeneous) cost and the aggregate demand,
// redistributed equally over each cell's loads.
inline SweepGrid sweep_participants(const MarketConfig& base, const std::vector<int>& g_range,
                                    const std::vector<int>& l_range, Regime regime,
                                    SweepMetric metric) {
    if (!is_homogeneous(base))
        throw MarketError(ErrorCode::HeterogeneousUnsupported,
                          "participant sweeps rebuild the fleet from one cost coefficient");
    const double c = base.cost(0);
    const double b = 1.0 / c;

    SweepGrid grid;
    grid.name = std::string("participants_") + regime_name(regime);
    grid.x_label = "num_generators";
    grid.y_label = "num_loads";
    grid.metric = metric;
    for (int g : g_range) grid.x_values.push_back(g);
    for (int l : l_range) grid.y_values.push_back(l);
    grid.cells.resize(l_range.size());
    for (std::size_t yi = 0; yi < l_range.size(); ++yi) {
        for (std::size_t xi = 0; xi < g_range.size(); ++xi) {
            if (g_range[xi] < 1 || l_range[yi] < 1) {
                grid.cells[yi].push_back(std::nullopt);
                continue;
            }
            const MarketConfig cfg =
                detail::resize_market(c, base.total_demand, g_range[xi], l_range[yi], b, b);
            grid.cells[yi].push_back(detail::ratio_cell(cfg, regime, metric));
        }
    }
    return grid;
}

// Normalized day-ahead allocation d^d/d of the standard-market Nash
// equilibrium over a (b^d, b^r) grid (closed form via the equilibrium split).
inline SweepGrid sweep_slopes(const MarketConfig& cfg, const std::vector<double>& bd_range,
                              const std::vector<double>& br_range) {
    SweepGrid grid;
    grid.name = "slopes_standard";
    grid.x_label = "slope_da";
    grid.y_label = "slope_rt";
    grid.metric = SweepMetric::NormalizedDaAllocation;
    grid.x_values = bd_range;
    grid.y_values = br_range;
    grid.cells.resize(br_range.size());
    for (std::size_t yi = 0; yi < br_range.size(); ++yi) {
        for (std::size_t xi = 0; xi < bd_range.size(); ++xi) {
            if (!(bd_range[xi] > 0.0) || !(br_range[yi] > 0.0)) {
                grid.cells[yi].push_back(std::nullopt);
                continue;
            }
            MarketConfig c2 = cfg;
            c2.slope_da = bd_range[xi];
            c2.slope_rt = br_range[yi];
            c2 = validate_config(std::move(c2));
            try {
                const auto [dd, dr] = load_split_standard(c2);
                (void)dr;
                grid.cells[yi].push_back(c2.total_demand > 0.0 ? std::optional<double>(dd / c2.total_demand)
                                                               : std::nullopt);
            } catch (const MarketError&) {
                grid.cells[yi].push_back(std::nullopt);
            }
        }
    }
    return grid;
}

// Mechanism comparison: one intercept-bid profit-ratio grid per slope value
// b (with b^d = b^r = b), plus one grid for the slope-bid mechanism.
inline std::vector<SweepGrid> compare_mechanisms(const MarketConfig& base,
                                                 const std::vector<double>& b_values,
                                                 const std::vector<int>& g_range,
                                                 const std::vector<int>& l_range) {
    if (!is_homogeneous(base))
        throw MarketError(ErrorCode::HeterogeneousUnsupported,
                          "mechanism comparison rebuilds the fleet from one cost coefficient");
    const double c = base.cost(0);

    std::vector<SweepGrid> grids;
    for (double b : b_values) {
        if (!(b > 0.0)) throw MarketError(ErrorCode::InvalidSlope, "slope values must be > 0");
        SweepGrid grid;
        char buf[64];
        std::snprintf(buf, sizeof buf, "intercept_b=%.6g", b);
        grid.name = buf;
        grid.x_label = "num_generators";
        grid.y_label = "num_loads";
        grid.metric = SweepMetric::ProfitRatio;
        for (int g : g_range) grid.x_values.push_back(g);
        for (int l : l_range) grid.y_values.push_back(l);
        grid.cells.resize(l_range.size());
        for (std::size_t yi = 0; yi < l_range.size(); ++yi)
            for (std::size_t xi = 0; xi < g_range.size(); ++xi) {
                if (g_range[xi] < 1 || l_range[yi] < 1) {
                    grid.cells[yi].push_back(std::nullopt);
                    continue;
                }
                const MarketConfig cfg =
                    detail::resize_market(c, base.total_demand, g_range[xi], l_range[yi], b, b);
                grid.cells[yi].push_back(detail::ratio_cell(cfg, Regime::Standard, SweepMetric::ProfitRatio));
            }
        grids.push_back(std::move(grid));
    }

    SweepGrid slope_grid;
    slope_grid.name = "slope_bid";
    slope_grid.x_label = "num_generators";
    slope_grid.y_label = "num_loads";
    slope_grid.metric = SweepMetric::ProfitRatio;
    for (int g : g_range) slope_grid.x_values.push_back(g);
    for (int l : l_range) slope_grid.y_values.push_back(l);
    slope_grid.cells.resize(l_range.size());
    for (std::size_t yi = 0; yi < l_range.size(); ++yi)
        for (std::size_t xi = 0; xi < g_range.size(); ++xi) {
            if (g_range[xi] < 1 || l_range[yi] < 1) {
                slope_grid.cells[yi].push_back(std::nullopt);
                continue;
            }
            const MarketConfig cfg =
                detail::resize_market(c, base.total_demand, g_range[xi], l_range[yi], 1.0 / c, 1.0 / c);
            slope_grid.cells[yi].push_back(
                detail::ratio_cell(cfg, Regime::SlopeStandard, SweepMetric::ProfitRatio));
        }
    grids.push_back(std::move(slope_grid));
    return grids;
}

}  // namespace marketlab
