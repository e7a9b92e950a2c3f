// Deterministic per-stage market clearing and the planner benchmarks.  All
// problems here are equality-constrained quadratics with closed-form
// solutions; no generic solver is involved.
#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include "marketlab/market.hpp"

namespace marketlab {

// Clears one stage under intercept bidding g_j = slope*price - beta_j.
// price = (stage_demand + sum(beta)) / (slope * |G|).
inline StageOutcome clear_intercept_stage(const std::vector<double>& intercepts, double slope,
                                          double stage_demand) {
    if (!(slope > 0.0)) throw MarketError(ErrorCode::InvalidSlope, "intercept clearing needs slope > 0");
    if (intercepts.empty()) throw MarketError(ErrorCode::EmptyParticipants, "no generators to clear");
    const double beta_sum = std::accumulate(intercepts.begin(), intercepts.end(), 0.0);
    StageOutcome st;
    st.price = (stage_demand + beta_sum) / (slope * static_cast<double>(intercepts.size()));
    st.gen_dispatch.reserve(intercepts.size());
    for (double beta : intercepts) st.gen_dispatch.push_back(slope * st.price - beta);
    return st;
}

// Clears one stage under slope bidding g_j = bhat_j * price.
// Zero aggregate slope with zero demand is reported as price 0 with the
// degeneracy flag so sweep grids stay total.
inline StageOutcome clear_slope_stage(const std::vector<double>& slopes, double stage_demand) {
    if (slopes.empty()) throw MarketError(ErrorCode::EmptyParticipants, "no generators to clear");
    double total = 0.0;
    for (double s : slopes) {
        if (s < 0.0) throw MarketError(ErrorCode::InvalidSlope, "slope bids must be nonnegative");
        total += s;
    }
    StageOutcome st;
    if (total == 0.0) {
        if (stage_demand != 0.0)
            throw MarketError(ErrorCode::DegeneratePrice, "zero aggregate slope against nonzero demand");
        st.price = 0.0;
        st.degenerate = true;
        st.gen_dispatch.assign(slopes.size(), 0.0);
        return st;
    }
    st.price = stage_demand / total;
    st.gen_dispatch.reserve(slopes.size());
    for (double s : slopes) st.gen_dispatch.push_back(s * st.price);
    return st;
}

// Default-bid clearing for a mitigated day-ahead stage: every generator is
// dispatched on its true marginal cost, g_j = price / c_j.
inline StageOutcome clear_default_da(const MarketConfig& cfg, double stage_demand) {
    StageOutcome st;
    st.price = stage_demand / cfg.sum_cost_inv;
    st.gen_dispatch.reserve(cfg.n_gens());
    for (std::size_t j = 0; j < cfg.n_gens(); ++j) st.gen_dispatch.push_back(st.price / cfg.cost(j));
    return st;
}

// Default-bid clearing for a mitigated real-time stage: g_j^r = price/c_j - g_j^d,
// so the price lands on the system marginal cost of the full demand.
inline StageOutcome clear_default_rt(const MarketConfig& cfg, const std::vector<double>& gen_da,
                                     double stage_demand) {
    double da_total = std::accumulate(gen_da.begin(), gen_da.end(), 0.0);
    StageOutcome st;
    st.price = (stage_demand + da_total) / cfg.sum_cost_inv;
    st.gen_dispatch.reserve(cfg.n_gens());
    for (std::size_t j = 0; j < cfg.n_gens(); ++j)
        st.gen_dispatch.push_back(st.price / cfg.cost(j) - gen_da[j]);
    return st;
}

struct PlannerSolution {
    std::vector<double> dispatch;
    double marginal_price = 0.0;
};

// Cost-minimizing dispatch benchmark: min sum c_j/2 g_j^2  s.t.  sum g_j = d.
inline PlannerSolution social_planner(const MarketConfig& cfg) {
    PlannerSolution sol;
    sol.marginal_price = cfg.total_demand / cfg.sum_cost_inv;
    sol.dispatch.reserve(cfg.n_gens());
    for (std::size_t j = 0; j < cfg.n_gens(); ++j) sol.dispatch.push_back(sol.marginal_price / cfg.cost(j));
    return sol;
}

// Augmented marginal costs C_j = 1/(b^r (|G|-1)) + c_j of the strategic
// real-time subgame.
inline std::vector<double> augmented_cost_coeffs(const MarketConfig& cfg) {
    if (cfg.n_gens() < 2)
        throw MarketError(ErrorCode::TooFewGenerators, "real-time subgame needs more than one generator");
    const double k = 1.0 / (cfg.slope_rt * static_cast<double>(cfg.n_gens() - 1));
    std::vector<double> aug;
    aug.reserve(cfg.n_gens());
    for (std::size_t j = 0; j < cfg.n_gens(); ++j) aug.push_back(k + cfg.cost(j));
    return aug;
}

// Strategic real-time subgame given day-ahead dispatch: the unique minimizer of
//   sum_j [ g_j^r^2 / (2 b^r (|G|-1)) + c_j/2 (g_j^d + g_j^r)^2 ]   s.t.  sum g_j^r = rt_demand,
// returned with the balance dual as the price.  Closed form:
//   g_j^r = (price - c_j g_j^d) / C_j,   price = (rt_demand + sum c_j g_j^d / C_j) / sum 1/C_j.
inline StageOutcome augmented_planner(const MarketConfig& cfg, const std::vector<double>& gen_da,
                                      double rt_demand) {
    const std::vector<double> aug = augmented_cost_coeffs(cfg);
    double weighted = 0.0, sum_aug_inv = 0.0;
    for (std::size_t j = 0; j < cfg.n_gens(); ++j) {
        weighted += cfg.cost(j) * gen_da[j] / aug[j];
        sum_aug_inv += 1.0 / aug[j];
    }
    StageOutcome st;
    st.price = (rt_demand + weighted) / sum_aug_inv;
    st.gen_dispatch.reserve(cfg.n_gens());
    for (std::size_t j = 0; j < cfg.n_gens(); ++j)
        st.gen_dispatch.push_back((st.price - cfg.cost(j) * gen_da[j]) / aug[j]);
    return st;
}

}  // namespace marketlab
