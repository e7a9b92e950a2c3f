// Settlement: generator profits, load payments, social cost and the
// Nash-vs-competitive comparison ratios.
#pragma once

#include <cmath>
#include <vector>

#include "marketlab/clearing.hpp"
#include "marketlab/market.hpp"

namespace marketlab {

struct SettlementReport {
    std::vector<double> profits;   // pi_j, $
    std::vector<double> payments;  // rho_l, $
    double social_cost = 0.0;      // sum c_j/2 (g_j^d + g_j^r)^2
    double aggregate_profit = 0.0;
    double aggregate_payment = 0.0;
};

// pi_j = lam_r g_j^r + lam_d g_j^d - c_j/2 (g_j^d + g_j^r)^2
// rho_l = lam_d d_l^d + lam_r d_l^r
inline SettlementReport settle(const TwoStageOutcome& out, const MarketConfig& cfg) {
    SettlementReport rep;
    const double lam_d = out.day_ahead.price;
    const double lam_r = out.real_time.price;
    rep.profits.reserve(cfg.n_gens());
    for (std::size_t j = 0; j < cfg.n_gens(); ++j) {
        const double gd = out.day_ahead.gen_dispatch[j];
        const double gr = out.real_time.gen_dispatch[j];
        const double total = gd + gr;
        rep.profits.push_back(lam_d * gd + lam_r * gr - 0.5 * cfg.cost(j) * total * total);
        rep.social_cost += 0.5 * cfg.cost(j) * total * total;
        rep.aggregate_profit += rep.profits.back();
    }
    rep.payments.reserve(cfg.n_loads());
    for (std::size_t l = 0; l < cfg.n_loads(); ++l) {
        rep.payments.push_back(lam_d * out.day_ahead.load_alloc[l] + lam_r * out.real_time.load_alloc[l]);
        rep.aggregate_payment += rep.payments.back();
    }
    return rep;
}

struct NormalizedMetrics {
    double cost_ratio = 0.0;
    double profit_ratio = 0.0;
    double payment_ratio = 0.0;
};

// Element-wise Nash/competitive ratios of social cost, aggregate profit and
// aggregate payment.
inline NormalizedMetrics normalized_metrics(const SettlementReport& ne, const SettlementReport& ce) {
    if (ce.social_cost == 0.0 || ce.aggregate_profit == 0.0 || ce.aggregate_payment == 0.0)
        throw MarketError(ErrorCode::DivisionByZero, "competitive aggregate is zero");
    NormalizedMetrics m;
    m.cost_ratio = ne.social_cost / ce.social_cost;
    m.profit_ratio = ne.aggregate_profit / ce.aggregate_profit;
    m.payment_ratio = ne.aggregate_payment / ce.aggregate_payment;
    return m;
}

// Heterogeneity term  Delta = sum_j c_j/C_j^2 - (sum_j 1/C_j)^2 / sum_j 1/c_j
// with C_j = 1/(b^r (|G|-1)) + c_j.  Zero for homogeneous fleets.
inline double heterogeneity_delta(const MarketConfig& cfg) {
    const std::vector<double> aug = augmented_cost_coeffs(cfg);
    double lhs = 0.0, sum_aug_inv = 0.0;
    for (std::size_t j = 0; j < cfg.n_gens(); ++j) {
        lhs += cfg.cost(j) / (aug[j] * aug[j]);
        sum_aug_inv += 1.0 / aug[j];
    }
    return lhs - sum_aug_inv * sum_aug_inv / cfg.sum_cost_inv;
}

}  // namespace marketlab
