// Independent numerical verification that a claimed equilibrium is a fixed
// point: stationarity residuals from the per-regime first-order conditions and
// a derivative-free best-response search per participant.  The search shares
// no code with the closed-form solvers; day-ahead deviations propagate through
// the real-time subgame before the objective is evaluated.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "marketlab/clearing.hpp"
#include "marketlab/equilibria.hpp"
#include "marketlab/market.hpp"
#include "marketlab/settlement.hpp"

namespace marketlab {

struct SearchParams {
    int grid_points = 41;    // coarse grid per dimension over +-radius
    int refine_iters = 30;   // golden-section rounds around the incumbent
    double radius = 0.0;     // 0 -> max(1, |bid|) per dimension
};

enum class DeviationStage { Auto, DayAhead, RealTime };

struct VerificationReport {
    double balance_residual_da = 0.0;
    double balance_residual_rt = 0.0;
    std::vector<std::pair<std::string, double>> foc_residuals;
    std::vector<std::pair<std::string, double>> deviation_gains;
    double tolerance = 1e-5;
    bool verified = true;
    std::string worst_participant;
    double worst_gain = 0.0;
};

namespace detail {

constexpr double kInvalid = -std::numeric_limits<double>::infinity();

// objective: x -> value to MAXIMIZE, or kInvalid for infeasible candidates
using Objective1D = std::function<double(double)>;
using Objective2D = std::function<double(double, double)>;

inline double search_radius(const SearchParams& sp, double bid) {
    return sp.radius > 0.0 ? sp.radius : std::max(1.0, std::abs(bid));
}

// Coarse grid then golden-section shrink around the incumbent.  The center
// (incumbent bid) is always a grid point, so the returned best is never below
// the incumbent value.
inline std::pair<double, double> maximize_1d(const Objective1D& f, double center, double radius,
                                             const SearchParams& sp,
                                             std::optional<double> lower_bound = std::nullopt) {
    const int n = std::max(3, sp.grid_points | 1);  // odd so the center is sampled
    double best_x = center;
    double best_v = f(center);
    for (int i = 0; i < n; ++i) {
        double x = center - radius + 2.0 * radius * i / (n - 1);
        if (lower_bound && x < *lower_bound) x = *lower_bound;
        const double v = f(x);
        if (v > best_v) {
            best_v = v;
            best_x = x;
        }
    }
    const double step = 2.0 * radius / (n - 1);
    double a = best_x - step, b = best_x + step;
    if (lower_bound) a = std::max(a, *lower_bound);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < sp.refine_iters && (b - a) > 1e-10 * radius; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(x1);
        }
        const double fi = std::max(f1, f2);
        if (fi > best_v) {
            best_v = fi;
            best_x = f1 > f2 ? x1 : x2;
        }
    }
    return {best_x, best_v};
}

// 2-D variant: coarse grid, then alternating per-coordinate golden sections
// with shrinking brackets.  Good enough for the smooth quadratic-rational
// objectives here.
inline double maximize_2d(const Objective2D& f, double cx, double cy, double rx, double ry,
                          const SearchParams& sp, std::optional<double> lower_bound = std::nullopt) {
    const int n = std::max(3, sp.grid_points | 1);
    double best_x = cx, best_y = cy, best_v = f(cx, cy);
    for (int i = 0; i < n; ++i) {
        double x = cx - rx + 2.0 * rx * i / (n - 1);
        if (lower_bound && x < *lower_bound) x = *lower_bound;
        for (int k = 0; k < n; ++k) {
            double y = cy - ry + 2.0 * ry * k / (n - 1);
            if (lower_bound && y < *lower_bound) y = *lower_bound;
            const double v = f(x, y);
            if (v > best_v) {
                best_v = v;
                best_x = x;
                best_y = y;
            }
        }
    }
    double span_x = 2.0 * rx / (n - 1), span_y = 2.0 * ry / (n - 1);
    for (int pass = 0; pass < 8; ++pass) {
        auto [x, vx] = maximize_1d([&](double t) { return f(t, best_y); }, best_x, span_x, sp, lower_bound);
        if (vx > best_v) {
            best_v = vx;
            best_x = x;
        }
        auto [y, vy] = maximize_1d([&](double t) { return f(best_x, t); }, best_y, span_y, sp, lower_bound);
        if (vy > best_v) {
            best_v = vy;
            best_y = y;
        }
        span_x *= 0.5;
        span_y *= 0.5;
    }
    return best_v;
}

inline double gen_profit(double cost, double lam_d, double gd, double lam_r, double gr) {
    const double total = gd + gr;
    return lam_d * gd + lam_r * gr - 0.5 * cost * total * total;
}

// ---------------------------------------------------------------------------
// Real-time subgame under slope bidding
// ---------------------------------------------------------------------------

struct SlopeSubgame {
    double price = 0.0;
    std::vector<double> rt_dispatch;
    bool degenerate = false;
};

// Nash equilibrium of the one-shot real-time slope game given day-ahead
// dispatch and residual demand.  Each generator's stationarity condition
//   p q_j = (p - c_j (g_j^d + q_j)) (d^r - q_j)
// reduces to a quadratic in q_j at fixed price p; the market solution bisects
// the price until the balance sum q_j = d^r closes.  Slope bids must stay
// nonnegative, so roots of the wrong sign clamp to the corner q_j = 0.
inline std::optional<SlopeSubgame> slope_rt_subgame(const std::vector<double>& costs,
                                                    const std::vector<double>& gen_da, double rt_demand) {
    const std::size_t n = costs.size();

    auto q_of = [&](double p, std::size_t j) -> std::optional<double> {
        const double b = 2.0 * p + costs[j] * (rt_demand - gen_da[j]);
        const double k = rt_demand * (p - costs[j] * gen_da[j]);
        const double disc = b * b - 4.0 * costs[j] * k;
        if (disc < 0.0) return std::nullopt;
        const double sq = std::sqrt(disc);
        const double denom = b >= 0.0 ? b + sq : b - sq;
        double q = denom != 0.0 ? 2.0 * k / denom : 0.0;
        if (q * p < 0.0) q = 0.0;  // nonnegative-slope corner
        return q;
    };
    auto balance = [&](double p) -> std::optional<double> {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const auto q = q_of(p, j);
            if (!q) return std::nullopt;
            s += *q;
        }
        return s - rt_demand;
    };

    if (rt_demand == 0.0) {
        // limiting price: sum (p - c_j g_j^d) / (2p - c_j g_j^d) = 1.  The sum
        // has poles at p = c_j g_j^d / 2, so candidate brackets must be
        // validated by the residual at the bisected point.
        auto limit = [&](double p) -> std::optional<double> {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double den = 2.0 * p - costs[j] * gen_da[j];
                if (den == 0.0) return std::nullopt;
                s += (p - costs[j] * gen_da[j]) / den;
            }
            return s - 1.0;
        };
        double scale = 1.0, mean_mc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            scale = std::max(scale, std::abs(costs[j] * gen_da[j]));
            mean_mc += costs[j] * gen_da[j] / static_cast<double>(n);
        }
        SlopeSubgame sg;
        sg.rt_dispatch.assign(n, 0.0);
        bool all_zero = true;
        for (std::size_t j = 0; j < n; ++j)
            if (costs[j] * gen_da[j] != 0.0) all_zero = false;
        if (all_zero) {
            sg.price = 0.0;
            sg.degenerate = true;  // no supply against no demand
            return sg;
        }
        const double p0 = mean_mc * static_cast<double>(n - 1) / static_cast<double>(n - 2);
        struct Bracket {
            double lo, hi, dist;
        };
        std::vector<Bracket> brackets;
        std::optional<double> prev_v;
        double prev_p = 0.0;
        for (int e = -40; e <= 24; ++e) {
            const double p = scale * std::ldexp(1.0, e);
            const auto v = limit(p);
            if (v && prev_v && *prev_v * *v <= 0.0)
                brackets.push_back({prev_p, p, std::abs(0.5 * (prev_p + p) - p0)});
            if (v) {
                prev_v = *v;
                prev_p = p;
            } else {
                prev_v.reset();
            }
        }
        std::sort(brackets.begin(), brackets.end(),
                  [](const Bracket& a, const Bracket& b) { return a.dist < b.dist; });
        for (const Bracket& br : brackets) {
            double lo = br.lo, hi = br.hi;
            auto vlo = limit(lo);
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                const auto v = limit(mid);
                if (!v) break;
                if (vlo && *vlo * *v <= 0.0) {
                    hi = mid;
                } else {
                    lo = mid;
                    vlo = v;
                }
            }
            const double p = 0.5 * (lo + hi);
            const auto res = limit(p);
            if (res && std::abs(*res) <= 1e-6) {
                sg.price = p;
                return sg;
            }
        }
        return std::nullopt;
    }

    double scale = std::max(1.0, std::abs(rt_demand));
    for (std::size_t j = 0; j < n; ++j)
        scale = std::max(scale, std::abs(costs[j]) * (std::abs(gen_da[j]) + std::abs(rt_demand)));

    // heuristic center for ranking candidate brackets (marginal-cost price)
    double sum_cinv = 0.0, sum_gd = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        sum_cinv += 1.0 / costs[j];
        sum_gd += gen_da[j];
    }
    const double p0 = (rt_demand + sum_gd) / sum_cinv;

    // Dense geometric ladder.  The clamp to the nonnegative-slope corner makes
    // the balance jump at p = 0, so spurious sign changes exist; collect every
    // bracket and accept the first (nearest p0) that bisects to a true root.
    std::vector<double> ladder;
    for (int e = 24; e >= -40; --e) ladder.push_back(-scale * std::ldexp(1.0, e));
    for (int e = -40; e <= 24; ++e) ladder.push_back(scale * std::ldexp(1.0, e));

    struct Bracket {
        double lo, hi, dist;
    };
    std::vector<Bracket> brackets;
    std::optional<double> prev_v;
    double prev_p = 0.0;
    for (double p : ladder) {
        const auto v = balance(p);
        if (v && prev_v && *prev_v * *v <= 0.0)
            brackets.push_back({prev_p, p, std::abs(0.5 * (prev_p + p) - p0)});
        if (v) {
            prev_v = *v;
            prev_p = p;
        } else {
            prev_v.reset();
        }
    }
    std::sort(brackets.begin(), brackets.end(),
              [](const Bracket& a, const Bracket& b) { return a.dist < b.dist; });

    // Purely relative: every q_j scales linearly in rt_demand, so for tiny
    // residual demands this forces the limiting-price root rather than letting
    // an absolute floor accept any bracket.
    const double bal_tol = 1e-7 * std::abs(rt_demand);
    for (const Bracket& br : brackets) {
        double lo = br.lo, hi = br.hi;
        auto vlo = balance(lo);
        bool dead = false;
        for (int it = 0; it < 200 && !dead; ++it) {
            const double mid = 0.5 * (lo + hi);
            const auto v = balance(mid);
            if (!v) {
                dead = true;
                break;
            }
            if (vlo && *vlo * *v <= 0.0) {
                hi = mid;
            } else {
                lo = mid;
                vlo = v;
            }
        }
        if (dead) continue;

        SlopeSubgame sg;
        sg.price = 0.5 * (lo + hi);
        sg.rt_dispatch.clear();
        sg.rt_dispatch.reserve(n);
        double total = 0.0;
        bool ok = true;
        for (std::size_t j = 0; j < n; ++j) {
            const auto q = q_of(sg.price, j);
            if (!q) {
                ok = false;
                break;
            }
            sg.rt_dispatch.push_back(*q);
            total += *q;
        }
        if (ok && std::abs(total - rt_demand) <= bal_tol) return sg;
    }
    return std::nullopt;
}

// d(price)/d(parameter) of the subgame solution by implicit differentiation;
// dgd is the per-generator day-ahead dispatch perturbation, ddr the residual
// demand perturbation.
inline double slope_subgame_price_sensitivity(const std::vector<double>& costs,
                                              const std::vector<double>& gen_da, double rt_demand,
                                              const SlopeSubgame& sg, const std::vector<double>& dgd,
                                              double ddr) {
    const std::size_t n = costs.size();
    double num = -ddr, den = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
        const double q = sg.rt_dispatch[m];
        const double A = 2.0 * sg.price + costs[m] * (rt_demand - q) - costs[m] * (gen_da[m] + q);
        num += (sg.price - costs[m] * (gen_da[m] + q)) / A * ddr - costs[m] * (rt_demand - q) / A * dgd[m];
        den += (2.0 * q - rt_demand) / A;
    }
    return num / den;
}

// ---------------------------------------------------------------------------
// Equilibrium context shared by the deviation evaluators
// ---------------------------------------------------------------------------

struct EqContext {
    const MarketConfig& cfg;
    const EquilibriumResult& eq;
    double lam_d, lam_r, dd, dr, d;
    std::vector<double> costs;

    EqContext(const EquilibriumResult& e, const MarketConfig& c) : cfg(c), eq(e) {
        lam_d = e.outcome.day_ahead.price;
        lam_r = e.outcome.real_time.price;
        dd = e.outcome.day_ahead.total_alloc();
        dr = e.outcome.real_time.total_alloc();
        d = c.total_demand;
        costs.reserve(c.n_gens());
        for (std::size_t j = 0; j < c.n_gens(); ++j) costs.push_back(c.cost(j));
    }

    double sum_except(const std::vector<double>& v, std::size_t skip) const {
        double s = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i)
            if (i != skip) s += v[i];
        return s;
    }
};

// ---------------------------------------------------------------------------
// Strategic (price-anticipating) deviation evaluators
// ---------------------------------------------------------------------------

inline double nash_std_gen_rt(const EqContext& x, std::size_t j, double beta_r) {
    const double G = static_cast<double>(x.cfg.n_gens());
    const double lam_r = (x.dr + x.sum_except(x.eq.outcome.bids.gen_rt, j) + beta_r) / (x.cfg.slope_rt * G);
    const double gr = x.cfg.slope_rt * lam_r - beta_r;
    return gen_profit(x.costs[j], x.lam_d, x.eq.outcome.day_ahead.gen_dispatch[j], lam_r, gr);
}

inline double nash_std_gen_da(const EqContext& x, std::size_t j, double beta_d) {
    const double G = static_cast<double>(x.cfg.n_gens());
    const double bd = x.cfg.slope_da;
    const double lam_d = (x.dd + x.sum_except(x.eq.outcome.bids.gen_da, j) + beta_d) / (bd * G);
    std::vector<double> gd(x.cfg.n_gens());
    for (std::size_t m = 0; m < x.cfg.n_gens(); ++m)
        gd[m] = bd * lam_d - (m == j ? beta_d : x.eq.outcome.bids.gen_da[m]);
    const StageOutcome rt = augmented_planner(x.cfg, gd, x.dr);
    return gen_profit(x.costs[j], lam_d, gd[j], rt.price, rt.gen_dispatch[j]);
}

inline double nash_std_load(const EqContext& x, std::size_t l, double y) {
    const double G = static_cast<double>(x.cfg.n_gens());
    const double bd = x.cfg.slope_da;
    const double dl = x.cfg.loads[l].demand;
    const double dd = x.dd - x.eq.outcome.day_ahead.load_alloc[l] + y;
    const double beta_sum = std::accumulate(x.eq.outcome.bids.gen_da.begin(), x.eq.outcome.bids.gen_da.end(), 0.0);
    const double lam_d = (dd + beta_sum) / (bd * G);
    std::vector<double> gd(x.cfg.n_gens());
    for (std::size_t m = 0; m < x.cfg.n_gens(); ++m) gd[m] = bd * lam_d - x.eq.outcome.bids.gen_da[m];
    const double dr = x.dr + x.eq.outcome.day_ahead.load_alloc[l] - y;
    const StageOutcome rt = augmented_planner(x.cfg, gd, dr);
    return lam_d * y + rt.price * (dl - y);
}

inline double nash_rtmpm_gen_da(const EqContext& x, std::size_t j, double beta_d) {
    const double G = static_cast<double>(x.cfg.n_gens());
    const double lam_d = (x.dd + x.sum_except(x.eq.outcome.bids.gen_da, j) + beta_d) / (x.cfg.slope_da * G);
    const double gd = x.cfg.slope_da * lam_d - beta_d;
    const double lam_r = x.d / x.cfg.sum_cost_inv;  // pinned by the default bids
    const double gr = lam_r / x.costs[j] - gd;
    return gen_profit(x.costs[j], lam_d, gd, lam_r, gr);
}

inline double nash_rtmpm_load(const EqContext& x, std::size_t l, double y) {
    const double G = static_cast<double>(x.cfg.n_gens());
    const double dl = x.cfg.loads[l].demand;
    const double dd = x.dd - x.eq.outcome.day_ahead.load_alloc[l] + y;
    const double beta_sum = std::accumulate(x.eq.outcome.bids.gen_da.begin(), x.eq.outcome.bids.gen_da.end(), 0.0);
    const double lam_d = (dd + beta_sum) / (x.cfg.slope_da * G);
    const double lam_r = x.d / x.cfg.sum_cost_inv;
    return lam_d * y + lam_r * (dl - y);
}

inline double nash_dampm_gen_rt(const EqContext& x, std::size_t j, double beta_r) {
    const double G = static_cast<double>(x.cfg.n_gens());
    const double lam_r = (x.dr + x.sum_except(x.eq.outcome.bids.gen_rt, j) + beta_r) / (x.cfg.slope_rt * G);
    const double gr = x.cfg.slope_rt * lam_r - beta_r;
    return gen_profit(x.costs[j], x.lam_d, x.eq.outcome.day_ahead.gen_dispatch[j], lam_r, gr);
}

inline double nash_dampm_load(const EqContext& x, std::size_t l, double y) {
    const double dl = x.cfg.loads[l].demand;
    const double dd = x.dd - x.eq.outcome.day_ahead.load_alloc[l] + y;
    const double lam_d = dd / x.cfg.sum_cost_inv;
    std::vector<double> gd(x.cfg.n_gens());
    for (std::size_t m = 0; m < x.cfg.n_gens(); ++m) gd[m] = lam_d / x.costs[m];
    const double dr = x.dr + x.eq.outcome.day_ahead.load_alloc[l] - y;
    const StageOutcome rt = augmented_planner(x.cfg, gd, dr);
    return lam_d * y + rt.price * (dl - y);
}

inline double nash_slope_gen_rt(const EqContext& x, std::size_t j, double bhat_r) {
    if (bhat_r < 0.0) return kInvalid;
    const double others = x.sum_except(x.eq.outcome.bids.gen_slope_rt, j);
    const double total = others + bhat_r;
    double lam_r, gr;
    if (total <= 0.0) {
        if (x.dr != 0.0) return kInvalid;
        lam_r = 0.0;
        gr = 0.0;
    } else {
        lam_r = x.dr / total;
        gr = bhat_r * lam_r;
    }
    return gen_profit(x.costs[j], x.lam_d, x.eq.outcome.day_ahead.gen_dispatch[j], lam_r, gr);
}

inline double nash_slope_gen_da(const EqContext& x, std::size_t j, double bhat_d) {
    if (bhat_d < 0.0) return kInvalid;
    const double others = x.sum_except(x.eq.outcome.bids.gen_slope_da, j);
    const double total = others + bhat_d;
    double lam_d;
    std::vector<double> gd(x.cfg.n_gens(), 0.0);
    if (total <= 0.0) {
        if (x.dd != 0.0) return kInvalid;
        lam_d = 0.0;
    } else {
        lam_d = x.dd / total;
        for (std::size_t m = 0; m < x.cfg.n_gens(); ++m)
            gd[m] = (m == j ? bhat_d : x.eq.outcome.bids.gen_slope_da[m]) * lam_d;
    }
    const auto sg = slope_rt_subgame(x.costs, gd, x.dr);
    if (!sg) return kInvalid;
    return gen_profit(x.costs[j], lam_d, gd[j], sg->price, sg->rt_dispatch[j]);
}

inline double nash_slope_load(const EqContext& x, std::size_t l, double y) {
    const double dl = x.cfg.loads[l].demand;
    const double dd = x.dd - x.eq.outcome.day_ahead.load_alloc[l] + y;
    const double total = std::accumulate(x.eq.outcome.bids.gen_slope_da.begin(),
                                         x.eq.outcome.bids.gen_slope_da.end(), 0.0);
    double lam_d;
    std::vector<double> gd(x.cfg.n_gens(), 0.0);
    if (total <= 0.0) {
        if (dd != 0.0) return kInvalid;
        lam_d = 0.0;
    } else {
        lam_d = dd / total;
        for (std::size_t m = 0; m < x.cfg.n_gens(); ++m)
            gd[m] = x.eq.outcome.bids.gen_slope_da[m] * lam_d;
    }
    const double dr = x.dr + x.eq.outcome.day_ahead.load_alloc[l] - y;
    const auto sg = slope_rt_subgame(x.costs, gd, dr);
    if (!sg) return kInvalid;
    // payments are minimized; return the negated payment so the search maximizes
    return -(lam_d * y + sg->price * (dl - y));
}

// ---------------------------------------------------------------------------
// Price-taking deviation evaluators (prices held at the claimed equilibrium)
// ---------------------------------------------------------------------------

inline double comp_std_gen(const EqContext& x, std::size_t j, double beta_d, double beta_r) {
    const double gd = x.cfg.slope_da * x.lam_d - beta_d;
    const double gr = x.cfg.slope_rt * x.lam_r - beta_r;
    return gen_profit(x.costs[j], x.lam_d, gd, x.lam_r, gr);
}

inline double comp_rtmpm_gen(const EqContext& x, std::size_t j, double beta_d) {
    const double gd = x.cfg.slope_da * x.lam_d - beta_d;
    const double gr = x.lam_r / x.costs[j] - gd;
    return gen_profit(x.costs[j], x.lam_d, gd, x.lam_r, gr);
}

inline double comp_dampm_gen(const EqContext& x, std::size_t j, double beta_r) {
    const double gd = x.eq.outcome.day_ahead.gen_dispatch[j];  // default dispatch, not a decision
    const double gr = x.cfg.slope_rt * x.lam_r - beta_r;
    return gen_profit(x.costs[j], x.lam_d, gd, x.lam_r, gr);
}

inline double comp_slope_gen(const EqContext& x, std::size_t j, double wd, double wr) {
    if (wd < 0.0 || wr < 0.0) return kInvalid;
    return gen_profit(x.costs[j], x.lam_d, wd * x.lam_d, x.lam_r, wr * x.lam_r);
}

inline double comp_load(const EqContext& x, std::size_t l, double y) {
    return -(x.lam_d * y + x.lam_r * (x.cfg.loads[l].demand - y));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Best-response deviation searches
// ---------------------------------------------------------------------------

// Best profit improvement generator `j` can find by unilaterally deviating its
// free bid variables, holding everyone else fixed and re-clearing per the
// regime's sequential structure.  `stage` restricts the searched dimension;
// requesting a stage where the generator has no free bid raises
// UnsupportedRegimePair.
inline double best_response_generator(const EquilibriumResult& eq, const MarketConfig& cfg,
                                      std::size_t j, const SearchParams& sp = {},
                                      DeviationStage stage = DeviationStage::Auto) {
    detail::EqContext x(eq, cfg);
    const bool nash = eq.behavior == Behavior::Nash;

    auto gain_1d = [&](const detail::Objective1D& f, double center,
                       std::optional<double> lb = std::nullopt) {
        const double base = f(center);
        const auto [bx, bv] = detail::maximize_1d(f, center, detail::search_radius(sp, center), sp, lb);
        (void)bx;
        return std::max(0.0, bv - base);
    };

    switch (eq.regime) {
        case Regime::Standard: {
            if (!nash) {
                const double bd0 = eq.outcome.bids.gen_da[j], br0 = eq.outcome.bids.gen_rt[j];
                auto f = [&](double a, double b) { return detail::comp_std_gen(x, j, a, b); };
                if (stage == DeviationStage::DayAhead)
                    return gain_1d([&](double a) { return f(a, br0); }, bd0);
                if (stage == DeviationStage::RealTime)
                    return gain_1d([&](double b) { return f(bd0, b); }, br0);
                const double base = f(bd0, br0);
                const double best = detail::maximize_2d(f, bd0, br0, detail::search_radius(sp, bd0),
                                                        detail::search_radius(sp, br0), sp);
                return std::max(0.0, best - base);
            }
            const double g_da = stage == DeviationStage::RealTime
                                    ? 0.0
                                    : gain_1d([&](double b) { return detail::nash_std_gen_da(x, j, b); },
                                              eq.outcome.bids.gen_da[j]);
            const double g_rt = stage == DeviationStage::DayAhead
                                    ? 0.0
                                    : gain_1d([&](double b) { return detail::nash_std_gen_rt(x, j, b); },
                                              eq.outcome.bids.gen_rt[j]);
            return std::max(g_da, g_rt);
        }
        case Regime::RtMPM: {
            if (stage == DeviationStage::RealTime)
                throw MarketError(ErrorCode::UnsupportedRegimePair,
                                  "generator bids are operator-substituted in the mitigated real-time stage");
            if (!nash)
                return gain_1d([&](double b) { return detail::comp_rtmpm_gen(x, j, b); },
                               eq.outcome.bids.gen_da[j]);
            return gain_1d([&](double b) { return detail::nash_rtmpm_gen_da(x, j, b); },
                           eq.outcome.bids.gen_da[j]);
        }
        case Regime::DaMPM: {
            if (stage == DeviationStage::DayAhead)
                throw MarketError(ErrorCode::UnsupportedRegimePair,
                                  "generator bids are operator-substituted in the mitigated day-ahead stage");
            if (!nash)
                return gain_1d([&](double b) { return detail::comp_dampm_gen(x, j, b); },
                               eq.outcome.bids.gen_rt[j]);
            return gain_1d([&](double b) { return detail::nash_dampm_gen_rt(x, j, b); },
                           eq.outcome.bids.gen_rt[j]);
        }
        case Regime::SlopeStandard: {
            if (!nash) {
                const double wd0 = eq.outcome.bids.gen_slope_da[j], wr0 = eq.outcome.bids.gen_slope_rt[j];
                auto f = [&](double a, double b) { return detail::comp_slope_gen(x, j, a, b); };
                if (stage == DeviationStage::DayAhead)
                    return gain_1d([&](double a) { return f(a, wr0); }, wd0, 0.0);
                if (stage == DeviationStage::RealTime)
                    return gain_1d([&](double b) { return f(wd0, b); }, wr0, 0.0);
                const double base = f(wd0, wr0);
                const double best = detail::maximize_2d(f, wd0, wr0, detail::search_radius(sp, wd0),
                                                        detail::search_radius(sp, wr0), sp, 0.0);
                return std::max(0.0, best - base);
            }
            const double g_da =
                stage == DeviationStage::RealTime
                    ? 0.0
                    : gain_1d([&](double b) { return detail::nash_slope_gen_da(x, j, b); },
                              eq.outcome.bids.gen_slope_da[j], 0.0);
            const double g_rt =
                stage == DeviationStage::DayAhead
                    ? 0.0
                    : gain_1d([&](double b) { return detail::nash_slope_gen_rt(x, j, b); },
                              eq.outcome.bids.gen_slope_rt[j], 0.0);
            return std::max(g_da, g_rt);
        }
    }
    throw MarketError(ErrorCode::UnsupportedRegimePair, "unknown regime");
}

// Best payment reduction load `l` can find by deviating its day-ahead quantity
// (the real-time quantity follows from inelasticity).  Under the day-ahead MPM
// policy the load leads: each candidate re-solves the generators' real-time
// subgame before the payment is evaluated.
inline double best_response_load(const EquilibriumResult& eq, const MarketConfig& cfg, std::size_t l,
                                 const SearchParams& sp = {}) {
    detail::EqContext x(eq, cfg);
    const bool nash = eq.behavior == Behavior::Nash;
    const double y0 = eq.outcome.day_ahead.load_alloc[l];

    detail::Objective1D f;
    if (!nash) {
        f = [&, l](double y) { return detail::comp_load(x, l, y); };
    } else {
        switch (eq.regime) {
            case Regime::Standard:
                f = [&, l](double y) { return -detail::nash_std_load(x, l, y); };
                break;
            case Regime::RtMPM:
                f = [&, l](double y) { return -detail::nash_rtmpm_load(x, l, y); };
                break;
            case Regime::DaMPM:
                f = [&, l](double y) { return -detail::nash_dampm_load(x, l, y); };
                break;
            case Regime::SlopeStandard:
                f = [&, l](double y) { return detail::nash_slope_load(x, l, y); };
                break;
        }
    }
    const double base = f(y0);
    const auto [by, bv] = detail::maximize_1d(f, y0, detail::search_radius(sp, y0), sp);
    (void)by;
    return std::max(0.0, bv - base);
}

// ---------------------------------------------------------------------------
// First-order-condition residuals
// ---------------------------------------------------------------------------

// Raw left-hand sides of the regime-appropriate stationarity conditions,
// evaluated at the claimed equilibrium.  One entry per participant, keyed
// "gen:<id>" / "load:<id>"; for two-dimensional participants the larger
// magnitude is reported.
inline std::vector<std::pair<std::string, double>> foc_residuals(const EquilibriumResult& eq,
                                                                 const MarketConfig& cfg) {
    detail::EqContext x(eq, cfg);
    std::vector<std::pair<std::string, double>> out;
    const double G = static_cast<double>(cfg.n_gens());
    const bool nash = eq.behavior == Behavior::Nash;
    const auto& o = eq.outcome;

    auto abs_max = [](double a, double b) { return std::abs(a) >= std::abs(b) ? a : b; };

    for (std::size_t j = 0; j < cfg.n_gens(); ++j) {
        const double c = x.costs[j];
        const double gd = o.day_ahead.gen_dispatch[j];
        const double gr = o.real_time.gen_dispatch[j];
        double r = 0.0;
        if (!nash) {
            switch (eq.regime) {
                case Regime::Standard:
                    r = abs_max(c * (gd + gr) - x.lam_d, c * (gd + gr) - x.lam_r);
                    break;
                case Regime::RtMPM:
                    r = x.lam_d - x.d / cfg.sum_cost_inv;
                    break;
                case Regime::DaMPM:
                    r = -x.lam_r + c * (gd + gr);
                    break;
                case Regime::SlopeStandard:
                    r = abs_max(x.lam_d * (x.lam_d - c * (gd + gr)), x.lam_r * (x.lam_r - c * (gd + gr)));
                    break;
            }
        } else {
            switch (eq.regime) {
                case Regime::Standard: {
                    const double kkt =
                        gr / (cfg.slope_rt * (G - 1.0)) - x.lam_r + c * (gd + gr);
                    // day-ahead stationarity of the reduced profit (real-time
                    // response folded in)
                    const std::vector<double> aug = augmented_cost_coeffs(cfg);
                    double sum_aug_inv = 0.0, ratio_sum = 0.0;
                    for (std::size_t m = 0; m < cfg.n_gens(); ++m) {
                        sum_aug_inv += 1.0 / aug[m];
                        ratio_sum += x.costs[m] / aug[m];
                    }
                    const double bd = cfg.slope_da;
                    double beta_sum = 0.0, t = x.dr;
                    for (std::size_t m = 0; m < cfg.n_gens(); ++m) beta_sum += o.bids.gen_da[m];
                    const double lam_d = (x.dd + beta_sum) / (bd * G);
                    std::vector<double> gdm(cfg.n_gens());
                    for (std::size_t m = 0; m < cfg.n_gens(); ++m) {
                        gdm[m] = bd * lam_d - o.bids.gen_da[m];
                        t += x.costs[m] * gdm[m] / aug[m];
                    }
                    const double lam_r = t / sum_aug_inv;
                    const double grj = (lam_r - c * gdm[j]) / aug[j];
                    const double sj = ratio_sum / G - c / aug[j];
                    const double dlam_d = 1.0 / (bd * G);
                    const double dgd = 1.0 / G - 1.0;
                    const double dlam_r = sj / sum_aug_inv;
                    const double dgr = (dlam_r - c * dgd) / aug[j];
                    const double da_foc = dlam_d * gdm[j] + lam_d * dgd + dlam_r * grj + lam_r * dgr -
                                          c * (gdm[j] + grj) * (dgd + dgr);
                    r = abs_max(da_foc, kkt);
                    break;
                }
                case Regime::RtMPM:
                    r = gd / (cfg.slope_da * G) + (x.lam_d - x.d / cfg.sum_cost_inv) * (1.0 / G - 1.0);
                    break;
                case Regime::DaMPM:
                    r = gr / (cfg.slope_rt * (G - 1.0)) - x.lam_r + c * (gd + gr);
                    break;
                case Regime::SlopeStandard: {
                    const double br_total = std::accumulate(o.bids.gen_slope_rt.begin(),
                                                            o.bids.gen_slope_rt.end(), 0.0);
                    double rt_foc = 0.0;
                    if (br_total > 0.0)
                        rt_foc = -x.lam_r * gr / br_total +
                                 (x.lam_r - c * (gd + gr)) * x.lam_r *
                                     (1.0 - o.bids.gen_slope_rt[j] / br_total);
                    // no closed-form day-ahead condition is available for slope
                    // bids; report a central difference of the reduced profit
                    const double b0 = o.bids.gen_slope_da[j];
                    const double h = 1e-6 * std::max(1.0, std::abs(b0));
                    const double fp = detail::nash_slope_gen_da(x, j, b0 + h);
                    const double fm = detail::nash_slope_gen_da(x, j, b0 - h);
                    double da_foc = 0.0;
                    if (std::isfinite(fp) && std::isfinite(fm)) da_foc = (fp - fm) / (2.0 * h);
                    r = abs_max(da_foc, rt_foc);
                    break;
                }
            }
        }
        out.emplace_back("gen:" + cfg.generators[j].id, r);
    }

    for (std::size_t l = 0; l < cfg.n_loads(); ++l) {
        const double dl = cfg.loads[l].demand;
        const double da = o.day_ahead.load_alloc[l];
        double r = 0.0;
        if (!nash) {
            r = x.lam_d - x.lam_r;
        } else {
            switch (eq.regime) {
                case Regime::Standard: {
                    const std::vector<double> aug = augmented_cost_coeffs(cfg);
                    double sum_aug_inv = 0.0, ratio_sum = 0.0;
                    for (std::size_t m = 0; m < cfg.n_gens(); ++m) {
                        sum_aug_inv += 1.0 / aug[m];
                        ratio_sum += x.costs[m] / aug[m];
                    }
                    const double bd = cfg.slope_da;
                    double beta_sum = 0.0, t = x.dr;
                    for (std::size_t m = 0; m < cfg.n_gens(); ++m) beta_sum += o.bids.gen_da[m];
                    const double lam_d = (x.dd + beta_sum) / (bd * G);
                    for (std::size_t m = 0; m < cfg.n_gens(); ++m)
                        t += x.costs[m] * (bd * lam_d - o.bids.gen_da[m]) / aug[m];
                    const double lam_r = t / sum_aug_inv;
                    const double dlam_r = (-1.0 + ratio_sum / G) / sum_aug_inv;
                    r = da / (bd * G) + lam_d + dlam_r * (dl - da) - lam_r;
                    break;
                }
                case Regime::RtMPM:
                    r = x.lam_d + da / (cfg.slope_da * G) - x.d / cfg.sum_cost_inv;
                    break;
                case Regime::DaMPM: {
                    const std::vector<double> aug = augmented_cost_coeffs(cfg);
                    double sum_aug_inv = 0.0;
                    for (double a : aug) sum_aug_inv += 1.0 / a;
                    r = -(x.d - x.dd) / sum_aug_inv + dl / cfg.sum_cost_inv - dl / sum_aug_inv +
                        da / sum_aug_inv;
                    break;
                }
                case Regime::SlopeStandard: {
                    const double bd_total = std::accumulate(o.bids.gen_slope_da.begin(),
                                                            o.bids.gen_slope_da.end(), 0.0);
                    std::vector<double> gd = o.day_ahead.gen_dispatch;
                    const auto sg = detail::slope_rt_subgame(x.costs, gd, x.dr);
                    if (sg && bd_total > 0.0 && !sg->degenerate) {
                        std::vector<double> dgd(cfg.n_gens());
                        for (std::size_t m = 0; m < cfg.n_gens(); ++m)
                            dgd[m] = o.bids.gen_slope_da[m] / bd_total;
                        const double dlam_r = detail::slope_subgame_price_sensitivity(
                            x.costs, gd, x.dr, *sg, dgd, -1.0);
                        r = x.lam_d + da / bd_total + dlam_r * (dl - da) - sg->price;
                    }
                    break;
                }
            }
        }
        out.emplace_back("load:" + cfg.loads[l].id, r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Aggregate verification
// ---------------------------------------------------------------------------

inline VerificationReport verify_equilibrium(const EquilibriumResult& eq, const MarketConfig& cfg,
                                             double tolerance = 1e-5, const SearchParams& sp = {}) {
    VerificationReport rep;
    rep.tolerance = tolerance;
    const auto& o = eq.outcome;
    rep.balance_residual_da = std::abs(o.day_ahead.total_dispatch() - o.day_ahead.total_alloc());
    rep.balance_residual_rt = std::abs(o.real_time.total_dispatch() - o.real_time.total_alloc());
    rep.foc_residuals = foc_residuals(eq, cfg);

    const SettlementReport s = settle(o, cfg);
    double worst_excess = 0.0;
    for (std::size_t j = 0; j < cfg.n_gens(); ++j) {
        const double gain = best_response_generator(eq, cfg, j, sp);
        rep.deviation_gains.emplace_back("gen:" + cfg.generators[j].id, gain);
        const double limit = tolerance * std::max(1.0, std::abs(s.profits[j]));
        if (gain > limit && gain - limit > worst_excess) {
            worst_excess = gain - limit;
            rep.worst_participant = "gen:" + cfg.generators[j].id;
            rep.worst_gain = gain;
            rep.verified = false;
        }
    }
    for (std::size_t l = 0; l < cfg.n_loads(); ++l) {
        const double gain = best_response_load(eq, cfg, l, sp);
        rep.deviation_gains.emplace_back("load:" + cfg.loads[l].id, gain);
        const double limit = tolerance * std::max(1.0, std::abs(s.payments[l]));
        if (gain > limit && gain - limit > worst_excess) {
            worst_excess = gain - limit;
            rep.worst_participant = "load:" + cfg.loads[l].id;
            rep.worst_gain = gain;
            rep.verified = false;
        }
    }
    return rep;
}

}  // namespace marketlab
