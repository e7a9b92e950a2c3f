// Serialization: scenario configs and bid profiles in, equilibrium reports,
// verification reports and sweep grids out.  All numeric output goes through
// one fixed 12-significant-digit formatter and ordered JSON objects so that
// identical inputs produce byte-identical bytes.
#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "marketlab/equilibria.hpp"
#include "marketlab/market.hpp"
#include "marketlab/settlement.hpp"
#include "marketlab/sweeps.hpp"
#include "marketlab/verifier.hpp"

namespace marketlab {

using Json = nlohmann::ordered_json;

// Decimal string at 12 significant digits; numbers are emitted as strings to
// keep the byte stream identical across platforms and libc versions.
inline std::string fmt_g12(double v) {
    if (v == 0.0) v = 0.0;  // normalize -0
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline double json_number(const Json& j, const std::string& context) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        try {
            std::size_t used = 0;
            const std::string s = j.get<std::string>();
            const double v = std::stod(s, &used);
            if (used == s.size()) return v;
        } catch (const std::exception&) {
        }
    }
    throw MarketError(ErrorCode::ParseError, "expected a number for " + context);
}

// ---------------------------------------------------------------------------
// MarketConfig
// ---------------------------------------------------------------------------

inline MarketConfig config_from_json(const Json& j) {
    MarketConfig cfg;
    if (!j.is_object() || !j.contains("generators") || !j.contains("loads") ||
        !j.contains("slope_da") || !j.contains("slope_rt"))
        throw MarketError(ErrorCode::ParseError,
                          "config needs keys generators, loads, slope_da, slope_rt");
    for (const auto& g : j.at("generators")) {
        GeneratorParams gp;
        gp.id = g.at("id").get<std::string>();
        gp.cost_coeff = json_number(g.at("cost_coeff"), "cost_coeff of " + gp.id);
        cfg.generators.push_back(std::move(gp));
    }
    for (const auto& l : j.at("loads")) {
        LoadParams lp;
        lp.id = l.at("id").get<std::string>();
        lp.demand = json_number(l.at("demand_mw"), "demand_mw of " + lp.id);
        cfg.loads.push_back(std::move(lp));
    }
    cfg.slope_da = json_number(j.at("slope_da"), "slope_da");
    cfg.slope_rt = json_number(j.at("slope_rt"), "slope_rt");
    return validate_config(std::move(cfg));
}

inline MarketConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MarketError(ErrorCode::ParseError, "cannot open " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw MarketError(ErrorCode::ParseError, path + ": " + e.what());
    }
    return config_from_json(j);
}

inline Json config_to_json(const MarketConfig& cfg) {
    Json j;
    j["generators"] = Json::array();
    for (const auto& g : cfg.generators)
        j["generators"].push_back({{"id", g.id}, {"cost_coeff", fmt_g12(g.cost_coeff)}});
    j["loads"] = Json::array();
    for (const auto& l : cfg.loads)
        j["loads"].push_back({{"id", l.id}, {"demand_mw", fmt_g12(l.demand)}});
    j["slope_da"] = fmt_g12(cfg.slope_da);
    j["slope_rt"] = fmt_g12(cfg.slope_rt);
    return j;
}

// ---------------------------------------------------------------------------
// BidProfile
// ---------------------------------------------------------------------------

namespace detail {

inline Json gen_map(const MarketConfig& cfg, const std::vector<double>& v) {
    Json j = Json::object();
    for (std::size_t i = 0; i < cfg.n_gens(); ++i) j[cfg.generators[i].id] = fmt_g12(v[i]);
    return j;
}

inline Json load_map(const MarketConfig& cfg, const std::vector<double>& v) {
    Json j = Json::object();
    for (std::size_t i = 0; i < cfg.n_loads(); ++i) j[cfg.loads[i].id] = fmt_g12(v[i]);
    return j;
}

inline std::vector<double> gen_vector(const MarketConfig& cfg, const Json& j, const std::string& key) {
    std::vector<double> v(cfg.n_gens());
    for (std::size_t i = 0; i < cfg.n_gens(); ++i)
        v[i] = json_number(j.at(cfg.generators[i].id), key + "." + cfg.generators[i].id);
    return v;
}

inline std::vector<double> load_vector(const MarketConfig& cfg, const Json& j, const std::string& key) {
    std::vector<double> v(cfg.n_loads());
    for (std::size_t i = 0; i < cfg.n_loads(); ++i)
        v[i] = json_number(j.at(cfg.loads[i].id), key + "." + cfg.loads[i].id);
    return v;
}

}  // namespace detail

inline Json bids_to_json(const BidProfile& bids, const MarketConfig& cfg) {
    Json j;
    j["bid_kind"] = bids.kind == BidKind::Intercept ? "intercept" : "slope";
    if (bids.kind == BidKind::Intercept) {
        j["gen_intercepts_da"] = detail::gen_map(cfg, bids.gen_da);
        j["gen_intercepts_rt"] = detail::gen_map(cfg, bids.gen_rt);
    } else {
        j["gen_slopes_da"] = detail::gen_map(cfg, bids.gen_slope_da);
        j["gen_slopes_rt"] = detail::gen_map(cfg, bids.gen_slope_rt);
    }
    j["load_da"] = detail::load_map(cfg, bids.load_da);
    j["load_rt"] = detail::load_map(cfg, bids.load_rt);
    return j;
}

inline BidProfile bids_from_json(const Json& j, const MarketConfig& cfg) {
    BidProfile b;
    const std::string kind = j.at("bid_kind").get<std::string>();
    if (kind == "intercept") {
        b.kind = BidKind::Intercept;
        b.gen_da = detail::gen_vector(cfg, j.at("gen_intercepts_da"), "gen_intercepts_da");
        b.gen_rt = detail::gen_vector(cfg, j.at("gen_intercepts_rt"), "gen_intercepts_rt");
    } else if (kind == "slope") {
        b.kind = BidKind::Slope;
        b.gen_slope_da = detail::gen_vector(cfg, j.at("gen_slopes_da"), "gen_slopes_da");
        b.gen_slope_rt = detail::gen_vector(cfg, j.at("gen_slopes_rt"), "gen_slopes_rt");
        for (double s : b.gen_slope_da)
            if (s < 0.0) throw MarketError(ErrorCode::InvalidSlope, "negative slope bid");
        for (double s : b.gen_slope_rt)
            if (s < 0.0) throw MarketError(ErrorCode::InvalidSlope, "negative slope bid");
    } else {
        throw MarketError(ErrorCode::ParseError, "bid_kind must be intercept or slope");
    }
    b.load_da = detail::load_vector(cfg, j.at("load_da"), "load_da");
    b.load_rt = detail::load_vector(cfg, j.at("load_rt"), "load_rt");
    for (std::size_t l = 0; l < cfg.n_loads(); ++l) {
        const double total = b.load_da[l] + b.load_rt[l];
        if (std::abs(total - cfg.loads[l].demand) > balance_tol(cfg.loads[l].demand))
            throw MarketError(ErrorCode::SplitMismatch,
                              "load " + cfg.loads[l].id + " stage bids do not sum to its demand");
    }
    return b;
}

// Rebuilds a two-stage outcome from submitted bids under the regime's clearing
// rules (mitigated stages clear on default bids and ignore the submitted
// intercepts there).
inline TwoStageOutcome clear_from_bids(const BidProfile& bids, const MarketConfig& cfg, Regime regime) {
    TwoStageOutcome out;
    out.bids = bids;
    double dd = 0.0, dr = 0.0;
    for (double v : bids.load_da) dd += v;
    for (double v : bids.load_rt) dr += v;

    switch (regime) {
        case Regime::Standard:
            out.day_ahead = clear_intercept_stage(bids.gen_da, cfg.slope_da, dd);
            out.real_time = clear_intercept_stage(bids.gen_rt, cfg.slope_rt, dr);
            break;
        case Regime::RtMPM:
            out.day_ahead = clear_intercept_stage(bids.gen_da, cfg.slope_da, dd);
            out.real_time = clear_default_rt(cfg, out.day_ahead.gen_dispatch, dr);
            break;
        case Regime::DaMPM:
            out.day_ahead = clear_default_da(cfg, dd);
            out.real_time = clear_intercept_stage(bids.gen_rt, cfg.slope_rt, dr);
            break;
        case Regime::SlopeStandard:
            out.day_ahead = clear_slope_stage(bids.gen_slope_da, dd);
            out.real_time = clear_slope_stage(bids.gen_slope_rt, dr);
            break;
    }
    out.day_ahead.load_alloc = bids.load_da;
    out.real_time.load_alloc = bids.load_rt;
    return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline Json equilibrium_to_json(const EquilibriumResult& eq, const SettlementReport& s,
                                const MarketConfig& cfg) {
    const auto& o = eq.outcome;
    Json j;
    j["regime"] = regime_name(eq.regime);
    j["behavior"] = behavior_name(eq.behavior);
    j["symmetric"] = eq.symmetric;
    j["degrees_of_freedom"] = eq.degrees_of_freedom;
    j["prices"] = {{"day_ahead", fmt_g12(o.day_ahead.price)}, {"real_time", fmt_g12(o.real_time.price)}};
    j["bids"] = bids_to_json(o.bids, cfg);
    std::vector<double> totals(cfg.n_gens());
    for (std::size_t i = 0; i < cfg.n_gens(); ++i) totals[i] = o.gen_total(i);
    j["dispatch"] = {{"day_ahead", detail::gen_map(cfg, o.day_ahead.gen_dispatch)},
                     {"real_time", detail::gen_map(cfg, o.real_time.gen_dispatch)},
                     {"total", detail::gen_map(cfg, totals)}};
    j["load_allocation"] = {{"day_ahead", detail::load_map(cfg, o.day_ahead.load_alloc)},
                            {"real_time", detail::load_map(cfg, o.real_time.load_alloc)}};
    j["settlement"] = {{"profits", detail::gen_map(cfg, s.profits)},
                       {"payments", detail::load_map(cfg, s.payments)},
                       {"social_cost", fmt_g12(s.social_cost)},
                       {"aggregate_profit", fmt_g12(s.aggregate_profit)},
                       {"aggregate_payment", fmt_g12(s.aggregate_payment)}};
    return j;
}

inline std::string verification_to_text(const VerificationReport& rep, const EquilibriumResult& eq) {
    std::ostringstream os;
    os << "regime: " << regime_name(eq.regime) << "\n";
    os << "behavior: " << behavior_name(eq.behavior) << "\n";
    os << "tolerance: " << fmt_g12(rep.tolerance) << "\n";
    os << "balance_residual_day_ahead: " << fmt_g12(rep.balance_residual_da) << "\n";
    os << "balance_residual_real_time: " << fmt_g12(rep.balance_residual_rt) << "\n";
    for (std::size_t i = 0; i < rep.deviation_gains.size(); ++i) {
        os << rep.deviation_gains[i].first << " foc_residual=" << fmt_g12(rep.foc_residuals[i].second)
           << " deviation_gain=" << fmt_g12(rep.deviation_gains[i].second) << "\n";
    }
    if (rep.verified) {
        os << "verdict: VERIFIED\n";
    } else {
        os << "verdict: VIOLATED worst=" << rep.worst_participant
           << " gain=" << fmt_g12(rep.worst_gain) << "\n";
    }
    return os.str();
}

inline Json verification_to_json(const VerificationReport& rep, const EquilibriumResult& eq) {
    Json j;
    j["regime"] = regime_name(eq.regime);
    j["behavior"] = behavior_name(eq.behavior);
    j["tolerance"] = fmt_g12(rep.tolerance);
    j["balance_residuals"] = {{"day_ahead", fmt_g12(rep.balance_residual_da)},
                              {"real_time", fmt_g12(rep.balance_residual_rt)}};
    Json foc = Json::object(), gains = Json::object();
    for (const auto& [k, v] : rep.foc_residuals) foc[k] = fmt_g12(v);
    for (const auto& [k, v] : rep.deviation_gains) gains[k] = fmt_g12(v);
    j["foc_residuals"] = foc;
    j["deviation_gains"] = gains;
    j["verdict"] = rep.verified ? "verified" : "violated";
    if (!rep.verified) {
        j["worst_participant"] = rep.worst_participant;
        j["worst_gain"] = fmt_g12(rep.worst_gain);
    }
    return j;
}

// ---------------------------------------------------------------------------
// Sweep grids
// ---------------------------------------------------------------------------

inline Json grid_to_json(const SweepGrid& g) {
    Json j;
    j["name"] = g.name;
    j["metric"] = metric_name(g.metric);
    Json xs = Json::array(), ys = Json::array();
    for (double v : g.x_values) xs.push_back(fmt_g12(v));
    for (double v : g.y_values) ys.push_back(fmt_g12(v));
    j["x_axis"] = {{"label", g.x_label}, {"values", xs}};
    j["y_axis"] = {{"label", g.y_label}, {"values", ys}};
    Json rows = Json::array();
    for (const auto& row : g.cells) {
        Json r = Json::array();
        for (const auto& cell : row) {
            if (cell)
                r.push_back(fmt_g12(*cell));
            else
                r.push_back(nullptr);
        }
        rows.push_back(std::move(r));
    }
    j["cells"] = rows;
    return j;
}

// CSV layout: header `x,y,value`, one row per cell (y-major), absent cells as
// `null`.  Multiple grids are separated by `# grid <name>` comment lines.
inline std::string grids_to_csv(const std::vector<SweepGrid>& grids) {
    std::ostringstream os;
    for (const auto& g : grids) {
        if (grids.size() > 1) os << "# grid " << g.name << "\n";
        os << "x,y,value\n";
        for (std::size_t yi = 0; yi < g.y_values.size(); ++yi)
            for (std::size_t xi = 0; xi < g.x_values.size(); ++xi) {
                os << fmt_g12(g.x_values[xi]) << "," << fmt_g12(g.y_values[yi]) << ",";
                if (g.cells[yi][xi])
                    os << fmt_g12(*g.cells[yi][xi]);
                else
                    os << "null";
                os << "\n";
            }
    }
    return os.str();
}

inline std::string grids_to_json_text(const std::vector<SweepGrid>& grids) {
    if (grids.size() == 1) return grid_to_json(grids[0]).dump(2) + "\n";
    Json arr = Json::array();
    for (const auto& g : grids) arr.push_back(grid_to_json(g));
    return arr.dump(2) + "\n";
}

}  // namespace marketlab
