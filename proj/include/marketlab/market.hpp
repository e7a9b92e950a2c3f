// Core domain types for a two-stage (day-ahead / real-time) settlement
// electricity market with inelastic loads and quadratic-cost generators.
#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace marketlab {

enum class ErrorCode {
    InvalidSlope,
    InvalidCost,
    EmptyParticipants,
    ParseError,
    NegativeDemand,
    DegeneratePrice,
    TooFewGenerators,
    HeterogeneousUnsupported,
    SplitMismatch,
    DivisionByZero,
    UnsupportedRegimePair,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::InvalidSlope: return "InvalidSlope";
        case ErrorCode::InvalidCost: return "InvalidCost";
        case ErrorCode::EmptyParticipants: return "EmptyParticipants";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::NegativeDemand: return "NegativeDemand";
        case ErrorCode::DegeneratePrice: return "DegeneratePrice";
        case ErrorCode::TooFewGenerators: return "TooFewGenerators";
        case ErrorCode::HeterogeneousUnsupported: return "HeterogeneousUnsupported";
        case ErrorCode::SplitMismatch: return "SplitMismatch";
        case ErrorCode::DivisionByZero: return "DivisionByZero";
        case ErrorCode::UnsupportedRegimePair: return "UnsupportedRegimePair";
    }
    return "Unknown";
}

class MarketError : public std::runtime_error {
  public:
    MarketError(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}
    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

// Balance checks use a relative tolerance scaled by max(1, magnitude); the
// quantities of interest span roughly 0.2..500 MW.
inline constexpr double kBalanceRelTol = 1e-9;

inline double balance_tol(double magnitude) {
    return kBalanceRelTol * std::max(1.0, std::abs(magnitude));
}

struct GeneratorParams {
    std::string id;
    double cost_coeff = 0.0;  // quadratic cost coefficient c_j, $/MW^2
};

struct LoadParams {
    std::string id;
    double demand = 0.0;  // total inelastic demand d_l, MW
};

// Complete exogenous parameterization of the market.  slope_da / slope_rt are
// the fixed slopes b^d, b^r of the intercept bid functions g = b*price - beta.
struct MarketConfig {
    std::vector<GeneratorParams> generators;
    std::vector<LoadParams> loads;
    double slope_da = 0.0;
    double slope_rt = 0.0;

    // cached by validate_config
    double sum_cost_inv = 0.0;
    double total_demand = 0.0;

    std::size_t n_gens() const { return generators.size(); }
    std::size_t n_loads() const { return loads.size(); }

    double cost(std::size_t j) const { return generators[j].cost_coeff; }

    std::optional<std::size_t> gen_index(const std::string& id) const {
        for (std::size_t j = 0; j < generators.size(); ++j)
            if (generators[j].id == id) return j;
        return std::nullopt;
    }
    std::optional<std::size_t> load_index(const std::string& id) const {
        for (std::size_t l = 0; l < loads.size(); ++l)
            if (loads[l].id == id) return l;
        return std::nullopt;
    }
};

inline bool is_homogeneous(const MarketConfig& cfg) {
    if (cfg.generators.empty()) return true;
    const double c0 = cfg.generators.front().cost_coeff;
    for (const auto& g : cfg.generators) {
        if (std::abs(g.cost_coeff - c0) > 1e-12 * std::max(1.0, std::abs(c0))) return false;
    }
    return true;
}

// Validates type invariants and fills the cached aggregates (sum of 1/c_j and
// total demand).  Returns the config by value; validated configs are treated
// as immutable from here on.
inline MarketConfig validate_config(MarketConfig cfg) {
    if (cfg.generators.empty() || cfg.loads.empty())
        throw MarketError(ErrorCode::EmptyParticipants, "config needs at least one generator and one load");
    if (!(cfg.slope_da > 0.0) || !std::isfinite(cfg.slope_da))
        throw MarketError(ErrorCode::InvalidSlope, "slope_da must be > 0");
    if (!(cfg.slope_rt > 0.0) || !std::isfinite(cfg.slope_rt))
        throw MarketError(ErrorCode::InvalidSlope, "slope_rt must be > 0");

    double sum_cinv = 0.0;
    for (const auto& g : cfg.generators) {
        if (!(g.cost_coeff > 0.0) || !std::isfinite(g.cost_coeff))
            throw MarketError(ErrorCode::InvalidCost, "cost_coeff must be > 0 for generator " + g.id);
        sum_cinv += 1.0 / g.cost_coeff;
    }
    double d = 0.0;
    for (const auto& l : cfg.loads) {
        if (l.demand < 0.0 || !std::isfinite(l.demand))
            throw MarketError(ErrorCode::NegativeDemand, "demand must be >= 0 for load " + l.id);
        d += l.demand;
    }
    if (!std::isfinite(d))
        throw MarketError(ErrorCode::ParseError, "aggregate demand is not finite");

    // ids must be unique or the per-participant report maps would collide
    for (std::size_t a = 0; a < cfg.generators.size(); ++a)
        for (std::size_t b = a + 1; b < cfg.generators.size(); ++b)
            if (cfg.generators[a].id == cfg.generators[b].id)
                throw MarketError(ErrorCode::ParseError, "duplicate generator id " + cfg.generators[a].id);
    for (std::size_t a = 0; a < cfg.loads.size(); ++a)
        for (std::size_t b = a + 1; b < cfg.loads.size(); ++b)
            if (cfg.loads[a].id == cfg.loads[b].id)
                throw MarketError(ErrorCode::ParseError, "duplicate load id " + cfg.loads[a].id);

    cfg.sum_cost_inv = sum_cinv;
    cfg.total_demand = d;
    return cfg;
}

enum class BidKind { Intercept, Slope };

// One bid per participant and stage.  Intercepts are unconstrained reals;
// slope bids are nonnegative.  Per-load stage quantities may be negative, only
// the per-load total is pinned (load_da[l] + load_rt[l] = d_l).
struct BidProfile {
    BidKind kind = BidKind::Intercept;
    std::vector<double> gen_da;  // beta_j^d (intercept bids)
    std::vector<double> gen_rt;  // beta_j^r
    std::vector<double> gen_slope_da;  // bhat_j^d, Slope kind only
    std::vector<double> gen_slope_rt;  // bhat_j^r, Slope kind only
    std::vector<double> load_da;  // d_l^d
    std::vector<double> load_rt;  // d_l^r
};

struct StageOutcome {
    double price = 0.0;
    std::vector<double> gen_dispatch;
    std::vector<double> load_alloc;
    bool degenerate = false;  // slope clearing with zero supply and zero demand

    double total_dispatch() const {
        double s = 0.0;
        for (double g : gen_dispatch) s += g;
        return s;
    }
    double total_alloc() const {
        double s = 0.0;
        for (double a : load_alloc) s += a;
        return s;
    }
};

struct TwoStageOutcome {
    StageOutcome day_ahead;
    StageOutcome real_time;
    BidProfile bids;

    double gen_total(std::size_t j) const {
        return day_ahead.gen_dispatch[j] + real_time.gen_dispatch[j];
    }
};

enum class Regime { Standard, RtMPM, DaMPM, SlopeStandard };
enum class Behavior { Competitive, Nash };

inline const char* regime_name(Regime r) {
    switch (r) {
        case Regime::Standard: return "standard";
        case Regime::RtMPM: return "rt-mpm";
        case Regime::DaMPM: return "da-mpm";
        case Regime::SlopeStandard: return "slope";
    }
    return "?";
}

inline const char* behavior_name(Behavior b) {
    return b == Behavior::Competitive ? "competitive" : "nash";
}

struct EquilibriumResult {
    Regime regime = Regime::Standard;
    Behavior behavior = Behavior::Competitive;
    TwoStageOutcome outcome;
    std::string degrees_of_freedom;
    bool symmetric = false;
};

// Throwing invariant checks, used by tests and by the CLI before settlement.
inline void check_stage_balance(const StageOutcome& st) {
    const double supply = st.total_dispatch();
    const double demand = st.total_alloc();
    if (std::abs(supply - demand) > balance_tol(demand))
        throw MarketError(ErrorCode::SplitMismatch, "stage supply/demand imbalance");
}

inline void check_two_stage(const TwoStageOutcome& out, const MarketConfig& cfg) {
    check_stage_balance(out.day_ahead);
    check_stage_balance(out.real_time);
    for (std::size_t l = 0; l < cfg.n_loads(); ++l) {
        const double total = out.day_ahead.load_alloc[l] + out.real_time.load_alloc[l];
        if (std::abs(total - cfg.loads[l].demand) > balance_tol(cfg.loads[l].demand))
            throw MarketError(ErrorCode::SplitMismatch,
                              "load " + cfg.loads[l].id + " stage split does not sum to its demand");
    }
    for (std::size_t j = 0; j < cfg.n_gens(); ++j) {
        if (!std::isfinite(out.gen_total(j)))
            throw MarketError(ErrorCode::ParseError, "non-finite dispatch for " + cfg.generators[j].id);
    }
}

// Reads demand bids from CSV with header `load_id,demand_mw`, order preserved.
inline std::vector<LoadParams> load_demand_bids(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MarketError(ErrorCode::ParseError, "cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw MarketError(ErrorCode::ParseError, "empty file " + path);
    // tolerate a UTF-8 BOM and trailing CR
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "load_id,demand_mw")
        throw MarketError(ErrorCode::ParseError, "expected header load_id,demand_mw in " + path);

    std::vector<LoadParams> loads;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw MarketError(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": missing comma");
        LoadParams lp;
        lp.id = line.substr(0, comma);
        const std::string num = line.substr(comma + 1);
        std::size_t used = 0;
        try {
            lp.demand = std::stod(num, &used);
        } catch (const std::exception&) {
            throw MarketError(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": bad number '" + num + "'");
        }
        while (used < num.size() && (num[used] == ' ' || num[used] == '\t')) ++used;
        if (used != num.size() || lp.id.empty())
            throw MarketError(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": malformed row");
        if (lp.demand < 0.0)
            throw MarketError(ErrorCode::NegativeDemand,
                              path + ":" + std::to_string(lineno) + ": negative demand for " + lp.id);
        loads.push_back(std::move(lp));
    }
    if (loads.empty()) throw MarketError(ErrorCode::EmptyParticipants, "no demand rows in " + path);
    return loads;
}

}  // namespace marketlab
