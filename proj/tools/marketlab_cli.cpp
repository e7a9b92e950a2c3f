// marketlab: compute, verify and sweep two-stage electricity market equilibria.
//
// Subcommands:
//   equilibrium  solve one (regime, behavior) pair and print the settled outcome
//   verify       check a claimed equilibrium via FOC residuals and best-response search
//   sweep        grid experiments (participants / slopes / mechanisms)
//
// Exit codes: 0 success (verify: verified), 2 solver or input error,
// 3 verification found a profitable deviation.
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "marketlab/marketlab.hpp"

namespace {

using namespace marketlab;

Regime parse_regime(const std::string& s) {
    if (s == "standard") return Regime::Standard;
    if (s == "rt-mpm") return Regime::RtMPM;
    if (s == "da-mpm") return Regime::DaMPM;
    if (s == "slope") return Regime::SlopeStandard;
    throw MarketError(ErrorCode::ParseError, "unknown regime '" + s + "'");
}

Behavior parse_behavior(const std::string& s) {
    if (s == "competitive") return Behavior::Competitive;
    if (s == "nash") return Behavior::Nash;
    throw MarketError(ErrorCode::ParseError, "unknown behavior '" + s + "'");
}

SweepMetric parse_metric(const std::string& s) {
    if (s == "profit") return SweepMetric::ProfitRatio;
    if (s == "payment") return SweepMetric::PaymentRatio;
    if (s == "cost") return SweepMetric::CostRatio;
    if (s == "da-allocation") return SweepMetric::NormalizedDaAllocation;
    throw MarketError(ErrorCode::ParseError, "unknown metric '" + s + "'");
}

MarketConfig load_scenario(const std::string& config_path, const std::string& demand_csv) {
    MarketConfig cfg = load_config(config_path);
    if (!demand_csv.empty()) {
        MarketConfig replaced = cfg;
        replaced.loads = load_demand_bids(demand_csv);
        cfg = validate_config(std::move(replaced));
    }
    return cfg;
}

// "id=value" pairs into a per-load day-ahead split following config order
std::optional<std::vector<double>> parse_split(const MarketConfig& cfg,
                                               const std::vector<std::string>& entries) {
    if (entries.empty()) return std::nullopt;
    std::vector<double> split(cfg.n_loads());
    std::vector<bool> seen(cfg.n_loads(), false);
    for (const auto& e : entries) {
        const auto eq = e.find('=');
        if (eq == std::string::npos)
            throw MarketError(ErrorCode::SplitMismatch, "expected id=value, got '" + e + "'");
        const std::string id = e.substr(0, eq);
        const auto idx = cfg.load_index(id);
        if (!idx) throw MarketError(ErrorCode::SplitMismatch, "unknown load id '" + id + "'");
        split[*idx] = std::stod(e.substr(eq + 1));
        seen[*idx] = true;
    }
    for (std::size_t l = 0; l < cfg.n_loads(); ++l)
        if (!seen[l])
            throw MarketError(ErrorCode::SplitMismatch, "missing split for load " + cfg.loads[l].id);
    return split;
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MarketError(ErrorCode::ParseError, "cannot write " + path);
    out << text;
}

std::vector<int> int_range(int lo, int hi) {
    std::vector<int> v;
    for (int i = lo; i <= hi; ++i) v.push_back(i);
    return v;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v;
    if (n <= 1) {
        v.push_back(lo);
        return v;
    }
    for (int i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * i / (n - 1));
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-stage electricity market equilibrium toolkit"};
    app.require_subcommand(1);

    std::string config_path, demand_csv, regime_s = "standard", behavior_s = "competitive";
    std::string output, format = "json", bids_path;
    std::vector<std::string> split_entries;
    double tolerance = 1e-5;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "scenario config JSON")
            ->envname("MARKETLAB_CONFIG")
            ->required();
        cmd->add_option("--demand-csv", demand_csv, "replace config loads with CSV demand bids")
            ->envname("MARKETLAB_DEMAND_CSV");
        cmd->add_option("--output", output, "output path ('-' for stdout)")->envname("MARKETLAB_OUTPUT");
    };

    CLI::App* eq_cmd = app.add_subcommand("equilibrium", "solve a market equilibrium");
    add_common(eq_cmd);
    eq_cmd->add_option("--regime", regime_s, "standard|rt-mpm|da-mpm|slope")->envname("MARKETLAB_REGIME");
    eq_cmd->add_option("--behavior", behavior_s, "competitive|nash")->envname("MARKETLAB_BEHAVIOR");
    eq_cmd->add_option("--da-split", split_entries, "per-load day-ahead quantity overrides, id=value");
    eq_cmd->add_option("--format", format, "json")->envname("MARKETLAB_FORMAT");

    CLI::App* verify_cmd = app.add_subcommand("verify", "verify an equilibrium");
    add_common(verify_cmd);
    verify_cmd->add_option("--regime", regime_s, "standard|rt-mpm|da-mpm|slope")->envname("MARKETLAB_REGIME");
    verify_cmd->add_option("--behavior", behavior_s, "competitive|nash")->envname("MARKETLAB_BEHAVIOR");
    verify_cmd->add_option("--tolerance", tolerance, "relative deviation-gain tolerance")
        ->envname("MARKETLAB_TOLERANCE");
    verify_cmd->add_option("--bids", bids_path, "verify this bid profile instead of the solver output");
    verify_cmd->add_option("--format", format, "text|json")->envname("MARKETLAB_FORMAT");

    std::string mode = "participants", metric_s = "profit", b_values_s;
    int g_min = 2, g_max = 25, l_min = 1, l_max = 25;
    double bd_min = 0.0, bd_max = 0.0, br_min = 0.0, br_max = 0.0, epsilon = 0.025;
    int bd_steps = 10, br_steps = 10;
    std::string sweep_regime_s = "da-mpm";

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "grid experiments");
    add_common(sweep_cmd);
    sweep_cmd->add_option("--mode", mode, "participants|slopes|mechanisms")->envname("MARKETLAB_MODE");
    sweep_cmd->add_option("--regime", sweep_regime_s, "regime for participants mode")
        ->envname("MARKETLAB_REGIME");
    sweep_cmd->add_option("--metric", metric_s, "profit|payment|cost|da-allocation");
    sweep_cmd->add_option("--g-min", g_min, "min generator count");
    sweep_cmd->add_option("--g-max", g_max, "max generator count");
    sweep_cmd->add_option("--l-min", l_min, "min load count");
    sweep_cmd->add_option("--l-max", l_max, "max load count");
    sweep_cmd->add_option("--bd-min", bd_min, "min day-ahead slope (default 0.25/c)");
    sweep_cmd->add_option("--bd-max", bd_max, "max day-ahead slope (default 2.5/c)");
    sweep_cmd->add_option("--bd-steps", bd_steps, "day-ahead slope grid points");
    sweep_cmd->add_option("--br-min", br_min, "min real-time slope (default 0.25/c)");
    sweep_cmd->add_option("--br-max", br_max, "max real-time slope (default 2.5/c)");
    sweep_cmd->add_option("--br-steps", br_steps, "real-time slope grid points");
    sweep_cmd->add_option("--epsilon", epsilon, "slope offset for mechanisms mode");
    sweep_cmd->add_option("--b-values", b_values_s, "comma-separated explicit slope values");
    sweep_cmd->add_option("--format", format, "csv|json")->envname("MARKETLAB_FORMAT");

    CLI11_PARSE(app, argc, argv);

    try {
        const MarketConfig cfg = load_scenario(config_path, demand_csv);

        if (eq_cmd->parsed()) {
            if (format != "json") throw MarketError(ErrorCode::ParseError, "equilibrium output is json");
            SolveOptions opts;
            opts.da_load_split = parse_split(cfg, split_entries);
            const EquilibriumResult eq =
                solve_equilibrium(cfg, parse_regime(regime_s), parse_behavior(behavior_s), opts);
            check_two_stage(eq.outcome, cfg);
            const SettlementReport s = settle(eq.outcome, cfg);
            write_output(output, equilibrium_to_json(eq, s, cfg).dump(2) + "\n");
            return 0;
        }

        if (verify_cmd->parsed()) {
            const Regime regime = parse_regime(regime_s);
            const Behavior behavior = parse_behavior(behavior_s);
            EquilibriumResult eq = solve_equilibrium(cfg, regime, behavior);
            if (!bids_path.empty()) {
                std::ifstream in(bids_path);
                if (!in) throw MarketError(ErrorCode::ParseError, "cannot open " + bids_path);
                Json j;
                in >> j;
                if (j.contains("bids")) j = j.at("bids");  // accept a full equilibrium report
                eq.outcome = clear_from_bids(bids_from_json(j, cfg), cfg, regime);
                eq.degrees_of_freedom = "loaded from " + bids_path;
            }
            const VerificationReport rep = verify_equilibrium(eq, cfg, tolerance);
            if (format == "json")
                write_output(output, verification_to_json(rep, eq).dump(2) + "\n");
            else
                write_output(output, verification_to_text(rep, eq));
            return rep.verified ? 0 : 3;
        }

        if (sweep_cmd->parsed()) {
            if (g_min > g_max || l_min > l_max || bd_steps < 1 || br_steps < 1)
                throw MarketError(ErrorCode::ParseError, "invalid sweep ranges");
            std::vector<SweepGrid> grids;
            if (mode == "participants") {
                grids.push_back(sweep_participants(cfg, int_range(g_min, g_max), int_range(l_min, l_max),
                                                   parse_regime(sweep_regime_s), parse_metric(metric_s)));
            } else if (mode == "slopes") {
                if (!is_homogeneous(cfg))
                    throw MarketError(ErrorCode::HeterogeneousUnsupported,
                                      "slopes sweep needs homogeneous costs");
                const double c = cfg.cost(0);
                if (bd_min <= 0.0) bd_min = 0.25 / c;
                if (bd_max <= 0.0) bd_max = 2.5 / c;
                if (br_min <= 0.0) br_min = 0.25 / c;
                if (br_max <= 0.0) br_max = 2.5 / c;
                grids.push_back(
                    sweep_slopes(cfg, linspace(bd_min, bd_max, bd_steps), linspace(br_min, br_max, br_steps)));
            } else if (mode == "mechanisms") {
                std::vector<double> b_values;
                if (!b_values_s.empty()) {
                    std::stringstream ss(b_values_s);
                    std::string tok;
                    while (std::getline(ss, tok, ',')) b_values.push_back(std::stod(tok));
                } else {
                    if (!is_homogeneous(cfg))
                        throw MarketError(ErrorCode::HeterogeneousUnsupported,
                                          "mechanisms sweep needs homogeneous costs");
                    const double c = cfg.cost(0);
                    if (!(c - epsilon > 0.0))
                        throw MarketError(ErrorCode::InvalidSlope, "epsilon must stay below the cost coefficient");
                    b_values = {1.0 / (c + epsilon), 1.0 / c, 1.0 / (c - epsilon)};
                }
                grids = compare_mechanisms(cfg, b_values, int_range(g_min, g_max), int_range(l_min, l_max));
            } else {
                throw MarketError(ErrorCode::ParseError, "unknown sweep mode '" + mode + "'");
            }
            write_output(output, format == "csv" ? grids_to_csv(grids) : grids_to_json_text(grids));
            return 0;
        }
    } catch (const MarketError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
