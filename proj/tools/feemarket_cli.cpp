// Command-line front end: computes bid curves and welfare solutions, runs
// simulations and parameter sweeps, and emits figure-ready CSV/JSON.
//
// Every command writes its outputs next to a run manifest recording the
// command, the resolved parameters, seeds, tool version, and output digests.
// Analytic outputs are bit-identical across re-runs; simulations are
// seed-identical.

#include <CLI11.hpp>
#include <json.hpp>

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "feemarket/eo_model.hpp"
#include "feemarket/event_sim.hpp"
#include "feemarket/numerics.hpp"
#include "feemarket/patient_model.hpp"
#include "feemarket/types.hpp"
#include "feemarket/uc_model.hpp"

using json = nlohmann::json;
using feemarket::Error;
using feemarket::ErrorCode;
using feemarket::MarketParams;
using feemarket::ThresholdTime;
namespace eo = feemarket::eo;
namespace uc = feemarket::uc;
namespace sim = feemarket::sim;
namespace pat = feemarket::patient;

namespace {

constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------- formatting

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string threshold_cell(const ThresholdTime& t) {
    switch (t.kind) {
        case ThresholdTime::Kind::never_suspend: return "never_suspend";
        case ThresholdTime::Kind::never_operate: return "never_operate";
        case ThresholdTime::Kind::finite: return fmt(t.value);
    }
    return "";
}

json threshold_json(const ThresholdTime& t) {
    switch (t.kind) {
        case ThresholdTime::Kind::never_suspend: return "never_suspend";
        case ThresholdTime::Kind::never_operate: return "never_operate";
        case ThresholdTime::Kind::finite: return t.value;
    }
    return nullptr;
}

// ------------------------------------------------------------------ manifest

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

struct RunWriter {
    std::string stem;
    std::string command;
    json parameters = json::object();
    std::vector<std::pair<std::string, std::uint64_t>> outputs;

    void write(const std::string& path, const std::string& content) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error(ErrorCode::bad_config, "cannot open output file " + path);
        out << content;
        out.close();
        outputs.emplace_back(path, fnv1a64(content));
    }

    void finish() {
        json manifest;
        manifest["command"] = command;
        manifest["parameters"] = parameters;
        manifest["tool_version"] = kVersion;
        json outs = json::array();
        for (const auto& [path, digest] : outputs) {
            char hex[20];
            std::snprintf(hex, sizeof(hex), "%016" PRIx64, digest);
            outs.push_back({{"path", path}, {"fnv1a64", hex}});
        }
        manifest["outputs"] = outs;
        std::ofstream out(stem + ".manifest.json", std::ios::binary);
        out << manifest.dump(2) << "\n";
        std::cout << "wrote";
        for (const auto& [path, digest] : outputs) std::cout << " " << path;
        std::cout << " " << stem << ".manifest.json" << std::endl;
    }
};

// ------------------------------------------------------------------- presets

// Figure-reproduction parameter sets, applied as option defaults (explicit
// flags and config files override them).
const std::map<std::string, std::map<std::string, std::string>> kPresets{
    {"fig-uc-lambda",
     {{"lambda", "0.8,1.2,2.0"}, {"capacity", "1.0"}, {"t-max", "5"}, {"points", "200"}}},
    {"fig-uc-capacity",
     {{"lambda", "1.0"}, {"capacity", "0.5,1.0,2.0"}, {"t-max", "5"}, {"points", "200"}}},
    {"fig-eo", {{"lambda", "1.2"}, {"capacity", "1"}, {"cost", "0.3"}, {"eta", "0"}}},
    {"fig-te-reward",
     {{"lambda", "1.2"}, {"capacity", "1"}, {"cost", "0.3"}, {"eta", "0"},
      {"vary", "reward"}, {"from", "0"}, {"to", "0.25"}, {"points", "50"}}},
    {"fig-te-lambda",
     {{"capacity", "1"}, {"cost", "0.3"}, {"eta", "0"}, {"reward", "0"},
      {"vary", "lambda"}, {"from", "0.35"}, {"to", "5"}, {"points", "100"}}},
    {"fig-patient", {{"lambda", "1.2"}, {"capacity", "1"}, {"rho", "1"}}},
};

std::string scan_flag_value(int argc, char** argv, const std::string& flag) {
    std::string value;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == flag && i + 1 < argc) value = argv[i + 1];
        else if (arg.rfind(flag + "=", 0) == 0) value = arg.substr(flag.size() + 1);
    }
    return value;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

// Defaults overlay, weakest to strongest: preset, then config file. Explicit
// flags override both because they win at parse time.
std::map<std::string, std::string> scan_defaults(int argc, char** argv) {
    std::map<std::string, std::string> defaults;
    const std::string preset_name = scan_flag_value(argc, argv, "--preset");
    if (!preset_name.empty()) {
        const auto it = kPresets.find(preset_name);
        if (it == kPresets.end())
            throw Error(ErrorCode::bad_config, "unknown preset '" + preset_name + "'");
        defaults = it->second;
    }
    const std::string config_path = scan_flag_value(argc, argv, "--config");
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw Error(ErrorCode::bad_config, "cannot read config file " + config_path);
        std::string line;
        while (std::getline(in, line)) {
            const std::string stripped = trim(line);
            if (stripped.empty() || stripped[0] == '#') continue;
            const auto eq = stripped.find('=');
            if (eq == std::string::npos)
                throw Error(ErrorCode::bad_config, "config line is not key=value: " + stripped);
            defaults[trim(stripped.substr(0, eq))] = trim(stripped.substr(eq + 1));
        }
    }
    return defaults;
}

double preset_num(const std::map<std::string, std::string>& preset, const std::string& key,
                  double fallback) {
    const auto it = preset.find(key);
    return it == preset.end() ? fallback : std::stod(it->second);
}

std::string preset_str(const std::map<std::string, std::string>& preset,
                       const std::string& key, const std::string& fallback) {
    const auto it = preset.find(key);
    return it == preset.end() ? fallback : it->second;
}

std::vector<double> preset_list(const std::map<std::string, std::string>& preset,
                                const std::string& key, std::vector<double> fallback) {
    const auto it = preset.find(key);
    if (it == preset.end()) return fallback;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

// ------------------------------------------------------------------- helpers

json params_json(const MarketParams& p) {
    return json{{"lambda", p.arrival_rate},   {"capacity", p.capacity},
                {"cost", p.operating_cost},   {"reward", p.block_reward},
                {"eta", p.committed_share},   {"rho", p.discount_rate}};
}

void print_density_note(double tstar) {
    std::cerr << "note: the flat branch of the stationary pool-state density uses the "
                 "normalizing constant lambda/(1 + lambda*"
              << fmt(tstar) << ") so that the density integrates to one." << std::endl;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        g[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    return g;
}

int map_error(const Error& e, bool simulation) {
    switch (e.code()) {
        case ErrorCode::bad_config:
        case ErrorCode::bad_rate:
        case ErrorCode::domain:
        case ErrorCode::grid_too_coarse:
        case ErrorCode::insufficient_curve:
            return 2;
        case ErrorCode::no_bracket:
        case ErrorCode::max_iter:
            return simulation ? 4 : 3;
    }
    return simulation ? 4 : 3;
}

// --------------------------------------------------------------- subcommands

struct UcBidArgs {
    std::vector<double> lambdas{1.2};
    std::vector<double> capacities{1.0};
    double t_max = 5.0;
    int points = 100;
    std::string out = "uc_bid";
};

int run_uc_bid(const UcBidArgs& a) {
    if (a.lambdas.size() > 1 && a.capacities.size() > 1)
        throw Error(ErrorCode::bad_config,
                    "--lambda and --capacity cannot both carry multiple values");
    for (double l : a.lambdas)
        if (!(l > 0.0)) throw Error(ErrorCode::bad_config, "--lambda must be > 0");
    for (double k : a.capacities)
        if (!(k > 0.0)) throw Error(ErrorCode::bad_config, "--capacity must be > 0");

    std::string csv = "lambda,capacity,t,bid\n";
    for (double lam : a.lambdas) {
        for (double cap : a.capacities) {
            MarketParams p;
            p.arrival_rate = lam;
            p.capacity = cap;
            const auto curve = uc::sample_bid_curve(p, a.t_max, a.points);
            for (std::size_t i = 0; i < curve.grid.size(); ++i) {
                csv += fmt(lam) + "," + fmt(cap) + "," + fmt(curve.grid[i]) + "," +
                       fmt(curve.values[i]) + "\n";
            }
        }
    }

    RunWriter w{a.out, "uc-bid", json::object(), {}};
    w.parameters = {{"lambda", a.lambdas},
                    {"capacity", a.capacities},
                    {"t_max", a.t_max},
                    {"points", a.points}};
    w.write(a.out + ".csv", csv);
    w.finish();
    return 0;
}

struct EoSolveArgs {
    MarketParams p;
    std::string out = "eo_solve";
};

int run_eo_solve(const EoSolveArgs& a) {
    a.p.validate();
    const auto rep = eo::solve(a.p);
    json j;
    j["t_e"] = threshold_json(rep.t_E);
    j["t_o"] = threshold_json(rep.t_O);
    j["y_o"] = rep.y_O.has_value() ? json(*rep.y_O) : json(nullptr);
    j["sw_at_te"] = rep.sw_at_tE;
    j["sw_at_to"] = rep.sw_at_tO;
    j["user_welfare"] = rep.user_welfare;
    j["miner_surplus_at_te"] = rep.miner_surplus_at_tE;
    for (const auto& [key, value] : j.items()) {
        if (value.is_number() && !std::isfinite(value.get<double>()))
            throw Error(ErrorCode::max_iter, "non-finite value in field " + key);
    }

    if (rep.t_E.is_finite() && rep.t_E.value > 0.0) print_density_note(rep.t_E.value);
    std::cout << j.dump(2) << std::endl;

    RunWriter w{a.out, "eo-solve", json::object(), {}};
    w.parameters = params_json(a.p);
    w.write(a.out + ".json", j.dump(2) + "\n");
    w.finish();
    return 0;
}

struct SweepArgs {
    MarketParams p;
    std::string vary = "reward";
    double from = 0.0;
    double to = 0.25;
    int points = 50;
    int threads = 1;
    std::string out = "sweep";
};

int run_sweep(const SweepArgs& a) {
    a.p.validate();
    if (!(a.from < a.to)) throw Error(ErrorCode::bad_config, "--from must be below --to");
    if (a.points < 2) throw Error(ErrorCode::bad_config, "--points must be >= 2");
    eo::SweepParameter param;
    if (a.vary == "lambda") param = eo::SweepParameter::arrival_rate;
    else if (a.vary == "capacity") param = eo::SweepParameter::capacity;
    else if (a.vary == "cost") param = eo::SweepParameter::operating_cost;
    else if (a.vary == "reward") param = eo::SweepParameter::block_reward;
    else throw Error(ErrorCode::bad_config, "--vary must be lambda, capacity, cost or reward");

    const auto table = eo::sweep(a.p, param, linspace(a.from, a.to, a.points), a.threads);
    std::cerr << "note: the flat branch of the stationary pool-state density uses the "
                 "normalizing constant lambda/(1 + lambda*t_star) so that SW integrates "
                 "against a unit-mass density." << std::endl;

    std::string csv = a.vary + ",t_E,t_O,y_O,SW,status\n";
    for (const auto& row : table.rows) {
        csv += fmt(row.parameter) + ",";
        if (row.valid) {
            csv += threshold_cell(row.t_E) + "," + threshold_cell(row.t_O) + ",";
            csv += row.y_O.has_value() ? fmt(*row.y_O) : std::string();
            csv += "," + fmt(row.sw) + ",ok\n";
        } else {
            csv += ",,,,invalid\n";
        }
    }

    RunWriter w{a.out, "sweep", json::object(), {}};
    w.parameters = params_json(a.p);
    w.parameters["vary"] = a.vary;
    w.parameters["from"] = a.from;
    w.parameters["to"] = a.to;
    w.parameters["points"] = a.points;
    w.parameters["threads"] = a.threads;
    w.write(a.out + ".csv", csv);
    w.finish();
    return 0;
}

struct SimulateArgs {
    MarketParams p;
    std::string model = "uc";
    double tstar = 0.0;
    bool tstar_given = false;
    long blocks = 100000;
    double dt = 1e-3;
    long burn_in = 100;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    int threads = 1;
    int bins = 400;
    double hist_max = 0.0;
    std::string out = "simulate";
};

int run_simulate(const SimulateArgs& a) {
    a.p.validate();
    if (a.model != "uc" && a.model != "eo")
        throw Error(ErrorCode::bad_config, "--model must be uc or eo");
    if (a.model == "eo" && !a.tstar_given)
        throw Error(ErrorCode::bad_config, "--tstar is required for --model eo");

    sim::SimConfig cfg;
    cfg.n_blocks = a.blocks;
    cfg.dt = a.dt;
    cfg.burn_in = a.burn_in;
    cfg.rs = {a.seed, a.stream};
    cfg.threads = a.threads;
    cfg.hist_bins = a.bins;
    cfg.hist_max = a.hist_max;

    sim::SimStats st;
    if (a.model == "uc") {
        st = sim::simulate_uc(a.p, cfg);
    } else {
        print_density_note(a.tstar);
        st = sim::simulate_eo(a.p, ThresholdTime::finite(a.tstar), cfg);
    }

    json j;
    j["model"] = a.model;
    j["parameters"] = params_json(a.p);
    if (a.model == "eo") j["tstar"] = a.tstar;
    j["user_welfare_hat"] = st.user_welfare_hat;
    j["user_welfare_se"] = st.user_welfare_se;
    j["miner_revenue_hat"] = st.miner_revenue_hat;
    j["miner_revenue_se"] = st.miner_revenue_se;
    j["miner_profit_flow_hat"] = st.miner_profit_flow_hat;
    j["miner_profit_flow_se"] = st.miner_profit_flow_se;
    j["mean_block_fee_hat"] = st.mean_block_fee_hat;
    j["mean_block_fee_se"] = st.mean_block_fee_se;
    j["ks_distance"] = st.ks_distance;
    j["seed"] = st.seed;
    j["stream_id"] = st.stream_id;
    j["n_blocks_recorded"] = st.n_blocks_recorded;
    j["total_time"] = st.total_time;
    for (const auto& [key, value] : j.items()) {
        if (value.is_number_float() && !std::isfinite(value.get<double>()))
            throw Error(ErrorCode::max_iter, "non-finite simulation estimate " + key);
    }

    std::string hist = "bin_lo,bin_hi,mass\n";
    for (std::size_t i = 0; i < st.hist_mass.size(); ++i) {
        const double lo = st.hist_edges[i];
        const bool overflow = i + 1 >= st.hist_edges.size();
        hist += fmt(lo) + "," + (overflow ? "inf" : fmt(st.hist_edges[i + 1])) + "," +
                fmt(st.hist_mass[i]) + "\n";
    }

    RunWriter w{a.out, "simulate", json::object(), {}};
    w.parameters = params_json(a.p);
    w.parameters["model"] = a.model;
    if (a.model == "eo") w.parameters["tstar"] = a.tstar;
    w.parameters["blocks"] = a.blocks;
    w.parameters["dt"] = a.dt;
    w.parameters["burn_in"] = a.burn_in;
    w.parameters["seed"] = a.seed;
    w.parameters["stream"] = a.stream;
    w.parameters["threads"] = a.threads;
    w.write(a.out + ".json", j.dump(2) + "\n");
    w.write(a.out + "_hist.csv", hist);
    w.finish();
    return 0;
}

struct PatientArgs {
    MarketParams p;
    long paths = 1000000;
    double grid_min = 0.0;
    double grid_max = 0.0;
    double grid_step = 0.0;
    bool grid_given = false;
    double kink_guard = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::optional<double> scan_t;
    int scan_points = 2001;
    std::string out = "patient";
};

int run_patient(PatientArgs a) {
    a.p.validate();
    const double K = a.p.capacity;
    if (!a.grid_given) {
        a.grid_min = -12.0 * K;
        a.grid_max = 4.0 * K;
        a.grid_step = K / 50.0;
    }
    if (!(a.grid_step > 0.0) || !(a.grid_min < a.grid_max))
        throw Error(ErrorCode::bad_config, "--grid-min/--grid-max/--grid-step are inconsistent");
    if (a.kink_guard == 0.0) a.kink_guard = 2.5 * a.grid_step;

    std::vector<double> grid;
    for (long i = 0;; ++i) {
        const double s = a.grid_min + static_cast<double>(i) * a.grid_step;
        if (s > a.grid_max + 0.5 * a.grid_step) break;
        grid.push_back(s);
    }

    const auto curve = pat::estimate_wtilde(a.p, grid, a.paths, {a.seed, a.stream});
    const auto residual = pat::wtilde_ode_residual(curve, a.p, a.kink_guard);

    std::string csv = "s,w_tilde,std_error\n";
    for (std::size_t i = 0; i < curve.grid.size(); ++i)
        csv += fmt(curve.grid[i]) + "," + fmt(curve.estimate[i]) + "," +
               fmt(curve.std_error[i]) + "\n";

    json jres;
    jres["grid_step"] = residual.grid_step;
    jres["kink_guard"] = residual.kink_guard;
    jres["n_points"] = residual.s.size();
    jres["n_pass_5sigma"] = residual.n_pass_5sigma;
    jres["pass_fraction"] = residual.pass_fraction;
    jres["s"] = residual.s;
    jres["residual"] = residual.residual;
    jres["noise"] = residual.noise;

    RunWriter w{a.out, "patient", json::object(), {}};
    w.parameters = params_json(a.p);
    w.parameters["paths"] = a.paths;
    w.parameters["grid_min"] = a.grid_min;
    w.parameters["grid_max"] = a.grid_max;
    w.parameters["grid_step"] = a.grid_step;
    w.parameters["kink_guard"] = a.kink_guard;
    w.parameters["seed"] = a.seed;
    w.parameters["stream"] = a.stream;
    w.write(a.out + ".csv", csv);
    w.write(a.out + "_residual.json", jres.dump(2) + "\n");

    if (a.scan_t.has_value()) {
        const auto scan = pat::patient_payoff_scan(*a.scan_t, curve, a.scan_points);
        std::string scsv = "s,payoff,payoff_se\n";
        for (std::size_t i = 0; i < scan.s.size(); ++i)
            scsv += fmt(scan.s[i]) + "," + fmt(scan.payoff[i]) + "," +
                    fmt(scan.payoff_se[i]) + "\n";
        w.parameters["scan_t"] = *a.scan_t;
        w.parameters["scan_points"] = a.scan_points;
        w.write(a.out + "_scan.csv", scsv);
        std::cout << "scan argmax s = " << fmt(scan.argmax_s) << std::endl;
    }
    w.finish();
    return 0;
}

void add_market_options(CLI::App* cmd, MarketParams& p,
                        const std::map<std::string, std::string>& preset,
                        bool with_costs = true) {
    p.arrival_rate = preset_num(preset, "lambda", p.arrival_rate);
    p.capacity = preset_num(preset, "capacity", p.capacity);
    cmd->add_option("--lambda", p.arrival_rate, "Block arrival rate while operating")
        ->capture_default_str();
    cmd->add_option("--capacity", p.capacity, "Validated mass per block")
        ->capture_default_str();
    if (with_costs) {
        p.operating_cost = preset_num(preset, "cost", p.operating_cost);
        p.block_reward = preset_num(preset, "reward", p.block_reward);
        p.committed_share = preset_num(preset, "eta", p.committed_share);
        p.discount_rate = preset_num(preset, "rho", p.discount_rate);
        cmd->add_option("--cost", p.operating_cost, "Flow operating cost")
            ->capture_default_str();
        cmd->add_option("--reward", p.block_reward, "Block reward")->capture_default_str();
        cmd->add_option("--eta", p.committed_share, "Committed miner share")
            ->capture_default_str();
        cmd->add_option("--rho", p.discount_rate, "Patient-user discount rate")
            ->capture_default_str();
    }
}

}  // namespace

int main(int argc, char** argv) {
    std::map<std::string, std::string> preset;
    try {
        preset = scan_defaults(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    }

    CLI::App app{"Pay-as-bid fee market toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    std::string preset_name;
    app.add_option("--preset", preset_name, "Named figure parameter set")
        ->check(CLI::IsMember([&] {
            std::vector<std::string> names;
            for (const auto& [k, v] : kPresets) names.push_back(k);
            return names;
        }()));

    std::string config_path;
    app.add_option("--config", config_path, "Flat key=value defaults file")
        ->check(CLI::ExistingFile);

    UcBidArgs ub;
    auto* cmd_uc = app.add_subcommand("uc-bid", "Sample equilibrium bid curves");
    cmd_uc->add_option("--config", config_path, "Flat key=value defaults file");
    ub.lambdas = preset_list(preset, "lambda", ub.lambdas);
    ub.capacities = preset_list(preset, "capacity", ub.capacities);
    ub.t_max = preset_num(preset, "t-max", ub.t_max);
    ub.points = static_cast<int>(preset_num(preset, "points", ub.points));
    cmd_uc->add_option("--lambda", ub.lambdas, "Arrival rate (comma list for series)")
        ->delimiter(',')->capture_default_str();
    cmd_uc->add_option("--capacity", ub.capacities, "Capacity (comma list for series)")
        ->delimiter(',')->capture_default_str();
    cmd_uc->add_option("--t-max", ub.t_max, "Largest pool state sampled")
        ->check(CLI::PositiveNumber)->capture_default_str();
    cmd_uc->add_option("--points", ub.points, "Grid points per series")
        ->check(CLI::Range(2, 10000000))->capture_default_str();
    cmd_uc->add_option("--out", ub.out, "Output stem")->capture_default_str();

    EoSolveArgs es;
    auto* cmd_eo = app.add_subcommand("eo-solve", "Solve thresholds, welfare and the optimal reward");
    cmd_eo->add_option("--config", config_path, "Flat key=value defaults file");
    add_market_options(cmd_eo, es.p, preset);
    cmd_eo->add_option("--out", es.out, "Output stem")->capture_default_str();

    SweepArgs sw;
    auto* cmd_sw = app.add_subcommand("sweep", "Per-point solves over a parameter grid");
    cmd_sw->add_option("--config", config_path, "Flat key=value defaults file");
    add_market_options(cmd_sw, sw.p, preset);
    sw.vary = preset_str(preset, "vary", sw.vary);
    sw.from = preset_num(preset, "from", sw.from);
    sw.to = preset_num(preset, "to", sw.to);
    sw.points = static_cast<int>(preset_num(preset, "points", sw.points));
    cmd_sw->add_option("--vary", sw.vary, "Parameter to vary: lambda|capacity|cost|reward")
        ->capture_default_str();
    cmd_sw->add_option("--from", sw.from, "Grid start")->capture_default_str();
    cmd_sw->add_option("--to", sw.to, "Grid end")->capture_default_str();
    cmd_sw->add_option("--points", sw.points, "Grid size")->capture_default_str();
    cmd_sw->add_option("--threads", sw.threads, "Row-level parallelism")
        ->check(CLI::Range(1, 256))->capture_default_str();
    cmd_sw->add_option("--out", sw.out, "Output stem")->capture_default_str();

    SimulateArgs si;
    auto* cmd_si = app.add_subcommand("simulate", "Monte Carlo discrete-event simulation");
    cmd_si->add_option("--config", config_path, "Flat key=value defaults file");
    add_market_options(cmd_si, si.p, preset);
    si.model = preset_str(preset, "model", si.model);
    si.blocks = static_cast<long>(preset_num(preset, "blocks", static_cast<double>(si.blocks)));
    si.dt = preset_num(preset, "dt", si.dt);
    si.burn_in = static_cast<long>(preset_num(preset, "burn-in", static_cast<double>(si.burn_in)));
    si.seed = static_cast<std::uint64_t>(preset_num(preset, "seed", 0.0));
    si.stream = static_cast<std::uint64_t>(preset_num(preset, "stream", 0.0));
    si.threads = static_cast<int>(preset_num(preset, "threads", si.threads));
    cmd_si->add_option("--model", si.model, "uc or eo")->capture_default_str();
    auto* tstar_opt =
        cmd_si->add_option("--tstar", si.tstar, "Miner threshold time (eo model)");
    cmd_si->add_option("--blocks", si.blocks, "Block events to simulate")
        ->check(CLI::Range(1L, 1000000000L))->capture_default_str();
    cmd_si->add_option("--dt", si.dt, "User-mass cell size")
        ->check(CLI::PositiveNumber)->capture_default_str();
    cmd_si->add_option("--burn-in", si.burn_in, "Blocks discarded before recording")
        ->capture_default_str();
    cmd_si->add_option("--seed", si.seed, "RNG seed")->envname("SEED")->capture_default_str();
    cmd_si->add_option("--stream", si.stream, "RNG stream id")->capture_default_str();
    cmd_si->add_option("--threads", si.threads, "Parallel streams")
        ->check(CLI::Range(1, 256))->capture_default_str();
    cmd_si->add_option("--bins", si.bins, "Histogram bins")->capture_default_str();
    cmd_si->add_option("--hist-max", si.hist_max, "Histogram upper edge (0 = auto)")
        ->capture_default_str();
    cmd_si->add_option("--out", si.out, "Output stem")->capture_default_str();

    PatientArgs pa;
    auto* cmd_pa = app.add_subcommand("patient", "Estimate the patient-user discount curve");
    cmd_pa->add_option("--config", config_path, "Flat key=value defaults file");
    add_market_options(cmd_pa, pa.p, preset);
    pa.paths = static_cast<long>(preset_num(preset, "paths", static_cast<double>(pa.paths)));
    pa.seed = static_cast<std::uint64_t>(preset_num(preset, "seed", 0.0));
    pa.stream = static_cast<std::uint64_t>(preset_num(preset, "stream", 0.0));
    cmd_pa->add_option("--paths", pa.paths, "Simulated block-gap paths")
        ->check(CLI::Range(1L, 1000000000L))->capture_default_str();
    auto* gmin = cmd_pa->add_option("--grid-min", pa.grid_min, "Smallest offset");
    auto* gmax = cmd_pa->add_option("--grid-max", pa.grid_max, "Largest offset");
    auto* gstep = cmd_pa->add_option("--grid-step", pa.grid_step, "Grid spacing");
    cmd_pa->add_option("--kink-guard", pa.kink_guard,
                       "Exclusion radius around kink abscissae (0 = 2.5 steps)")
        ->capture_default_str();
    cmd_pa->add_option("--seed", pa.seed, "RNG seed")->envname("SEED")->capture_default_str();
    cmd_pa->add_option("--stream", pa.stream, "RNG stream id")->capture_default_str();
    double scan_t_value = 0.0;
    auto* scan_opt = cmd_pa->add_option("--scan-t", scan_t_value,
                                        "Also emit the deviation-payoff scan at this t");
    cmd_pa->add_option("--scan-points", pa.scan_points, "Scan grid size")
        ->check(CLI::Range(3, 10000000))->capture_default_str();
    cmd_pa->add_option("--out", pa.out, "Output stem")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForVersion" ||
            e.get_name() == "CallForAllHelp")
            return code;
        return 2;
    }

    const bool simulation = cmd_si->parsed() || cmd_pa->parsed();
    try {
        if (cmd_uc->parsed()) return run_uc_bid(ub);
        if (cmd_eo->parsed()) return run_eo_solve(es);
        if (cmd_sw->parsed()) return run_sweep(sw);
        if (cmd_si->parsed()) {
            si.tstar_given = tstar_opt->count() > 0;
            if (!si.tstar_given && preset.count("tstar") > 0) {
                si.tstar = std::stod(preset.at("tstar"));
                si.tstar_given = true;
            }
            return run_simulate(si);
        }
        if (cmd_pa->parsed()) {
            if (gmin->count() == 0 && preset.count("grid-min") > 0)
                pa.grid_min = std::stod(preset.at("grid-min"));
            if (gmax->count() == 0 && preset.count("grid-max") > 0)
                pa.grid_max = std::stod(preset.at("grid-max"));
            if (gstep->count() == 0 && preset.count("grid-step") > 0)
                pa.grid_step = std::stod(preset.at("grid-step"));
            const bool has_min = gmin->count() > 0 || preset.count("grid-min") > 0;
            const bool has_max = gmax->count() > 0 || preset.count("grid-max") > 0;
            const bool has_step = gstep->count() > 0 || preset.count("grid-step") > 0;
            pa.grid_given = has_min || has_max || has_step;
            if (pa.grid_given && !(has_min && has_max && has_step))
                throw Error(ErrorCode::bad_config,
                            "--grid-min, --grid-max and --grid-step must be given together");
            if (scan_opt->count() > 0) pa.scan_t = scan_t_value;
            else if (preset.count("scan-t") > 0) pa.scan_t = std::stod(preset.at("scan-t"));
            return run_patient(pa);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return map_error(e, simulation);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return simulation ? 4 : 3;
    }
    return 2;
}
