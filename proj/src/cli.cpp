#include "perpamm/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <optional>

#include "perpamm/config_io.hpp"
#include "perpamm/error.hpp"
#include "perpamm/figures.hpp"
#include "perpamm/scenario_sim.hpp"

namespace perpamm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CurvesArgs {
    std::string kind;
    std::string params_file;
    std::vector<double> k_delta;
    std::optional<double> c_d;
    std::vector<double> k_b;
    std::optional<double> c_b;
    std::vector<double> steepness;
    std::optional<double> m_max;
    std::optional<double> price;
    std::string grid;
    std::string out;
};

struct RunArgs {
    std::string config;
    std::string trace;
    std::string scenario;
    std::string out_dir;
};

std::vector<double> numbers(const json& v, const std::string& key) {
    if (v.is_number()) return {v.get<double>()};
    if (v.is_array()) {
        std::vector<double> out;
        for (const auto& item : v) {
            if (!item.is_number()) throw Error(ErrorCode::InvalidConfig, key + " must hold numbers");
            out.push_back(item.get<double>());
        }
        return out;
    }
    throw Error(ErrorCode::InvalidConfig, key + " must be a number or an array of numbers");
}

double number(const json& v, const std::string& key) {
    if (!v.is_number()) throw Error(ErrorCode::InvalidConfig, key + " must be a number");
    return v.get<double>();
}

FigureParams load_figure_params(const std::string& path) {
    FigureParams p;
    if (path.empty()) return p;
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::InvalidConfig, path + ": " + e.what());
    }
    if (!doc.is_object()) throw Error(ErrorCode::InvalidConfig, path + ": expected an object");
    for (const auto& [key, value] : doc.items()) {
        if (key == "k_delta") p.k_delta = numbers(value, key);
        else if (key == "c_d") p.c_d = number(value, key);
        else if (key == "k_b") p.k_b = numbers(value, key);
        else if (key == "c_b") p.c_b = number(value, key);
        else if (key == "k") p.steepness = numbers(value, key);
        else if (key == "M") p.m_max = number(value, key);
        else if (key == "oracle_price") p.oracle_price = number(value, key);
        else throw Error(ErrorCode::InvalidConfig, path + ": unknown key " + key);
    }
    return p;
}

int do_curves(const CurvesArgs& a, std::ostream& out) {
    FigureParams p = load_figure_params(a.params_file);
    if (!a.k_delta.empty()) p.k_delta = a.k_delta;
    if (a.c_d) p.c_d = *a.c_d;
    if (!a.k_b.empty()) p.k_b = a.k_b;
    if (a.c_b) p.c_b = *a.c_b;
    if (!a.steepness.empty()) p.steepness = a.steepness;
    if (a.m_max) p.m_max = a.m_max;
    if (a.price) p.oracle_price = *a.price;

    const Table table = emit_figure_data(*parse_figure_kind(a.kind), p, Grid::parse(a.grid));
    write_file_atomic(a.out, table.to_csv());
    out << "wrote " << table.rows.size() << " rows to " << a.out << '\n';
    return kExitOk;
}

std::string resolve_input(const std::string& flag, const std::string& hint, const fs::path& scenario_path,
                          const char* name) {
    if (!flag.empty()) return flag;
    if (!hint.empty()) {
        const fs::path p(hint);
        return p.is_absolute() ? p.string() : (scenario_path.parent_path() / p).string();
    }
    throw Error(ErrorCode::InvalidScenario, std::string("no ") + name + " given by flag or scenario");
}

int do_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
    const Scenario scenario = load_scenario(a.scenario);
    const std::string config_path = resolve_input(a.config, scenario.config, a.scenario, "config");
    const std::string trace_path = resolve_input(a.trace, scenario.trace, a.scenario, "trace");
    const auto markets = load_market_configs(config_path);
    const auto trace = load_price_trace(trace_path);
    const RunResult result = run(markets, trace, scenario);

    const fs::path dir(a.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string());

    std::size_t errors = 0;
    for (const auto& r : result.receipts) errors += r.status != "ok";
    const json manifest{
        {"config", config_path},
        {"trace", trace_path},
        {"scenario", a.scenario},
        {"markets", markets.size()},
        {"price_rows", trace.size()},
        {"actions", scenario.actions.size()},
        {"snapshots", result.snapshots.size()},
        {"receipts", result.receipts.size()},
        {"receipt_errors", errors},
        {"halted", result.halted},
        {"halt_reason", result.halt_reason},
    };
    write_file_atomic(dir / "snapshots.csv", snapshots_csv(result.snapshots));
    write_file_atomic(dir / "receipts.csv", receipts_csv(result.receipts));
    write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");

    out << "snapshots=" << result.snapshots.size() << " receipts=" << result.receipts.size()
        << " receipt_errors=" << errors << '\n';
    if (result.halted) {
        err << "ERROR " << to_string(ErrorCode::InsolventVault) << ": run halted: " << result.halt_reason << '\n';
        return kExitDomainError;
    }
    return kExitOk;
}

int do_validate(const std::string& config, std::ostream& out, std::ostream& err) {
    const auto markets = load_market_configs(config);
    std::size_t count = 0;
    for (const auto& cfg : markets) {
        const auto violations = validate(cfg);
        for (const auto& v : violations) {
            out << "VIOLATION " << (cfg.market_id.empty() ? "<unnamed>" : cfg.market_id) << ' ' << v.field << ": "
                << v.message << '\n';
        }
        if (violations.empty()) out << "OK " << cfg.market_id << '\n';
        count += violations.size();
    }
    if (count > 0) {
        err << "ERROR " << to_string(ErrorCode::InvalidConfig) << ": " << count << " violation(s) in " << config
            << '\n';
        return kExitDomainError;
    }
    return kExitOk;
}

std::string single_line(std::string text) {
    for (char& c : text) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return text;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Perpetual-futures AMM engine: curve tables, scenario replay, config validation", "perpamm"};
    app.require_subcommand(1);

    CurvesArgs curves;
    auto* curves_cmd = app.add_subcommand("curves", "Emit curve tables as CSV");
    curves_cmd->add_option("--kind", curves.kind, "deviation_price | deviation_pct | base_fee | dynamic_fee")
        ->required()
        ->check(CLI::IsMember({"deviation_price", "deviation_pct", "base_fee", "dynamic_fee"}));
    curves_cmd->add_option("--params", curves.params_file, "JSON file with curve parameters");
    curves_cmd->add_option("--kd", curves.k_delta, "Deviation coefficient(s)");
    curves_cmd->add_option("--cd", curves.c_d, "Deviation constant (percent)");
    curves_cmd->add_option("--kb", curves.k_b, "Base fee coefficient(s)");
    curves_cmd->add_option("--cb", curves.c_b, "Base fee constant (percent per year)");
    curves_cmd->add_option("--k", curves.steepness, "Dynamic fee steepness value(s)");
    curves_cmd->add_option("--M", curves.m_max, "Maximum dynamic fee (percent per year)");
    curves_cmd->add_option("--price", curves.price, "Oracle price for deviation_price");
    curves_cmd->add_option("--grid", curves.grid, "Inclusive grid lo:hi:step")->required();
    curves_cmd->add_option("--out", curves.out, "Output CSV path")->required();

    RunArgs run_args;
    auto* run_cmd = app.add_subcommand("run", "Replay a scenario");
    run_cmd->add_option("--config", run_args.config, "Market config JSON");
    run_cmd->add_option("--trace", run_args.trace, "Price trace CSV");
    run_cmd->add_option("--scenario", run_args.scenario, "Scenario JSON")->required();
    run_cmd->add_option("--out-dir", run_args.out_dir, "Directory for snapshots.csv, receipts.csv, manifest.json")
        ->required();

    std::string validate_config;
    auto* validate_cmd = app.add_subcommand("validate", "Check market config invariants");
    validate_cmd->add_option("--config", validate_config, "Market config JSON")->required();

    std::vector<std::string> storage{"perpamm"};
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : storage) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << sub->help();
        return kExitUsage;
    }

    try {
        if (*curves_cmd) {
            Grid::parse(curves.grid);
            return do_curves(curves, out);
        }
        if (*run_cmd) return do_run(run_args, out, err);
        return do_validate(validate_config, out, err);
    } catch (const Error& e) {
        err << "ERROR " << to_string(e.code()) << ": " << single_line(e.what()) << '\n';
        return kExitDomainError;
    } catch (const std::exception& e) {
        err << "ERROR IoError: " << single_line(e.what()) << '\n';
        return kExitDomainError;
    }
}

}  // namespace perpamm::cli
