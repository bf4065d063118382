// Command-line front end: simulate | detect | backtest | report.
// A flat JSON config file can pre-set any flag; explicit flags override it.
// Exit codes: 0 success, 2 input parse error, 3 numeric failure, 4 invalid
// configuration or usage.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <string>

#include "garchseg/pipeline.hpp"

namespace {

using garchseg::RunConfig;

// Pre-scan for --config so file values can seed the option defaults before
// CLI11 applies explicit flags on top.
RunConfig seed_config(int argc, char** argv) {
    for (int i = 1; i < argc - 1; ++i) {
        if (std::string(argv[i]) == "--config") {
            return garchseg::load_config_file(argv[i + 1]);
        }
    }
    return RunConfig{};
}

void add_common_options(CLI::App* cmd, RunConfig& cfg, std::string& config_path) {
    cmd->add_option("--config", config_path, "flat JSON config file (flags override it)");
    cmd->add_option("--seed", cfg.seed, "random seed");
    cmd->add_option("--threads", cfg.threads, "worker thread cap (0 = hardware)");
    cmd->add_option("--output", cfg.output, "output path");
}

void add_detect_options(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--input", cfg.input, "returns CSV (header row, optional date column)");
    cmd->add_flag("--log-diff", cfg.log_diff, "treat input as price levels, take log-returns");
    cmd->add_option("--alpha", cfg.alpha, "bootstrap significance level");
    cmd->add_option("--boot-reps", cfg.boot_reps, "bootstrap replicates");
    cmd->add_option("--p", cfg.p, "GARCH order p");
    cmd->add_option("--q", cfg.q, "GARCH order q");
    cmd->add_option("--epsilon", cfg.epsilon, "boundedness constant of the transform");
    cmd->add_option("--min-seg", cfg.min_seg, "minimum segment length examined");
    cmd->add_flag("--standardize,!--no-standardize", cfg.standardize,
                  "per-row MAD standardization per segment (default on)");
    cmd->add_option("--trim", cfg.trim,
                    "split candidates excluded at segment edges (-1 = automatic)");
}

int dispatch(const std::string& command, RunConfig& cfg) {
    using namespace garchseg;
    if (command == "simulate") {
        if (cfg.output.empty()) {
            throw ConfigError("simulate: --output prefix required");
        }
        const SimulateResult sim = simulate(cfg);
        write_returns_csv(cfg.output + ".csv", sim.panel.returns);
        write_text_file(cfg.output + ".truth.json", sim.truth.dump(2) + "\n");
        std::printf("wrote %s.csv and %s.truth.json\n", cfg.output.c_str(), cfg.output.c_str());
        return 0;
    }
    if (command == "detect") {
        if (cfg.input.empty()) {
            throw ConfigError("detect: --input required");
        }
        const ReturnsData data = read_returns_csv(cfg.input, cfg.log_diff);
        const DetectResult result = detect(data.values, data.dates, cfg);
        const std::string rendered = result.report.dump(2) + "\n";
        if (cfg.output.empty()) {
            std::fputs(rendered.c_str(), stdout);
        } else {
            write_text_file(cfg.output, rendered);
        }
        if (!cfg.dump_panel.empty()) {
            write_panel_csv(cfg.dump_panel, result.build.panel);
        }
        return 0;
    }
    if (command == "backtest") {
        if (cfg.input.empty() || cfg.eval_input.empty()) {
            throw ConfigError("backtest: --input and --eval required");
        }
        const ReturnsData detect_data = read_returns_csv(cfg.input, cfg.log_diff);
        const ReturnsData eval_data = read_returns_csv(cfg.eval_input, cfg.log_diff);
        if (!cfg.allow_overlap && date_ranges_overlap(detect_data.dates, eval_data.dates)) {
            throw ConfigError("backtest: detection and evaluation date ranges overlap "
                              "(pass --allow-overlap to proceed)");
        }
        std::vector<int> change_points;
        if (!cfg.detect_result.empty()) {
            const ordered_json detect_report = read_json_file(cfg.detect_result);
            for (const auto& cp : detect_report.at("change_points")) {
                change_points.push_back(cp.at("index").get<int>() - 1);
            }
        }
        const BacktestRun run =
            backtest(detect_data.values, change_points, eval_data.values, eval_data.dates, cfg);
        const std::string rendered = run.report.dump(2) + "\n";
        if (cfg.output.empty()) {
            std::fputs(rendered.c_str(), stdout);
        } else {
            write_text_file(cfg.output, rendered);
        }
        if (!cfg.csv_out.empty()) {
            write_text_file(cfg.csv_out, run.daily_csv);
        }
        return 0;
    }
    if (command == "report") {
        if (cfg.input.empty()) {
            throw ConfigError("report: --input required (a detect result JSON)");
        }
        const std::string rendered = render_report(read_json_file(cfg.input));
        if (cfg.output.empty()) {
            std::fputs(rendered.c_str(), stdout);
        } else {
            write_text_file(cfg.output, rendered);
        }
        return 0;
    }
    throw ConfigError("unknown command: " + command);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Change-point detection for multivariate GARCH panels with stressed-VaR "
                 "backtesting"};
    app.require_subcommand(1);

    RunConfig cfg;
    try {
        cfg = seed_config(argc, argv);
    } catch (const garchseg::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
    std::string config_path;

    CLI::App* sim = app.add_subcommand("simulate", "generate a scenario panel with truth labels");
    add_common_options(sim, cfg, config_path);
    sim->add_option("--model", cfg.model, "scenario id (m0.1 ... m4.2)");
    sim->add_option("--n", cfg.n, "number of series");
    sim->add_option("--t", cfg.t, "number of observations");
    sim->add_option("--sparsity", cfg.sparsity, "fraction of series carrying the break");
    sim->add_option("--eta1-frac", cfg.eta1_frac, "single-break location fraction");
    sim->add_option("--jitter", cfg.jitter, "half-width of per-series parameter jitter");
    sim->add_option("--innovations", cfg.innovations, "gaussian | t10");

    CLI::App* det = app.add_subcommand("detect", "detect change-points in a returns panel");
    add_common_options(det, cfg, config_path);
    add_detect_options(det, cfg);
    det->add_option("--dump-panel", cfg.dump_panel, "write the transformed panel CSV here");

    CLI::App* bt = app.add_subcommand("backtest", "stressed-VaR backtest over an evaluation sample");
    add_common_options(bt, cfg, config_path);
    add_detect_options(bt, cfg);
    bt->add_option("--eval", cfg.eval_input, "evaluation returns CSV");
    bt->add_option("--detect-result", cfg.detect_result, "detect result JSON with change-points");
    bt->add_option("--window", cfg.window, "rolling window length in days");
    bt->add_option("--var-levels", cfg.var_levels, "VaR confidence levels")->delimiter(',');
    bt->add_option("--csv-out", cfg.csv_out, "per-day forecast CSV path");
    bt->add_flag("--allow-overlap", cfg.allow_overlap,
                 "allow detection/evaluation date overlap");

    CLI::App* rep = app.add_subcommand("report", "render a detect result JSON as text");
    add_common_options(rep, cfg, config_path);
    rep->add_option("--input", cfg.input, "detect result JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);  // --help
        }
        app.exit(e);
        return 4;
    }

    try {
        return dispatch(app.get_subcommands().front()->get_name(), cfg);
    } catch (const garchseg::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const garchseg::NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const garchseg::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
