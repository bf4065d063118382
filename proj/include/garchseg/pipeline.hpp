// End-to-end runs behind the CLI: configuration, the detect pipeline
// (fit -> transform -> segment with bootstrap thresholds), scenario
// simulation, the stressed-VaR backtest and report rendering. All outputs are
// deterministic given (input, config, seed); the thread count and wall time
// never influence reported values.

#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "garchseg/bootstrap.hpp"
#include "garchseg/csv.hpp"
#include "garchseg/dcbs.hpp"
#include "garchseg/garch.hpp"
#include "garchseg/risk.hpp"
#include "garchseg/simlab.hpp"
#include "garchseg/transform.hpp"

namespace garchseg {

using ordered_json = nlohmann::ordered_json;

struct RunConfig {
    std::string input;
    std::string output;
    bool log_diff = false;
    double alpha = 0.05;
    int boot_reps = 200;
    std::uint64_t seed = 1;
    int p = 1;
    int q = 1;
    double epsilon = 0.001;
    int min_seg = 30;
    bool standardize = true;
    int trim = -1;  // boundary trim per segment edge; -1 = automatic
    int window = 250;
    std::vector<double> var_levels = {0.95, 0.99};
    unsigned threads = 0;
    std::string model;
    int n = 20;
    int t = 500;
    double sparsity = 1.0;
    double eta1_frac = 0.5;
    double jitter = 0.01;
    std::string innovations = "gaussian";
    // backtest-specific paths
    std::string eval_input;
    std::string detect_result;
    std::string csv_out;
    bool allow_overlap = false;
    std::string dump_panel;

    void require_valid() const {
        if (!(alpha >= 0.0 && alpha <= 1.0)) {
            throw ConfigError("alpha must lie in [0, 1]");
        }
        if (boot_reps < 20) {
            throw ConfigError("boot-reps must be at least 20");
        }
        if (p < 1 || q < 0) {
            throw ConfigError("GARCH order must have p >= 1, q >= 0");
        }
        if (!(epsilon > 0.0)) {
            throw ConfigError("epsilon must be positive");
        }
        if (min_seg < 2) {
            throw ConfigError("min-seg must be at least 2");
        }
        for (double lv : var_levels) {
            if (!(lv > 0.0 && lv < 1.0)) {
                throw ConfigError("VaR levels must lie in (0, 1)");
            }
        }
    }
};

// Flat JSON mirror of the CLI flags; file values are defaults that explicit
// flags override.
inline void to_json(ordered_json& j, const RunConfig& c) {
    j = ordered_json{{"input", c.input},
                     {"output", c.output},
                     {"log_diff", c.log_diff},
                     {"alpha", c.alpha},
                     {"boot_reps", c.boot_reps},
                     {"seed", c.seed},
                     {"p", c.p},
                     {"q", c.q},
                     {"epsilon", c.epsilon},
                     {"min_seg", c.min_seg},
                     {"standardize", c.standardize},
                     {"trim", c.trim},
                     {"window", c.window},
                     {"var_levels", c.var_levels},
                     {"threads", c.threads},
                     {"model", c.model},
                     {"n", c.n},
                     {"t", c.t},
                     {"sparsity", c.sparsity},
                     {"eta1_frac", c.eta1_frac},
                     {"jitter", c.jitter},
                     {"innovations", c.innovations},
                     {"eval_input", c.eval_input},
                     {"detect_result", c.detect_result},
                     {"csv_out", c.csv_out},
                     {"allow_overlap", c.allow_overlap},
                     {"dump_panel", c.dump_panel}};
}

inline void from_json(const ordered_json& j, RunConfig& c) {
    auto get = [&j](const char* key, auto& target) {
        if (j.contains(key)) {
            j.at(key).get_to(target);
        }
    };
    get("input", c.input);
    get("output", c.output);
    get("log_diff", c.log_diff);
    get("alpha", c.alpha);
    get("boot_reps", c.boot_reps);
    get("seed", c.seed);
    get("p", c.p);
    get("q", c.q);
    get("epsilon", c.epsilon);
    get("min_seg", c.min_seg);
    get("standardize", c.standardize);
    get("trim", c.trim);
    get("window", c.window);
    get("var_levels", c.var_levels);
    get("threads", c.threads);
    get("model", c.model);
    get("n", c.n);
    get("t", c.t);
    get("sparsity", c.sparsity);
    get("eta1_frac", c.eta1_frac);
    get("jitter", c.jitter);
    get("innovations", c.innovations);
    get("eval_input", c.eval_input);
    get("detect_result", c.detect_result);
    get("csv_out", c.csv_out);
    get("allow_overlap", c.allow_overlap);
    get("dump_panel", c.dump_panel);
}

inline RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path);
    }
    ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
    RunConfig c;
    from_json(j, c);
    return c;
}

namespace detail {

// Config echo embedded in results; excludes execution details (threads) so
// outputs are byte-identical across thread counts.
inline ordered_json config_echo(const RunConfig& c) {
    ordered_json j = c;
    j.erase("threads");
    return j;
}

inline double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

}  // namespace detail

struct DetectResult {
    ChangePointSet change_points;
    PanelBuild build;
    std::vector<GarchFit> fits;
    ordered_json report;
};

// Full detection pipeline: per-series GARCH fits, panel transform, bootstrap
// threshold calibration per examined segment, binary segmentation.
inline DetectResult detect(const Eigen::MatrixXd& returns, const std::vector<std::string>& dates,
                           const RunConfig& cfg) {
    cfg.require_valid();
    const auto start = std::chrono::steady_clock::now();
    const int n = static_cast<int>(returns.cols());
    const int t_len = static_cast<int>(returns.rows());
    if (t_len < cfg.min_seg) {
        throw ConfigError("detect: sample shorter than min-seg");
    }

    DetectResult out;
    out.fits.resize(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), cfg.threads, [&](std::size_t i) {
        const Eigen::VectorXd series = returns.col(static_cast<Eigen::Index>(i));
        out.fits[i] = fit_garch({series.data(), static_cast<std::size_t>(series.size())}, cfg.p,
                                cfg.q);
    });
    out.build = build_panel(returns, out.fits, cfg.epsilon);

    BootstrapEnsemble ensemble;
    for (const auto& f : out.fits) {
        ensemble.params.push_back(f.params);
    }
    ensemble.residuals = residual_matrix(returns, out.fits);
    ensemble.config = out.build.config;
    ensemble.seed = cfg.seed;
    ensemble.replicates = cfg.boot_reps;
    ensemble.threads = cfg.threads;

    DcbsOptions opts;
    opts.min_segment = cfg.min_seg;
    opts.standardize = cfg.standardize;
    opts.boundary_trim = cfg.trim;
    ensemble.scan_options = opts;
    out.change_points =
        dcbs_run(out.build.panel.data, bootstrap_threshold_provider(ensemble, cfg.alpha), opts);

    ordered_json cps = ordered_json::array();
    for (const auto& cp : out.change_points.points) {
        ordered_json item;
        item["index"] = cp.location + 1;
        if (!dates.empty()) {
            item["date"] = dates[static_cast<std::size_t>(cp.location)];
        }
        item["stat"] = cp.stat;
        item["threshold"] = cp.threshold;
        item["n_hat"] = cp.argmax_n;
        item["level"] = cp.level;
        cps.push_back(item);
    }
    ordered_json segments = ordered_json::array();
    int seg_start = 1;
    for (const auto& cp : out.change_points.points) {
        segments.push_back(ordered_json{{"from", seg_start}, {"to", cp.location + 1}});
        seg_start = cp.location + 2;
    }
    segments.push_back(ordered_json{{"from", seg_start}, {"to", t_len}});

    out.report = ordered_json{{"change_points", cps},
                              {"segments", segments},
                              {"config", detail::config_echo(cfg)},
                              {"wall_time_ms", detail::elapsed_ms(start)}};
    return out;
}

struct SimulateResult {
    LabeledPanel panel;
    ordered_json truth;
};

inline SimulateResult simulate(const RunConfig& cfg) {
    ScenarioSpec spec;
    spec.model = parse_model(cfg.model.empty() ? "m0.1" : cfg.model);
    spec.n = cfg.n;
    spec.t = cfg.t;
    spec.sparsity = cfg.sparsity;
    spec.eta1_frac = cfg.eta1_frac;
    spec.jitter = cfg.jitter;
    spec.seed = cfg.seed;
    if (cfg.innovations == "t10") {
        spec.innovations = InnovationLaw::student_t10;
    } else if (cfg.innovations != "gaussian") {
        throw ConfigError("innovations must be 'gaussian' or 't10'");
    }

    SimulateResult out;
    out.panel = generate_scenario(spec);
    ordered_json truth_points = ordered_json::array();
    for (int loc : out.panel.truth) {
        truth_points.push_back(loc + 1);
    }
    auto one_based = [](const std::vector<int>& v) {
        ordered_json arr = ordered_json::array();
        for (int x : v) {
            arr.push_back(x + 1);
        }
        return arr;
    };
    out.truth = ordered_json{{"model", model_name(spec.model)},
                             {"n", spec.n},
                             {"t", spec.t},
                             {"sparsity", spec.sparsity},
                             {"eta1_frac", spec.eta1_frac},
                             {"jitter", spec.jitter},
                             {"innovations", cfg.innovations},
                             {"seed", spec.seed},
                             {"change_points", truth_points},
                             {"s1", one_based(out.panel.s1)},
                             {"s2", one_based(out.panel.s2)}};
    return out;
}

struct BacktestRun {
    BacktestOutput output;
    ordered_json report;
    std::string daily_csv;  // rendered per-day table
};

// Stressed-VaR backtest: per-segment covariances from the detection sample,
// rolling forecasts over the evaluation sample.
inline BacktestRun backtest(const Eigen::MatrixXd& detect_returns,
                            const std::vector<int>& change_points,
                            const Eigen::MatrixXd& eval_returns,
                            const std::vector<std::string>& eval_dates, const RunConfig& cfg) {
    cfg.require_valid();
    const auto start = std::chrono::steady_clock::now();
    const auto segments =
        segment_covariances(detect_returns, change_points, cfg.p, cfg.q, cfg.threads);
    BacktestRun out;
    out.output =
        rolling_svar_backtest(segments, eval_returns, cfg.window, cfg.var_levels, cfg.threads);

    ordered_json periods = ordered_json::array();
    for (const auto& r : out.output.results) {
        ordered_json item;
        item["period"] = r.period;
        item["level"] = r.level;
        item["violations"] = r.violations;
        if (r.first_violation > 0) {
            item["t_first"] = r.first_violation;
        } else {
            item["t_first"] = nullptr;
        }
        item["lr_pof"] = r.lr_pof;
        item["p_pof"] = r.p_pof;
        if (r.tff_applicable) {
            item["lr_tff"] = r.lr_tff;
            item["p_tff"] = r.p_tff;
        } else {
            item["lr_tff"] = nullptr;
            item["p_tff"] = nullptr;
        }
        item["zone"] = zone_name(r.zone);
        periods.push_back(item);
    }
    out.report = ordered_json{{"periods", periods},
                              {"days", out.output.realized.empty()
                                           ? 0
                                           : static_cast<int>(out.output.realized.size())},
                              {"config", detail::config_echo(cfg)},
                              {"wall_time_ms", detail::elapsed_ms(start)}};

    std::ostringstream daily;
    daily << (eval_dates.empty() ? "day" : "date") << ",portfolio_return";
    for (int b = 1; b <= out.output.periods; ++b) {
        for (double lv : out.output.levels) {
            daily << ",svar_p" << b << "_l" << static_cast<int>(lv * 100.0 + 0.5);
        }
    }
    daily << '\n';
    for (std::size_t day = 0; day < out.output.realized.size(); ++day) {
        if (eval_dates.empty()) {
            daily << day + 1;
        } else {
            daily << eval_dates[static_cast<std::size_t>(cfg.window) + day];
        }
        daily << ',' << detail::format_double(out.output.realized[day]);
        for (double v : out.output.var_forecasts[day]) {
            daily << ',' << detail::format_double(v);
        }
        daily << '\n';
    }
    out.daily_csv = daily.str();
    return out;
}

// Human-readable rendering of a detect-result JSON.
inline std::string render_report(const ordered_json& detect_report) {
    std::ostringstream os;
    const auto& cps = detect_report.at("change_points");
    os << "change-points: " << cps.size() << '\n';
    if (!cps.empty()) {
        os << "  index  date        stat          threshold     n_hat  level\n";
        for (const auto& cp : cps) {
            char line[160];
            std::snprintf(line, sizeof(line), "  %-6d %-11s %-13.6g %-13.6g %-6d %d\n",
                          cp.at("index").get<int>(),
                          cp.contains("date") ? cp.at("date").get<std::string>().c_str() : "-",
                          cp.at("stat").get<double>(), cp.at("threshold").get<double>(),
                          cp.at("n_hat").get<int>(), cp.at("level").get<int>());
            os << line;
        }
    }
    os << "segments:\n";
    for (const auto& seg : detect_report.at("segments")) {
        os << "  [" << seg.at("from").get<int>() << ", " << seg.at("to").get<int>() << "]\n";
    }
    return os.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) {
        throw ParseError("cannot open output file: " + path);
    }
    out << content;
}

inline ordered_json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open file: " + path);
    }
    try {
        ordered_json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

// Date-range overlap guard between detection and evaluation samples; only
// meaningful when both files carry dates.
inline bool date_ranges_overlap(const std::vector<std::string>& a,
                                const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) {
        return false;
    }
    return !(a.back() < b.front() || b.back() < a.front());
}

}  // namespace garchseg
