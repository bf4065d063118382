// Regime-aware stressed Value-at-Risk: per-segment residual covariances with
// their Cholesky factors, the covariance-swap stress transform, empirical
// quantile VaR, the proportion-of-failures and time-to-first-failure
// likelihood-ratio backtests and Basel-style traffic-light zoning.

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "garchseg/common.hpp"
#include "garchseg/garch.hpp"

namespace garchseg {

// Mean-centred sample covariance with the 1/(n-1) convention; rows are
// observations.
inline Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x) {
    const Eigen::Index n = x.rows();
    if (n < 2) {
        throw ConfigError("sample_covariance: need at least two observations");
    }
    const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    return centered.transpose() * centered / static_cast<double>(n - 1);
}

inline Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& sigma, const std::string& what) {
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw NumericError("Cholesky factorization failed: " + what);
    }
    return llt.matrixL();
}

struct SegmentCovariance {
    int segment = 0;  // 1-based period index
    int start = 0;    // 0-based inclusive bounds in the detection sample
    int end = 0;
    Eigen::MatrixXd sigma;
    Eigen::MatrixXd chol;
};

// Splits the detection sample at the change-points (0-based last-left
// convention), refits GARCH(p,q) marginals per segment, and returns the
// sample covariance of the standardized residuals with its Cholesky factor.
inline std::vector<SegmentCovariance> segment_covariances(const Eigen::MatrixXd& returns,
                                                          const std::vector<int>& change_points,
                                                          int p = 1, int q = 1,
                                                          unsigned threads = 0) {
    const int t_len = static_cast<int>(returns.rows());
    const int n = static_cast<int>(returns.cols());
    std::vector<std::pair<int, int>> bounds;
    int start = 0;
    for (int cp : change_points) {
        if (cp < start || cp >= t_len - 1) {
            throw ConfigError("segment_covariances: change-point outside the sample");
        }
        bounds.emplace_back(start, cp);
        start = cp + 1;
    }
    bounds.emplace_back(start, t_len - 1);

    std::vector<SegmentCovariance> out(bounds.size());
    parallel_for(bounds.size(), threads, [&](std::size_t b) {
        const auto [s, e] = bounds[b];
        const int len = e - s + 1;
        if (len <= n) {
            throw ConfigError("segment_covariances: segment " + std::to_string(b + 1) +
                              " has length " + std::to_string(len) +
                              ", need more observations than series");
        }
        Eigen::MatrixXd residuals(len, n);
        for (int i = 0; i < n; ++i) {
            const Eigen::VectorXd series = returns.col(i).segment(s, len);
            const GarchFit fit =
                fit_garch({series.data(), static_cast<std::size_t>(len)}, p, q);
            residuals.col(i) = fit.residuals;
        }
        auto& seg = out[b];
        seg.segment = static_cast<int>(b) + 1;
        seg.start = s;
        seg.end = e;
        seg.sigma = sample_covariance(residuals);
        seg.chol = cholesky_lower(seg.sigma, "segment " + std::to_string(b + 1));
    });
    return out;
}

// Maps every row r of the window to r (L_target L_current^{-1})^T, swapping
// the window's covariance for the target one.
inline Eigen::MatrixXd stress_transform(const Eigen::MatrixXd& window,
                                        const Eigen::MatrixXd& l_target,
                                        const Eigen::MatrixXd& l_current) {
    const Eigen::Index n = window.cols();
    if (l_target.rows() != n || l_current.rows() != n) {
        throw ConfigError("stress_transform: factor dimensions do not match the window");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (l_current(i, i) == 0.0 || !std::isfinite(l_current(i, i))) {
            throw NumericError("stress_transform: current Cholesky factor is singular");
        }
    }
    // window * (L_b L_cur^{-1})^T  ==  solve L_cur X^T = window^T, then L_b X^T.
    const Eigen::MatrixXd solved =
        l_current.triangularView<Eigen::Lower>().solve(window.transpose());
    return (l_target * solved).transpose();
}

// Empirical VaR at the given confidence level: the negated k-th ascending
// order statistic with k = ceil((1 - level) * W).
inline double empirical_var(std::span<const double> portfolio_returns, double level) {
    const std::size_t w = portfolio_returns.size();
    if (!(level > 0.0 && level < 1.0)) {
        throw ConfigError("empirical_var: level must lie in (0, 1)");
    }
    if (w < 20) {
        throw ConfigError("empirical_var: need a window of at least 20 observations");
    }
    std::vector<double> values(portfolio_returns.begin(), portfolio_returns.end());
    return -ascending_order_statistic(std::move(values), order_statistic_index(1.0 - level, w));
}

struct KupiecResult {
    double lr = 0.0;
    double p_value = 1.0;
};

// Exact chi^2(1) survival function.
inline double chi1_survival(double lr) { return std::erfc(std::sqrt(lr / 2.0)); }

// Proportion-of-failures likelihood ratio for x_f violations in T days at the
// given VaR confidence level. Empty products (0^0 cases) contribute log 1 = 0.
inline KupiecResult kupiec_pof(int days, int failures, double level) {
    if (days < 1 || failures < 0 || failures > days) {
        throw ConfigError("kupiec_pof: need 0 <= failures <= days");
    }
    if (!(level > 0.0 && level < 1.0)) {
        throw ConfigError("kupiec_pof: level must lie in (0, 1)");
    }
    const double t = days;
    const double x = failures;
    const double log_null = (t - x) * std::log(level) + x * std::log1p(-level);
    const double rate = x / t;
    const double log_alt = (1.0 - rate > 0.0 ? (t - x) * std::log(1.0 - rate) : 0.0) +
                           (rate > 0.0 ? x * std::log(rate) : 0.0);
    KupiecResult out;
    out.lr = std::max(0.0, -2.0 * (log_null - log_alt));
    out.p_value = chi1_survival(out.lr);
    return out;
}

// Time-to-first-failure likelihood ratio; t_f is the 1-based day of the first
// violation.
inline KupiecResult kupiec_tff(int first_failure_day, double level) {
    if (first_failure_day < 1) {
        throw ConfigError("kupiec_tff: first failure day must be >= 1");
    }
    if (!(level > 0.0 && level < 1.0)) {
        throw ConfigError("kupiec_tff: level must lie in (0, 1)");
    }
    const double tf = first_failure_day;
    const double log_null = std::log1p(-level) + (tf - 1.0) * std::log(level);
    const double inv = 1.0 / tf;
    const double log_alt =
        std::log(inv) + (tf - 1.0) * (1.0 - inv > 0.0 ? std::log(1.0 - inv) : 0.0);
    KupiecResult out;
    out.lr = std::max(0.0, -2.0 * (log_null - log_alt));
    out.p_value = chi1_survival(out.lr);
    return out;
}

enum class Zone { green, yellow, red };

inline const char* zone_name(Zone z) {
    switch (z) {
        case Zone::green: return "green";
        case Zone::yellow: return "yellow";
        case Zone::red: return "red";
    }
    return "unknown";
}

struct TrafficLightBounds {
    int green_99 = 4;
    int yellow_99 = 9;
    int green_95 = 17;
    int yellow_95 = 25;
};

// Basel-style zoning of the violation count over a 250-day window.
inline Zone traffic_light(int violations, double level,
                          const TrafficLightBounds& bounds = {}) {
    int green_max = 0;
    int yellow_max = 0;
    if (std::fabs(level - 0.99) < 1e-9) {
        green_max = bounds.green_99;
        yellow_max = bounds.yellow_99;
    } else if (std::fabs(level - 0.95) < 1e-9) {
        green_max = bounds.green_95;
        yellow_max = bounds.yellow_95;
    } else {
        throw ConfigError("traffic_light: supported levels are 0.95 and 0.99");
    }
    if (violations <= green_max) {
        return Zone::green;
    }
    return violations <= yellow_max ? Zone::yellow : Zone::red;
}

struct BacktestPeriodResult {
    int period = 0;  // 1-based historical period index
    double level = 0.0;
    int days = 0;
    int violations = 0;
    int first_violation = 0;  // 1-based; 0 when no violation occurred
    double lr_pof = 0.0;
    double p_pof = 1.0;
    bool tff_applicable = false;
    double lr_tff = 0.0;
    double p_tff = 1.0;
    Zone zone = Zone::green;
};

struct BacktestOutput {
    std::vector<BacktestPeriodResult> results;  // period-major, then level
    std::vector<double> realized;               // realized portfolio return per day
    // var_forecasts[day][period_index * levels.size() + level_index]
    std::vector<std::vector<double>> var_forecasts;
    std::vector<double> levels;
    int periods = 0;
};

// One-day-ahead stressed VaR over a rolling window. For each forecast day the
// trailing window is restressed with each historical period's Cholesky factor
// against the window's own covariance factor, the empirical VaR of the
// equally weighted portfolio is taken, and the next day's realized portfolio
// return is compared against it.
inline BacktestOutput rolling_svar_backtest(const std::vector<SegmentCovariance>& segments,
                                            const Eigen::MatrixXd& eval_returns, int window,
                                            std::vector<double> levels, unsigned threads = 0) {
    const int t_len = static_cast<int>(eval_returns.rows());
    const int n = static_cast<int>(eval_returns.cols());
    if (window < 20) {
        throw ConfigError("rolling_svar_backtest: window must be at least 20 days");
    }
    if (t_len <= window) {
        throw ConfigError("rolling_svar_backtest: evaluation sample shorter than the window");
    }
    if (segments.empty()) {
        throw ConfigError("rolling_svar_backtest: no historical segments");
    }
    for (const auto& seg : segments) {
        if (seg.chol.rows() != n) {
            throw ConfigError("rolling_svar_backtest: segment dimension mismatch");
        }
    }
    const int n_days = t_len - window;
    const int n_periods = static_cast<int>(segments.size());
    const int n_levels = static_cast<int>(levels.size());

    BacktestOutput out;
    out.levels = levels;
    out.periods = n_periods;
    out.realized.resize(static_cast<std::size_t>(n_days));
    out.var_forecasts.assign(static_cast<std::size_t>(n_days),
                             std::vector<double>(static_cast<std::size_t>(n_periods * n_levels)));

    parallel_for(static_cast<std::size_t>(n_days), threads, [&](std::size_t day) {
        const int f = window + static_cast<int>(day);  // forecast row
        const Eigen::MatrixXd win = eval_returns.middleRows(f - window, window);
        const Eigen::MatrixXd l_current =
            cholesky_lower(sample_covariance(win), "rolling window covariance");
        out.realized[day] = eval_returns.row(f).mean();
        for (int b = 0; b < n_periods; ++b) {
            const Eigen::MatrixXd stressed =
                stress_transform(win, segments[static_cast<std::size_t>(b)].chol, l_current);
            const Eigen::VectorXd portfolio = stressed.rowwise().mean();
            for (int lv = 0; lv < n_levels; ++lv) {
                out.var_forecasts[day][static_cast<std::size_t>(b * n_levels + lv)] =
                    empirical_var({portfolio.data(), static_cast<std::size_t>(portfolio.size())},
                                  levels[static_cast<std::size_t>(lv)]);
            }
        }
    });

    for (int b = 0; b < n_periods; ++b) {
        for (int lv = 0; lv < n_levels; ++lv) {
            BacktestPeriodResult r;
            r.period = b + 1;
            r.level = levels[static_cast<std::size_t>(lv)];
            r.days = n_days;
            for (int day = 0; day < n_days; ++day) {
                const double var =
                    out.var_forecasts[static_cast<std::size_t>(day)]
                                     [static_cast<std::size_t>(b * n_levels + lv)];
                if (out.realized[static_cast<std::size_t>(day)] < -var) {
                    ++r.violations;
                    if (r.first_violation == 0) {
                        r.first_violation = day + 1;
                    }
                }
            }
            const KupiecResult pof = kupiec_pof(r.days, r.violations, r.level);
            r.lr_pof = pof.lr;
            r.p_pof = pof.p_value;
            if (r.first_violation > 0) {
                const KupiecResult tff = kupiec_tff(r.first_violation, r.level);
                r.tff_applicable = true;
                r.lr_tff = tff.lr;
                r.p_tff = tff.p_value;
            }
            r.zone = traffic_light(r.violations, r.level);
            out.results.push_back(r);
        }
    }
    return out;
}

}  // namespace garchseg
