// Parametric bootstrap calibration of the segmentation threshold: residuals
// are resampled as whole cross-sectional columns, pushed back through the
// fitted per-series variance recursions, transformed with the frozen
// configuration and scanned over the segment under test. The threshold is the
// upper quantile of the replicate scan statistics.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "garchseg/common.hpp"
#include "garchseg/dcbs.hpp"
#include "garchseg/garch.hpp"
#include "garchseg/transform.hpp"

namespace garchseg {

// Standardized residuals, one row per series.
inline Eigen::MatrixXd residual_matrix(const Eigen::MatrixXd& returns,
                                       const std::vector<GarchFit>& fits) {
    const int n = static_cast<int>(returns.cols());
    const int t_len = static_cast<int>(returns.rows());
    if (static_cast<int>(fits.size()) != n) {
        throw ConfigError("residual_matrix: one fit per series required");
    }
    Eigen::MatrixXd out(n, t_len);
    for (int i = 0; i < n; ++i) {
        const auto& h = fits[static_cast<std::size_t>(i)].fitted_condvar;
        if (h.size() != t_len) {
            throw ConfigError("residual_matrix: fit length mismatch");
        }
        for (int t = 0; t < t_len; ++t) {
            out(i, t) = returns(t, i) / std::sqrt(h[t]);
        }
    }
    return out;
}

// Draws T time indices i.i.d. uniform with replacement and copies whole
// columns, preserving the cross-sectional dependence of the residuals.
inline Eigen::MatrixXd resample_vectors(const Eigen::MatrixXd& residuals, std::mt19937_64& rng) {
    const int t_len = static_cast<int>(residuals.cols());
    if (t_len < 1) {
        throw ConfigError("resample_vectors: empty residual matrix");
    }
    std::uniform_int_distribution<int> pick(0, t_len - 1);
    Eigen::MatrixXd out(residuals.rows(), t_len);
    for (int t = 0; t < t_len; ++t) {
        out.col(t) = residuals.col(pick(rng));
    }
    return out;
}

// Per-series GARCH recursion driven by resampled innovations. No burn-in; the
// variance recursion seeds at each fit's unconditional variance.
inline Eigen::MatrixXd simulate_replicate(const std::vector<GarchParams>& params,
                                          const Eigen::MatrixXd& resampled) {
    const int n = static_cast<int>(resampled.rows());
    const int t_len = static_cast<int>(resampled.cols());
    if (static_cast<int>(params.size()) != n) {
        throw ConfigError("simulate_replicate: one parameter set per series required");
    }
    Eigen::MatrixXd out(t_len, n);
    for (int i = 0; i < n; ++i) {
        const GarchParams& prm = params[static_cast<std::size_t>(i)];
        prm.require_valid();
        const double h0 = prm.unconditional_variance();
        const int max_lag = std::max(prm.p(), prm.q());
        std::vector<double> h_hist(static_cast<std::size_t>(max_lag), h0);
        std::vector<double> r2_hist(static_cast<std::size_t>(max_lag), h0);
        for (int t = 0; t < t_len; ++t) {
            double h = prm.omega;
            for (int j = 0; j < prm.p(); ++j) {
                h += prm.alpha[static_cast<std::size_t>(j)] * r2_hist[static_cast<std::size_t>(j)];
            }
            for (int k = 0; k < prm.q(); ++k) {
                h += prm.beta[static_cast<std::size_t>(k)] * h_hist[static_cast<std::size_t>(k)];
            }
            if (!std::isfinite(h) || h <= 0.0) {
                throw NumericError("simulate_replicate: variance recursion failed for series " +
                                   std::to_string(i));
            }
            const double r = std::sqrt(h) * resampled(i, t);
            if (max_lag > 0) {
                for (int j = max_lag - 1; j > 0; --j) {
                    r2_hist[static_cast<std::size_t>(j)] = r2_hist[static_cast<std::size_t>(j - 1)];
                    h_hist[static_cast<std::size_t>(j)] = h_hist[static_cast<std::size_t>(j - 1)];
                }
                r2_hist[0] = r * r;
                h_hist[0] = h;
            }
            out(t, i) = r;
        }
    }
    return out;
}

// Everything needed to recreate replicate panels on demand: replicate ell is a
// pure function of (seed, ell), so thresholds do not depend on scheduling.
struct BootstrapEnsemble {
    std::vector<GarchParams> params;
    Eigen::MatrixXd residuals;  // N x T
    TransformConfig config;
    std::uint64_t seed = 1;
    int replicates = 200;
    unsigned threads = 0;
    DcbsOptions scan_options;  // must match the options used on the data

    Eigen::MatrixXd replicate_returns(int ell) const {
        std::mt19937_64 rng(seed ^ static_cast<std::uint64_t>(ell));
        const Eigen::MatrixXd draws = resample_vectors(residuals, rng);
        return simulate_replicate(params, draws);
    }

    TransformedPanel replicate_panel(int ell) const {
        return build_panel_with_config(replicate_returns(ell), params, config);
    }
};

// Upper (1 - alpha) quantile, as the ceil((1-alpha) R)-th ascending order
// statistic, of the replicate scan statistics over [s, e].
inline double threshold_for_segment(const BootstrapEnsemble& ensemble, int s, int e,
                                    double alpha) {
    if (ensemble.replicates < 20) {
        throw ConfigError("threshold_for_segment: need at least 20 replicates");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ConfigError("threshold_for_segment: alpha must lie in [0, 1]");
    }
    std::vector<double> stats(static_cast<std::size_t>(ensemble.replicates));
    parallel_for(stats.size(), ensemble.threads, [&](std::size_t idx) {
        const int ell = static_cast<int>(idx) + 1;
        const TransformedPanel panel = ensemble.replicate_panel(ell);
        stats[idx] = scan_segment(panel.data, s, e, ensemble.scan_options).stat;
    });
    return ascending_order_statistic(std::move(stats),
                                     order_statistic_index(1.0 - alpha, stats.size()));
}

// Threshold callback for dcbs_run; the ensemble must outlive the callback.
inline ThresholdFn bootstrap_threshold_provider(const BootstrapEnsemble& ensemble, double alpha) {
    return [&ensemble, alpha](int s, int e) {
        return threshold_for_segment(ensemble, s, e, alpha);
    };
}

}  // namespace garchseg
