// Stage 1: maps an N-dimensional returns panel into the d = N(N+1)/2 panel
// whose row means carry every within-series and cross-correlation break.
// Row j holds U_i for diagonal pairs (i,i) and (U_i^{1/2} - s*U_i'^{1/2})^2
// for i < i', with U_i = r^2 / hcheck built from dampened fitted coefficients.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "garchseg/common.hpp"
#include "garchseg/garch.hpp"

namespace garchseg {

struct TransformConfig {
    std::vector<std::vector<double>> coefficients;  // per series: C_{i,0..p+q}
    std::vector<double> dampening;                  // F_i in [1, 99]
    double epsilon = 1e-3;
    Eigen::MatrixXi signs;     // N x N, entries in {+1,-1}; upper triangle used
    int degenerate_signs = 0;  // pairs whose correlation was zero/undefined

    void require_valid() const {
        if (!(epsilon > 0.0)) {
            throw ConfigError("TransformConfig: epsilon must be positive");
        }
        for (std::size_t i = 0; i < coefficients.size(); ++i) {
            if (coefficients[i].empty() || !(coefficients[i][0] > 0.0)) {
                throw ConfigError("TransformConfig: C_{i,0} must be positive");
            }
            if (dampening[i] < 1.0 || dampening[i] > 99.0) {
                throw ConfigError("TransformConfig: dampening outside [1, 99]");
            }
        }
    }
};

struct TransformedPanel {
    Eigen::MatrixXd data;                    // d x T
    std::vector<std::pair<int, int>> pairs;  // row j -> (i, i'), 0-based, i <= i'
    int n_series = 0;
    int n_obs = 0;

    // Row of the (i, i') pair, i <= i', both 0-based. Uses the 1-based layout
    // j = (N - i/2)(i - 1) + i'.
    static int pair_row(int i, int i2, int N) {
        const double i1 = i + 1;
        const double j1 = (N - i1 / 2.0) * (i1 - 1.0) + (i2 + 1);
        return static_cast<int>(j1 + 0.5) - 1;
    }

    static std::vector<std::pair<int, int>> pair_index(int N) {
        std::vector<std::pair<int, int>> out;
        out.reserve(static_cast<std::size_t>(N) * (N + 1) / 2);
        for (int i = 0; i < N; ++i) {
            for (int i2 = i; i2 < N; ++i2) {
                out.emplace_back(i, i2);
            }
        }
        return out;
    }
};

// F = max[1, min(0.99, s) / max(0.01, 1 - s)], bounded in [1, 99].
inline double dampening_factor(double alpha_beta_sum) {
    const double num = std::min(0.99, alpha_beta_sum);
    const double den = std::max(0.01, 1.0 - alpha_beta_sum);
    return std::max(1.0, num / den);
}

// Bounded variance proxy: C_0 + sum_j C_j r_{t-j}^2 + sum_k C_{p+k} hhat_{t-k}
// + eps r_t^2, with pre-sample lags at the series' 1/T variance.
inline Eigen::VectorXd check_h(std::span<const double> returns, std::span<const double> coeffs,
                               int p, int q, double epsilon,
                               const Eigen::VectorXd& fitted_condvar) {
    if (static_cast<int>(coeffs.size()) != 1 + p + q) {
        throw ConfigError("check_h: coefficient row must have 1+p+q entries");
    }
    const int t_len = static_cast<int>(returns.size());
    if (fitted_condvar.size() != t_len) {
        throw ConfigError("check_h: fitted_condvar length mismatch");
    }
    const double presample = population_variance(returns);
    Eigen::VectorXd out(t_len);
    for (int t = 0; t < t_len; ++t) {
        const double rt = returns[static_cast<std::size_t>(t)];
        double v = coeffs[0] + epsilon * rt * rt;
        for (int j = 1; j <= p; ++j) {
            const int lag = t - j;
            const double r2 =
                lag >= 0 ? returns[static_cast<std::size_t>(lag)] * returns[static_cast<std::size_t>(lag)]
                         : presample;
            v += coeffs[static_cast<std::size_t>(j)] * r2;
        }
        for (int k = 1; k <= q; ++k) {
            const int lag = t - k;
            v += coeffs[static_cast<std::size_t>(p + k)] *
                 (lag >= 0 ? fitted_condvar[lag] : presample);
        }
        out[t] = v;
    }
    return out;
}

inline Eigen::VectorXd u_single(std::span<const double> returns, const Eigen::VectorXd& hcheck) {
    const int t_len = static_cast<int>(returns.size());
    Eigen::VectorXd out(t_len);
    for (int t = 0; t < t_len; ++t) {
        const double r = returns[static_cast<std::size_t>(t)];
        out[t] = r * r / hcheck[t];
    }
    return out;
}

// Signed square root r_t / sqrt(hcheck_t); preserves the sign of the return.
inline Eigen::VectorXd u_signed_root(std::span<const double> returns,
                                     const Eigen::VectorXd& hcheck) {
    const int t_len = static_cast<int>(returns.size());
    Eigen::VectorXd out(t_len);
    for (int t = 0; t < t_len; ++t) {
        out[t] = returns[static_cast<std::size_t>(t)] / std::sqrt(hcheck[t]);
    }
    return out;
}

struct SignChoice {
    int sign = 1;
    bool degenerate = false;
};

// Sign of the sample correlation over the full window; zero or undefined
// correlation falls back to +1.
inline SignChoice choose_sign(std::span<const double> a, std::span<const double> b) {
    const double corr = sample_correlation(a, b);
    SignChoice choice;
    if (corr > 0.0) {
        choice.sign = 1;
    } else if (corr < 0.0) {
        choice.sign = -1;
    } else {
        choice.sign = 1;
        choice.degenerate = true;
    }
    return choice;
}

inline Eigen::VectorXd u_pair(const Eigen::VectorXd& root_a, const Eigen::VectorXd& root_b,
                              int sign) {
    if (sign != 1 && sign != -1) {
        throw ConfigError("u_pair: sign must be +1 or -1");
    }
    Eigen::VectorXd out(root_a.size());
    for (int t = 0; t < root_a.size(); ++t) {
        const double d = root_a[t] - sign * root_b[t];
        out[t] = d * d;
    }
    return out;
}

struct PanelBuild {
    TransformedPanel panel;
    TransformConfig config;
};

namespace detail {

inline std::vector<double> dampened_coefficients(const GarchParams& prm, double dampening) {
    std::vector<double> c;
    c.reserve(1 + prm.alpha.size() + prm.beta.size());
    c.push_back(prm.omega);
    for (double a : prm.alpha) {
        c.push_back(a / dampening);
    }
    for (double b : prm.beta) {
        c.push_back(b / dampening);
    }
    return c;
}

inline PanelBuild build_panel_impl(const Eigen::MatrixXd& returns,
                                   const std::vector<GarchParams>& params,
                                   const std::vector<std::vector<double>>* fixed_coefficients,
                                   double epsilon, const Eigen::MatrixXi* fixed_signs) {
    const int t_len = static_cast<int>(returns.rows());
    const int n = static_cast<int>(returns.cols());
    if (n < 1 || t_len < 1) {
        throw ConfigError("build_panel: empty returns panel");
    }
    if (static_cast<int>(params.size()) != n) {
        throw ConfigError("build_panel: one parameter set per series required");
    }
    if (!(epsilon > 0.0)) {
        throw ConfigError("build_panel: epsilon must be positive");
    }
    if (fixed_coefficients != nullptr && static_cast<int>(fixed_coefficients->size()) != n) {
        throw ConfigError("build_panel: coefficient rows do not match series count");
    }

    PanelBuild out;
    out.config.epsilon = epsilon;
    out.config.coefficients.resize(static_cast<std::size_t>(n));
    out.config.dampening.resize(static_cast<std::size_t>(n));

    std::vector<Eigen::VectorXd> roots(static_cast<std::size_t>(n));
    std::vector<Eigen::VectorXd> levels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd series = returns.col(i);
        const std::span<const double> r{series.data(), static_cast<std::size_t>(t_len)};
        const GarchParams& prm = params[static_cast<std::size_t>(i)];
        const double damp = dampening_factor(prm.persistence());
        out.config.dampening[static_cast<std::size_t>(i)] = damp;
        out.config.coefficients[static_cast<std::size_t>(i)] =
            fixed_coefficients != nullptr ? (*fixed_coefficients)[static_cast<std::size_t>(i)]
                                          : dampened_coefficients(prm, damp);
        const Eigen::VectorXd hhat = filter_condvar(r, prm);
        const Eigen::VectorXd hchk = check_h(r, out.config.coefficients[static_cast<std::size_t>(i)],
                                             prm.p(), prm.q(), epsilon, hhat);
        roots[static_cast<std::size_t>(i)] = u_signed_root(r, hchk);
        levels[static_cast<std::size_t>(i)] = u_single(r, hchk);
    }

    if (fixed_signs != nullptr) {
        if (fixed_signs->rows() != n || fixed_signs->cols() != n) {
            throw ConfigError("build_panel: fixed sign matrix has wrong shape");
        }
        out.config.signs = *fixed_signs;
    } else {
        out.config.signs = Eigen::MatrixXi::Ones(n, n);
        for (int i = 0; i < n; ++i) {
            for (int i2 = i + 1; i2 < n; ++i2) {
                const auto& a = roots[static_cast<std::size_t>(i)];
                const auto& b = roots[static_cast<std::size_t>(i2)];
                const SignChoice choice =
                    choose_sign({a.data(), static_cast<std::size_t>(a.size())},
                                {b.data(), static_cast<std::size_t>(b.size())});
                out.config.signs(i, i2) = choice.sign;
                out.config.signs(i2, i) = choice.sign;
                if (choice.degenerate) {
                    ++out.config.degenerate_signs;
                }
            }
        }
    }

    TransformedPanel& panel = out.panel;
    panel.n_series = n;
    panel.n_obs = t_len;
    panel.pairs = TransformedPanel::pair_index(n);
    panel.data.resize(static_cast<Eigen::Index>(panel.pairs.size()), t_len);
    for (std::size_t j = 0; j < panel.pairs.size(); ++j) {
        const auto [i, i2] = panel.pairs[j];
        if (i == i2) {
            panel.data.row(static_cast<Eigen::Index>(j)) =
                levels[static_cast<std::size_t>(i)].transpose();
        } else {
            panel.data.row(static_cast<Eigen::Index>(j)) =
                u_pair(roots[static_cast<std::size_t>(i)], roots[static_cast<std::size_t>(i2)],
                       out.config.signs(i, i2))
                    .transpose();
        }
    }
    return out;
}

}  // namespace detail

// Full build from fitted models: dampened coefficients and correlation signs
// are derived from the data.
inline PanelBuild build_panel(const Eigen::MatrixXd& returns, const std::vector<GarchFit>& fits,
                              double epsilon) {
    std::vector<GarchParams> params;
    params.reserve(fits.size());
    for (const auto& f : fits) {
        params.push_back(f.params);
    }
    return detail::build_panel_impl(returns, params, nullptr, epsilon, nullptr);
}

// Rebuild with a frozen configuration (bootstrap replicates reuse the
// original coefficients and signs; params drive the fitted-variance filter).
inline TransformedPanel build_panel_with_config(const Eigen::MatrixXd& returns,
                                                const std::vector<GarchParams>& params,
                                                const TransformConfig& config) {
    config.require_valid();
    return detail::build_panel_impl(returns, params, &config.coefficients, config.epsilon,
                                    &config.signs)
        .panel;
}

}  // namespace garchseg
