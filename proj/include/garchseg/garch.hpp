// Univariate GARCH(p,q) building blocks: path simulation under piecewise
// constant parameters, the fitted conditional-variance filter, the Gaussian
// quasi-likelihood and its maximizer.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "garchseg/common.hpp"
#include "garchseg/optimize.hpp"

namespace garchseg {

inline constexpr double kMinOmega = 1e-6;
inline constexpr double kMaxPersistence = 0.999;

struct GarchParams {
    double omega = 0.0;
    std::vector<double> alpha;
    std::vector<double> beta;

    int p() const { return static_cast<int>(alpha.size()); }
    int q() const { return static_cast<int>(beta.size()); }

    double persistence() const {
        double s = 0.0;
        for (double a : alpha) {
            s += a;
        }
        for (double b : beta) {
            s += b;
        }
        return s;
    }

    double unconditional_variance() const { return omega / (1.0 - persistence()); }

    bool valid() const {
        if (!(omega >= kMinOmega) || !std::isfinite(omega)) {
            return false;
        }
        for (double a : alpha) {
            if (!(a >= 0.0) || !std::isfinite(a)) {
                return false;
            }
        }
        for (double b : beta) {
            if (!(b >= 0.0) || !std::isfinite(b)) {
                return false;
            }
        }
        return persistence() <= kMaxPersistence;
    }

    void require_valid() const {
        if (!valid()) {
            throw ConfigError("invalid GARCH parameters (omega >= 1e-6, coefficients >= 0, "
                              "persistence <= 0.999 required)");
        }
    }
};

// Piecewise constant parameters over [0, T). breaks[k] is the 0-based index of
// the last observation governed by segments[k]; segments.size() ==
// breaks.size() + 1.
struct ParamsSchedule {
    std::vector<GarchParams> segments;
    std::vector<int> breaks;

    static ParamsSchedule constant(GarchParams params) {
        ParamsSchedule s;
        s.segments.push_back(std::move(params));
        return s;
    }

    void require_valid() const {
        if (segments.empty() || segments.size() != breaks.size() + 1) {
            throw ConfigError("ParamsSchedule: need breaks.size()+1 segments");
        }
        for (std::size_t k = 1; k < breaks.size(); ++k) {
            if (breaks[k] <= breaks[k - 1]) {
                throw ConfigError("ParamsSchedule: breaks must be strictly increasing");
            }
        }
        for (const auto& p : segments) {
            p.require_valid();
        }
    }

    const GarchParams& at(int t) const {
        std::size_t k = 0;
        while (k < breaks.size() && t > breaks[k]) {
            ++k;
        }
        return segments[k];
    }
};

// Simulates r_t = sqrt(h_t) eps_t with the variance recursion carried through
// parameter breaks. innovations.size() == T + burn_in; the first burn_in draws
// are discarded and governed by the first segment. h seeds at the first
// segment's unconditional variance (pre-sample squared returns likewise).
inline Eigen::VectorXd simulate_garch_path(const ParamsSchedule& schedule,
                                           std::span<const double> innovations, int burn_in,
                                           Eigen::VectorXd* condvar_out = nullptr) {
    schedule.require_valid();
    if (burn_in < 0 || static_cast<int>(innovations.size()) <= burn_in) {
        throw ConfigError("simulate_garch_path: innovations must cover burn_in plus T >= 1");
    }
    const int total = static_cast<int>(innovations.size());
    const int t_len = total - burn_in;

    int max_lag = 0;
    for (const auto& seg : schedule.segments) {
        max_lag = std::max(max_lag, std::max(seg.p(), seg.q()));
    }
    const double h0 = schedule.segments.front().unconditional_variance();

    std::vector<double> h_hist(max_lag, h0);
    std::vector<double> r2_hist(max_lag, h0);

    Eigen::VectorXd out(t_len);
    if (condvar_out != nullptr) {
        condvar_out->resize(t_len);
    }
    for (int g = 0; g < total; ++g) {
        const int t = g - burn_in;  // < 0 during burn-in
        const GarchParams& prm = t <= 0 ? schedule.segments.front() : schedule.at(t);
        double h = prm.omega;
        for (int j = 0; j < prm.p(); ++j) {
            h += prm.alpha[static_cast<std::size_t>(j)] * r2_hist[static_cast<std::size_t>(j)];
        }
        for (int k = 0; k < prm.q(); ++k) {
            h += prm.beta[static_cast<std::size_t>(k)] * h_hist[static_cast<std::size_t>(k)];
        }
        if (!std::isfinite(h) || h <= 0.0) {
            throw NumericError("simulate_garch_path: conditional variance not finite/positive at "
                               "step " + std::to_string(g));
        }
        const double r = std::sqrt(h) * innovations[static_cast<std::size_t>(g)];
        if (max_lag > 0) {
            for (int j = max_lag - 1; j > 0; --j) {
                r2_hist[static_cast<std::size_t>(j)] = r2_hist[static_cast<std::size_t>(j - 1)];
                h_hist[static_cast<std::size_t>(j)] = h_hist[static_cast<std::size_t>(j - 1)];
            }
            r2_hist[0] = r * r;
            h_hist[0] = h;
        }
        if (t >= 0) {
            out[t] = r;
            if (condvar_out != nullptr) {
                (*condvar_out)[t] = h;
            }
        }
    }
    return out;
}

// Fitted conditional-variance recursion. Pre-sample squared returns and
// variances are set to the mean-centred 1/T variance of the whole series.
inline Eigen::VectorXd filter_condvar(std::span<const double> returns,
                                      const GarchParams& params) {
    params.require_valid();
    const int t_len = static_cast<int>(returns.size());
    if (t_len < 1) {
        throw ConfigError("filter_condvar: empty series");
    }
    const double presample = population_variance(returns);
    Eigen::VectorXd h(t_len);
    for (int t = 0; t < t_len; ++t) {
        double v = params.omega;
        for (int j = 1; j <= params.p(); ++j) {
            const int lag = t - j;
            const double r2 =
                lag >= 0 ? returns[static_cast<std::size_t>(lag)] * returns[static_cast<std::size_t>(lag)]
                         : presample;
            v += params.alpha[static_cast<std::size_t>(j - 1)] * r2;
        }
        for (int k = 1; k <= params.q(); ++k) {
            const int lag = t - k;
            v += params.beta[static_cast<std::size_t>(k - 1)] * (lag >= 0 ? h[lag] : presample);
        }
        h[t] = v;
    }
    return h;
}

// Gaussian quasi-log-likelihood -0.5 * sum(log h_t + r_t^2 / h_t).
inline double qmle_loglik(std::span<const double> returns, const GarchParams& params) {
    const Eigen::VectorXd h = filter_condvar(returns, params);
    double ll = 0.0;
    for (int t = 0; t < h.size(); ++t) {
        const double r = returns[static_cast<std::size_t>(t)];
        ll += std::log(h[t]) + r * r / h[t];
    }
    return -0.5 * ll;
}

struct GarchFit {
    GarchParams params;
    Eigen::VectorXd fitted_condvar;
    Eigen::VectorXd residuals;
    double loglik = 0.0;
    bool converged = true;
};

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double logit(double u) {
    const double c = std::clamp(u, 1e-12, 1.0 - 1e-12);
    return std::log(c / (1.0 - c));
}

// Unconstrained coordinates <-> constraint box, via omega = 1e-6 + exp(a) and
// a stick-breaking split of the 0.999 persistence budget across alpha, beta.
inline GarchParams decode_params(std::span<const double> theta, int p, int q) {
    GarchParams prm;
    prm.omega = kMinOmega + std::exp(theta[0]);
    prm.alpha.resize(static_cast<std::size_t>(p));
    prm.beta.resize(static_cast<std::size_t>(q));
    double remaining = kMaxPersistence;
    for (int m = 0; m < p + q; ++m) {
        const double z = remaining * sigmoid(theta[static_cast<std::size_t>(m + 1)]);
        if (m < p) {
            prm.alpha[static_cast<std::size_t>(m)] = z;
        } else {
            prm.beta[static_cast<std::size_t>(m - p)] = z;
        }
        remaining -= z;
    }
    return prm;
}

inline std::vector<double> encode_params(const GarchParams& prm) {
    std::vector<double> theta(1 + prm.alpha.size() + prm.beta.size());
    theta[0] = std::log(std::max(prm.omega - kMinOmega, 1e-12));
    double remaining = kMaxPersistence;
    std::size_t idx = 1;
    for (std::size_t m = 0; m < prm.alpha.size() + prm.beta.size(); ++m, ++idx) {
        const double z =
            m < prm.alpha.size() ? prm.alpha[m] : prm.beta[m - prm.alpha.size()];
        theta[idx] = logit(remaining > 0.0 ? z / remaining : 0.0);
        remaining -= z;
    }
    return theta;
}

}  // namespace detail

// Maximizes the Gaussian quasi-likelihood over the constraint box from three
// fixed variance-anchored starting points. Non-convergence returns the best
// point found with converged == false.
inline GarchFit fit_garch(std::span<const double> returns, int p = 1, int q = 1) {
    if (p < 1 || q < 0) {
        throw ConfigError("fit_garch: need p >= 1, q >= 0");
    }
    const int t_len = static_cast<int>(returns.size());
    if (t_len < 20 * (p + q + 1)) {
        throw ConfigError("fit_garch: series too short for order (" + std::to_string(p) + "," +
                          std::to_string(q) + ")");
    }
    const double vhat = population_variance(returns);
    if (!(vhat > 0.0) || !std::isfinite(vhat)) {
        throw NumericError("fit_garch: series has zero or non-finite variance");
    }

    auto make_start = [&](double omega_frac, double alpha_total, double beta_total) {
        GarchParams prm;
        prm.omega = std::max(omega_frac * vhat, kMinOmega * 2.0);
        prm.alpha.assign(static_cast<std::size_t>(p), alpha_total / p);
        prm.beta.assign(static_cast<std::size_t>(q), q > 0 ? beta_total / q : 0.0);
        return prm;
    };
    const GarchParams starts[3] = {
        make_start(0.1, 0.1, 0.8),
        make_start(0.5, 0.1, 0.4),
        make_start(0.9, 0.05, 0.05),
    };

    auto objective = [&](std::span<const double> theta) {
        return -qmle_loglik(returns, detail::decode_params(theta, p, q));
    };

    const int max_evals = 600 * (1 + p + q);
    std::vector<NelderMeadResult> candidates;
    for (const GarchParams& s : starts) {
        std::vector<double> theta0 = detail::encode_params(s);
        NelderMeadResult r = nelder_mead_minimize(objective, theta0, 0.25, max_evals, 1e-10);
        // One restart from the found optimum to escape a degenerate simplex.
        candidates.push_back(nelder_mead_minimize(objective, r.x, 0.1, max_evals, 1e-10));
    }
    double fx_min = candidates.front().fx;
    for (const auto& c : candidates) {
        fx_min = std::min(fx_min, c.fx);
    }
    // When alpha is near zero the beta direction is unidentified and the
    // likelihood is flat along a persistence ridge; among statistically
    // indistinguishable candidates take the least persistent one.
    const double kTieMargin = 2.5;
    const NelderMeadResult* best = nullptr;
    double best_persistence = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
        if (c.fx > fx_min + kTieMargin) {
            continue;
        }
        const double pers = detail::decode_params(c.x, p, q).persistence();
        if (best == nullptr || pers < best_persistence) {
            best = &c;
            best_persistence = pers;
        }
    }

    GarchFit fit;
    fit.params = detail::decode_params(best->x, p, q);
    fit.converged = best->converged;
    fit.fitted_condvar = filter_condvar(returns, fit.params);
    fit.loglik = -best->fx;
    fit.residuals.resize(t_len);
    for (int t = 0; t < t_len; ++t) {
        fit.residuals[t] = returns[static_cast<std::size_t>(t)] / std::sqrt(fit.fitted_condvar[t]);
    }
    return fit;
}

}  // namespace garchseg
