// Scenario generators for the simulation study: stationary panels, panels
// with one or two parameter breaks, innovation-covariance swaps, order
// misspecification and a full-factor model. Every generator is a pure
// function of its spec (fixed draw order from one seeded engine) and reports
// the ground-truth break locations.

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "garchseg/common.hpp"
#include "garchseg/garch.hpp"

namespace garchseg {

enum class ScenarioModel {
    M0_1,
    M0_2,
    M1_1,
    M1_2,
    M1_3,
    M1_4,
    M1_5,
    M1_6,
    M1_7,
    M1_8,
    M2_1,
    M2_2,
    M2_3,
    M3_1_1,
    M3_1_2,
    M3_2_1,
    M3_2_2,
    M4_1,
    M4_2,
};

inline ScenarioModel parse_model(std::string name) {
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    static const std::vector<std::pair<std::string, ScenarioModel>> table{
        {"m0.1", ScenarioModel::M0_1},     {"m0.2", ScenarioModel::M0_2},
        {"m1.1", ScenarioModel::M1_1},     {"m1.2", ScenarioModel::M1_2},
        {"m1.3", ScenarioModel::M1_3},     {"m1.4", ScenarioModel::M1_4},
        {"m1.5", ScenarioModel::M1_5},     {"m1.6", ScenarioModel::M1_6},
        {"m1.7", ScenarioModel::M1_7},     {"m1.8", ScenarioModel::M1_8},
        {"m2.1", ScenarioModel::M2_1},     {"m2.2", ScenarioModel::M2_2},
        {"m2.3", ScenarioModel::M2_3},     {"m3.1.1", ScenarioModel::M3_1_1},
        {"m3.1.2", ScenarioModel::M3_1_2}, {"m3.2.1", ScenarioModel::M3_2_1},
        {"m3.2.2", ScenarioModel::M3_2_2}, {"m4.1", ScenarioModel::M4_1},
        {"m4.2", ScenarioModel::M4_2},
    };
    for (const auto& [key, value] : table) {
        if (key == name) {
            return value;
        }
    }
    throw ConfigError("unknown scenario model: " + name);
}

inline std::string model_name(ScenarioModel m) {
    switch (m) {
        case ScenarioModel::M0_1: return "m0.1";
        case ScenarioModel::M0_2: return "m0.2";
        case ScenarioModel::M1_1: return "m1.1";
        case ScenarioModel::M1_2: return "m1.2";
        case ScenarioModel::M1_3: return "m1.3";
        case ScenarioModel::M1_4: return "m1.4";
        case ScenarioModel::M1_5: return "m1.5";
        case ScenarioModel::M1_6: return "m1.6";
        case ScenarioModel::M1_7: return "m1.7";
        case ScenarioModel::M1_8: return "m1.8";
        case ScenarioModel::M2_1: return "m2.1";
        case ScenarioModel::M2_2: return "m2.2";
        case ScenarioModel::M2_3: return "m2.3";
        case ScenarioModel::M3_1_1: return "m3.1.1";
        case ScenarioModel::M3_1_2: return "m3.1.2";
        case ScenarioModel::M3_2_1: return "m3.2.1";
        case ScenarioModel::M3_2_2: return "m3.2.2";
        case ScenarioModel::M4_1: return "m4.1";
        case ScenarioModel::M4_2: return "m4.2";
    }
    throw ConfigError("unknown scenario model id");
}

enum class InnovationLaw { gaussian_correlated, student_t10 };

struct ScenarioSpec {
    ScenarioModel model = ScenarioModel::M0_1;
    int n = 20;
    int t = 500;
    double sparsity = 1.0;     // fraction of series carrying the break
    double eta1_frac = 0.5;    // single-break location as a fraction of T
    InnovationLaw innovations = InnovationLaw::gaussian_correlated;
    double jitter = 0.01;      // half-width of the per-series parameter jitter
    std::uint64_t seed = 1;
    int burn_in = 500;
    double rho = -0.75;        // base innovation correlation decay

    void require_valid() const {
        if (n < 1 || t < 10) {
            throw ConfigError("ScenarioSpec: need n >= 1 and t >= 10");
        }
        if (!(sparsity > 0.0 && sparsity <= 1.0)) {
            throw ConfigError("ScenarioSpec: sparsity must lie in (0, 1]");
        }
        if (!(eta1_frac > 0.0 && eta1_frac < 1.0)) {
            throw ConfigError("ScenarioSpec: eta1_frac must lie in (0, 1)");
        }
        if (std::fabs(rho) >= 1.0) {
            throw ConfigError("ScenarioSpec: |rho| must be < 1");
        }
        if (jitter < 0.0) {
            throw ConfigError("ScenarioSpec: jitter must be non-negative");
        }
    }
};

struct LabeledPanel {
    Eigen::MatrixXd returns;  // T x N
    std::vector<int> truth;   // 0-based last pre-break indices, sorted
    std::vector<int> s1;      // series with the parameter break
    std::vector<int> s2;      // series hit by the covariance / loading swap
};

// Correlation matrix with entries rho^|i - i'|.
inline Eigen::MatrixXd ar1_corr(double rho, int n) {
    if (std::fabs(rho) >= 1.0) {
        throw ConfigError("ar1_corr: |rho| must be < 1");
    }
    Eigen::MatrixXd out(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            out(i, j) = std::pow(rho, std::abs(i - j));
        }
    }
    return out;
}

namespace detail {

struct ModelSetup {
    int p = 1;
    int q = 1;
    std::vector<double> pre;    // (omega, alpha_1.., beta_1..)
    std::vector<double> post;   // empty when no parameter break
    bool covariance_break = false;
    bool factor_model = false;
};

inline ModelSetup model_setup(ScenarioModel m) {
    ModelSetup s;
    switch (m) {
        case ScenarioModel::M0_1: s.pre = {0.4, 0.1, 0.5}; break;
        case ScenarioModel::M0_2: s.pre = {0.1, 0.1, 0.8}; break;
        case ScenarioModel::M1_1: s.pre = {0.4, 0.1, 0.5}; s.post = {0.4, 0.1, 0.6}; break;
        case ScenarioModel::M1_2: s.pre = {0.4, 0.1, 0.5}; s.post = {0.4, 0.1, 0.8}; break;
        case ScenarioModel::M1_3: s.pre = {0.1, 0.1, 0.8}; s.post = {0.1, 0.1, 0.7}; break;
        case ScenarioModel::M1_4: s.pre = {0.1, 0.1, 0.8}; s.post = {0.1, 0.1, 0.4}; break;
        case ScenarioModel::M1_5: s.pre = {0.4, 0.1, 0.5}; s.post = {0.5, 0.1, 0.5}; break;
        case ScenarioModel::M1_6: s.pre = {0.4, 0.1, 0.5}; s.post = {0.8, 0.1, 0.5}; break;
        case ScenarioModel::M1_7: s.pre = {0.1, 0.1, 0.8}; s.post = {0.3, 0.1, 0.8}; break;
        case ScenarioModel::M1_8: s.pre = {0.1, 0.1, 0.8}; s.post = {0.5, 0.1, 0.8}; break;
        case ScenarioModel::M2_1:
        case ScenarioModel::M3_1_1:
            s.pre = {0.1, 0.3, 0.3};
            s.post = {0.15, 0.25, 0.65};
            s.covariance_break = true;
            break;
        case ScenarioModel::M2_2:
        case ScenarioModel::M3_1_2:
            s.pre = {0.1, 0.3, 0.3};
            s.post = {0.125, 0.1, 0.6};
            s.covariance_break = true;
            break;
        case ScenarioModel::M2_3:
            s.pre = {0.1, 0.3, 0.3};
            s.post = {0.15, 0.15, 0.25};
            s.covariance_break = true;
            break;
        case ScenarioModel::M3_2_1:
            s.p = 2;
            s.q = 2;
            s.pre = {0.1, 0.1, 0.2, 0.1, 0.2};
            s.post = {0.15, 0.15, 0.1, 0.35, 0.3};
            s.covariance_break = true;
            break;
        case ScenarioModel::M3_2_2:
            s.p = 2;
            s.q = 2;
            s.pre = {0.1, 0.1, 0.2, 0.1, 0.2};
            s.post = {0.125, 0.1, 0.0, 0.3, 0.3};
            s.covariance_break = true;
            break;
        case ScenarioModel::M4_1:
            s.pre = {0.1, 0.3, 0.3};
            s.post = {0.15, 0.25, 0.65};
            s.factor_model = true;
            break;
        case ScenarioModel::M4_2:
            s.pre = {0.1, 0.3, 0.3};
            s.post = {0.125, 0.1, 0.6};
            s.factor_model = true;
            break;
    }
    return s;
}

inline GarchParams params_from_triple(const std::vector<double>& values, int p, int q,
                                      const std::vector<double>& jitter) {
    GarchParams prm;
    prm.omega = std::max(values[0] + jitter[0], kMinOmega);
    prm.alpha.resize(static_cast<std::size_t>(p));
    prm.beta.resize(static_cast<std::size_t>(q));
    for (int j = 0; j < p; ++j) {
        prm.alpha[static_cast<std::size_t>(j)] =
            std::max(values[static_cast<std::size_t>(1 + j)] + jitter[static_cast<std::size_t>(1 + j)], 0.0);
    }
    for (int k = 0; k < q; ++k) {
        prm.beta[static_cast<std::size_t>(k)] =
            std::max(values[static_cast<std::size_t>(1 + p + k)] +
                         jitter[static_cast<std::size_t>(1 + p + k)],
                     0.0);
    }
    const double pers = prm.persistence();
    if (pers > kMaxPersistence) {
        const double shrink = kMaxPersistence * (1.0 - 1e-12) / pers;
        for (auto& a : prm.alpha) {
            a *= shrink;
        }
        for (auto& b : prm.beta) {
            b *= shrink;
        }
    }
    return prm;
}

inline std::vector<int> sample_subset(int n, int count, std::mt19937_64& rng) {
    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    for (int i = 0; i < count; ++i) {
        std::uniform_int_distribution<int> pick(i, n - 1);
        std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(pick(rng))]);
    }
    std::vector<int> out(all.begin(), all.begin() + count);
    std::sort(out.begin(), out.end());
    return out;
}

// Random permutation of the given positions; retried until it moves something
// whenever that is possible.
inline std::vector<int> non_identity_permutation(std::size_t size, std::mt19937_64& rng) {
    std::vector<int> perm(size);
    std::iota(perm.begin(), perm.end(), 0);
    if (size < 2) {
        return perm;
    }
    for (int attempt = 0; attempt < 200; ++attempt) {
        std::shuffle(perm.begin(), perm.end(), rng);
        if (!std::is_sorted(perm.begin(), perm.end())) {
            return perm;
        }
    }
    return perm;
}

// Innovation matrix of (burn + T) rows. Gaussian draws are correlated through
// the Cholesky factor of sigma_pre, switching to sigma_post strictly after
// eta2 (0-based, in data time); t10 draws are iid and scaled to unit variance.
inline Eigen::MatrixXd draw_innovations(const ScenarioSpec& spec, int total, int eta2,
                                        const Eigen::MatrixXd& sigma_pre,
                                        const Eigen::MatrixXd& sigma_post, bool use_post,
                                        std::mt19937_64& rng) {
    const int n = spec.n;
    Eigen::MatrixXd out(total, n);
    if (spec.innovations == InnovationLaw::student_t10) {
        std::student_t_distribution<double> tdist(10.0);
        const double scale = std::sqrt(0.8);  // unit variance for 10 dof
        for (int g = 0; g < total; ++g) {
            for (int i = 0; i < n; ++i) {
                out(g, i) = scale * tdist(rng);
            }
        }
        return out;
    }
    const Eigen::MatrixXd l_pre = Eigen::LLT<Eigen::MatrixXd>(sigma_pre).matrixL();
    Eigen::MatrixXd l_post;
    if (use_post) {
        l_post = Eigen::LLT<Eigen::MatrixXd>(sigma_post).matrixL();
    }
    std::normal_distribution<double> gauss;
    Eigen::VectorXd z(n);
    for (int g = 0; g < total; ++g) {
        for (int i = 0; i < n; ++i) {
            z[i] = gauss(rng);
        }
        const int t0 = g - spec.burn_in;
        const bool post = use_post && t0 > eta2;
        out.row(g) = (post ? l_post * z : l_pre * z).transpose();
    }
    return out;
}

inline Eigen::MatrixXd symmetric_permutation(const Eigen::MatrixXd& sigma,
                                             const std::vector<int>& subset,
                                             const std::vector<int>& perm) {
    const int n = static_cast<int>(sigma.rows());
    std::vector<int> source(static_cast<std::size_t>(n));
    std::iota(source.begin(), source.end(), 0);
    for (std::size_t k = 0; k < subset.size(); ++k) {
        source[static_cast<std::size_t>(subset[k])] = subset[static_cast<std::size_t>(perm[k])];
    }
    Eigen::MatrixXd out(n, n);
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            out(a, b) = sigma(source[static_cast<std::size_t>(a)],
                              source[static_cast<std::size_t>(b)]);
        }
    }
    return out;
}

// Combines independently simulated GARCH factors through a loading matrix
// that switches strictly after eta2 (0-based; pass -1 or loadings_post ==
// loadings_pre for a static design).
inline Eigen::MatrixXd factor_panel(const Eigen::MatrixXd& loadings_pre,
                                    const Eigen::MatrixXd& loadings_post, int eta2,
                                    const std::vector<ParamsSchedule>& schedules,
                                    const Eigen::MatrixXd& factor_innovations, int burn_in) {
    const int n = static_cast<int>(factor_innovations.cols());
    const int t_len = static_cast<int>(factor_innovations.rows()) - burn_in;
    if (static_cast<int>(schedules.size()) != n || t_len < 1) {
        throw ConfigError("factor_panel: schedule/innovation shape mismatch");
    }
    Eigen::MatrixXd factors(t_len, n);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd innov = factor_innovations.col(i);
        factors.col(i) = simulate_garch_path(
            schedules[static_cast<std::size_t>(i)],
            {innov.data(), static_cast<std::size_t>(innov.size())}, burn_in);
    }
    Eigen::MatrixXd out(t_len, n);
    for (int t0 = 0; t0 < t_len; ++t0) {
        const Eigen::MatrixXd& w = t0 > eta2 && eta2 >= 0 ? loadings_post : loadings_pre;
        out.row(t0) = (w * factors.row(t0).transpose()).transpose();
    }
    return out;
}

}  // namespace detail

// Dispatches on the model family. Draw order from the seeded engine: jitters,
// S1, S2, swap permutation, loading matrix (factor model), innovations.
inline LabeledPanel generate_scenario(const ScenarioSpec& spec) {
    spec.require_valid();
    const detail::ModelSetup setup = detail::model_setup(spec.model);
    std::mt19937_64 rng(spec.seed);

    const int n = spec.n;
    const int t_len = spec.t;
    const int n_params = 1 + setup.p + setup.q;
    std::uniform_real_distribution<double> jitter_dist(-spec.jitter, spec.jitter);
    std::vector<std::vector<double>> jitters(static_cast<std::size_t>(n),
                                             std::vector<double>(static_cast<std::size_t>(n_params)));
    for (auto& row : jitters) {
        for (auto& v : row) {
            v = spec.jitter > 0.0 ? jitter_dist(rng) : 0.0;
        }
    }

    const bool has_param_break = !setup.post.empty();
    const int affected = static_cast<int>(std::floor(spec.sparsity * n));
    std::vector<int> s1;
    if (has_param_break) {
        s1 = detail::sample_subset(n, affected, rng);
    }
    std::vector<int> s2;
    std::vector<int> perm;
    if (setup.covariance_break || setup.factor_model) {
        s2 = detail::sample_subset(n, affected, rng);
        perm = detail::non_identity_permutation(s2.size(), rng);
    }
    const bool swap_moves = !std::is_sorted(perm.begin(), perm.end());

    // Break locations, 0-based last pre-break index.
    const bool two_break_family = setup.covariance_break || setup.factor_model;
    const int eta1 = two_break_family
                         ? t_len / 4 - 1
                         : static_cast<int>(std::floor(spec.eta1_frac * t_len)) - 1;
    const int eta2 = two_break_family ? (3 * t_len) / 5 - 1 : -1;

    std::vector<ParamsSchedule> schedules(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto& jit = jitters[static_cast<std::size_t>(i)];
        const GarchParams pre = detail::params_from_triple(setup.pre, setup.p, setup.q, jit);
        auto& sched = schedules[static_cast<std::size_t>(i)];
        const bool breaks_here =
            has_param_break && std::binary_search(s1.begin(), s1.end(), i);
        if (breaks_here) {
            sched.segments = {pre, detail::params_from_triple(setup.post, setup.p, setup.q, jit)};
            sched.breaks = {eta1};
        } else {
            sched.segments = {pre};
        }
    }

    LabeledPanel out;
    out.s1 = s1;
    out.s2 = s2;
    if (has_param_break && !s1.empty()) {
        out.truth.push_back(eta1);
    }

    const int total = spec.burn_in + t_len;
    if (setup.factor_model) {
        if (swap_moves) {
            out.truth.push_back(eta2);
        }
        std::sort(out.truth.begin(), out.truth.end());
        Eigen::MatrixXd loadings(n, n);
        std::normal_distribution<double> load_dist(1.0, 1.0);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                loadings(i, j) = load_dist(rng);
            }
        }
        Eigen::MatrixXd loadings_post = loadings;
        for (std::size_t k = 0; k < s2.size(); ++k) {
            loadings_post.row(s2[k]) = loadings.row(s2[static_cast<std::size_t>(perm[k])]);
        }
        std::normal_distribution<double> gauss;
        Eigen::MatrixXd factor_innov(total, n);
        for (int g = 0; g < total; ++g) {
            for (int i = 0; i < n; ++i) {
                factor_innov(g, i) = gauss(rng);
            }
        }
        out.returns = detail::factor_panel(loadings, loadings_post, eta2, schedules,
                                           factor_innov, spec.burn_in);
        return out;
    }

    const Eigen::MatrixXd sigma_pre = ar1_corr(spec.rho, n);
    Eigen::MatrixXd sigma_post;
    bool use_post = setup.covariance_break && swap_moves &&
                    spec.innovations == InnovationLaw::gaussian_correlated;
    if (use_post) {
        sigma_post = detail::symmetric_permutation(sigma_pre, s2, perm);
        // A permutation can map the correlation structure onto itself (e.g. a
        // full reversal of the AR(1) pattern); that is a no-op break.
        if ((sigma_post - sigma_pre).cwiseAbs().maxCoeff() == 0.0) {
            use_post = false;
        }
    }
    if (use_post) {
        out.truth.push_back(eta2);
    }
    std::sort(out.truth.begin(), out.truth.end());
    const Eigen::MatrixXd innovations =
        detail::draw_innovations(spec, total, eta2, sigma_pre, sigma_post, use_post, rng);

    out.returns.resize(t_len, n);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd innov = innovations.col(i);
        out.returns.col(i) = simulate_garch_path(
            schedules[static_cast<std::size_t>(i)],
            {innov.data(), static_cast<std::size_t>(innov.size())}, spec.burn_in);
    }
    return out;
}

}  // namespace garchseg
