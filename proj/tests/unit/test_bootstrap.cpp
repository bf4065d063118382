#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "garchseg/bootstrap.hpp"

using namespace garchseg;

namespace {

GarchParams make11(double omega, double alpha, double beta) {
    GarchParams p;
    p.omega = omega;
    p.alpha = {alpha};
    p.beta = {beta};
    return p;
}

Eigen::MatrixXd gaussian_matrix(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    Eigen::MatrixXd out(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            out(r, c) = dist(rng);
        }
    }
    return out;
}

BootstrapEnsemble toy_ensemble(std::uint64_t seed, int reps) {
    const int n = 3;
    const int t_len = 160;
    const Eigen::MatrixXd returns = gaussian_matrix(t_len, n, seed);
    std::vector<GarchFit> fits(static_cast<std::size_t>(n));
    std::vector<GarchParams> params;
    for (int i = 0; i < n; ++i) {
        auto& f = fits[static_cast<std::size_t>(i)];
        f.params = make11(0.5, 0.1, 0.3);
        const Eigen::VectorXd col = returns.col(i);
        f.fitted_condvar =
            filter_condvar({col.data(), static_cast<std::size_t>(col.size())}, f.params);
        params.push_back(f.params);
    }
    const auto built = build_panel(returns, fits, 0.001);
    BootstrapEnsemble ens;
    ens.params = params;
    ens.residuals = residual_matrix(returns, fits);
    ens.config = built.config;
    ens.seed = seed;
    ens.replicates = reps;
    // Raw full-candidate scans so the order-statistic checks can recompute
    // the replicate statistics directly.
    ens.scan_options.standardize = false;
    ens.scan_options.boundary_trim = 0;
    return ens;
}

}  // namespace

TEST_CASE("residual_matrix divides by the fitted volatility") {
    SECTION("zero returns give zero residuals") {
        const Eigen::MatrixXd returns = Eigen::MatrixXd::Zero(50, 2);
        std::vector<GarchFit> fits(2);
        for (int i = 0; i < 2; ++i) {
            fits[static_cast<std::size_t>(i)].params = make11(1.0, 0.0, 0.0);
            fits[static_cast<std::size_t>(i)].fitted_condvar = Eigen::VectorXd::Ones(50);
        }
        REQUIRE(residual_matrix(returns, fits).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("constant variance four gives residual one for return two") {
        Eigen::MatrixXd returns = Eigen::MatrixXd::Constant(30, 1, 2.0);
        std::vector<GarchFit> fits(1);
        fits[0].params = make11(4.0, 0.0, 0.0);
        fits[0].fitted_condvar = Eigen::VectorXd::Constant(30, 4.0);
        const auto res = residual_matrix(returns, fits);
        REQUIRE((res.array() - 1.0).abs().maxCoeff() < 1e-15);
    }
    SECTION("well-fitted residuals have roughly unit variance") {
        std::mt19937_64 rng(7);
        std::normal_distribution<double> dist;
        Eigen::VectorXd eps(2500);
        for (int t = 0; t < eps.size(); ++t) {
            eps[t] = dist(rng);
        }
        const auto truth = make11(0.1, 0.1, 0.8);
        const auto r =
            simulate_garch_path(ParamsSchedule::constant(truth), {eps.data(), 2500}, 500);
        Eigen::MatrixXd returns(r.size(), 1);
        returns.col(0) = r;
        std::vector<GarchFit> fits{fit_garch({r.data(), static_cast<std::size_t>(r.size())})};
        const auto res = residual_matrix(returns, fits);
        const Eigen::VectorXd row = res.row(0);
        REQUIRE(population_variance({row.data(), static_cast<std::size_t>(row.size())}) ==
                Catch::Approx(1.0).epsilon(0.1));
    }
}

TEST_CASE("resample_vectors draws whole columns with replacement") {
    const Eigen::MatrixXd residuals = gaussian_matrix(4, 25, 11);
    SECTION("single column input is returned unchanged") {
        const Eigen::MatrixXd one = residuals.leftCols(1);
        std::mt19937_64 rng(5);
        REQUIRE((resample_vectors(one, rng) - one).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("fixed seed reproduces the draw") {
        std::mt19937_64 a(42);
        std::mt19937_64 b(42);
        REQUIRE((resample_vectors(residuals, a) - resample_vectors(residuals, b))
                    .cwiseAbs()
                    .maxCoeff() == 0.0);
    }
    SECTION("every output column is an input column") {
        std::mt19937_64 rng(13);
        const auto out = resample_vectors(residuals, rng);
        for (int t = 0; t < out.cols(); ++t) {
            bool found = false;
            for (int u = 0; u < residuals.cols() && !found; ++u) {
                found = (out.col(t) - residuals.col(u)).cwiseAbs().maxCoeff() == 0.0;
            }
            REQUIRE(found);
        }
    }
}

TEST_CASE("simulate_replicate recursion") {
    SECTION("no dynamics scales the innovations by sqrt(omega)") {
        const Eigen::MatrixXd draws = gaussian_matrix(2, 40, 17);
        const std::vector<GarchParams> params{make11(0.25, 0.0, 0.0), make11(4.0, 0.0, 0.0)};
        const auto r = simulate_replicate(params, draws);
        for (int t = 0; t < 40; ++t) {
            REQUIRE(r(t, 0) == Catch::Approx(0.5 * draws(0, t)).margin(1e-14));
            REQUIRE(r(t, 1) == Catch::Approx(2.0 * draws(1, t)).margin(1e-14));
        }
    }
    SECTION("replicate variance tracks the fitted unconditional variance") {
        const Eigen::MatrixXd draws = gaussian_matrix(1, 1000, 19);
        const std::vector<GarchParams> params{make11(0.4, 0.1, 0.5)};
        const auto r = simulate_replicate(params, draws);
        const Eigen::VectorXd col = r.col(0);
        REQUIRE(population_variance({col.data(), static_cast<std::size_t>(col.size())}) ==
                Catch::Approx(1.0).epsilon(0.15));
    }
    SECTION("deterministic per seed and replicate id") {
        const auto ens = toy_ensemble(23, 30);
        const auto a = ens.replicate_returns(4);
        const auto b = ens.replicate_returns(4);
        REQUIRE((a - b).cwiseAbs().maxCoeff() == 0.0);
        const auto c = ens.replicate_returns(5);
        REQUIRE((a - c).cwiseAbs().maxCoeff() > 0.0);
    }
}

TEST_CASE("threshold_for_segment order statistics") {
    auto ens = toy_ensemble(29, 100);
    const int e = static_cast<int>(ens.residuals.cols()) - 1;
    std::vector<double> stats(100);
    for (int ell = 1; ell <= 100; ++ell) {
        stats[static_cast<std::size_t>(ell - 1)] =
            dc_scan(cusum_matrix(ens.replicate_panel(ell).data, 0, e)).stat;
    }
    std::sort(stats.begin(), stats.end());
    SECTION("alpha zero returns the maximum") {
        REQUIRE(threshold_for_segment(ens, 0, e, 0.0) == stats.back());
    }
    SECTION("alpha 0.05 with 100 replicates returns the 95th ascending value") {
        REQUIRE(threshold_for_segment(ens, 0, e, 0.05) == stats[94]);
    }
    SECTION("threshold is non-increasing in alpha") {
        double prev = std::numeric_limits<double>::infinity();
        for (double alpha : {0.0, 0.05, 0.1, 0.5, 0.9}) {
            const double pi = threshold_for_segment(ens, 0, e, alpha);
            REQUIRE(pi <= prev);
            prev = pi;
        }
    }
    SECTION("thread count does not change the threshold") {
        ens.threads = 1;
        const double t1 = threshold_for_segment(ens, 0, e, 0.05);
        ens.threads = 4;
        const double t4 = threshold_for_segment(ens, 0, e, 0.05);
        REQUIRE(t1 == t4);
    }
}

TEST_CASE("threshold_for_segment input validation") {
    auto ens = toy_ensemble(31, 10);
    REQUIRE_THROWS_AS(threshold_for_segment(ens, 0, 100, 0.05), ConfigError);
    ens.replicates = 40;
    REQUIRE_THROWS_AS(threshold_for_segment(ens, 0, 100, -0.5), ConfigError);
}

TEST_CASE("reproducibility: seed, replicates, alpha and segment pin the threshold") {
    const auto a = toy_ensemble(37, 60);
    const auto b = toy_ensemble(37, 60);
    const int e = static_cast<int>(a.residuals.cols()) - 1;
    REQUIRE(threshold_for_segment(a, 0, e, 0.05) == threshold_for_segment(b, 0, e, 0.05));
    REQUIRE(threshold_for_segment(a, 10, 90, 0.1) == threshold_for_segment(b, 10, 90, 0.1));
}
