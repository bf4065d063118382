#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "garchseg/dcbs.hpp"

using namespace garchseg;

namespace {

Eigen::MatrixXd gaussian_panel(int d, int t_len, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    Eigen::MatrixXd out(d, t_len);
    for (int j = 0; j < d; ++j) {
        for (int t = 0; t < t_len; ++t) {
            out(j, t) = dist(rng);
        }
    }
    return out;
}

// Naive CUSUM via two explicit mean passes; the independent check for the
// prefix-sum implementation.
double naive_cusum(std::span<const double> x, int s, int e, int c) {
    double left = 0.0;
    for (int t = s; t <= c; ++t) {
        left += x[static_cast<std::size_t>(t)];
    }
    left /= (c - s + 1);
    double right = 0.0;
    for (int t = c + 1; t <= e; ++t) {
        right += x[static_cast<std::size_t>(t)];
    }
    right /= (e - c);
    const double scale =
        std::sqrt(static_cast<double>(c - s + 1) * (e - c) / (e - s + 1));
    return scale * (left - right);
}

// Brute-force double scan: fresh sums per (c, n), tail accumulated backward.
DcScanResult brute_force_scan(const CusumMatrix& m) {
    const int d = static_cast<int>(m.values.rows());
    DcScanResult best;
    best.stat = -1.0;
    for (int c = 0; c < m.values.cols(); ++c) {
        std::vector<double> mags(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) {
            mags[static_cast<std::size_t>(j)] = std::fabs(m.values(j, c));
        }
        std::sort(mags.begin(), mags.end(), std::greater<double>());
        for (int n = 1; n <= d; ++n) {
            double head = 0.0;
            for (int j = 0; j < n; ++j) {
                head += mags[static_cast<std::size_t>(j)];
            }
            double tail = 0.0;
            for (int j = d - 1; j >= n; --j) {
                tail += mags[static_cast<std::size_t>(j)];
            }
            const double stat = std::sqrt(n * (2.0 * d - n) / (2.0 * d)) *
                                (head / n - tail / (2.0 * d - n));
            if (stat > best.stat) {
                best.stat = stat;
                best.argmax_c = m.seg_start + c;
                best.argmax_n = n;
            }
        }
    }
    return best;
}

// Reference recursion built on the naive pieces with identical semantics.
void reference_dcbs(const Eigen::MatrixXd& panel, double threshold, int min_segment, int s, int e,
                    std::vector<int>& locations) {
    if (e - s + 1 < std::max(min_segment, 2)) {
        return;
    }
    CusumMatrix m;
    m.seg_start = s;
    m.seg_end = e;
    m.values.resize(panel.rows(), e - s);
    std::vector<double> row(static_cast<std::size_t>(panel.cols()));
    for (int j = 0; j < panel.rows(); ++j) {
        for (int t = 0; t < panel.cols(); ++t) {
            row[static_cast<std::size_t>(t)] = panel(j, t);
        }
        for (int c = s; c < e; ++c) {
            m.values(j, c - s) = naive_cusum(row, s, e, c);
        }
    }
    const DcScanResult scan = brute_force_scan(m);
    if (!(scan.stat > threshold)) {
        return;
    }
    locations.push_back(scan.argmax_c);
    reference_dcbs(panel, threshold, min_segment, s, scan.argmax_c, locations);
    reference_dcbs(panel, threshold, min_segment, scan.argmax_c + 1, e, locations);
}

Eigen::MatrixXd step_panel(int d, int t_len, const std::vector<std::pair<int, double>>& jumps) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, t_len);
    for (const auto& [last_left, size] : jumps) {
        for (int t = last_left + 1; t < t_len; ++t) {
            out.col(t).array() += size;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("cusum_row basics") {
    SECTION("constant input is identically zero") {
        const std::vector<double> x(40, 3.25);
        for (double v : cusum_row(x, 0, 39)) {
            REQUIRE(v == Catch::Approx(0.0).margin(1e-12));
        }
    }
    SECTION("hand value on a unit step") {
        const std::vector<double> x{0, 0, 0, 1, 1, 1};
        const auto cs = cusum_row(x, 0, 5);
        REQUIRE(cs.size() == 5);
        REQUIRE(cs[2] == Catch::Approx(-1.2247448713915890).margin(1e-12));
    }
    SECTION("prefix sums match the naive means") {
        const auto panel = gaussian_panel(10, 50, 101);
        std::vector<double> row(50);
        for (int j = 0; j < panel.rows(); ++j) {
            for (int t = 0; t < 50; ++t) {
                row[static_cast<std::size_t>(t)] = panel(j, t);
            }
            for (auto [s, e] : std::vector<std::pair<int, int>>{{0, 49}, {3, 30}, {17, 48}}) {
                const auto cs = cusum_row(row, s, e);
                for (int c = s; c < e; ++c) {
                    REQUIRE(cs[static_cast<std::size_t>(c - s)] ==
                            Catch::Approx(naive_cusum(row, s, e, c)).margin(1e-10));
                }
            }
        }
    }
}

TEST_CASE("dc_scan hand cases") {
    SECTION("all-zero panel scores zero") {
        CusumMatrix m;
        m.values = Eigen::MatrixXd::Zero(4, 7);
        m.seg_start = 0;
        m.seg_end = 7;
        REQUIRE(dc_scan(m).stat == Catch::Approx(0.0).margin(1e-15));
    }
    SECTION("two rows, single split") {
        CusumMatrix m;
        m.values.resize(2, 1);
        m.values << 2.0, 1.0;
        m.seg_start = 5;
        m.seg_end = 6;
        const auto r = dc_scan(m);
        REQUIRE(r.stat == Catch::Approx(1.5).margin(1e-12));
        REQUIRE(r.argmax_n == 2);
        REQUIRE(r.argmax_c == 5);
    }
}

TEST_CASE("dc_scan equals the brute-force double loop exactly") {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        const auto panel = gaussian_panel(5, 20, seed);
        const auto m = cusum_matrix(panel, 0, 19);
        const auto fast = dc_scan(m);
        const auto slow = brute_force_scan(m);
        REQUIRE(fast.stat == slow.stat);
        REQUIRE(fast.argmax_c == slow.argmax_c);
        REQUIRE(fast.argmax_n == slow.argmax_n);
        REQUIRE(fast.stat >= 0.0);
    }
}

TEST_CASE("dcbs_run on pure noise with infinite threshold finds nothing") {
    const auto panel = gaussian_panel(6, 80, 7);
    const auto result = dcbs_run(
        panel, [](int, int) { return std::numeric_limits<double>::infinity(); });
    REQUIRE(result.points.empty());
}

TEST_CASE("dcbs_run recovers noiseless steps exactly") {
    DcbsOptions opts;
    opts.min_segment = 20;
    SECTION("single jump") {
        const auto panel = step_panel(20, 200, {{99, 1.0}});
        const auto result = dcbs_run(panel, [](int, int) { return 0.5; }, opts);
        REQUIRE(result.locations() == std::vector<int>{99});
        REQUIRE(result.points[0].level == 1);
    }
    SECTION("two well-separated jumps, either recursion order") {
        const auto panel = step_panel(20, 200, {{59, 1.0}, {139, 0.8}});
        const auto result = dcbs_run(panel, [](int, int) { return 0.5; }, opts);
        REQUIRE(result.locations() == std::vector<int>{59, 139});
        const auto mirrored = step_panel(20, 200, {{59, 0.8}, {139, 1.0}});
        const auto result2 = dcbs_run(mirrored, [](int, int) { return 0.5; }, opts);
        REQUIRE(result2.locations() == std::vector<int>{59, 139});
    }
}

TEST_CASE("dcbs_run matches an exhaustive reference on small panels") {
    DcbsOptions opts;
    opts.min_segment = 4;
    opts.standardize = false;
    opts.boundary_trim = 0;
    for (std::uint64_t seed = 40; seed < 52; ++seed) {
        auto panel = gaussian_panel(3, 16, seed);
        // Plant one jump so recursion actually splits for some seeds.
        if (seed % 2 == 0) {
            panel.rightCols(8).array() += 1.5;
        }
        const double pi = 1.2;
        std::vector<int> expected;
        reference_dcbs(panel, pi, opts.min_segment, 0, 15, expected);
        std::sort(expected.begin(), expected.end());
        const auto got = dcbs_run(panel, [&](int, int) { return pi; }, opts);
        REQUIRE(got.locations() == expected);
    }
}

TEST_CASE("scan is scale equivariant and shift invariant") {
    const auto panel = gaussian_panel(8, 60, 77);
    const auto base = dc_scan(cusum_matrix(panel, 0, 59));
    SECTION("scaling") {
        const double kappa = 3.7;
        const auto scaled = dc_scan(cusum_matrix((kappa * panel).eval(), 0, 59));
        REQUIRE(scaled.stat == Catch::Approx(kappa * base.stat).epsilon(1e-12));
        REQUIRE(scaled.argmax_c == base.argmax_c);
        REQUIRE(scaled.argmax_n == base.argmax_n);
    }
    SECTION("per-row shifts") {
        Eigen::MatrixXd shifted = panel;
        for (int j = 0; j < shifted.rows(); ++j) {
            shifted.row(j).array() += 10.0 * (j + 1);
        }
        const auto m0 = cusum_matrix(panel, 0, 59);
        const auto m1 = cusum_matrix(shifted, 0, 59);
        REQUIRE((m0.values - m1.values).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("dcbs_run is deterministic and splits are interior") {
    const auto panel = step_panel(5, 120, {{39, 2.0}, {79, 1.0}});
    DcbsOptions opts;
    opts.min_segment = 10;
    const auto a = dcbs_run(panel, [](int, int) { return 0.4; }, opts);
    const auto b = dcbs_run(panel, [](int, int) { return 0.4; }, opts);
    REQUIRE(a.locations() == b.locations());
    for (const auto& p : a.points) {
        REQUIRE(p.location >= p.seg_start);
        REQUIRE(p.location < p.seg_end);
        REQUIRE(p.stat > p.threshold);
    }
}

TEST_CASE("scan_segment applies boundary trimming") {
    const auto panel = step_panel(6, 100, {{49, 1.0}});
    DcbsOptions opts;
    opts.standardize = false;
    SECTION("interior maxima are unaffected") {
        opts.boundary_trim = 10;
        const auto trimmed = scan_segment(panel, 0, 99, opts);
        opts.boundary_trim = 0;
        const auto raw = scan_segment(panel, 0, 99, opts);
        REQUIRE(trimmed.argmax_c == 49);
        REQUIRE(raw.argmax_c == 49);
        REQUIRE(trimmed.stat == raw.stat);
    }
    SECTION("edge spikes are excluded") {
        Eigen::MatrixXd spiky = Eigen::MatrixXd::Zero(6, 100);
        spiky(0, 0) = 1000.0;  // lone outlier at the left edge
        opts.boundary_trim = 5;
        const auto scan = scan_segment(spiky, 0, 99, opts);
        REQUIRE(scan.argmax_c >= 5);
        REQUIRE(scan.argmax_c <= 93);
    }
    SECTION("segments without admissible candidates report none") {
        opts.boundary_trim = 60;
        const auto scan = scan_segment(panel, 0, 99, opts);
        REQUIRE(scan.argmax_c == -1);
    }
    SECTION("automatic trim grows slowly with the segment") {
        DcbsOptions auto_opts;
        REQUIRE(auto_opts.trim_for(500) == 20);
        REQUIRE(auto_opts.trim_for(1000) == 24);
        REQUIRE(auto_opts.trim_for(50) == 8);
        DcbsOptions off;
        off.boundary_trim = 0;
        REQUIRE(off.trim_for(500) == 0);
    }
}

TEST_CASE("per-row standardization rescales rows before scanning") {
    auto panel = step_panel(4, 100, {{49, 1.0}});
    panel.row(2) *= 100.0;  // one loud row dominates the raw scan
    DcbsOptions raw;
    raw.min_segment = 10;
    DcbsOptions scaled = raw;
    scaled.standardize = true;
    const auto m_raw = cusum_matrix(panel, 0, 99, false);
    const auto m_std = cusum_matrix(panel, 0, 99, true);
    REQUIRE(m_raw.values.cwiseAbs().maxCoeff() >
            10.0 * m_std.values.cwiseAbs().maxCoeff());
    // A constant row must survive standardization (zero deviation guard).
    Eigen::MatrixXd with_flat = panel;
    with_flat.row(3).setConstant(2.0);
    REQUIRE_NOTHROW(cusum_matrix(with_flat, 0, 99, true));
}
