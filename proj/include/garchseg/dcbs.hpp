// Stage 2: Double CUSUM Binary Segmentation over a generic d x T panel.
// Per segment [s, e] the per-row CUSUM series is aggregated across rows by a
// second CUSUM over the ordered absolute values; the maximizer over split
// candidates and aggregation depth is compared against a threshold and the
// segment is split recursively.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "garchseg/common.hpp"

namespace garchseg {

struct CusumMatrix {
    Eigen::MatrixXd values;  // d x (e - s); column c' holds the split at s + c'
    int seg_start = 0;
    int seg_end = 0;
};

struct DcScanResult {
    double stat = 0.0;
    int argmax_c = -1;  // 0-based time index of the split (last point on the left)
    int argmax_n = 0;   // aggregation depth, 1..d
};

struct ChangePoint {
    int location = 0;  // 0-based index of the last observation before the break
    double stat = 0.0;
    double threshold = 0.0;
    int argmax_n = 0;
    int level = 0;
    int seg_start = 0;
    int seg_end = 0;
};

struct ChangePointSet {
    std::vector<ChangePoint> points;  // sorted by location

    std::vector<int> locations() const {
        std::vector<int> out;
        out.reserve(points.size());
        for (const auto& p : points) {
            out.push_back(p.location);
        }
        return out;
    }
};

// CUSUM series over [s, e] (0-based, inclusive): for each split c in [s, e-1],
// sqrt((c-s+1)(e-c)/(e-s+1)) * (mean of x[s..c] - mean of x[c+1..e]).
// One prefix-sum pass, O(e-s).
inline std::vector<double> cusum_row(std::span<const double> x, int s, int e) {
    if (s < 0 || e >= static_cast<int>(x.size()) || e - s + 1 < 2) {
        throw ConfigError("cusum_row: need a segment of length >= 2 inside the series");
    }
    const double total_len = e - s + 1;
    std::vector<double> out(static_cast<std::size_t>(e - s));
    double prefix = 0.0;
    double total = 0.0;
    for (int t = s; t <= e; ++t) {
        total += x[static_cast<std::size_t>(t)];
    }
    for (int c = s; c < e; ++c) {
        prefix += x[static_cast<std::size_t>(c)];
        const double left_len = c - s + 1;
        const double right_len = e - c;
        const double scale = std::sqrt(left_len * right_len / total_len);
        out[static_cast<std::size_t>(c - s)] =
            scale * (prefix / left_len - (total - prefix) / right_len);
    }
    return out;
}

namespace detail {

inline double row_mad(std::span<const double> x, int s, int e) {
    std::vector<double> seg(x.begin() + s, x.begin() + e + 1);
    const double med = median(seg);
    for (auto& v : seg) {
        v = std::fabs(v - med);
    }
    return median(std::move(seg));
}

}  // namespace detail

// CUSUM rows for every panel row over [s, e]. With standardize set, each row
// is scaled by 1 / (its median absolute deviation over the segment) first;
// rows with zero deviation are left unscaled.
inline CusumMatrix cusum_matrix(const Eigen::MatrixXd& panel, int s, int e,
                                bool standardize = false) {
    const int d = static_cast<int>(panel.rows());
    if (d < 1) {
        throw ConfigError("cusum_matrix: empty panel");
    }
    CusumMatrix out;
    out.seg_start = s;
    out.seg_end = e;
    out.values.resize(d, e - s);
    std::vector<double> row(static_cast<std::size_t>(panel.cols()));
    for (int j = 0; j < d; ++j) {
        for (int t = 0; t < panel.cols(); ++t) {
            row[static_cast<std::size_t>(t)] = panel(j, t);
        }
        double scale = 1.0;
        if (standardize) {
            const double mad = detail::row_mad(row, s, e);
            scale = mad > 0.0 ? 1.0 / mad : 1.0;
        }
        if (scale != 1.0) {
            for (auto& v : row) {
                v *= scale;
            }
        }
        const auto cs = cusum_row(row, s, e);
        for (std::size_t c = 0; c < cs.size(); ++c) {
            out.values(j, static_cast<Eigen::Index>(c)) = cs[c];
        }
    }
    return out;
}

// Double CUSUM scan: per split, sort |CUSUM| values descending and aggregate
// the top-n average against the remainder,
//   D(n) = sqrt(n(2d-n)/(2d)) * (top-n mean - (2d-n)^{-1} tail sum),
// then maximize over splits and n. Ties resolve to the smallest split, then
// the smallest n. O(d log d) per split.
inline DcScanResult dc_scan(const CusumMatrix& cusums) {
    const int d = static_cast<int>(cusums.values.rows());
    const int n_splits = static_cast<int>(cusums.values.cols());
    if (d < 1 || n_splits < 1) {
        throw ConfigError("dc_scan: empty CUSUM matrix");
    }
    DcScanResult best;
    best.stat = -1.0;
    std::vector<double> magnitudes(static_cast<std::size_t>(d));
    std::vector<double> prefix(static_cast<std::size_t>(d) + 1, 0.0);
    std::vector<double> suffix(static_cast<std::size_t>(d) + 1, 0.0);
    const double two_d = 2.0 * d;
    for (int c = 0; c < n_splits; ++c) {
        for (int j = 0; j < d; ++j) {
            magnitudes[static_cast<std::size_t>(j)] = std::fabs(cusums.values(j, c));
        }
        std::sort(magnitudes.begin(), magnitudes.end(), std::greater<double>());
        for (int j = 0; j < d; ++j) {
            prefix[static_cast<std::size_t>(j) + 1] =
                prefix[static_cast<std::size_t>(j)] + magnitudes[static_cast<std::size_t>(j)];
        }
        for (int j = d - 1; j >= 0; --j) {
            suffix[static_cast<std::size_t>(j)] =
                suffix[static_cast<std::size_t>(j) + 1] + magnitudes[static_cast<std::size_t>(j)];
        }
        for (int n = 1; n <= d; ++n) {
            const double head = prefix[static_cast<std::size_t>(n)] / n;
            const double tail = suffix[static_cast<std::size_t>(n)] / (two_d - n);
            const double stat = std::sqrt(n * (two_d - n) / two_d) * (head - tail);
            if (stat > best.stat) {
                best.stat = stat;
                best.argmax_c = cusums.seg_start + c;
                best.argmax_n = n;
            }
        }
    }
    return best;
}

// Threshold for a segment (0-based inclusive bounds).
using ThresholdFn = std::function<double(int, int)>;

struct DcbsOptions {
    int min_segment = 30;     // segments shorter than this are not examined
    bool standardize = true;  // per-row MAD scaling per examined segment
    // Split candidates excluded at each segment edge. Negative = automatic
    // (half the log^2 accuracy radius); 0 disables trimming. Without it,
    // short-sided means of the heavy-tailed transformed rows dominate the
    // scan maximum at the edges and drown interior shifts.
    int boundary_trim = -1;

    int trim_for(int seg_len) const {
        if (boundary_trim >= 0) {
            return boundary_trim;
        }
        const double lg = std::log(static_cast<double>(seg_len));
        return static_cast<int>(std::ceil(lg * lg / 2.0));
    }
};

// Scan of one segment with the options applied; a segment too short to have
// any admissible split candidate yields a result with argmax_c == -1.
inline DcScanResult scan_segment(const Eigen::MatrixXd& panel, int s, int e,
                                 const DcbsOptions& opts) {
    const CusumMatrix full = cusum_matrix(panel, s, e, opts.standardize);
    const int trim = opts.trim_for(e - s + 1);
    if (trim <= 0) {
        return dc_scan(full);
    }
    const int candidates = static_cast<int>(full.values.cols()) - 2 * trim;
    if (candidates < 1) {
        return DcScanResult{};
    }
    CusumMatrix inner;
    inner.seg_start = s + trim;
    inner.seg_end = e;
    inner.values = full.values.middleCols(trim, candidates);
    return dc_scan(inner);
}

namespace detail {

inline void dcbs_recurse(const Eigen::MatrixXd& panel, const ThresholdFn& threshold,
                         const DcbsOptions& opts, int s, int e, int level,
                         std::vector<ChangePoint>& found) {
    if (e - s + 1 < std::max(opts.min_segment, 2)) {
        return;
    }
    const DcScanResult scan = scan_segment(panel, s, e, opts);
    if (scan.argmax_c < 0) {
        return;
    }
    const double pi = threshold(s, e);
    if (!(scan.stat > pi)) {
        return;
    }
    ChangePoint cp;
    cp.location = scan.argmax_c;
    cp.stat = scan.stat;
    cp.threshold = pi;
    cp.argmax_n = scan.argmax_n;
    cp.level = level;
    cp.seg_start = s;
    cp.seg_end = e;
    found.push_back(cp);
    dcbs_recurse(panel, threshold, opts, s, scan.argmax_c, level + 1, found);
    dcbs_recurse(panel, threshold, opts, scan.argmax_c + 1, e, level + 1, found);
}

}  // namespace detail

// Binary segmentation driver over the whole panel. The result is ordered by
// location and independent of any internal evaluation order.
inline ChangePointSet dcbs_run(const Eigen::MatrixXd& panel, const ThresholdFn& threshold,
                               const DcbsOptions& opts = {}) {
    if (panel.rows() < 1 || panel.cols() < 1) {
        throw ConfigError("dcbs_run: empty panel");
    }
    ChangePointSet result;
    detail::dcbs_recurse(panel, threshold, opts, 0, static_cast<int>(panel.cols()) - 1, 1,
                         result.points);
    std::sort(result.points.begin(), result.points.end(),
              [](const ChangePoint& a, const ChangePoint& b) { return a.location < b.location; });
    return result;
}

}  // namespace garchseg
