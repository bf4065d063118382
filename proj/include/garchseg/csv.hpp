// CSV ingestion and emission. Input files carry a header row, an optional
// leading ISO-8601 date column, and one numeric column per series; parse
// failures report the offending line and column.

#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "garchseg/common.hpp"
#include "garchseg/transform.hpp"

namespace garchseg {

struct ReturnsData {
    Eigen::MatrixXd values;          // T x N
    std::vector<std::string> dates;  // empty when the file has no date column
    std::vector<std::string> names;  // series column names
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) {
            cell.pop_back();
        }
        std::size_t first = 0;
        while (first < cell.size() && cell[first] == ' ') {
            ++first;
        }
        cells.push_back(cell.substr(first));
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

inline bool looks_like_date(const std::string& cell) {
    if (cell.size() < 10) {
        return false;
    }
    for (int i = 0; i < 10; ++i) {
        if (i == 4 || i == 7) {
            if (cell[static_cast<std::size_t>(i)] != '-') {
                return false;
            }
        } else if (!std::isdigit(static_cast<unsigned char>(cell[static_cast<std::size_t>(i)]))) {
            return false;
        }
    }
    return true;
}

inline double parse_cell(const std::string& cell, int line_no, int column_no) {
    if (cell.empty()) {
        throw ParseError("line " + std::to_string(line_no) + ": missing value in column " +
                         std::to_string(column_no));
    }
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw ParseError("line " + std::to_string(line_no) + ": non-numeric cell '" + cell +
                         "' in column " + std::to_string(column_no));
    }
    return value;
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

// Reads a returns (or price-level) panel. With log_diff set, price levels are
// converted to log-returns, dropping the first row.
inline ReturnsData read_returns_csv(const std::string& path, bool log_diff = false) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open input file: " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(path + ": empty file");
    }
    const auto header = detail::split_csv_line(line);
    if (header.empty()) {
        throw ParseError(path + ": empty header row");
    }

    std::vector<std::vector<std::string>> raw_rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size()) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " cells, found " +
                             std::to_string(cells.size()));
        }
        raw_rows.push_back(std::move(cells));
    }
    if (raw_rows.size() < 2) {
        throw ParseError(path + ": need at least 2 data rows");
    }

    std::string header0 = header[0];
    std::transform(header0.begin(), header0.end(), header0.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const bool has_dates = header0 == "date" || detail::looks_like_date(raw_rows[0][0]);
    const int first_col = has_dates ? 1 : 0;
    const int n = static_cast<int>(header.size()) - first_col;
    if (n < 1) {
        throw ParseError(path + ": no numeric columns found");
    }

    ReturnsData out;
    out.names.assign(header.begin() + first_col, header.end());
    const int t_len = static_cast<int>(raw_rows.size());
    out.values.resize(t_len, n);
    if (has_dates) {
        out.dates.reserve(static_cast<std::size_t>(t_len));
    }
    for (int t = 0; t < t_len; ++t) {
        const auto& cells = raw_rows[static_cast<std::size_t>(t)];
        if (has_dates) {
            out.dates.push_back(cells[0]);
        }
        for (int i = 0; i < n; ++i) {
            out.values(t, i) =
                detail::parse_cell(cells[static_cast<std::size_t>(first_col + i)], t + 2,
                                   first_col + i + 1);
        }
    }

    if (log_diff) {
        if ((out.values.array() <= 0.0).any()) {
            throw NumericError(path + ": log-diff requires strictly positive price levels");
        }
        Eigen::MatrixXd returns(t_len - 1, n);
        for (int t = 1; t < t_len; ++t) {
            for (int i = 0; i < n; ++i) {
                returns(t - 1, i) = std::log(out.values(t, i)) - std::log(out.values(t - 1, i));
            }
        }
        out.values = std::move(returns);
        if (has_dates) {
            out.dates.erase(out.dates.begin());
        }
    }
    return out;
}

inline void write_returns_csv(const std::string& path, const Eigen::MatrixXd& values,
                              const std::vector<std::string>& names = {},
                              const std::vector<std::string>& dates = {}) {
    std::ofstream outfile(path);
    if (!outfile) {
        throw ParseError("cannot open output file: " + path);
    }
    const int n = static_cast<int>(values.cols());
    const bool has_dates = !dates.empty();
    if (has_dates) {
        outfile << "date";
    }
    for (int i = 0; i < n; ++i) {
        if (i > 0 || has_dates) {
            outfile << ',';
        }
        if (static_cast<int>(names.size()) == n) {
            outfile << names[static_cast<std::size_t>(i)];
        } else {
            outfile << 's' << i + 1;
        }
    }
    outfile << '\n';
    for (int t = 0; t < values.rows(); ++t) {
        if (has_dates) {
            outfile << dates[static_cast<std::size_t>(t)];
        }
        for (int i = 0; i < n; ++i) {
            if (i > 0 || has_dates) {
                outfile << ',';
            }
            outfile << detail::format_double(values(t, i));
        }
        outfile << '\n';
    }
}

// Transformed-panel dump: one row per pair, columns over time, first column
// labelling the (i, i') pair 1-based.
inline void write_panel_csv(const std::string& path, const TransformedPanel& panel) {
    std::ofstream outfile(path);
    if (!outfile) {
        throw ParseError("cannot open output file: " + path);
    }
    outfile << "pair";
    for (int t = 0; t < panel.n_obs; ++t) {
        outfile << ",t" << t + 1;
    }
    outfile << '\n';
    for (std::size_t j = 0; j < panel.pairs.size(); ++j) {
        outfile << "U(" << panel.pairs[j].first + 1 << ';' << panel.pairs[j].second + 1 << ')';
        for (int t = 0; t < panel.n_obs; ++t) {
            outfile << ',' << detail::format_double(panel.data(static_cast<Eigen::Index>(j), t));
        }
        outfile << '\n';
    }
}

}  // namespace garchseg
