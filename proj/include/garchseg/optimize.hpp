// Derivative-free simplex minimizer (Nelder-Mead) used by the GARCH fitter.

#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "garchseg/common.hpp"

namespace garchseg {

struct NelderMeadResult {
    std::vector<double> x;
    double fx = std::numeric_limits<double>::infinity();
    bool converged = false;
    int evaluations = 0;
};

namespace detail {

struct Simplex {
    std::vector<std::vector<double>> points;
    std::vector<double> values;
};

}  // namespace detail

// Standard Nelder-Mead with reflection/expansion/contraction/shrink
// coefficients (1, 2, 0.5, 0.5). Stops when the value spread across the
// simplex falls below ftol (absolute + relative) or the evaluation budget is
// exhausted. Deterministic for a given starting point.
inline NelderMeadResult nelder_mead_minimize(
    const std::function<double(std::span<const double>)>& objective,
    std::span<const double> start, double step, int max_evaluations, double ftol) {
    const std::size_t dim = start.size();
    if (dim == 0) {
        throw ConfigError("nelder_mead_minimize: empty starting point");
    }
    int evals = 0;
    auto safe_eval = [&](const std::vector<double>& x) {
        ++evals;
        const double v = objective(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::max();
    };

    detail::Simplex s;
    s.points.assign(dim + 1, std::vector<double>(start.begin(), start.end()));
    for (std::size_t i = 0; i < dim; ++i) {
        s.points[i + 1][i] += step;
    }
    s.values.resize(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) {
        s.values[i] = safe_eval(s.points[i]);
    }

    auto order = [&] {
        for (std::size_t i = 1; i <= dim; ++i) {
            std::vector<double> px = std::move(s.points[i]);
            double pv = s.values[i];
            std::size_t j = i;
            while (j > 0 && s.values[j - 1] > pv) {
                s.points[j] = std::move(s.points[j - 1]);
                s.values[j] = s.values[j - 1];
                --j;
            }
            s.points[j] = std::move(px);
            s.values[j] = pv;
        }
    };
    order();

    bool converged = false;
    std::vector<double> centroid(dim), trial(dim), trial2(dim);
    while (evals < max_evaluations) {
        const double spread = s.values[dim] - s.values[0];
        if (spread <= ftol * (1.0 + std::fabs(s.values[0]))) {
            converged = true;
            break;
        }
        for (std::size_t j = 0; j < dim; ++j) {
            double c = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                c += s.points[i][j];
            }
            centroid[j] = c / static_cast<double>(dim);
        }
        // Reflection.
        for (std::size_t j = 0; j < dim; ++j) {
            trial[j] = centroid[j] + (centroid[j] - s.points[dim][j]);
        }
        double f_trial = safe_eval(trial);
        if (f_trial < s.values[0]) {
            // Expansion.
            for (std::size_t j = 0; j < dim; ++j) {
                trial2[j] = centroid[j] + 2.0 * (centroid[j] - s.points[dim][j]);
            }
            const double f_exp = safe_eval(trial2);
            if (f_exp < f_trial) {
                s.points[dim] = trial2;
                s.values[dim] = f_exp;
            } else {
                s.points[dim] = trial;
                s.values[dim] = f_trial;
            }
        } else if (f_trial < s.values[dim - 1]) {
            s.points[dim] = trial;
            s.values[dim] = f_trial;
        } else {
            // Contraction (outside if the reflected point improved the worst).
            const bool outside = f_trial < s.values[dim];
            for (std::size_t j = 0; j < dim; ++j) {
                const double anchor = outside ? trial[j] : s.points[dim][j];
                trial2[j] = centroid[j] + 0.5 * (anchor - centroid[j]);
            }
            const double f_con = safe_eval(trial2);
            if (f_con < std::min(f_trial, s.values[dim])) {
                s.points[dim] = trial2;
                s.values[dim] = f_con;
            } else {
                // Shrink toward the best vertex.
                for (std::size_t i = 1; i <= dim; ++i) {
                    for (std::size_t j = 0; j < dim; ++j) {
                        s.points[i][j] = s.points[0][j] + 0.5 * (s.points[i][j] - s.points[0][j]);
                    }
                    s.values[i] = safe_eval(s.points[i]);
                }
            }
        }
        order();
    }

    NelderMeadResult result;
    result.x = s.points[0];
    result.fx = s.values[0];
    result.converged = converged;
    result.evaluations = evals;
    return result;
}

}  // namespace garchseg
