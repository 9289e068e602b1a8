#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace archbo {

struct CompassOptions {
    double initial_step = 0.25;
    double min_step = 1e-6;
    double shrink = 0.5;
    std::size_t max_evals = 1000;
};

template <class Score>
struct CompassResult {
    std::vector<double> x;
    Score score;
    std::size_t evals = 0;
};

/// Bound-constrained compass (coordinate pattern) search minimizing `objective`.
///
/// `Score` only needs operator<, so lexicographic keys such as
/// std::pair<violation, -value> work directly. Each sweep tries +step and
/// -step along every coordinate, moving on the first strict improvement;
/// a sweep without improvement shrinks the step. Trial points are clipped to
/// [lower, upper]. Deterministic.
template <class Score, class Objective>
CompassResult<Score> compass_search(Objective&& objective, std::vector<double> x0, const std::vector<double>& lower,
                                    const std::vector<double>& upper, const CompassOptions& options) {
    CompassResult<Score> result{std::move(x0), Score{}, 0};
    result.score = objective(result.x);
    result.evals = 1;
    double step = options.initial_step;
    std::vector<double> trial;
    while (step >= options.min_step && result.evals < options.max_evals) {
        bool improved = false;
        for (std::size_t d = 0; d < result.x.size() && result.evals < options.max_evals; ++d) {
            for (double sign : {1.0, -1.0}) {
                const double range = upper[d] - lower[d];
                double moved = std::clamp(result.x[d] + sign * step * range, lower[d], upper[d]);
                if (moved == result.x[d]) continue;
                trial = result.x;
                trial[d] = moved;
                Score s = objective(trial);
                ++result.evals;
                if (s < result.score) {
                    result.score = s;
                    result.x = trial;
                    improved = true;
                    break;
                }
                if (result.evals >= options.max_evals) break;
            }
        }
        if (!improved) step *= options.shrink;
    }
    return result;
}

}  // namespace archbo
