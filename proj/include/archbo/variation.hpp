#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "archbo/random.hpp"

namespace archbo {

/// Bounded simulated binary crossover of one gene pair (Deb & Agrawal form).
inline std::pair<double, double> sbx_crossover(double a, double b, double lower, double upper, double eta, Rng& rng) {
    if (std::abs(a - b) <= 1e-14 || upper <= lower) return {a, b};
    const double y1 = std::min(a, b);
    const double y2 = std::max(a, b);
    const double u = rng.uniform();
    auto spread = [&](double beta) {
        const double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
        return u <= 1.0 / alpha ? std::pow(u * alpha, 1.0 / (eta + 1.0))
                                : std::pow(1.0 / (2.0 - u * alpha), 1.0 / (eta + 1.0));
    };
    const double bq1 = spread(1.0 + 2.0 * (y1 - lower) / (y2 - y1));
    const double bq2 = spread(1.0 + 2.0 * (upper - y2) / (y2 - y1));
    double c1 = std::clamp(0.5 * ((y1 + y2) - bq1 * (y2 - y1)), lower, upper);
    double c2 = std::clamp(0.5 * ((y1 + y2) + bq2 * (y2 - y1)), lower, upper);
    if (rng.uniform() < 0.5) std::swap(c1, c2);
    return {c1, c2};
}

/// Bounded polynomial mutation of one gene.
inline double polynomial_mutation(double y, double lower, double upper, double eta, Rng& rng) {
    const double range = upper - lower;
    if (range <= 0.0) return y;
    const double d1 = (y - lower) / range;
    const double d2 = (upper - y) / range;
    const double u = rng.uniform();
    const double power = 1.0 / (eta + 1.0);
    double dq;
    if (u < 0.5) {
        const double val = 2.0 * u + (1.0 - 2.0 * u) * std::pow(1.0 - d1, eta + 1.0);
        dq = std::pow(val, power) - 1.0;
    } else {
        const double val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(1.0 - d2, eta + 1.0);
        dq = 1.0 - std::pow(val, power);
    }
    return std::clamp(y + dq * range, lower, upper);
}

}  // namespace archbo
