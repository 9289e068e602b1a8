#pragma once

#include <cstddef>
#include <cstdint>

#include <json.hpp>

#include "archbo/acquisition.hpp"
#include "archbo/gaussian_process.hpp"
#include "archbo/run_history.hpp"

namespace archbo {

struct BoSettings {
    std::size_t doe_size = 20;
    /// Total number of black-box evaluations, failed ones included.
    std::size_t budget = 60;
    AcquisitionSpec acquisition;
    GpConfig gp;
    /// Best feasible observations injected into each infill population.
    std::size_t infill_seeds = 5;

    void validate() const;
};

/// min(20, budget / 3), and at least 2.
std::size_t default_doe_size(std::size_t budget);

nlohmann::json to_json(const BoSettings& settings);

/// Constrained Bayesian optimization with hidden-constraint handling:
/// Latin-hypercube DoE, then one GP per output on successful points, a success
/// probability model on all points, and one constrained infill per iteration
/// until `budget` evaluations have been spent.
///
/// Throws DoeStarvation when two DoE batches yield fewer than 2 successes.
RunHistory run_bo(const Problem& problem, const BoSettings& settings, std::uint64_t seed);

}  // namespace archbo
