#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include <json.hpp>

#include "archbo/run_history.hpp"

namespace archbo {

struct EvoConfig {
    std::size_t population = 50;
    double crossover_prob = 0.9;
    double sbx_eta = 15.0;
    double mutation_eta = 20.0;
    /// Per-gene mutation probability; defaults to 1 / number of variables.
    std::optional<double> mutation_prob;
    /// Violation assigned to failed evaluations (extreme barrier).
    double failed_violation = 1e6;

    void validate() const;
};

nlohmann::json to_json(const EvoConfig& config);
EvoConfig evo_config_from_json(const nlohmann::json& j);

/// Deb's constraint domination for a single objective: feasible beats
/// infeasible, smaller total violation wins among infeasible, smaller objective
/// wins among feasible. Failed evaluations carry `failed_violation`.
bool constrained_dominates(const Evaluation& a, const Evaluation& b, double failed_violation = 1e6);

/// Generational NSGA-II with constraint domination, mixed-variable variation
/// (SBX and polynomial mutation on reals, uniform crossover and random reset on
/// discrete genes) and elitist survival. Stops after exactly `budget` evaluations.
/// Throws ConfigurationError when budget < population.
RunHistory run_nsga2(const Problem& problem, std::size_t budget, const EvoConfig& config, std::uint64_t seed);

}  // namespace archbo
