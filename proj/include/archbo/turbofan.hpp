#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "archbo/design_space.hpp"
#include "archbo/run_history.hpp"

namespace archbo::turbofan {

/// Variable indices of the simple turbofan space.
enum Var : std::size_t {
    IncludeFan,
    NShafts,
    IncludeGearbox,
    MixedNozzle,
    PowerOfftake,
    BleedOfftake,
    BPR,
    FPR,
    OPR,
    PRFactor1,
    PRFactor2,
    PRFactor3,
    RPM1,
    RPM2,
    RPM3,
    kVarCount
};

inline constexpr std::size_t kConstraintCount = 5;

/// Best feasible TSFC of the default bench (hidden constraint on), frozen from
/// a brute_force_optimum run with effort 1e5 and seed 0.
inline constexpr double kReferenceOptimum = 6.6;

struct BenchConfig {
    /// g/kNs
    double tsfc_base = 22.0;
    /// Hidden failure when the failure indicator exceeds this threshold.
    double failure_threshold = 0.0;
    bool enable_hidden_constraint = true;

    void validate() const;
};

nlohmann::json to_json(const BenchConfig& config);
BenchConfig bench_config_from_json(const nlohmann::json& j);

/// Shared immutable instance of the 15-variable hierarchical space.
const DesignSpace& space();

/// Builds a fresh copy of the space.
DesignSpace make_space();

/// Plain numeric view of a corrected point.
struct State {
    bool fan = false;
    bool gearbox = false;
    bool mixed = false;
    int shafts = 1;
    int power_offtake = 1;
    int bleed_offtake = 1;
    double bpr = 2.0;
    double fpr = 1.1;
    double opr = 1.1;
    double pr_factor[3] = {0.5, 0.5, 0.5};
    double rpm[3] = {10500.0, 10500.0, 10500.0};
};

State to_state(const DesignPoint& point);

struct Outputs {
    double tsfc = 0.0;
    double constraints[kConstraintCount] = {};
    /// Failure indicator; the evaluation fails when it exceeds the threshold.
    double failure_indicator = 0.0;
};

/// Objective, constraints and failure indicator without any checks.
Outputs compute(const State& s, double tsfc_base);

/// RPM that zeroes the speed penalty of shaft i (0-based) for a state.
double ideal_rpm(const State& s, std::size_t shaft);

/// Throws UncorrectedPoint unless `point` is a fixed point of correct().
Evaluation evaluate(const DesignPoint& point, const BenchConfig& config);

/// Problem registered as `simple-turbofan`.
Problem make_problem(const BenchConfig& config);

/// Fraction of failed evaluations over uniform-random corrected points.
double failure_rate(const BenchConfig& config, std::size_t n_samples, std::uint64_t seed);

/// Threshold giving the requested failure fraction on `n_samples` random points.
double calibrate_threshold(double target_rate, std::size_t n_samples, std::uint64_t seed);

struct AssignmentOptimum {
    /// The discrete assignment with its best continuous values (or imputed ones
    /// when nothing feasible was found).
    DesignPoint point;
    std::optional<double> objective;
};

struct OracleResult {
    std::optional<DesignPoint> point;
    std::optional<double> objective;
    std::vector<AssignmentOptimum> per_assignment;
    std::size_t evaluations = 0;
};

/// Exhaustive oracle: for each valid discrete assignment, `effort` random
/// continuous samples followed by a compass polish of the 5 best feasible ones.
/// Failed and infeasible points are rejected. Throws ConfigurationError when
/// effort is 0.
OracleResult brute_force_optimum(const BenchConfig& config, std::uint64_t seed, std::size_t effort);

}  // namespace archbo::turbofan
