#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "archbo/design_space.hpp"

namespace archbo {

/// Tolerance on c <= 0 when deciding feasibility of an observation.
inline constexpr double kFeasibilityTolerance = 1e-6;

enum class EvalStatus { Ok, Failed };

/// Outcome of one black-box call. Failed evaluations carry no values.
struct Evaluation {
    EvalStatus status = EvalStatus::Failed;
    double objective = std::numeric_limits<double>::quiet_NaN();
    /// c_j <= 0 means constraint j is satisfied.
    std::vector<double> constraints;
    double wall_time = 0.0;

    static Evaluation success(double objective, std::vector<double> constraints) {
        return {EvalStatus::Ok, objective, std::move(constraints), 0.0};
    }
    static Evaluation failure() { return {}; }

    bool ok() const { return status == EvalStatus::Ok; }
    bool feasible(double tol = kFeasibilityTolerance) const;
    /// Sum of max(0, c_j); meaningful only for Ok evaluations.
    double total_violation() const;
};

/// A black-box optimization problem over a design space.
struct Problem {
    std::string name;
    DesignSpace space;
    std::size_t n_constraints = 0;
    std::function<Evaluation(const DesignPoint&)> evaluate;
};

struct RunRecord {
    /// 0 for the initial design; generation or infill iteration afterwards.
    std::size_t iteration = 0;
    DesignPoint point;
    Evaluation evaluation;
    /// Best feasible objective among records up to and including this one.
    std::optional<double> best_so_far;
    double fit_time = 0.0;
    double infill_time = 0.0;
};

struct Incumbent {
    DesignPoint point;
    double objective = 0.0;
    std::size_t record_index = 0;
};

struct RunHistory {
    std::string algorithm;
    std::string problem;
    std::uint64_t seed = 0;
    std::size_t budget = 0;
    nlohmann::json config;
    std::vector<RunRecord> records;
    std::optional<Incumbent> final_best;

    /// Appends a record, filling best_so_far from the previous record.
    void append(std::size_t iteration, DesignPoint point, Evaluation evaluation, double fit_time = 0.0,
                double infill_time = 0.0);
    std::size_t failures() const;
};

/// Best Ok record whose constraints are all within tolerance; none otherwise.
std::optional<Incumbent> incumbent(const RunHistory& history);

/// Deterministic history document. Wall-clock timings are excluded so repeated
/// runs produce byte-identical files; see timings_csv.
nlohmann::json history_to_json(const DesignSpace& space, const RunHistory& history);
RunHistory history_from_json(const DesignSpace& space, const nlohmann::json& j);

/// Columns: eval_index,status,objective,feasible,best_so_far
std::string convergence_csv(const RunHistory& history);

/// Columns: eval_index,eval_time,fit_time,infill_time
std::string timings_csv(const RunHistory& history);

/// Formats a double with the shortest round-tripping representation.
std::string format_double(double x);

}  // namespace archbo
