#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "archbo/design_space.hpp"
#include "archbo/gaussian_process.hpp"
#include "archbo/random.hpp"

namespace archbo {

enum class Criterion { EI, WB2, WB2S };

struct InnerBudget {
    std::size_t population = 50;
    std::size_t generations = 50;
    std::size_t polish_evals = 200;
};

struct AcquisitionSpec {
    Criterion criterion = Criterion::WB2S;
    /// Scale constant of WB2S.
    double beta = 100.0;
    /// Multiply the criterion by the predicted probability of a successful evaluation.
    bool feasibility_weighting = true;
    /// Trust-bound multiplier: constraint j is accepted when mean_j - kappa * std_j <= 0.
    double kappa = 2.0;
    InnerBudget inner;

    void validate() const;
};

nlohmann::json to_json(const AcquisitionSpec& spec);
AcquisitionSpec acquisition_spec_from_json(const nlohmann::json& j);

double normal_pdf(double z);
double normal_cdf(double z);

/// Closed-form expected improvement below f_min for a Gaussian prediction.
double expected_improvement(double mean, double std, double f_min);

/// WB2S scale beta * |mean| / EI at the EI maximizer, or 1 when EI is negligible.
/// Never below 1.
double wb2s_scale(double mean_at_argmax, double ei_at_argmax, double beta);

/// Same, predicting the mean and EI at `ei_argmax` with the objective model.
double wb2s_scale(const Eigen::VectorXd& ei_argmax, const GpModel& objective, double f_min, double beta);

/// Surrogates of one optimization problem.
struct SurrogateSet {
    GpModel objective;
    std::vector<GpModel> constraints;
    std::optional<FeasibilityModel> feasibility;
};

/// Criterion value at an encoded point (larger is better). `scale` is the WB2S
/// scale and is ignored by the other criteria. Throws ConfigurationError when
/// weighting is requested without a feasibility model.
double acquisition_value(const Eigen::VectorXd& x, const SurrogateSet& models, double f_min,
                         const AcquisitionSpec& spec, double scale = 1.0);

/// Total trust-bound violation: sum over constraints of max(0, mean - kappa * std).
double trust_bound_violation(const Eigen::VectorXd& x, const SurrogateSet& models, double kappa);

/// Score of a candidate: ranked by violation first (lower is better), then value (higher).
struct CandidateScore {
    double violation = 0.0;
    double value = 0.0;
};

/// Scores every row of a matrix of encoded candidates.
using BatchScorer = std::function<void(const Eigen::MatrixXd& candidates, std::vector<CandidateScore>& out)>;

/// Points the infill search must know about.
struct InfillContext {
    /// Encodings already evaluated; the result never coincides with one of them.
    std::vector<Eigen::VectorXd> evaluated;
    /// Encodings inserted into the initial population (e.g. the best observations).
    std::vector<Eigen::VectorXd> seeds;
};

struct InfillResult {
    DesignPoint point;
    Eigen::VectorXd encoded;
    double value = 0.0;
    double violation = 0.0;
    /// False when no candidate met every trust bound and the least-violating one was returned.
    bool bounds_satisfied = true;
    /// WB2S scale used for this solve (1 for other criteria).
    double scale = 1.0;
};

/// Mixed-variable evolutionary maximization of a batch scorer over corrected
/// points, followed by a compass-search polish of the active continuous
/// coordinates of the best candidate (skipped when polish_evals is 0).
/// Deterministic for a fixed rng state.
InfillResult maximize_over_space(const DesignSpace& space, const BatchScorer& scorer, const InnerBudget& budget,
                                 Rng& rng, const InfillContext& context);

/// Batch scorer of the configured criterion with trust-bound violations.
BatchScorer make_acquisition_scorer(const SurrogateSet& models, double f_min, const AcquisitionSpec& spec,
                                    double scale);

/// Constrained infill: maximize the acquisition subject to the optimistic
/// constraint trust bounds.
InfillResult solve_infill(const DesignSpace& space, const SurrogateSet& models, double f_min,
                          const AcquisitionSpec& spec, Rng& rng, const InfillContext& context = {});

/// Infill used before any feasible observation exists: maximizes
/// prod_j Phi(-mean_j / std_j) times the success probability.
InfillResult solve_feasibility_infill(const DesignSpace& space, const SurrogateSet& models,
                                      const AcquisitionSpec& spec, Rng& rng, const InfillContext& context = {});

}  // namespace archbo
