#include "archbo/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "archbo/compass_search.hpp"
#include "archbo/errors.hpp"
#include "archbo/variation.hpp"

namespace archbo {

namespace {

constexpr double kDuplicateDistance = 1e-9;

struct Individual {
    Eigen::VectorXd z;
    CandidateScore score;
    std::size_t id = 0;
};

bool ranks_before(const Individual& a, const Individual& b) {
    if (a.score.violation != b.score.violation) return a.score.violation < b.score.violation;
    if (a.score.value != b.score.value) return a.score.value > b.score.value;
    return a.id < b.id;
}

Eigen::VectorXd canonical(const DesignSpace& space, const Eigen::VectorXd& z) {
    return encode(space, decode(space, z));
}

bool near_any(const Eigen::VectorXd& z, const std::vector<Eigen::VectorXd>& others, double tol) {
    return std::any_of(others.begin(), others.end(), [&](const auto& o) { return (z - o).norm() < tol; });
}

void score_all(const BatchScorer& scorer, std::vector<Individual>& group, std::size_t from) {
    if (from >= group.size()) return;
    const auto dim = group[from].z.size();
    Eigen::MatrixXd batch(static_cast<Eigen::Index>(group.size() - from), dim);
    for (std::size_t i = from; i < group.size(); ++i) batch.row(static_cast<Eigen::Index>(i - from)) = group[i].z;
    std::vector<CandidateScore> scores;
    scorer(batch, scores);
    for (std::size_t i = from; i < group.size(); ++i) group[i].score = scores[i - from];
}

const Individual& tournament(const std::vector<Individual>& pop, Rng& rng) {
    const auto& a = pop[rng.index(pop.size())];
    const auto& b = pop[rng.index(pop.size())];
    return ranks_before(a, b) ? a : b;
}

}  // namespace

void AcquisitionSpec::validate() const {
    if (!(beta > 0.0)) throw ConfigurationError("acquisition.beta must be > 0");
    if (!(kappa >= 0.0)) throw ConfigurationError("acquisition.kappa must be >= 0");
    if (inner.population < 1 || inner.generations < 1 || inner.polish_evals < 1)
        throw ConfigurationError("acquisition inner budgets must be >= 1");
}

nlohmann::json to_json(const AcquisitionSpec& spec) {
    const char* criterion = spec.criterion == Criterion::EI ? "EI" : spec.criterion == Criterion::WB2 ? "WB2" : "WB2S";
    return {{"criterion", criterion},
            {"beta", spec.beta},
            {"feasibility_weighting", spec.feasibility_weighting},
            {"kappa", spec.kappa},
            {"inner_budget",
             {{"population", spec.inner.population},
              {"generations", spec.inner.generations},
              {"polish_evals", spec.inner.polish_evals}}}};
}

AcquisitionSpec acquisition_spec_from_json(const nlohmann::json& j) {
    AcquisitionSpec spec;
    try {
        const auto criterion = j.value("criterion", std::string("WB2S"));
        if (criterion == "EI")
            spec.criterion = Criterion::EI;
        else if (criterion == "WB2")
            spec.criterion = Criterion::WB2;
        else if (criterion == "WB2S")
            spec.criterion = Criterion::WB2S;
        else
            throw ConfigurationError("unknown acquisition.criterion '" + criterion + "'");
        spec.beta = j.value("beta", spec.beta);
        spec.feasibility_weighting = j.value("feasibility_weighting", spec.feasibility_weighting);
        spec.kappa = j.value("kappa", spec.kappa);
        if (j.contains("inner_budget")) {
            const auto& b = j.at("inner_budget");
            spec.inner.population = b.value("population", spec.inner.population);
            spec.inner.generations = b.value("generations", spec.inner.generations);
            spec.inner.polish_evals = b.value("polish_evals", spec.inner.polish_evals);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError(std::string("malformed acquisition config: ") + e.what());
    }
    spec.validate();
    return spec;
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double expected_improvement(double mean, double std, double f_min) {
    const double gap = f_min - mean;
    if (!(std > 0.0)) return std::max(0.0, gap);
    const double z = gap / std;
    return std::max(0.0, gap * normal_cdf(z) + std * normal_pdf(z));
}

double wb2s_scale(double mean_at_argmax, double ei_at_argmax, double beta) {
    if (!(ei_at_argmax > 1e-12)) return 1.0;
    return std::max(1.0, beta * std::abs(mean_at_argmax) / ei_at_argmax);
}

double wb2s_scale(const Eigen::VectorXd& ei_argmax, const GpModel& objective, double f_min, double beta) {
    const auto p = objective.predict(ei_argmax);
    return wb2s_scale(p.mean, expected_improvement(p.mean, p.std, f_min), beta);
}

double acquisition_value(const Eigen::VectorXd& x, const SurrogateSet& models, double f_min,
                         const AcquisitionSpec& spec, double scale) {
    if (spec.feasibility_weighting && !models.feasibility)
        throw ConfigurationError("feasibility weighting requested without a feasibility model");
    const auto p = models.objective.predict(x);
    const double ei = expected_improvement(p.mean, p.std, f_min);
    double value = ei;
    if (spec.criterion == Criterion::WB2)
        value = ei - p.mean;
    else if (spec.criterion == Criterion::WB2S)
        value = scale * ei - p.mean;
    if (spec.feasibility_weighting) value *= models.feasibility->probability(x);
    return value;
}

double trust_bound_violation(const Eigen::VectorXd& x, const SurrogateSet& models, double kappa) {
    double total = 0.0;
    for (const auto& c : models.constraints) {
        const auto p = c.predict(x);
        total += std::max(0.0, p.mean - kappa * p.std);
    }
    return total;
}

BatchScorer make_acquisition_scorer(const SurrogateSet& models, double f_min, const AcquisitionSpec& spec,
                                    double scale) {
    if (spec.feasibility_weighting && !models.feasibility)
        throw ConfigurationError("feasibility weighting requested without a feasibility model");
    return [&models, f_min, spec, scale](const Eigen::MatrixXd& C, std::vector<CandidateScore>& out) {
        const Eigen::Index m = C.rows();
        Eigen::VectorXd mean, std;
        models.objective.predict_batch(C, mean, &std);
        Eigen::VectorXd violation = Eigen::VectorXd::Zero(m);
        Eigen::VectorXd cm, cs;
        for (const auto& c : models.constraints) {
            c.predict_batch(C, cm, &cs);
            violation += (cm - spec.kappa * cs).cwiseMax(0.0);
        }
        Eigen::VectorXd prob;
        if (spec.feasibility_weighting) models.feasibility->probability_batch(C, prob);
        out.resize(static_cast<std::size_t>(m));
        for (Eigen::Index i = 0; i < m; ++i) {
            const double ei = expected_improvement(mean[i], std[i], f_min);
            double value = ei;
            if (spec.criterion == Criterion::WB2)
                value = ei - mean[i];
            else if (spec.criterion == Criterion::WB2S)
                value = scale * ei - mean[i];
            if (spec.feasibility_weighting) value *= prob[i];
            out[static_cast<std::size_t>(i)] = {violation[i], value};
        }
    };
}

InfillResult maximize_over_space(const DesignSpace& space, const BatchScorer& scorer, const InnerBudget& budget,
                                 Rng& rng, const InfillContext& context) {
    const std::size_t dim = space.encoded_dim();
    const std::size_t pop_size = std::max<std::size_t>(budget.population, 2);
    std::size_t next_id = 0;

    std::vector<Individual> pop;
    for (const auto& seed : context.seeds) {
        if (pop.size() >= pop_size) break;
        if (static_cast<std::size_t>(seed.size()) != dim) throw DimensionMismatch("infill seed has the wrong length");
        pop.push_back({canonical(space, seed), {}, next_id++});
    }
    const Eigen::MatrixXd cube = latin_hypercube(pop_size - pop.size(), dim, rng);
    for (Eigen::Index r = 0; r < cube.rows(); ++r) pop.push_back({canonical(space, cube.row(r).transpose()), {}, next_id++});
    score_all(scorer, pop, 0);
    std::sort(pop.begin(), pop.end(), ranks_before);

    const double crossover_prob = 0.9;
    const double mutation_prob = 1.0 / static_cast<double>(std::max<std::size_t>(dim, 1));
    for (std::size_t gen = 0; gen < budget.generations; ++gen) {
        std::vector<Individual> merged = pop;
        const std::size_t first_child = merged.size();
        while (merged.size() - first_child < pop_size) {
            Eigen::VectorXd a = tournament(pop, rng).z;
            Eigen::VectorXd b = tournament(pop, rng).z;
            if (rng.uniform() < crossover_prob) {
                for (std::size_t d = 0; d < dim; ++d) {
                    if (rng.uniform() >= 0.5) continue;
                    const auto k = static_cast<Eigen::Index>(d);
                    std::tie(a[k], b[k]) = sbx_crossover(a[k], b[k], 0.0, 1.0, 15.0, rng);
                }
            }
            for (auto* child : {&a, &b}) {
                for (std::size_t d = 0; d < dim; ++d)
                    if (rng.uniform() < mutation_prob) {
                        const auto k = static_cast<Eigen::Index>(d);
                        (*child)[k] = polynomial_mutation((*child)[k], 0.0, 1.0, 20.0, rng);
                    }
                if (merged.size() - first_child < pop_size) merged.push_back({canonical(space, *child), {}, next_id++});
            }
        }
        score_all(scorer, merged, first_child);
        std::sort(merged.begin(), merged.end(), ranks_before);
        pop.clear();
        std::vector<Eigen::VectorXd> kept;
        for (auto& ind : merged) {
            if (pop.size() >= pop_size) break;
            if (near_any(ind.z, kept, 1e-12)) continue;
            kept.push_back(ind.z);
            pop.push_back(std::move(ind));
        }
    }

    // Polish the active continuous coordinates of the best candidate.
    std::vector<Individual> finalists = pop;
    if (budget.polish_evals > 0 && !pop.empty()) {
        const Individual& best = pop.front();
        const DesignPoint best_point = decode(space, best.z);
        std::vector<Eigen::Index> coords;
        for (std::size_t i = 0; i < space.size(); ++i)
            if (space.variable(i).is_continuous() && best_point.active[i])
                coords.push_back(static_cast<Eigen::Index>(space.offset(i)));
        if (!coords.empty()) {
            std::vector<double> x0;
            for (auto c : coords) x0.push_back(best.z[c]);
            Eigen::MatrixXd single(1, static_cast<Eigen::Index>(dim));
            std::vector<CandidateScore> out;
            auto objective = [&](const std::vector<double>& x) {
                Eigen::VectorXd z = best.z;
                for (std::size_t k = 0; k < coords.size(); ++k) z[coords[k]] = x[k];
                single.row(0) = canonical(space, z);
                scorer(single, out);
                return std::make_pair(out[0].violation, -out[0].value);
            };
            CompassOptions options;
            options.initial_step = 0.1;
            options.min_step = 1e-7;
            options.max_evals = budget.polish_evals;
            auto result = compass_search<std::pair<double, double>>(objective, x0, std::vector<double>(x0.size(), 0.0),
                                                                    std::vector<double>(x0.size(), 1.0), options);
            Eigen::VectorXd z = best.z;
            for (std::size_t k = 0; k < coords.size(); ++k) z[coords[k]] = result.x[k];
            Individual polished{canonical(space, z), {result.score.first, -result.score.second}, next_id++};
            finalists.push_back(std::move(polished));
            std::sort(finalists.begin(), finalists.end(), ranks_before);
        }
    }

    const Individual* chosen = nullptr;
    for (const auto& ind : finalists) {
        if (!near_any(ind.z, context.evaluated, kDuplicateDistance)) {
            chosen = &ind;
            break;
        }
    }
    Individual fresh;
    if (!chosen) {
        // Every finalist was already evaluated: fall back to a new random point.
        for (int attempt = 0; attempt < 1000; ++attempt) {
            fresh = {encode(space, sample_uniform(space, rng)), {}, next_id++};
            if (!near_any(fresh.z, context.evaluated, kDuplicateDistance)) break;
        }
        std::vector<Individual> one{fresh};
        score_all(scorer, one, 0);
        fresh = one.front();
        chosen = &fresh;
    }

    InfillResult result;
    result.point = decode(space, chosen->z);
    result.encoded = chosen->z;
    result.value = chosen->score.value;
    result.violation = chosen->score.violation;
    result.bounds_satisfied = chosen->score.violation <= 0.0;
    return result;
}

InfillResult solve_infill(const DesignSpace& space, const SurrogateSet& models, double f_min,
                          const AcquisitionSpec& spec, Rng& rng, const InfillContext& context) {
    spec.validate();
    double scale = 1.0;
    if (spec.criterion == Criterion::WB2S) {
        // Locate the EI maximizer under the same trust bounds to fix the scale.
        AcquisitionSpec ei_spec = spec;
        ei_spec.criterion = Criterion::EI;
        ei_spec.feasibility_weighting = false;
        InnerBudget pre = spec.inner;
        pre.generations = std::max<std::size_t>(1, spec.inner.generations / 2);
        pre.polish_evals = 0;
        InfillContext pre_context{{}, context.seeds};
        auto ei_best = maximize_over_space(space, make_acquisition_scorer(models, f_min, ei_spec, 1.0), pre, rng,
                                           pre_context);
        scale = wb2s_scale(ei_best.encoded, models.objective, f_min, spec.beta);
    }
    auto result = maximize_over_space(space, make_acquisition_scorer(models, f_min, spec, scale), spec.inner, rng,
                                      context);
    result.scale = scale;
    return result;
}

InfillResult solve_feasibility_infill(const DesignSpace& space, const SurrogateSet& models,
                                      const AcquisitionSpec& spec, Rng& rng, const InfillContext& context) {
    spec.validate();
    BatchScorer scorer = [&models](const Eigen::MatrixXd& C, std::vector<CandidateScore>& out) {
        const Eigen::Index m = C.rows();
        Eigen::VectorXd value = Eigen::VectorXd::Ones(m);
        Eigen::VectorXd cm, cs;
        for (const auto& c : models.constraints) {
            c.predict_batch(C, cm, &cs);
            for (Eigen::Index i = 0; i < m; ++i)
                value[i] *= cs[i] > 0.0 ? normal_cdf(-cm[i] / cs[i]) : (cm[i] <= 0.0 ? 1.0 : 0.0);
        }
        if (models.feasibility) {
            Eigen::VectorXd prob;
            models.feasibility->probability_batch(C, prob);
            value = value.cwiseProduct(prob);
        }
        out.resize(static_cast<std::size_t>(m));
        for (Eigen::Index i = 0; i < m; ++i) out[static_cast<std::size_t>(i)] = {0.0, value[i]};
    };
    return maximize_over_space(space, scorer, spec.inner, rng, context);
}

}  // namespace archbo
