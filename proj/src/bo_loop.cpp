#include "archbo/bo_loop.hpp"

#include <algorithm>
#include <chrono>
#include <optional>

#include "archbo/errors.hpp"

namespace archbo {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

bool near_any(const Eigen::VectorXd& z, const std::vector<Eigen::VectorXd>& others) {
    return std::any_of(others.begin(), others.end(), [&](const auto& o) { return (z - o).norm() < 1e-9; });
}

// Keeps the hyperparameters of one output between iterations.
class ModelSlot {
public:
    GpModel train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GpConfig& config, bool refit, Rng& rng) {
        if (!refit && theta_) {
            try {
                return remember(GpModel::condition(X, y, *theta_, config));
            } catch (const IllConditioned&) {
                // fall through to a full search
            }
        }
        std::vector<Eigen::VectorXd> warm;
        if (theta_) warm.push_back(*theta_);
        return remember(fit_gp(X, y, config, rng, warm));
    }

    FeasibilityModel train_feasibility(const Eigen::MatrixXd& X, const std::vector<int>& labels,
                                       const GpConfig& config, bool refit, Rng& rng) {
        const bool mixed = std::any_of(labels.begin(), labels.end(), [&](int l) { return l != labels.front(); });
        if (!mixed) return fit_feasibility(X, labels, config, rng);
        if (!refit && theta_) {
            Eigen::VectorXd y(static_cast<Eigen::Index>(labels.size()));
            for (std::size_t i = 0; i < labels.size(); ++i) y[static_cast<Eigen::Index>(i)] = labels[i];
            try {
                auto model = GpModel::condition(X, y, *theta_, config);
                if (model.X().rows() >= 2) return FeasibilityModel(remember(std::move(model)));
            } catch (const IllConditioned&) {
            }
        }
        std::vector<Eigen::VectorXd> warm;
        if (theta_) warm.push_back(*theta_);
        auto model = fit_feasibility(X, labels, config, rng, warm);
        if (model.inner()) theta_ = model.inner()->theta();
        return model;
    }

private:
    GpModel remember(GpModel model) {
        theta_ = model.theta();
        return model;
    }
    std::optional<Eigen::VectorXd> theta_;
};

}  // namespace

void BoSettings::validate() const {
    if (doe_size < 1) throw ConfigurationError("doe_size must be >= 1");
    if (budget <= doe_size) throw ConfigurationError("budget must exceed doe_size");
    acquisition.validate();
    gp.validate();
}

std::size_t default_doe_size(std::size_t budget) { return std::max<std::size_t>(2, std::min<std::size_t>(20, budget / 3)); }

nlohmann::json to_json(const BoSettings& s) {
    return {{"doe_size", s.doe_size},
            {"budget", s.budget},
            {"acquisition", to_json(s.acquisition)},
            {"gp", to_json(s.gp)},
            {"infill_seeds", s.infill_seeds}};
}

RunHistory run_bo(const Problem& problem, const BoSettings& settings, std::uint64_t seed) {
    settings.validate();
    const DesignSpace& space = problem.space;
    GpConfig gp = settings.gp;
    if (gp.anisotropy == Anisotropy::PerVariable && gp.coordinate_groups.empty())
        gp.coordinate_groups = space.coordinate_owner();

    RunHistory history;
    history.algorithm = "bo";
    history.problem = problem.name;
    history.seed = seed;
    history.budget = settings.budget;
    history.config = to_json(settings);

    std::vector<Eigen::VectorXd> encodings;
    auto evaluate = [&](const DesignPoint& point, std::size_t iteration, double fit_time, double infill_time) {
        const auto start = Clock::now();
        Evaluation e = problem.evaluate(point);
        e.wall_time = seconds_since(start);
        if (e.ok() && e.constraints.size() != problem.n_constraints)
            throw DimensionMismatch("problem '" + problem.name + "' returned the wrong number of constraints");
        encodings.push_back(encode(space, point));
        history.append(iteration, point, std::move(e), fit_time, infill_time);
    };
    auto ok_count = [&] {
        return static_cast<std::size_t>(std::count_if(history.records.begin(), history.records.end(),
                                                      [](const RunRecord& r) { return r.evaluation.ok(); }));
    };
    auto run_doe_batch = [&](Rng& rng) {
        auto points = sample_doe(space, settings.doe_size, rng);
        for (auto& p : points) {
            if (history.records.size() >= settings.budget) break;
            // Repeated discrete corners are replaced so no evaluation is wasted on a duplicate.
            for (int attempt = 0; attempt < 100 && near_any(encode(space, p), encodings); ++attempt)
                p = sample_uniform(space, rng);
            evaluate(p, 0, 0.0, 0.0);
        }
    };

    Rng doe_rng(seed, "doe");
    run_doe_batch(doe_rng);
    if (ok_count() < 2 && history.records.size() < settings.budget) run_doe_batch(doe_rng);
    if (ok_count() < 2)
        throw DoeStarvation("DoE starvation: fewer than 2 successful evaluations after " +
                            std::to_string(history.records.size()) + " points");

    ModelSlot objective_slot;
    std::vector<ModelSlot> constraint_slots(problem.n_constraints);
    ModelSlot feasibility_slot;
    const auto dim = static_cast<Eigen::Index>(space.encoded_dim());

    for (std::size_t iteration = 1; history.records.size() < settings.budget; ++iteration) {
        const auto fit_start = Clock::now();
        const bool refit = (iteration - 1) % gp.refit_interval == 0;
        Rng fit_rng(seed, "fit", iteration);

        std::vector<std::size_t> ok_rows;
        for (std::size_t i = 0; i < history.records.size(); ++i)
            if (history.records[i].evaluation.ok()) ok_rows.push_back(i);
        const auto n_ok = static_cast<Eigen::Index>(ok_rows.size());
        Eigen::MatrixXd X_ok(n_ok, dim);
        Eigen::VectorXd y(n_ok);
        std::vector<Eigen::VectorXd> y_con(problem.n_constraints, Eigen::VectorXd(n_ok));
        for (Eigen::Index k = 0; k < n_ok; ++k) {
            const auto& rec = history.records[ok_rows[static_cast<std::size_t>(k)]];
            X_ok.row(k) = encodings[ok_rows[static_cast<std::size_t>(k)]];
            y[k] = rec.evaluation.objective;
            for (std::size_t j = 0; j < problem.n_constraints; ++j) y_con[j][k] = rec.evaluation.constraints[j];
        }
        Eigen::MatrixXd X_all(static_cast<Eigen::Index>(encodings.size()), dim);
        std::vector<int> labels;
        for (std::size_t i = 0; i < encodings.size(); ++i) {
            X_all.row(static_cast<Eigen::Index>(i)) = encodings[i];
            labels.push_back(history.records[i].evaluation.ok() ? 1 : 0);
        }

        SurrogateSet models{objective_slot.train(X_ok, y, gp, refit, fit_rng), {}, std::nullopt};
        for (std::size_t j = 0; j < problem.n_constraints; ++j)
            models.constraints.push_back(constraint_slots[j].train(X_ok, y_con[j], gp, refit, fit_rng));
        models.feasibility = feasibility_slot.train_feasibility(X_all, labels, gp, refit, fit_rng);
        const double fit_time = seconds_since(fit_start);

        const auto infill_start = Clock::now();
        InfillContext context;
        context.evaluated = encodings;
        std::vector<std::size_t> feasible_rows;
        for (auto i : ok_rows)
            if (history.records[i].evaluation.feasible()) feasible_rows.push_back(i);
        std::stable_sort(feasible_rows.begin(), feasible_rows.end(), [&](std::size_t a, std::size_t b) {
            return history.records[a].evaluation.objective < history.records[b].evaluation.objective;
        });
        for (std::size_t k = 0; k < std::min(settings.infill_seeds, feasible_rows.size()); ++k)
            context.seeds.push_back(encodings[feasible_rows[k]]);

        Rng infill_rng(seed, "infill", iteration);
        InfillResult infill =
            feasible_rows.empty()
                ? solve_feasibility_infill(space, models, settings.acquisition, infill_rng, context)
                : solve_infill(space, models, history.records[feasible_rows.front()].evaluation.objective,
                               settings.acquisition, infill_rng, context);
        const double infill_time = seconds_since(infill_start);

        evaluate(infill.point, iteration, fit_time, infill_time);
    }

    history.final_best = incumbent(history);
    return history;
}

}  // namespace archbo
