#include "archbo/nsga2.hpp"

#include <algorithm>
#include <chrono>
#include <limits>

#include "archbo/errors.hpp"
#include "archbo/variation.hpp"

namespace archbo {

namespace {

using Clock = std::chrono::steady_clock;

struct Member {
    DesignPoint point;
    Eigen::VectorXd encoded;
    Evaluation evaluation;
    double crowding = 0.0;
    std::size_t id = 0;
};

double violation(const Evaluation& e, double failed_violation) {
    if (!e.ok()) return failed_violation;
    return e.feasible() ? 0.0 : e.total_violation();
}

// Crowding distance over the encoded coordinates.
void assign_crowding(std::vector<Member>& group) {
    const std::size_t n = group.size();
    for (auto& m : group) m.crowding = 0.0;
    if (n == 0) return;
    const auto dim = group.front().encoded.size();
    std::vector<std::size_t> order(n);
    for (Eigen::Index d = 0; d < dim; ++d) {
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return group[a].encoded[d] < group[b].encoded[d]; });
        const double lo = group[order.front()].encoded[d];
        const double hi = group[order.back()].encoded[d];
        if (hi - lo <= 0.0) continue;
        group[order.front()].crowding = std::numeric_limits<double>::infinity();
        group[order.back()].crowding = std::numeric_limits<double>::infinity();
        for (std::size_t k = 1; k + 1 < n; ++k)
            group[order[k]].crowding += (group[order[k + 1]].encoded[d] - group[order[k - 1]].encoded[d]) / (hi - lo);
    }
}

bool near_any(const Eigen::VectorXd& z, const std::vector<Member>& group) {
    return std::any_of(group.begin(), group.end(), [&](const Member& m) { return (z - m.encoded).norm() < 1e-9; });
}

Value random_level(const VariableSpec& var, Rng& rng) {
    if (const auto* c = std::get_if<Integer>(&var.kind))
        return c->lower + static_cast<std::int64_t>(rng.index(static_cast<std::size_t>(c->upper - c->lower) + 1));
    return Level{rng.index(std::get<Categorical>(var.kind).levels.size())};
}

}  // namespace

void EvoConfig::validate() const {
    if (population < 4 || population % 2 != 0) throw ConfigurationError("evo.population must be even and >= 4");
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(crossover_prob)) throw ConfigurationError("evo.crossover_prob must lie in [0, 1]");
    if (mutation_prob && !prob(*mutation_prob)) throw ConfigurationError("evo.mutation_prob must lie in [0, 1]");
    if (!(sbx_eta >= 0.0) || !(mutation_eta >= 0.0)) throw ConfigurationError("evo distribution indices must be >= 0");
}

nlohmann::json to_json(const EvoConfig& c) {
    return {{"population", c.population},
            {"crossover_prob", c.crossover_prob},
            {"sbx_eta", c.sbx_eta},
            {"mutation_eta", c.mutation_eta},
            {"mutation_prob", c.mutation_prob ? nlohmann::json(*c.mutation_prob) : nlohmann::json(nullptr)},
            {"discrete_crossover", "uniform"},
            {"discrete_mutation", "random-reset"},
            {"failed_violation", c.failed_violation}};
}

EvoConfig evo_config_from_json(const nlohmann::json& j) {
    EvoConfig c;
    try {
        c.population = j.value("population", c.population);
        c.crossover_prob = j.value("crossover_prob", c.crossover_prob);
        c.sbx_eta = j.value("sbx_eta", c.sbx_eta);
        c.mutation_eta = j.value("mutation_eta", c.mutation_eta);
        if (j.contains("mutation_prob") && !j.at("mutation_prob").is_null())
            c.mutation_prob = j.at("mutation_prob").get<double>();
        c.failed_violation = j.value("failed_violation", c.failed_violation);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError(std::string("malformed evo config: ") + e.what());
    }
    c.validate();
    return c;
}

bool constrained_dominates(const Evaluation& a, const Evaluation& b, double failed_violation) {
    const double va = violation(a, failed_violation);
    const double vb = violation(b, failed_violation);
    if (va == 0.0 && vb == 0.0) return a.objective < b.objective;
    if (va == 0.0) return true;
    if (vb == 0.0) return false;
    return va < vb;
}

RunHistory run_nsga2(const Problem& problem, std::size_t budget, const EvoConfig& config, std::uint64_t seed) {
    config.validate();
    if (budget < config.population)
        throw ConfigurationError("budget (" + std::to_string(budget) + ") must be at least the population (" +
                                 std::to_string(config.population) + ")");
    const DesignSpace& space = problem.space;
    const double mutation_prob = config.mutation_prob.value_or(1.0 / static_cast<double>(space.size()));
    Rng rng(seed, "evo");

    RunHistory history;
    history.algorithm = "nsga2";
    history.problem = problem.name;
    history.seed = seed;
    history.budget = budget;
    history.config = {{"budget", budget}, {"evo", to_json(config)}};

    std::size_t next_id = 0;
    auto evaluate = [&](DesignPoint point, std::size_t generation) {
        const auto start = Clock::now();
        Evaluation e = problem.evaluate(point);
        e.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
        Member m{point, encode(space, point), e, 0.0, next_id++};
        history.append(generation, std::move(point), std::move(e));
        return m;
    };

    std::vector<Member> population;
    for (auto& p : sample_doe(space, config.population, rng)) {
        for (int attempt = 0; attempt < 100 && near_any(encode(space, p), population); ++attempt)
            p = sample_uniform(space, rng);
        population.push_back(evaluate(std::move(p), 0));
    }
    assign_crowding(population);

    auto ranks_before = [&](const Member& a, const Member& b) {
        if (constrained_dominates(a.evaluation, b.evaluation, config.failed_violation)) return true;
        if (constrained_dominates(b.evaluation, a.evaluation, config.failed_violation)) return false;
        if (a.crowding != b.crowding) return a.crowding > b.crowding;
        return a.id < b.id;
    };
    auto tournament = [&]() -> const Member& {
        const Member& a = population[rng.index(population.size())];
        const Member& b = population[rng.index(population.size())];
        if (constrained_dominates(a.evaluation, b.evaluation, config.failed_violation)) return a;
        if (constrained_dominates(b.evaluation, a.evaluation, config.failed_violation)) return b;
        if (a.crowding != b.crowding) return a.crowding > b.crowding ? a : b;
        return rng.uniform() < 0.5 ? a : b;
    };
    auto vary = [&](const Member& pa, const Member& pb) {
        std::vector<Value> a = pa.point.values;
        std::vector<Value> b = pb.point.values;
        if (rng.uniform() < config.crossover_prob) {
            for (std::size_t i = 0; i < space.size(); ++i) {
                if (rng.uniform() >= 0.5) continue;
                if (const auto* c = std::get_if<Continuous>(&space.variable(i).kind)) {
                    auto [x, y] = sbx_crossover(std::get<double>(a[i]), std::get<double>(b[i]), c->lower, c->upper,
                                                config.sbx_eta, rng);
                    a[i] = x;
                    b[i] = y;
                } else {
                    std::swap(a[i], b[i]);
                }
            }
        }
        for (auto* child : {&a, &b}) {
            for (std::size_t i = 0; i < space.size(); ++i) {
                if (!(rng.uniform() < mutation_prob)) continue;
                const auto& var = space.variable(i);
                if (const auto* c = std::get_if<Continuous>(&var.kind))
                    (*child)[i] = polynomial_mutation(std::get<double>((*child)[i]), c->lower, c->upper,
                                                      config.mutation_eta, rng);
                else
                    (*child)[i] = random_level(var, rng);
            }
        }
        return std::make_pair(correct(space, a), correct(space, b));
    };

    for (std::size_t generation = 1; history.records.size() < budget; ++generation) {
        const std::size_t n_offspring = std::min(config.population, budget - history.records.size());
        std::vector<Member> offspring;
        std::vector<bool> duplicate;
        std::vector<DesignPoint> pending;
        while (pending.size() < n_offspring) {
            std::pair<DesignPoint, DesignPoint> children;
            // Re-mate a bounded number of times to avoid re-evaluating known points.
            for (int attempt = 0; attempt < 20; ++attempt) {
                children = vary(tournament(), tournament());
                bool fresh = false;
                for (const auto* c : {&children.first, &children.second}) {
                    const auto z = encode(space, *c);
                    bool seen = near_any(z, population) ||
                                std::any_of(pending.begin(), pending.end(),
                                            [&](const DesignPoint& q) { return (encode(space, q) - z).norm() < 1e-9; });
                    fresh = fresh || !seen;
                }
                if (fresh) break;
            }
            for (auto* c : {&children.first, &children.second})
                if (pending.size() < n_offspring) pending.push_back(std::move(*c));
        }
        for (auto& p : pending) {
            const auto z = encode(space, p);
            duplicate.push_back(near_any(z, population) || near_any(z, offspring));
            offspring.push_back(evaluate(std::move(p), generation));
        }

        std::vector<Member> merged = population;
        for (std::size_t k = 0; k < offspring.size(); ++k)
            if (!duplicate[k]) merged.push_back(std::move(offspring[k]));
        assign_crowding(merged);
        std::sort(merged.begin(), merged.end(), ranks_before);
        merged.resize(std::min(merged.size(), config.population));
        population = std::move(merged);
        assign_crowding(population);
    }

    history.final_best = incumbent(history);
    return history;
}

}  // namespace archbo
