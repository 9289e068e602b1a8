#include <doctest.h>

#include <set>

#include "archbo/errors.hpp"
#include "archbo/nsga2.hpp"
#include "archbo/turbofan.hpp"

using namespace archbo;

TEST_CASE("constraint domination") {
    const auto ok = [](double f, double c) { return Evaluation::success(f, {c}); };
    CHECK(constrained_dominates(ok(7.0, -1.0), Evaluation::failure()));
    CHECK_FALSE(constrained_dominates(Evaluation::failure(), ok(7.0, -1.0)));
    CHECK(constrained_dominates(ok(6.7, -1.0), ok(7.0, -1.0)));
    CHECK_FALSE(constrained_dominates(ok(7.0, -1.0), ok(7.0, -1.0)));
    CHECK(constrained_dominates(ok(9.0, 0.2), ok(1.0, 0.5)));
    CHECK(constrained_dominates(ok(9.0, -0.1), ok(1.0, 0.5)));
    CHECK(constrained_dominates(ok(9.0, 0.5), Evaluation::failure()));
    CHECK_FALSE(constrained_dominates(ok(9.0, 2e6), Evaluation::failure()));
    CHECK_FALSE(constrained_dominates(Evaluation::failure(), Evaluation::failure()));
}

TEST_CASE("NSGA-II spends exactly the budget") {
    const auto problem = turbofan::make_problem({});
    EvoConfig cfg;
    for (std::size_t budget : {50, 130, 300}) {
        const auto h = run_nsga2(problem, budget, cfg, 1);
        CHECK(h.records.size() == budget);
        CHECK(h.budget == budget);
    }
    CHECK_THROWS_AS(run_nsga2(problem, 49, cfg, 1), ConfigurationError);
}

TEST_CASE("NSGA-II is deterministic, elitist and corrects offspring") {
    const auto problem = turbofan::make_problem({});
    EvoConfig cfg;
    const auto a = run_nsga2(problem, 300, cfg, 4);
    const auto b = run_nsga2(problem, 300, cfg, 4);
    CHECK(history_to_json(problem.space, a).dump() == history_to_json(problem.space, b).dump());
    std::optional<double> prev;
    for (const auto& r : a.records) {
        CHECK(correct(problem.space, r.point.values) == r.point);
        if (prev) CHECK(*r.best_so_far <= *prev);
        prev = r.best_so_far;
    }
    CHECK(a.records.back().iteration == 5);

    turbofan::BenchConfig off;
    off.enable_hidden_constraint = false;
    CHECK(run_nsga2(turbofan::make_problem(off), 200, cfg, 2).failures() == 0);
}

TEST_CASE("NSGA-II without variation keeps the initial population") {
    const auto problem = turbofan::make_problem({});
    EvoConfig cfg;
    cfg.population = 20;
    cfg.crossover_prob = 0.0;
    cfg.mutation_prob = 0.0;
    const auto h = run_nsga2(problem, 100, cfg, 3);
    REQUIRE(h.records.size() == 100);
    std::multiset<std::string> initial;
    for (std::size_t i = 0; i < 20; ++i) initial.insert(nlohmann::json(h.records[i].evaluation.objective).dump());
    const auto best0 = h.records[19].best_so_far;
    for (std::size_t i = 20; i < 100; ++i) {
        const auto& r = h.records[i];
        bool clone = false;
        for (std::size_t k = 0; k < 20; ++k) clone = clone || h.records[k].point == r.point;
        CHECK(clone);
        CHECK(initial.count(nlohmann::json(r.evaluation.objective).dump()) >= 1);
        CHECK(r.best_so_far == best0);
    }
}

TEST_CASE("EvoConfig validation and JSON") {
    EvoConfig cfg;
    cfg.population = 7;
    CHECK_THROWS_AS(cfg.validate(), ConfigurationError);
    cfg.population = 2;
    CHECK_THROWS_AS(cfg.validate(), ConfigurationError);
    cfg.population = 10;
    cfg.crossover_prob = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigurationError);
    cfg.crossover_prob = 0.5;
    cfg.mutation_prob = 0.2;
    const auto back = evo_config_from_json(nlohmann::json::parse(to_json(cfg).dump()));
    CHECK(back.population == 10);
    CHECK(back.crossover_prob == 0.5);
    CHECK(back.mutation_prob == 0.2);
    CHECK_FALSE(evo_config_from_json(to_json(EvoConfig{})).mutation_prob);
}
