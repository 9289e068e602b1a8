#include <doctest.h>

#include <cmath>

#include "archbo/acquisition.hpp"
#include "archbo/errors.hpp"
#include "archbo/turbofan.hpp"

using namespace archbo;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd m(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) m[i++] = x;
    return m;
}

DesignSpace unit_line() {
    SpaceDefinition d;
    d.variables = {{"x", Continuous{0.0, 1.0}}};
    return DesignSpace(d);
}

// Objective model with a pronounced EI peak in the unexplored middle-right region.
SurrogateSet toy_models() {
    Eigen::MatrixXd X(5, 1);
    X << 0.0, 0.15, 0.3, 0.45, 1.0;
    Eigen::VectorXd y(5);
    y << 1.0, 0.6, 0.4, 0.5, 0.9;
    GpConfig cfg;
    return {GpModel::condition(X, y, vec({std::log10(0.2)}), cfg), {}, std::nullopt};
}

}  // namespace

TEST_CASE("expected improvement closed form") {
    CHECK(expected_improvement(0.0, 0.0, -1.0) == 0.0);
    CHECK(expected_improvement(0.0, 1.0, 0.0) == doctest::Approx(0.3989423).epsilon(1e-7));
    CHECK(std::abs(expected_improvement(0.0, 1.0, 0.0) - 1.0 / std::sqrt(2.0 * 3.14159265358979323846)) < 1e-12);
    CHECK(expected_improvement(5.0, 1e-12, 0.0) < 1e-12);
    CHECK(expected_improvement(1.0, 0.0, 3.0) == 2.0);
}

TEST_CASE("expected improvement monotonicity") {
    Rng rng(1);
    for (int k = 0; k < 200; ++k) {
        const double mean = rng.uniform(-3, 3), s = rng.uniform(0.01, 2), f = rng.uniform(-3, 3);
        CHECK(expected_improvement(mean, s, f + 0.1) >= expected_improvement(mean, s, f));
        if (mean >= f) CHECK(expected_improvement(mean, s + 0.1, f) >= expected_improvement(mean, s, f));
    }
}

TEST_CASE("expected improvement agrees with Monte Carlo") {
    Rng rng(2);
    for (int k = 0; k < 5; ++k) {
        const double mean = rng.uniform(-2, 2), s = rng.uniform(0.1, 2), f = rng.uniform(-2, 2);
        const int n = 200000;
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double imp = std::max(0.0, f - (mean + s * rng.normal()));
            sum += imp;
            sum2 += imp * imp;
        }
        const double mc = sum / n;
        const double se = std::sqrt((sum2 / n - mc * mc) / n);
        CHECK(std::abs(expected_improvement(mean, s, f) - mc) <= 3.0 * se + 1e-12);
    }
}

TEST_CASE("WB2S scale") {
    CHECK(wb2s_scale(2.0, 0.5, 100.0) == 400.0);
    CHECK(wb2s_scale(2.0, 0.0, 100.0) == 1.0);
    CHECK(wb2s_scale(0.0, 0.3, 100.0) == 1.0);
    CHECK(wb2s_scale(-1e-5, 0.3, 100.0) == 1.0);
}

TEST_CASE("acquisition_value reductions") {
    auto models = toy_models();
    const double f_min = 0.4;
    AcquisitionSpec spec;
    spec.criterion = Criterion::EI;
    spec.feasibility_weighting = false;
    const auto x = vec({0.7});
    const auto p = models.objective.predict(x);
    CHECK(acquisition_value(x, models, f_min, spec) == expected_improvement(p.mean, p.std, f_min));

    spec.criterion = Criterion::WB2;
    const auto at_data = vec({0.3});
    // At a data point the std is at the nugget floor, so EI <= std * phi(0).
    const auto pd = models.objective.predict(at_data);
    const double wb2 = acquisition_value(at_data, models, f_min, spec);
    CHECK(wb2 == doctest::Approx(-pd.mean + expected_improvement(pd.mean, pd.std, f_min)).epsilon(1e-12));
    CHECK(wb2 >= -0.4 - 1e-6);
    CHECK(wb2 <= -0.4 + 1e-6 + 0.4 * pd.std);

    spec.criterion = Criterion::WB2S;
    spec.feasibility_weighting = true;
    CHECK_THROWS_AS(acquisition_value(x, models, f_min, spec, 3.0), ConfigurationError);
    models.feasibility = FeasibilityModel::constant(0.0);
    CHECK(acquisition_value(x, models, f_min, spec, 3.0) == 0.0);

    Eigen::MatrixXd Xf(4, 1);
    Xf << 0.0, 0.3, 0.6, 1.0;
    Rng rng(3);
    models.feasibility = fit_feasibility(Xf, {1, 0, 1, 1}, GpConfig{}, rng);
    for (double t = 0.0; t <= 1.0; t += 0.05) {
        const auto xt = vec({t});
        AcquisitionSpec base = spec;
        base.feasibility_weighting = false;
        const double raw = acquisition_value(xt, models, f_min, base, 3.0);
        if (raw >= 0.0) CHECK(acquisition_value(xt, models, f_min, spec, 3.0) <= raw);
    }
}

TEST_CASE("infill on a 1-D toy model finds the EI argmax") {
    const auto space = unit_line();
    const auto models = toy_models();
    const double f_min = 0.4;
    AcquisitionSpec spec;
    spec.criterion = Criterion::EI;
    spec.feasibility_weighting = false;

    double best_x = 0.0, best_ei = -1.0;
    for (int i = 0; i <= 100000; ++i) {
        const double x = i / 100000.0;
        const auto p = models.objective.predict(vec({x}));
        const double ei = expected_improvement(p.mean, p.std, f_min);
        if (ei > best_ei) best_ei = ei, best_x = x;
    }
    Rng rng(4);
    const auto r = solve_infill(space, models, f_min, spec, rng);
    CHECK(std::abs(std::get<double>(r.point.values[0]) - best_x) <= 0.05);
    CHECK(r.bounds_satisfied);

    Rng again(4);
    const auto r2 = solve_infill(space, models, f_min, spec, again);
    CHECK(r2.point == r.point);
    CHECK(r2.value == r.value);
}

TEST_CASE("infill reports unsatisfiable trust bounds") {
    const auto space = unit_line();
    auto models = toy_models();
    Eigen::MatrixXd X(3, 1);
    X << 0.0, 0.5, 1.0;
    models.constraints.push_back(GpModel::condition(X, vec({10.0, 12.0, 11.0}), vec({0.0}), GpConfig{}));
    AcquisitionSpec spec;
    spec.feasibility_weighting = false;
    spec.kappa = 0.0;
    Rng rng(5);
    const auto r = solve_infill(space, models, 0.4, spec, rng);
    CHECK_FALSE(r.bounds_satisfied);
    CHECK(r.violation > 0.0);
}

TEST_CASE("positive rescaling of the criterion does not change the infill") {
    const auto space = unit_line();
    const auto models = toy_models();
    AcquisitionSpec spec;
    spec.criterion = Criterion::EI;
    spec.feasibility_weighting = false;
    const auto base = make_acquisition_scorer(models, 0.4, spec, 1.0);
    for (double c : {4.0, 0.25}) {
        BatchScorer scaled = [&](const Eigen::MatrixXd& C, std::vector<CandidateScore>& out) {
            base(C, out);
            for (auto& s : out) s.value *= c;
        };
        Rng r1(6), r2(6);
        const auto a = maximize_over_space(space, base, spec.inner, r1, {});
        const auto b = maximize_over_space(space, scaled, spec.inner, r2, {});
        CHECK(a.point == b.point);
    }
}

TEST_CASE("infill on the turbofan space returns a fresh corrected point") {
    const auto& space = turbofan::space();
    Rng doe(7);
    const auto pts = sample_doe(space, 15, doe);
    Eigen::MatrixXd X(15, static_cast<Eigen::Index>(space.encoded_dim()));
    Eigen::VectorXd y(15), c(15);
    std::vector<int> labels;
    InfillContext context;
    for (int i = 0; i < 15; ++i) {
        X.row(i) = encode(space, pts[static_cast<std::size_t>(i)]).transpose();
        const auto out = turbofan::compute(turbofan::to_state(pts[static_cast<std::size_t>(i)]), 22.0);
        y[i] = out.tsfc;
        c[i] = out.constraints[0];
        labels.push_back(i % 3 == 0 ? 0 : 1);
        context.evaluated.push_back(X.row(i).transpose());
    }
    GpConfig cfg;
    cfg.n_restarts = 2;
    Rng fit(8);
    SurrogateSet models{fit_gp(X, y, cfg, fit), {fit_gp(X, c, cfg, fit)}, fit_feasibility(X, labels, cfg, fit)};
    AcquisitionSpec spec;
    spec.inner = {20, 10, 50};
    Rng rng(9);
    const auto r = solve_infill(space, models, y.minCoeff(), spec, rng, context);
    CHECK(correct(space, r.point.values) == r.point);
    for (const auto& e : context.evaluated) CHECK((encode(space, r.point) - e).norm() >= 1e-9);
    CHECK(r.scale >= 1.0);

    Rng rng2(10);
    const auto f = solve_feasibility_infill(space, models, spec, rng2, context);
    CHECK(correct(space, f.point.values) == f.point);
    CHECK(f.value >= 0.0);
    CHECK(f.value <= 1.0);
}

TEST_CASE("acquisition spec JSON") {
    AcquisitionSpec spec;
    spec.criterion = Criterion::WB2;
    spec.kappa = 1.5;
    spec.inner.population = 12;
    const auto back = acquisition_spec_from_json(nlohmann::json::parse(to_json(spec).dump()));
    CHECK(back.criterion == Criterion::WB2);
    CHECK(back.kappa == 1.5);
    CHECK(back.inner.population == 12);
    CHECK_THROWS_AS(acquisition_spec_from_json({{"criterion", "PI"}}), ConfigurationError);
    CHECK_THROWS_AS(acquisition_spec_from_json({{"beta", -1.0}}), ConfigurationError);
}
