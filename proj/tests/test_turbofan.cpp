#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "archbo/errors.hpp"
#include "archbo/turbofan.hpp"

using namespace archbo;
namespace tf = archbo::turbofan;

namespace {

DesignPoint make_point(const tf::State& s) {
    std::vector<Value> v(tf::kVarCount);
    v[tf::IncludeFan] = Level{s.fan ? 1u : 0u};
    v[tf::NShafts] = std::int64_t{s.shafts};
    v[tf::IncludeGearbox] = Level{s.gearbox ? 1u : 0u};
    v[tf::MixedNozzle] = Level{s.mixed ? 1u : 0u};
    v[tf::PowerOfftake] = std::int64_t{s.power_offtake};
    v[tf::BleedOfftake] = std::int64_t{s.bleed_offtake};
    v[tf::BPR] = s.bpr;
    v[tf::FPR] = s.fpr;
    v[tf::OPR] = s.opr;
    for (std::size_t i = 0; i < 3; ++i) {
        v[tf::PRFactor1 + i] = s.pr_factor[i];
        v[tf::RPM1 + i] = s.rpm[i];
    }
    return correct(tf::space(), v);
}

tf::BenchConfig hidden_off() {
    tf::BenchConfig c;
    c.enable_hidden_constraint = false;
    return c;
}

}  // namespace

TEST_CASE("turbojet reference point") {
    tf::State s;
    s.opr = 1.1;
    s.pr_factor[0] = 0.5;
    s.rpm[0] = tf::ideal_rpm(s, 0);
    const auto e = tf::evaluate(make_point(s), hidden_off());
    REQUIRE(e.ok());
    CHECK(e.objective == doctest::Approx(22.0).epsilon(1e-12));
    CHECK(e.constraints[0] == doctest::Approx(-0.1).epsilon(1e-12));
    CHECK(e.constraints[1] == doctest::Approx(-0.4).epsilon(1e-12));
    CHECK(e.constraints[2] == doctest::Approx(1.1 - 15.0).epsilon(1e-12));
    CHECK(e.constraints[3] == -1.0);
    CHECK(e.constraints[4] == -1.0);
}

TEST_CASE("analytic optimum point") {
    tf::State s;
    s.fan = s.gearbox = s.mixed = true;
    s.shafts = 3;
    s.bpr = 12.5;
    s.fpr = 1.1;
    s.opr = 60.0;
    for (int i = 0; i < 3; ++i) s.pr_factor[i] = 0.3;
    for (std::size_t i = 0; i < 3; ++i) s.rpm[i] = tf::ideal_rpm(s, i);
    const auto p = make_point(s);
    const auto e = tf::evaluate(p, hidden_off());
    REQUIRE(e.ok());
    CHECK(e.objective == doctest::Approx(6.6).epsilon(1e-12));
    CHECK(e.feasible());
    CHECK(e.constraints[2] == doctest::Approx(std::cbrt(60.0) - 15.0).epsilon(1e-12));
    // The default failure region leaves this point evaluable.
    CHECK(tf::evaluate(p, tf::BenchConfig{}).ok());

    s.pr_factor[0] = s.pr_factor[1] = s.pr_factor[2] = 0.9;
    CHECK(tf::evaluate(make_point(s), hidden_off()).constraints[1] == doctest::Approx(1.8));
}

TEST_CASE("evaluate rejects uncorrected points") {
    tf::State s;
    auto p = make_point(s);
    p.values[tf::BPR] = 3.0;  // inactive without a fan
    CHECK_THROWS_AS(tf::evaluate(p, {}), UncorrectedPoint);
    p.values.pop_back();
    CHECK_THROWS_AS(tf::evaluate(p, {}), DimensionMismatch);
}

TEST_CASE("evaluate is pure and constraints are finite") {
    Rng rng(1);
    const auto p = sample_uniform(tf::space(), rng);
    const auto first = tf::evaluate(p, hidden_off());
    for (int k = 0; k < 10000; ++k) {
        const auto again = tf::evaluate(p, hidden_off());
        REQUIRE(std::memcmp(&again.objective, &first.objective, sizeof(double)) == 0);
        REQUIRE(again.constraints == first.constraints);
    }
    for (int k = 0; k < 2000; ++k) {
        const auto q = sample_uniform(tf::space(), rng);
        const auto e = tf::evaluate(q, hidden_off());
        const auto s = tf::to_state(q);
        for (double c : e.constraints) CHECK(std::isfinite(c));
        for (int i = s.shafts; i < 3; ++i) CHECK(e.constraints[static_cast<std::size_t>(2 + i)] == -1.0);
    }
}

TEST_CASE("TSFC stays inside its envelope on random designs") {
    Rng rng(11);
    double lo = HUGE_VAL, hi = -HUGE_VAL;
    for (int k = 0; k < 1'000'000; ++k) {
        const auto e = tf::evaluate(sample_uniform(tf::space(), rng), hidden_off());
        lo = std::min(lo, e.objective);
        hi = std::max(hi, e.objective);
    }
    CHECK(lo >= 6.0);
    CHECK(hi <= 25.0);
    MESSAGE("TSFC range over 1e6 random designs: [" << lo << ", " << hi << "]");
}

TEST_CASE("failure rate") {
    CHECK(tf::failure_rate(hidden_off(), 10000, 1) == 0.0);
    tf::BenchConfig high;
    high.failure_threshold = 2.0;
    CHECK(tf::failure_rate(high, 10000, 1) == 0.0);
    const double rate = tf::failure_rate({}, 20000, 2);
    CHECK(rate > 0.45);
    CHECK(rate < 0.55);
    const double tau = tf::calibrate_threshold(0.3, 20000, 3);
    tf::BenchConfig calibrated;
    calibrated.failure_threshold = tau;
    CHECK(std::abs(tf::failure_rate(calibrated, 20000, 3) - 0.3) < 1e-3);
}

TEST_CASE("oracle finds the analytic optimum and is self-consistent") {
    const auto off = tf::brute_force_optimum(hidden_off(), 0, 10000);
    REQUIRE(off.objective);
    CHECK(*off.objective >= 6.599);
    CHECK(*off.objective <= 6.601);
    CHECK(off.per_assignment.size() == 70);
    CHECK(tf::evaluate(*off.point, hidden_off()).objective == *off.objective);

    const auto on = tf::brute_force_optimum({}, 0, 10000);
    REQUIRE(on.objective);
    CHECK(*on.objective >= 6.6 - 1e-9);
    CHECK(*on.objective <= 7.5);
    CHECK(std::abs(*on.objective - tf::kReferenceOptimum) < 0.02);
    CHECK(tf::evaluate(*on.point, {}).feasible());

    CHECK_THROWS_AS(tf::brute_force_optimum({}, 0, 0), ConfigurationError);
}

TEST_CASE("bench config JSON") {
    tf::BenchConfig c;
    c.failure_threshold = 0.25;
    c.enable_hidden_constraint = false;
    const auto back = tf::bench_config_from_json(nlohmann::json::parse(tf::to_json(c).dump()));
    CHECK(back.failure_threshold == 0.25);
    CHECK_FALSE(back.enable_hidden_constraint);
    CHECK_THROWS_AS(tf::bench_config_from_json({{"tsfc_base", 0.0}}), ConfigurationError);
}
