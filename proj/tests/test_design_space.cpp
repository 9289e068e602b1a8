#include <doctest.h>

#include <algorithm>
#include <set>
#include <tuple>

#include "archbo/design_space.hpp"
#include "archbo/design_space_json.hpp"
#include "archbo/errors.hpp"
#include "archbo/turbofan.hpp"

using namespace archbo;
namespace tf = archbo::turbofan;

namespace {

std::vector<Value> raw_turbofan(bool fan, std::int64_t n, std::int64_t po = 1, std::int64_t bo = 1) {
    auto v = tf::space().imputed_values();
    v[tf::IncludeFan] = Level{fan ? 1u : 0u};
    v[tf::NShafts] = n;
    v[tf::PowerOfftake] = po;
    v[tf::BleedOfftake] = bo;
    return v;
}

// Checks the stored invariants of a corrected point directly.
void check_invariants(const DesignSpace& space, const DesignPoint& p) {
    REQUIRE(p.values.size() == space.size());
    CHECK(p.active == compute_activity(space, p.values));
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto& var = space.variable(i);
        REQUIRE(var.accepts(p.values[i]));
        if (!p.active[i]) CHECK(p.values[i] == var.imputation());
        if (const auto* c = std::get_if<Continuous>(&var.kind)) {
            CHECK(std::get<double>(p.values[i]) >= c->lower);
            CHECK(std::get<double>(p.values[i]) <= c->upper);
        }
    }
    CHECK(correct(space, p.values) == p);
}

SpaceDefinition two_level_space() {
    SpaceDefinition d;
    d.variables = {{"a", Categorical{{"x", "y", "z"}}}, {"b", Continuous{0.0, 1.0}}, {"k", Integer{1, 3}}};
    return d;
}

}  // namespace

TEST_CASE("validate: turbofan space has no diagnostics") {
    CHECK(validate(tf::make_space().definition()).empty());
}

TEST_CASE("validate: self-loop is reported as one cycle") {
    auto d = two_level_space();
    d.activation_rules.push_back({0, 0, {Level{1}}});
    const auto diags = validate(d);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].kind == Diagnostic::Kind::Cycle);
    CHECK(to_string(diags[0].kind) == "cycle");
    CHECK_THROWS_AS(DesignSpace{d}, InvalidSpace);
}

TEST_CASE("validate: longer cycles and degenerate bounds") {
    SpaceDefinition d;
    d.variables = {{"a", Integer{0, 2}}, {"b", Integer{0, 2}}, {"c", Continuous{1.0, 1.0}}};
    d.activation_rules = {{0, 1, {std::int64_t{1}}}, {1, 0, {std::int64_t{1}}}};
    const auto diags = validate(d);
    REQUIRE(diags.size() == 2);
    CHECK(std::count_if(diags.begin(), diags.end(), [](auto& g) { return g.kind == Diagnostic::Kind::Cycle; }) == 1);
    CHECK(std::count_if(diags.begin(), diags.end(),
                        [](auto& g) { return g.kind == Diagnostic::Kind::DegenerateBounds; }) == 1);
}

TEST_CASE("validate: other invariants") {
    SpaceDefinition d;
    d.variables = {{"a", Categorical{{"x"}}}, {"a", Categorical{{"p", "p"}}}, {"k", Integer{1, 3}}};
    d.value_rules.push_back({2, 0, {{Level{0}, {}}}});
    d.activation_rules.push_back({2, 7, {Level{0}}});
    const auto diags = validate(d);
    std::set<Diagnostic::Kind> kinds;
    for (const auto& g : diags) kinds.insert(g.kind);
    CHECK(kinds.count(Diagnostic::Kind::TooFewLevels));
    CHECK(kinds.count(Diagnostic::Kind::DuplicateLevel));
    CHECK(kinds.count(Diagnostic::Kind::DuplicateName));
    CHECK(kinds.count(Diagnostic::Kind::EmptyAllowedSet));
    CHECK(kinds.count(Diagnostic::Kind::IndexOutOfRange));
}

TEST_CASE("activity follows the fan and shaft rules") {
    const auto& sp = tf::space();
    auto mask = compute_activity(sp, raw_turbofan(false, 3));
    for (std::size_t v : {tf::BPR, tf::FPR, tf::IncludeGearbox, tf::MixedNozzle}) CHECK_FALSE(mask[v]);
    CHECK(mask[tf::OPR]);
    CHECK(mask[tf::PRFactor3]);

    mask = compute_activity(sp, raw_turbofan(true, 1));
    for (std::size_t v : {tf::PRFactor2, tf::PRFactor3, tf::RPM2, tf::RPM3}) CHECK_FALSE(mask[v]);
    for (std::size_t v : {tf::PRFactor1, tf::RPM1, tf::BPR, tf::MixedNozzle}) CHECK(mask[v]);

    DesignSpace flat(two_level_space());
    const auto all = compute_activity(flat, flat.imputed_values());
    CHECK(std::all_of(all.begin(), all.end(), [](bool b) { return b; }));
}

TEST_CASE("activity is independent of rule order") {
    SpaceDefinition d;
    d.variables = {{"a", Integer{0, 1}}, {"b", Integer{0, 1}}, {"c", Integer{0, 1}}, {"e", Continuous{0, 1}}};
    d.activation_rules = {{3, 2, {std::int64_t{1}}}, {2, 1, {std::int64_t{1}}}, {1, 0, {std::int64_t{1}}}};
    SpaceDefinition r = d;
    std::reverse(r.activation_rules.begin(), r.activation_rules.end());
    DesignSpace s1(d), s2(r);
    for (std::int64_t a = 0; a < 2; ++a)
        for (std::int64_t b = 0; b < 2; ++b)
            for (std::int64_t c = 0; c < 2; ++c) {
                std::vector<Value> v{a, b, c, 0.3};
                CHECK(compute_activity(s1, v) == compute_activity(s2, v));
            }
    std::vector<Value> v{std::int64_t{0}, std::int64_t{1}, std::int64_t{1}, 0.3};
    CHECK(compute_activity(s1, v) == std::vector<bool>{true, false, false, false});
}

TEST_CASE("correct: imputation, value rules, idempotence") {
    const auto& sp = tf::space();
    auto raw = raw_turbofan(false, 2);
    raw[tf::BPR] = 7.0;
    auto p = correct(sp, raw);
    CHECK(std::get<double>(p.values[tf::BPR]) == 7.25);
    CHECK_FALSE(p.active[tf::BPR]);

    p = correct(sp, raw_turbofan(true, 1, 3, 2));
    CHECK(std::get<std::int64_t>(p.values[tf::PowerOfftake]) == 1);
    CHECK(std::get<std::int64_t>(p.values[tf::BleedOfftake]) == 1);

    p = correct(sp, raw_turbofan(true, 2, 3, 3));
    CHECK(std::get<std::int64_t>(p.values[tf::PowerOfftake]) == 2);
    CHECK(correct(sp, p.values) == p);

    raw = raw_turbofan(true, 3);
    raw[tf::OPR] = 500.0;
    raw[tf::NShafts] = std::int64_t{9};
    p = correct(sp, raw);
    CHECK(std::get<double>(p.values[tf::OPR]) == 60.0);
    CHECK(std::get<std::int64_t>(p.values[tf::NShafts]) == 3);

    raw[tf::OPR] = std::int64_t{5};
    CHECK_THROWS_AS(correct(sp, raw), SchemaMismatch);
    raw[tf::OPR] = std::nan("");
    CHECK_THROWS_AS(correct(sp, raw), SchemaMismatch);
}

TEST_CASE("correct is idempotent on random raw values") {
    const auto& sp = tf::space();
    Rng rng(11);
    for (int k = 0; k < 500; ++k) {
        std::vector<Value> raw;
        for (const auto& var : sp.variables()) {
            if (const auto* c = std::get_if<Continuous>(&var.kind))
                raw.emplace_back(rng.uniform(c->lower - 5.0, c->upper + 5.0));
            else if (var.is_integer())
                raw.emplace_back(static_cast<std::int64_t>(rng.index(7)) - 2);
            else
                raw.emplace_back(Level{rng.index(2)});
        }
        const auto p = correct(sp, raw);
        check_invariants(sp, p);
    }
}

TEST_CASE("encode: dimension, normalization, one-hot") {
    const auto& sp = tf::space();
    CHECK(sp.encoded_dim() == 18);
    auto raw = raw_turbofan(true, 3);
    raw[tf::OPR] = 1.1;
    raw[tf::MixedNozzle] = Level{1};
    const auto p = correct(sp, raw);
    const auto z = encode(sp, p);
    REQUIRE(z.size() == 18);
    CHECK(z[static_cast<Eigen::Index>(sp.offset(tf::OPR))] == 0.0);
    CHECK(z[static_cast<Eigen::Index>(sp.offset(tf::MixedNozzle))] == 0.0);
    CHECK(z[static_cast<Eigen::Index>(sp.offset(tf::MixedNozzle)) + 1] == 1.0);
    CHECK(z[static_cast<Eigen::Index>(sp.offset(tf::NShafts))] == 1.0);
}

TEST_CASE("encoding ignores inactive values") {
    const auto& sp = tf::space();
    auto a = raw_turbofan(false, 1);
    auto b = a;
    a[tf::BPR] = 3.0;
    b[tf::BPR] = 11.0;
    a[tf::RPM3] = 1500.0;
    CHECK((encode(sp, correct(sp, a)) - encode(sp, correct(sp, b))).norm() == 0.0);
}

TEST_CASE("decode: argmax, rounding, round trip") {
    SpaceDefinition d;
    d.variables = {{"c", Categorical{{"p", "q"}}}, {"k", Integer{1, 3}}};
    DesignSpace s(d);
    Eigen::VectorXd z(3);
    z << 0.6, 0.4, 0.49;
    auto p = decode(s, z);
    CHECK(std::get<Level>(p.values[0]).index == 0);
    CHECK(std::get<std::int64_t>(p.values[1]) == 2);
    z << 0.6, 0.4, 0.75;
    CHECK(std::get<std::int64_t>(decode(s, z).values[1]) == 3);  // 1 + 1.5 rounds away from zero
    CHECK_THROWS_AS(decode(s, Eigen::VectorXd::Zero(2)), DimensionMismatch);

    const auto& sp = tf::space();
    Rng rng(3);
    for (int k = 0; k < 100; ++k) {
        const auto q = sample_uniform(sp, rng);
        CHECK(decode(sp, encode(sp, q)) == q);
    }
    // encode(decode(.)) is a projection.
    for (int k = 0; k < 50; ++k) {
        Eigen::VectorXd r(18);
        for (auto& x : r) x = rng.uniform();
        const auto once = encode(sp, decode(sp, r));
        CHECK((encode(sp, decode(sp, once)) - once).norm() == 0.0);
    }
}

TEST_CASE("latin hypercube stratification and DoE determinism") {
    Rng rng(4);
    const auto cube = latin_hypercube(10, 3, rng);
    for (Eigen::Index c = 0; c < 3; ++c) {
        std::set<int> bins;
        for (Eigen::Index r = 0; r < 10; ++r) bins.insert(static_cast<int>(cube(r, c) * 10));
        CHECK(bins.size() == 10);
    }

    SpaceDefinition d;
    d.variables = {{"x", Continuous{-2.0, 3.0}}};
    DesignSpace line(d);
    Rng r1(9, "doe");
    std::set<int> bins;
    for (const auto& p : sample_doe(line, 10, r1)) bins.insert(static_cast<int>((std::get<double>(p.values[0]) + 2.0) * 2));
    CHECK(bins.size() == 10);

    const auto& sp = tf::space();
    Rng a(5, "doe"), b(5, "doe");
    const auto pa = sample_doe(sp, 100, a);
    CHECK(pa == sample_doe(sp, 100, b));
    for (const auto& p : pa) check_invariants(sp, p);
}

TEST_CASE("enumeration matches a hand count") {
    const auto& sp = tf::space();
    const auto e = enumerate_discrete(sp);
    CHECK(e.cartesian == 216);

    // Independent count: fan branches times offtake choices per shaft count.
    std::set<std::tuple<int, int, int, int, int, int>> expected;
    for (int fan = 0; fan < 2; ++fan)
        for (int n = 1; n <= 3; ++n)
            for (int gb = 0; gb <= fan; ++gb)
                for (int mx = 0; mx <= fan; ++mx)
                    for (int po = 1; po <= n; ++po)
                        for (int bo = 1; bo <= n; ++bo) expected.insert({fan, n, gb, mx, po, bo});
    CHECK(expected.size() == 70);
    int by_formula = 0;
    for (int n = 1; n <= 3; ++n) by_formula += n * n * (1 + 4);
    CHECK(by_formula == 70);

    std::set<std::tuple<int, int, int, int, int, int>> got;
    for (const auto& p : e.assignments) {
        check_invariants(sp, p);
        const auto s = tf::to_state(p);
        got.insert({s.fan, s.shafts, s.gearbox, s.mixed, s.power_offtake, s.bleed_offtake});
    }
    CHECK(e.assignments.size() == 70);
    CHECK(got == expected);

    CHECK(count_architectures(sp) == 15);
    CHECK(count_distinct_projections(e, {tf::IncludeFan}) == 2);
    CHECK(count_distinct_projections(e, {tf::IncludeFan, tf::NShafts, tf::IncludeGearbox, tf::MixedNozzle,
                                         tf::PowerOfftake, tf::BleedOfftake}) == 70);

    SpaceDefinition d;
    d.variables = {{"c", Categorical{{"p", "q", "r"}}}};
    DesignSpace single(d);
    const auto one = enumerate_discrete(single);
    CHECK(one.cartesian == 3);
    CHECK(one.assignments.size() == 3);
    CHECK_THROWS_AS(enumerate_discrete(sp, 100), TooLarge);
}

TEST_CASE("space and point JSON round trip") {
    const auto& sp = tf::space();
    const auto j = space_to_json(sp);
    const DesignSpace back = space_from_json(j);
    CHECK(space_to_json(back) == j);
    CHECK(back.encoded_dim() == 18);

    Rng rng(8);
    for (int k = 0; k < 20; ++k) {
        const auto p = sample_uniform(sp, rng);
        const auto pj = point_to_json(sp, p);
        CHECK(point_from_json(sp, nlohmann::json::parse(pj.dump())) == p);
    }
    nlohmann::json bad = j;
    bad["variables"][0]["levels"] = {"only"};
    CHECK_THROWS_AS(space_from_json(bad), SchemaMismatch);  // rules name a level that no longer exists
    nlohmann::json flat = j;
    flat["variables"][tf::BPR]["upper"] = flat["variables"][tf::BPR]["lower"];
    CHECK_THROWS_AS(space_from_json(flat), InvalidSpace);
}
