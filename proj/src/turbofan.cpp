#include "archbo/turbofan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "archbo/compass_search.hpp"
#include "archbo/errors.hpp"

namespace archbo::turbofan {

namespace {

const Value kFalse = Level{0};
const Value kTrue = Level{1};

VariableSpec boolean(std::string name) { return {std::move(name), Categorical{{"False", "True"}}}; }

std::vector<ValueRule::Entry> offtake_table() {
    std::vector<ValueRule::Entry> table;
    for (std::int64_t n = 1; n <= 3; ++n) {
        std::vector<Value> allowed;
        for (std::int64_t k = 1; k <= n; ++k) allowed.emplace_back(k);
        table.push_back({Value{n}, allowed});
    }
    return table;
}

bool failed(const Outputs& out, const BenchConfig& config) {
    return config.enable_hidden_constraint && out.failure_indicator > config.failure_threshold;
}

bool satisfies(const Outputs& out) {
    return std::all_of(std::begin(out.constraints), std::end(out.constraints),
                       [](double c) { return c <= kFeasibilityTolerance; });
}

std::vector<Value> to_values(const State& s) {
    std::vector<Value> v(kVarCount);
    v[IncludeFan] = Level{s.fan ? 1u : 0u};
    v[NShafts] = std::int64_t{s.shafts};
    v[IncludeGearbox] = Level{s.gearbox ? 1u : 0u};
    v[MixedNozzle] = Level{s.mixed ? 1u : 0u};
    v[PowerOfftake] = std::int64_t{s.power_offtake};
    v[BleedOfftake] = std::int64_t{s.bleed_offtake};
    v[BPR] = s.bpr;
    v[FPR] = s.fpr;
    v[OPR] = s.opr;
    for (std::size_t i = 0; i < 3; ++i) {
        v[PRFactor1 + i] = s.pr_factor[i];
        v[RPM1 + i] = s.rpm[i];
    }
    return v;
}

double* field(State& s, std::size_t var) {
    switch (var) {
    case BPR: return &s.bpr;
    case FPR: return &s.fpr;
    case OPR: return &s.opr;
    case PRFactor1:
    case PRFactor2:
    case PRFactor3: return &s.pr_factor[var - PRFactor1];
    default: return &s.rpm[var - RPM1];
    }
}

}  // namespace

void BenchConfig::validate() const {
    if (!(tsfc_base > 0.0) || !std::isfinite(tsfc_base)) throw ConfigurationError("bench.tsfc_base must be > 0");
    if (!std::isfinite(failure_threshold)) throw ConfigurationError("bench.failure_threshold must be finite");
}

nlohmann::json to_json(const BenchConfig& c) {
    return {{"tsfc_base", c.tsfc_base},
            {"failure_threshold", c.failure_threshold},
            {"enable_hidden_constraint", c.enable_hidden_constraint}};
}

BenchConfig bench_config_from_json(const nlohmann::json& j) {
    BenchConfig c;
    try {
        c.tsfc_base = j.value("tsfc_base", c.tsfc_base);
        c.failure_threshold = j.value("failure_threshold", c.failure_threshold);
        c.enable_hidden_constraint = j.value("enable_hidden_constraint", c.enable_hidden_constraint);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError(std::string("malformed bench config: ") + e.what());
    }
    c.validate();
    return c;
}

DesignSpace make_space() {
    SpaceDefinition d;
    d.variables = {
        boolean("IncludeFan"),
        {"n_shafts", Integer{1, 3}},
        boolean("IncludeGearbox"),
        boolean("MixedNozzle"),
        {"PowerOfftake", Integer{1, 3}},
        {"BleedOfftake", Integer{1, 3}},
        {"BPR", Continuous{2.0, 12.5}},
        {"FPR", Continuous{1.1, 1.8}},
        {"OPR", Continuous{1.1, 60.0}},
        {"PR_factor_1", Continuous{0.1, 0.9}},
        {"PR_factor_2", Continuous{0.1, 0.9}},
        {"PR_factor_3", Continuous{0.1, 0.9}},
        {"RPM_1", Continuous{1000.0, 20000.0}},
        {"RPM_2", Continuous{1000.0, 20000.0}},
        {"RPM_3", Continuous{1000.0, 20000.0}},
    };
    for (std::size_t child : {IncludeGearbox, MixedNozzle, BPR, FPR})
        d.activation_rules.push_back({child, IncludeFan, {kTrue}});
    d.activation_rules.push_back({PRFactor2, NShafts, {std::int64_t{2}, std::int64_t{3}}});
    d.activation_rules.push_back({PRFactor3, NShafts, {std::int64_t{3}}});
    d.activation_rules.push_back({RPM2, NShafts, {std::int64_t{2}, std::int64_t{3}}});
    d.activation_rules.push_back({RPM3, NShafts, {std::int64_t{3}}});
    d.value_rules.push_back({PowerOfftake, NShafts, offtake_table()});
    d.value_rules.push_back({BleedOfftake, NShafts, offtake_table()});
    d.signature_vars = {IncludeFan, NShafts, IncludeGearbox, MixedNozzle};
    return DesignSpace(std::move(d));
}

const DesignSpace& space() {
    static const DesignSpace instance = make_space();
    return instance;
}

State to_state(const DesignPoint& p) {
    if (p.values.size() != kVarCount)
        throw DimensionMismatch("turbofan point has " + std::to_string(p.values.size()) + " values, expected " +
                                std::to_string(kVarCount));
    State s;
    s.fan = std::get<Level>(p.values[IncludeFan]).index == 1;
    s.gearbox = std::get<Level>(p.values[IncludeGearbox]).index == 1;
    s.mixed = std::get<Level>(p.values[MixedNozzle]).index == 1;
    s.shafts = static_cast<int>(std::get<std::int64_t>(p.values[NShafts]));
    s.power_offtake = static_cast<int>(std::get<std::int64_t>(p.values[PowerOfftake]));
    s.bleed_offtake = static_cast<int>(std::get<std::int64_t>(p.values[BleedOfftake]));
    s.bpr = std::get<double>(p.values[BPR]);
    s.fpr = std::get<double>(p.values[FPR]);
    s.opr = std::get<double>(p.values[OPR]);
    for (std::size_t i = 0; i < 3; ++i) {
        s.pr_factor[i] = std::get<double>(p.values[PRFactor1 + i]);
        s.rpm[i] = std::get<double>(p.values[RPM1 + i]);
    }
    return s;
}

double ideal_rpm(const State& s, std::size_t shaft) {
    double u_hat = 0.3 + 0.625 * (s.pr_factor[shaft] - 0.1);
    if (shaft == 0 && s.fan && s.gearbox) u_hat *= 0.6;
    return 1000.0 + 19000.0 * u_hat;
}

Outputs compute(const State& s, double tsfc_base) {
    const double fan = s.fan ? 1.0 : 0.0;
    const double gb = s.gearbox ? 1.0 : 0.0;
    const double mx = s.mixed ? 1.0 : 0.0;
    const int n = s.shafts;
    const double b = (s.bpr - 2.0) / 10.5;
    const double p = (s.fpr - 1.1) / 0.7;
    const double q = std::log(s.opr / 1.1) / std::log(60.0 / 1.1);

    double eta = 0.18 * q + fan * 0.42 * std::pow(b, 0.7) * (1.0 - 0.45 * p) + 0.02 * (n - 1) + fan * gb * 0.05 * b +
                 fan * mx * 0.01 - 0.004 * (s.power_offtake - 1) - 0.004 * (s.bleed_offtake - 1);

    double penalty = 0.0, sum_r = 0.0, sum_u = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = (s.rpm[i] - 1000.0) / 19000.0;
        const double u_hat = (ideal_rpm(s, static_cast<std::size_t>(i)) - 1000.0) / 19000.0;
        penalty += (u - u_hat) * (u - u_hat);
        sum_r += s.pr_factor[i];
        sum_u += u;
    }
    penalty *= 2.0;

    Outputs out;
    out.tsfc = tsfc_base * (1.0 - eta) + penalty;
    const double m_jet =
        0.8 + 0.4 * q - 0.05 * (n - 1) + fan * (-0.4 * b + 0.1 * p - 0.05 * mx) + (1.0 - fan) * 0.1;
    out.constraints[0] = m_jet - 1.0;
    out.constraints[1] = sum_r - 0.9;
    for (int i = 0; i < 3; ++i)
        out.constraints[2 + i] = i < n ? std::pow(s.opr, s.pr_factor[i] / sum_r) - 15.0 : -1.0;

    const double z1 = q + sum_u / n;
    const double z2 = fan * b + sum_r / n;
    out.failure_indicator = std::sin(13.0 * z1) * std::cos(9.0 * z2) + 0.15 * std::sin(29.0 * z1 * z2);
    return out;
}

Evaluation evaluate(const DesignPoint& point, const BenchConfig& config) {
    if (point.values.size() != kVarCount)
        throw DimensionMismatch("turbofan point has " + std::to_string(point.values.size()) + " values, expected " +
                                std::to_string(kVarCount));
    if (correct(space(), point.values) != point) throw UncorrectedPoint("turbofan evaluate requires a corrected point");
    const Outputs out = compute(to_state(point), config.tsfc_base);
    if (failed(out, config)) return Evaluation::failure();
    return Evaluation::success(out.tsfc, std::vector<double>(std::begin(out.constraints), std::end(out.constraints)));
}

Problem make_problem(const BenchConfig& config) {
    config.validate();
    return {"simple-turbofan", space(), kConstraintCount,
            [config](const DesignPoint& p) { return evaluate(p, config); }};
}

double failure_rate(const BenchConfig& config, std::size_t n_samples, std::uint64_t seed) {
    if (n_samples == 0) throw ConfigurationError("failure_rate needs at least one sample");
    if (!config.enable_hidden_constraint) return 0.0;
    Rng rng(seed, "bench");
    std::size_t failures = 0;
    for (std::size_t k = 0; k < n_samples; ++k)
        if (failed(compute(to_state(sample_uniform(space(), rng)), config.tsfc_base), config)) ++failures;
    return static_cast<double>(failures) / static_cast<double>(n_samples);
}

double calibrate_threshold(double target_rate, std::size_t n_samples, std::uint64_t seed) {
    if (!(target_rate > 0.0 && target_rate < 1.0)) throw ConfigurationError("target failure rate must lie in (0, 1)");
    if (n_samples == 0) throw ConfigurationError("calibration needs at least one sample");
    Rng rng(seed, "bench");
    std::vector<double> h(n_samples);
    for (auto& v : h) v = compute(to_state(sample_uniform(space(), rng)), 22.0).failure_indicator;
    std::sort(h.begin(), h.end());
    // Bisection on the threshold over the sorted indicator values.
    auto rate = [&](double tau) {
        return static_cast<double>(h.end() - std::upper_bound(h.begin(), h.end(), tau)) / static_cast<double>(h.size());
    };
    double lo = h.front() - 1.0, hi = h.back() + 1.0;
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (rate(mid) > target_rate ? lo : hi) = mid;
    }
    return hi;
}

OracleResult brute_force_optimum(const BenchConfig& config, std::uint64_t seed, std::size_t effort) {
    config.validate();
    if (effort < 10'000) throw ConfigurationError("oracle effort must be at least 10000 samples per assignment");
    const DesignSpace& sp = space();
    const auto assignments = enumerate_discrete(sp).assignments;
    constexpr double kInf = std::numeric_limits<double>::infinity();

    OracleResult result;
    for (std::size_t a = 0; a < assignments.size(); ++a) {
        const DesignPoint& base = assignments[a];
        std::vector<std::size_t> vars;
        std::vector<double> lower, upper;
        for (std::size_t i = 0; i < sp.size(); ++i) {
            const auto* c = std::get_if<Continuous>(&sp.variable(i).kind);
            if (!c || !base.active[i]) continue;
            vars.push_back(i);
            lower.push_back(c->lower);
            upper.push_back(c->upper);
        }
        const State base_state = to_state(base);
        auto score = [&](const std::vector<double>& x) {
            State s = base_state;
            for (std::size_t k = 0; k < vars.size(); ++k) *field(s, vars[k]) = x[k];
            const Outputs out = compute(s, config.tsfc_base);
            ++result.evaluations;
            return failed(out, config) || !satisfies(out) ? kInf : out.tsfc;
        };

        Rng rng(seed, "bench", a);
        std::vector<std::pair<double, std::vector<double>>> top;
        std::vector<double> x(vars.size());
        for (std::size_t k = 0; k < effort; ++k) {
            for (std::size_t d = 0; d < vars.size(); ++d) x[d] = rng.uniform(lower[d], upper[d]);
            const double f = score(x);
            if (f == kInf) continue;
            if (top.size() == 5 && !(f < top.back().first)) continue;
            if (top.size() == 5) top.pop_back();
            auto pos = std::upper_bound(top.begin(), top.end(), f,
                                        [](double v, const auto& e) { return v < e.first; });
            top.insert(pos, {f, x});
        }

        AssignmentOptimum best{base, std::nullopt};
        std::vector<double> best_x;
        for (const auto& [f0, x0] : top) {
            auto polished = compass_search<double>(score, x0, lower, upper, {0.1, 1e-10, 0.5, 20'000});
            if (!best.objective || polished.score < *best.objective) {
                best.objective = polished.score;
                best_x = polished.x;
            }
        }
        if (best.objective) {
            State s = base_state;
            for (std::size_t k = 0; k < vars.size(); ++k) *field(s, vars[k]) = best_x[k];
            best.point = correct(sp, to_values(s));
            const Evaluation check = evaluate(best.point, config);
            best.objective = check.feasible() ? std::optional<double>(check.objective) : std::nullopt;
        }
        if (best.objective && (!result.objective || *best.objective < *result.objective)) {
            result.objective = best.objective;
            result.point = best.point;
        }
        result.per_assignment.push_back(std::move(best));
    }
    return result;
}

}  // namespace archbo::turbofan
