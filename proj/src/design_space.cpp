#include "archbo/design_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "archbo/errors.hpp"

namespace archbo {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool in_domain(const VariableSpec& var, const Value& v) {
    if (!var.accepts(v)) return false;
    return std::visit(
        Overloaded{
            [&](const Continuous& c) {
                double x = std::get<double>(v);
                return x >= c.lower && x <= c.upper;
            },
            [&](const Integer& c) {
                auto k = std::get<std::int64_t>(v);
                return k >= c.lower && k <= c.upper;
            },
            [&](const Categorical& c) { return std::get<Level>(v).index < c.levels.size(); },
        },
        var.kind);
}

bool contains(const std::vector<Value>& set, const Value& v) {
    return std::find(set.begin(), set.end(), v) != set.end();
}

// Nearest allowed integer (ties to the smaller value) or lowest allowed level.
Value nearest_allowed(const VariableSpec& var, const Value& current, const std::vector<Value>& allowed) {
    if (var.is_categorical()) {
        Level best{std::numeric_limits<std::size_t>::max()};
        for (const auto& a : allowed) best = std::min(best, std::get<Level>(a));
        return best;
    }
    const auto x = std::get<std::int64_t>(current);
    std::int64_t best = 0;
    std::int64_t best_dist = std::numeric_limits<std::int64_t>::max();
    for (const auto& a : allowed) {
        auto k = std::get<std::int64_t>(a);
        auto dist = k > x ? k - x : x - k;
        if (dist < best_dist || (dist == best_dist && k < best)) {
            best = k;
            best_dist = dist;
        }
    }
    return best;
}

std::uint64_t domain_size(const VariableSpec& var) {
    if (const auto* c = std::get_if<Integer>(&var.kind))
        return static_cast<std::uint64_t>(c->upper - c->lower) + 1;
    if (const auto* c = std::get_if<Categorical>(&var.kind)) return c->levels.size();
    return 0;
}

Value domain_value(const VariableSpec& var, std::uint64_t k) {
    if (const auto* c = std::get_if<Integer>(&var.kind))
        return c->lower + static_cast<std::int64_t>(k);
    return Level{static_cast<std::size_t>(k)};
}

}  // namespace

std::size_t VariableSpec::encoded_size() const {
    if (const auto* c = std::get_if<Categorical>(&kind)) return c->levels.size();
    return 1;
}

Value VariableSpec::imputation() const {
    return std::visit(Overloaded{
                          [](const Continuous& c) -> Value { return 0.5 * (c.lower + c.upper); },
                          [](const Integer& c) -> Value { return c.lower; },
                          [](const Categorical&) -> Value { return Level{0}; },
                      },
                      kind);
}

bool VariableSpec::accepts(const Value& v) const {
    switch (kind.index()) {
        case 0: return std::holds_alternative<double>(v);
        case 1: return std::holds_alternative<std::int64_t>(v);
        default: return std::holds_alternative<Level>(v);
    }
}

std::string VariableSpec::format(const Value& v) const {
    std::ostringstream os;
    if (const auto* x = std::get_if<double>(&v)) {
        os.precision(17);
        os << *x;
    } else if (const auto* k = std::get_if<std::int64_t>(&v)) {
        os << *k;
    } else {
        const auto idx = std::get<Level>(v).index;
        const auto* cat = std::get_if<Categorical>(&kind);
        if (cat && idx < cat->levels.size())
            os << cat->levels[idx];
        else
            os << "#" << idx;
    }
    return os.str();
}

const std::vector<Value>* ValueRule::allowed_for(const Value& controller_value) const {
    for (const auto& entry : table)
        if (entry.controller_value == controller_value) return &entry.allowed;
    return nullptr;
}

std::string to_string(Diagnostic::Kind kind) {
    switch (kind) {
        case Diagnostic::Kind::DegenerateBounds: return "degenerate bounds";
        case Diagnostic::Kind::TooFewLevels: return "too few levels";
        case Diagnostic::Kind::DuplicateLevel: return "duplicate level";
        case Diagnostic::Kind::DuplicateName: return "duplicate name";
        case Diagnostic::Kind::IndexOutOfRange: return "index out of range";
        case Diagnostic::Kind::Cycle: return "cycle";
        case Diagnostic::Kind::MultipleActivationRules: return "multiple activation rules";
        case Diagnostic::Kind::ContinuousController: return "continuous controller";
        case Diagnostic::Kind::TypeMismatch: return "type mismatch";
        case Diagnostic::Kind::EmptyAllowedSet: return "empty allowed set";
        case Diagnostic::Kind::OutOfDomain: return "out of domain";
    }
    return "unknown";
}

std::vector<Diagnostic> validate(const SpaceDefinition& def) {
    std::vector<Diagnostic> out;
    auto report = [&](Diagnostic::Kind kind, std::string msg) { out.push_back({kind, std::move(msg)}); };
    const std::size_t n = def.variables.size();

    std::set<std::string> names;
    for (const auto& var : def.variables) {
        if (!names.insert(var.name).second)
            report(Diagnostic::Kind::DuplicateName, "variable '" + var.name + "' declared twice");
        std::visit(Overloaded{
                       [&](const Continuous& c) {
                           if (!(std::isfinite(c.lower) && std::isfinite(c.upper) && c.lower < c.upper))
                               report(Diagnostic::Kind::DegenerateBounds, var.name + ": need finite lower < upper");
                       },
                       [&](const Integer& c) {
                           if (!(c.lower < c.upper))
                               report(Diagnostic::Kind::DegenerateBounds, var.name + ": need lower < upper");
                       },
                       [&](const Categorical& c) {
                           if (c.levels.size() < 2)
                               report(Diagnostic::Kind::TooFewLevels, var.name + ": need at least 2 levels");
                           std::set<std::string> seen;
                           for (const auto& l : c.levels)
                               if (!seen.insert(l).second)
                                   report(Diagnostic::Kind::DuplicateLevel, var.name + ": level '" + l + "' repeated");
                       },
                   },
                   var.kind);
    }

    auto check_values = [&](const std::vector<Value>& values, std::size_t var, const std::string& where) {
        for (const auto& v : values) {
            if (!def.variables[var].accepts(v))
                report(Diagnostic::Kind::TypeMismatch, where + ": value type does not match " + def.variables[var].name);
            else if (!in_domain(def.variables[var], v))
                report(Diagnostic::Kind::OutOfDomain, where + ": value outside the domain of " + def.variables[var].name);
        }
    };

    std::vector<std::ptrdiff_t> parent_of(n, -1);
    for (std::size_t r = 0; r < def.activation_rules.size(); ++r) {
        const auto& rule = def.activation_rules[r];
        const std::string where = "activation rule " + std::to_string(r);
        if (rule.child >= n || rule.parent >= n) {
            report(Diagnostic::Kind::IndexOutOfRange, where + ": variable index out of range");
            continue;
        }
        if (parent_of[rule.child] >= 0) {
            report(Diagnostic::Kind::MultipleActivationRules,
                   where + ": " + def.variables[rule.child].name + " already has an activation rule");
            continue;
        }
        parent_of[rule.child] = static_cast<std::ptrdiff_t>(rule.parent);
        if (def.variables[rule.parent].is_continuous())
            report(Diagnostic::Kind::ContinuousController, where + ": parent must be discrete");
        else
            check_values(rule.activating_values, rule.parent, where);
    }

    // Each variable has at most one parent, so cycles are found by walking chains.
    std::vector<int> state(n, 0);  // 0 unvisited, 1 on current walk, 2 done
    for (std::size_t start = 0; start < n; ++start) {
        std::vector<std::size_t> walk;
        std::size_t v = start;
        while (state[v] == 0) {
            state[v] = 1;
            walk.push_back(v);
            if (parent_of[v] < 0) break;
            v = static_cast<std::size_t>(parent_of[v]);
        }
        if (state[v] == 1 && parent_of[v] >= 0) {
            std::string members;
            auto it = std::find(walk.begin(), walk.end(), v);
            for (; it != walk.end(); ++it) members += (members.empty() ? "" : " -> ") + def.variables[*it].name;
            report(Diagnostic::Kind::Cycle, "activation cycle: " + members);
        }
        for (auto w : walk) state[w] = 2;
    }

    for (std::size_t r = 0; r < def.value_rules.size(); ++r) {
        const auto& rule = def.value_rules[r];
        const std::string where = "value rule " + std::to_string(r);
        if (rule.target >= n || rule.controller >= n) {
            report(Diagnostic::Kind::IndexOutOfRange, where + ": variable index out of range");
            continue;
        }
        if (def.variables[rule.target].is_continuous())
            report(Diagnostic::Kind::TypeMismatch, where + ": target must be discrete");
        if (def.variables[rule.controller].is_continuous()) {
            report(Diagnostic::Kind::ContinuousController, where + ": controller must be discrete");
            continue;
        }
        for (const auto& entry : rule.table) {
            check_values({entry.controller_value}, rule.controller, where);
            if (entry.allowed.empty())
                report(Diagnostic::Kind::EmptyAllowedSet,
                       where + ": no allowed value for " + def.variables[rule.controller].format(entry.controller_value));
            else if (!def.variables[rule.target].is_continuous())
                check_values(entry.allowed, rule.target, where);
        }
    }

    for (auto s : def.signature_vars)
        if (s >= n) report(Diagnostic::Kind::IndexOutOfRange, "signature variable index out of range");
    return out;
}

DesignSpace::DesignSpace(SpaceDefinition definition) : def_(std::move(definition)) {
    auto diagnostics = validate(def_);
    if (!diagnostics.empty()) {
        std::string msg = "invalid design space:";
        for (const auto& d : diagnostics) msg += "\n  [" + to_string(d.kind) + "] " + d.message;
        throw InvalidSpace(msg);
    }
    offsets_.reserve(def_.variables.size());
    for (std::size_t i = 0; i < def_.variables.size(); ++i) {
        offsets_.push_back(encoded_dim_);
        encoded_dim_ += def_.variables[i].encoded_size();
        owner_.insert(owner_.end(), def_.variables[i].encoded_size(), i);
    }
}

std::size_t DesignSpace::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < def_.variables.size(); ++i)
        if (def_.variables[i].name == name) return i;
    throw SchemaMismatch("unknown variable '" + name + "'");
}

std::vector<Value> DesignSpace::imputed_values() const {
    std::vector<Value> v;
    v.reserve(size());
    for (const auto& var : def_.variables) v.push_back(var.imputation());
    return v;
}

std::vector<bool> compute_activity(const DesignSpace& space, const std::vector<Value>& values) {
    const auto& def = space.definition();
    const std::size_t n = space.size();
    std::vector<const ActivationRule*> rule_of(n, nullptr);
    for (const auto& rule : def.activation_rules) rule_of[rule.child] = &rule;

    // 0 unknown, 1 active, 2 inactive; the rule graph is acyclic so recursion terminates.
    std::vector<char> state(n, 0);
    auto resolve = [&](auto&& self, std::size_t i) -> bool {
        if (state[i] != 0) return state[i] == 1;
        bool on = true;
        if (const auto* rule = rule_of[i])
            on = self(self, rule->parent) && contains(rule->activating_values, values[rule->parent]);
        state[i] = on ? 1 : 2;
        return on;
    };
    std::vector<bool> active(n);
    for (std::size_t i = 0; i < n; ++i) active[i] = resolve(resolve, i);
    return active;
}

DesignPoint correct(const DesignSpace& space, const std::vector<Value>& raw_values) {
    const std::size_t n = space.size();
    if (raw_values.size() != n)
        throw SchemaMismatch("schema mismatch: expected " + std::to_string(n) + " values, got " +
                             std::to_string(raw_values.size()));
    std::vector<Value> v = raw_values;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& var = space.variable(i);
        if (!var.accepts(v[i])) throw SchemaMismatch("schema mismatch: wrong value type for " + var.name);
        std::visit(Overloaded{
                       [&](const Continuous& c) {
                           double x = std::get<double>(v[i]);
                           if (!std::isfinite(x)) throw SchemaMismatch("schema mismatch: non-finite value for " + var.name);
                           v[i] = std::clamp(x, c.lower, c.upper);
                       },
                       [&](const Integer& c) { v[i] = std::clamp(std::get<std::int64_t>(v[i]), c.lower, c.upper); },
                       [&](const Categorical& c) {
                           if (std::get<Level>(v[i]).index >= c.levels.size())
                               throw SchemaMismatch("schema mismatch: level out of range for " + var.name);
                       },
                   },
                   var.kind);
    }

    const auto& rules = space.definition().value_rules;
    for (std::size_t pass = 0; pass <= n + 1; ++pass) {
        auto active = compute_activity(space, v);
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (active[i]) continue;
            auto imputed = space.variable(i).imputation();
            if (v[i] != imputed) {
                v[i] = imputed;
                changed = true;
            }
        }
        for (const auto& rule : rules) {
            if (!active[rule.target]) continue;
            const auto* allowed = rule.allowed_for(v[rule.controller]);
            if (allowed && !contains(*allowed, v[rule.target])) {
                v[rule.target] = nearest_allowed(space.variable(rule.target), v[rule.target], *allowed);
                changed = true;
            }
        }
        if (!changed) return DesignPoint{std::move(v), std::move(active)};
    }
    throw InvalidSpace("correction did not reach a fixpoint; activation and value rules interact cyclically");
}

Eigen::VectorXd encode(const DesignSpace& space, const DesignPoint& point) {
    if (point.values.size() != space.size())
        throw DimensionMismatch("encode: point has " + std::to_string(point.values.size()) + " values, space has " +
                                std::to_string(space.size()));
    Eigen::VectorXd z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.encoded_dim()));
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto o = static_cast<Eigen::Index>(space.offset(i));
        const auto& value = point.values[i];
        std::visit(Overloaded{
                       [&](const Continuous& c) { z[o] = (std::get<double>(value) - c.lower) / (c.upper - c.lower); },
                       [&](const Integer& c) {
                           z[o] = static_cast<double>(std::get<std::int64_t>(value) - c.lower) /
                                  static_cast<double>(c.upper - c.lower);
                       },
                       [&](const Categorical&) { z[o + static_cast<Eigen::Index>(std::get<Level>(value).index)] = 1.0; },
                   },
                   space.variable(i).kind);
    }
    return z;
}

DesignPoint decode(const DesignSpace& space, const Eigen::VectorXd& z) {
    if (static_cast<std::size_t>(z.size()) != space.encoded_dim())
        throw DimensionMismatch("decode: expected " + std::to_string(space.encoded_dim()) + " coordinates, got " +
                                std::to_string(z.size()));
    std::vector<Value> raw;
    raw.reserve(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto o = static_cast<Eigen::Index>(space.offset(i));
        raw.push_back(std::visit(
            Overloaded{
                [&](const Continuous& c) -> Value {
                    const double t = std::clamp(z[o], 0.0, 1.0);
                    const double x = c.lower + t * (c.upper - c.lower);
                    // Prefer a neighbour that encodes back to t exactly.
                    double lo = x, hi = x;
                    for (int step = 0; step < 4; ++step) {
                        if ((lo - c.lower) / (c.upper - c.lower) == t) return std::clamp(lo, c.lower, c.upper);
                        if ((hi - c.lower) / (c.upper - c.lower) == t) return std::clamp(hi, c.lower, c.upper);
                        lo = std::nextafter(lo, -HUGE_VAL);
                        hi = std::nextafter(hi, HUGE_VAL);
                    }
                    return x;
                },
                [&](const Integer& c) -> Value {
                    const double span = static_cast<double>(c.upper - c.lower);
                    return c.lower + round_half_away(std::clamp(z[o], 0.0, 1.0) * span);
                },
                [&](const Categorical& c) -> Value {
                    std::size_t best = 0;
                    for (std::size_t k = 1; k < c.levels.size(); ++k)
                        if (z[o + static_cast<Eigen::Index>(k)] > z[o + static_cast<Eigen::Index>(best)]) best = k;
                    return Level{best};
                },
            },
            space.variable(i).kind));
    }
    return correct(space, raw);
}

Eigen::MatrixXd latin_hypercube(std::size_t n, std::size_t dim, Rng& rng) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    std::vector<std::size_t> strata(n);
    for (std::size_t d = 0; d < dim; ++d) {
        for (std::size_t i = 0; i < n; ++i) strata[i] = i;
        rng.shuffle(strata.begin(), strata.end());
        for (std::size_t i = 0; i < n; ++i)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) =
                (static_cast<double>(strata[i]) + rng.uniform()) / static_cast<double>(n);
    }
    return out;
}

std::vector<DesignPoint> sample_doe(const DesignSpace& space, std::size_t n, Rng& rng) {
    Eigen::MatrixXd cube = latin_hypercube(n, space.encoded_dim(), rng);
    std::vector<DesignPoint> points;
    points.reserve(n);
    for (Eigen::Index i = 0; i < cube.rows(); ++i) points.push_back(decode(space, cube.row(i).transpose()));
    return points;
}

DesignPoint sample_uniform(const DesignSpace& space, Rng& rng) {
    std::vector<Value> raw;
    raw.reserve(space.size());
    for (const auto& var : space.variables()) {
        raw.push_back(std::visit(
            Overloaded{
                [&](const Continuous& c) -> Value { return rng.uniform(c.lower, c.upper); },
                [&](const Integer& c) -> Value {
                    return c.lower + static_cast<std::int64_t>(rng.index(static_cast<std::size_t>(c.upper - c.lower) + 1));
                },
                [&](const Categorical& c) -> Value { return Level{rng.index(c.levels.size())}; },
            },
            var.kind));
    }
    return correct(space, raw);
}

DiscreteEnumeration enumerate_discrete(const DesignSpace& space, std::uint64_t cap) {
    std::vector<std::size_t> discrete;
    std::uint64_t cartesian = 1;
    for (std::size_t i = 0; i < space.size(); ++i) {
        if (!space.variable(i).is_discrete()) continue;
        discrete.push_back(i);
        const auto size = domain_size(space.variable(i));
        if (cartesian > cap / size)
            throw TooLarge("discrete enumeration exceeds the cap of " + std::to_string(cap) + " assignments");
        cartesian *= size;
    }
    if (cartesian > cap)
        throw TooLarge("discrete enumeration exceeds the cap of " + std::to_string(cap) + " assignments");

    DiscreteEnumeration result;
    result.cartesian = cartesian;
    std::set<std::vector<Value>> seen;
    std::vector<std::uint64_t> digit(discrete.size(), 0);
    std::vector<Value> raw = space.imputed_values();
    for (std::uint64_t k = 0; k < cartesian; ++k) {
        for (std::size_t j = 0; j < discrete.size(); ++j)
            raw[discrete[j]] = domain_value(space.variable(discrete[j]), digit[j]);
        auto point = correct(space, raw);
        if (seen.insert(point.values).second) result.assignments.push_back(std::move(point));
        // Mixed-radix increment, last variable fastest.
        for (std::size_t j = discrete.size(); j-- > 0;) {
            if (++digit[j] < domain_size(space.variable(discrete[j]))) break;
            digit[j] = 0;
        }
    }
    return result;
}

std::size_t count_distinct_projections(const DiscreteEnumeration& enumeration,
                                       const std::vector<std::size_t>& signature) {
    std::set<std::vector<Value>> projections;
    for (const auto& point : enumeration.assignments) {
        std::vector<Value> key;
        key.reserve(signature.size());
        for (auto s : signature) key.push_back(point.values.at(s));
        projections.insert(std::move(key));
    }
    return projections.size();
}

std::size_t count_architectures(const DesignSpace& space, std::uint64_t cap) {
    if (space.definition().signature_vars.empty())
        throw ConfigurationError("count_architectures: the space declares no signature variables");
    return count_distinct_projections(enumerate_discrete(space, cap), space.definition().signature_vars);
}

std::int64_t round_half_away(double x) { return static_cast<std::int64_t>(std::llround(x)); }

}  // namespace archbo
