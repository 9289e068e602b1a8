#include "archbo/design_space_json.hpp"

#include "archbo/errors.hpp"

namespace archbo {

using nlohmann::json;

json value_to_json(const VariableSpec& var, const Value& value) {
    if (const auto* x = std::get_if<double>(&value)) return *x;
    if (const auto* k = std::get_if<std::int64_t>(&value)) return *k;
    return var.format(value);
}

Value value_from_json(const VariableSpec& var, const json& j) {
    if (const auto* c = std::get_if<Categorical>(&var.kind)) {
        if (j.is_string()) {
            const auto name = j.get<std::string>();
            for (std::size_t k = 0; k < c->levels.size(); ++k)
                if (c->levels[k] == name) return Level{k};
            throw SchemaMismatch("schema mismatch: '" + name + "' is not a level of " + var.name);
        }
        throw SchemaMismatch("schema mismatch: categorical " + var.name + " expects a level name");
    }
    if (var.is_integer()) {
        if (j.is_number_integer()) return j.get<std::int64_t>();
        throw SchemaMismatch("schema mismatch: integer " + var.name + " expects an integer");
    }
    if (j.is_number()) return j.get<double>();
    throw SchemaMismatch("schema mismatch: continuous " + var.name + " expects a number");
}

namespace {

json variable_to_json(const VariableSpec& var) {
    json j;
    j["name"] = var.name;
    if (const auto* c = std::get_if<Continuous>(&var.kind)) {
        j["kind"] = "continuous";
        j["lower"] = c->lower;
        j["upper"] = c->upper;
    } else if (const auto* c = std::get_if<Integer>(&var.kind)) {
        j["kind"] = "integer";
        j["lower"] = c->lower;
        j["upper"] = c->upper;
    } else {
        j["kind"] = "categorical";
        j["levels"] = std::get<Categorical>(var.kind).levels;
    }
    return j;
}

VariableSpec variable_from_json(const json& j) {
    VariableSpec var;
    var.name = j.at("name").get<std::string>();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "continuous")
        var.kind = Continuous{j.at("lower").get<double>(), j.at("upper").get<double>()};
    else if (kind == "integer")
        var.kind = Integer{j.at("lower").get<std::int64_t>(), j.at("upper").get<std::int64_t>()};
    else if (kind == "categorical")
        var.kind = Categorical{j.at("levels").get<std::vector<std::string>>()};
    else
        throw SchemaMismatch("schema mismatch: unknown variable kind '" + kind + "'");
    return var;
}

const VariableSpec& checked(const std::vector<VariableSpec>& vars, std::size_t i) {
    if (i >= vars.size()) throw InvalidSpace("variable index " + std::to_string(i) + " out of range");
    return vars[i];
}

json values_to_json(const VariableSpec& var, const std::vector<Value>& values) {
    json arr = json::array();
    for (const auto& v : values) arr.push_back(value_to_json(var, v));
    return arr;
}

std::vector<Value> values_from_json(const VariableSpec& var, const json& arr) {
    std::vector<Value> out;
    for (const auto& v : arr) out.push_back(value_from_json(var, v));
    return out;
}

}  // namespace

json definition_to_json(const SpaceDefinition& def) {
    json j;
    j["variables"] = json::array();
    for (const auto& var : def.variables) j["variables"].push_back(variable_to_json(var));
    j["activation_rules"] = json::array();
    for (const auto& rule : def.activation_rules) {
        j["activation_rules"].push_back({{"child", rule.child},
                                         {"parent", rule.parent},
                                         {"activating_values", values_to_json(checked(def.variables, rule.parent),
                                                                              rule.activating_values)}});
    }
    j["value_rules"] = json::array();
    for (const auto& rule : def.value_rules) {
        json table = json::array();
        for (const auto& entry : rule.table) {
            table.push_back(
                {{"controller_value", value_to_json(checked(def.variables, rule.controller), entry.controller_value)},
                 {"allowed", values_to_json(checked(def.variables, rule.target), entry.allowed)}});
        }
        j["value_rules"].push_back({{"target", rule.target}, {"controller", rule.controller}, {"allowed", table}});
    }
    j["signature_vars"] = def.signature_vars;
    return j;
}

json space_to_json(const DesignSpace& space) { return definition_to_json(space.definition()); }

SpaceDefinition definition_from_json(const json& j) {
    SpaceDefinition def;
    try {
        for (const auto& v : j.at("variables")) def.variables.push_back(variable_from_json(v));
        for (const auto& r : j.value("activation_rules", json::array())) {
            ActivationRule rule;
            rule.child = r.at("child").get<std::size_t>();
            rule.parent = r.at("parent").get<std::size_t>();
            rule.activating_values = values_from_json(checked(def.variables, rule.parent), r.at("activating_values"));
            def.activation_rules.push_back(std::move(rule));
        }
        for (const auto& r : j.value("value_rules", json::array())) {
            ValueRule rule;
            rule.target = r.at("target").get<std::size_t>();
            rule.controller = r.at("controller").get<std::size_t>();
            for (const auto& e : r.at("allowed")) {
                rule.table.push_back(
                    {value_from_json(checked(def.variables, rule.controller), e.at("controller_value")),
                     values_from_json(checked(def.variables, rule.target), e.at("allowed"))});
            }
            def.value_rules.push_back(std::move(rule));
        }
        def.signature_vars = j.value("signature_vars", std::vector<std::size_t>{});
    } catch (const json::exception& e) {
        throw SchemaMismatch(std::string("schema mismatch: malformed design space: ") + e.what());
    }
    return def;
}

DesignSpace space_from_json(const json& j) { return DesignSpace(definition_from_json(j)); }

json point_to_json(const DesignSpace& space, const DesignPoint& point) {
    json j = json::object();
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto& var = space.variable(i);
        j[var.name] = point.active.at(i) ? value_to_json(var, point.values.at(i)) : json(nullptr);
    }
    return j;
}

DesignPoint point_from_json(const DesignSpace& space, const json& j) {
    if (!j.is_object()) throw SchemaMismatch("schema mismatch: a design point must be a JSON object");
    auto raw = space.imputed_values();
    for (const auto& [name, value] : j.items()) {
        const auto i = space.index_of(name);
        if (!value.is_null()) raw[i] = value_from_json(space.variable(i), value);
    }
    return correct(space, raw);
}

}  // namespace archbo
