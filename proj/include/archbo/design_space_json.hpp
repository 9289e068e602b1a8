#pragma once

#include <json.hpp>

#include "archbo/design_space.hpp"

namespace archbo {

/// JSON form of a value: number, integer, or level name.
nlohmann::json value_to_json(const VariableSpec& var, const Value& value);

/// Throws SchemaMismatch when `j` cannot be read as a value of `var`.
Value value_from_json(const VariableSpec& var, const nlohmann::json& j);

/// `{"variables":[...], "activation_rules":[...], "value_rules":[...], "signature_vars":[...]}`
nlohmann::json space_to_json(const DesignSpace& space);
nlohmann::json definition_to_json(const SpaceDefinition& definition);
SpaceDefinition definition_from_json(const nlohmann::json& j);

/// Throws InvalidSpace when the document describes an invalid space.
DesignSpace space_from_json(const nlohmann::json& j);

/// Named-value object; inactive variables are written as null.
nlohmann::json point_to_json(const DesignSpace& space, const DesignPoint& point);

/// Reads a named-value object (nulls and missing names take imputation values) and corrects it.
DesignPoint point_from_json(const DesignSpace& space, const nlohmann::json& j);

}  // namespace archbo
