#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "archbo/run_history.hpp"

namespace archbo {

/// Names accepted by make_registered_problem.
std::vector<std::string> registered_problems();

bool is_registered_problem(const std::string& name);

/// Builds a registered problem from its bench settings (may be empty or null).
/// Throws ConfigurationError for unknown names.
Problem make_registered_problem(const std::string& name, const nlohmann::json& bench = nullptr);

}  // namespace archbo
