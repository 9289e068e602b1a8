#include "archbo/problems.hpp"

#include <algorithm>

#include "archbo/errors.hpp"
#include "archbo/turbofan.hpp"

namespace archbo {

std::vector<std::string> registered_problems() { return {"simple-turbofan"}; }

bool is_registered_problem(const std::string& name) {
    const auto names = registered_problems();
    return std::find(names.begin(), names.end(), name) != names.end();
}

Problem make_registered_problem(const std::string& name, const nlohmann::json& bench) {
    if (name == "simple-turbofan")
        return turbofan::make_problem(bench.is_null() ? turbofan::BenchConfig{} : turbofan::bench_config_from_json(bench));
    throw ConfigurationError("unknown problem '" + name + "'");
}

}  // namespace archbo
