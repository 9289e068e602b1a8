#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "archbo/acquisition.hpp"
#include "archbo/gaussian_process.hpp"
#include "archbo/nsga2.hpp"
#include "archbo/run_history.hpp"
#include "archbo/turbofan.hpp"

namespace archbo {

/// Exit statuses of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2, kExitIo = 3 };

struct RunConfig {
    std::string problem = "simple-turbofan";
    /// "bo" or "nsga2"
    std::string algorithm = "bo";
    std::size_t budget = 60;
    /// BO initial design size; defaults to default_doe_size(budget).
    std::optional<std::size_t> doe_size;
    std::uint64_t seed = 1;
    AcquisitionSpec acquisition;
    GpConfig gp;
    EvoConfig evo;
    turbofan::BenchConfig bench;
    std::string out_dir;

    void validate() const;
};

/// The output directory is omitted when `with_out_dir` is false so histories
/// do not depend on where they are written.
nlohmann::json to_json(const RunConfig& config, bool with_out_dir = true);
RunConfig run_config_from_json(const nlohmann::json& j);

/// Builds the problem and runs the configured algorithm.
RunHistory execute_run(const RunConfig& config);

nlohmann::json run_summary(const RunHistory& history, double wall_time);

/// Writes to a temporary sibling and renames it over `path`. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

struct RunSummary {
    std::string dir;
    std::string algorithm;
    std::size_t n_fe = 0;
    std::optional<double> best;
};

struct ComparisonRow {
    std::string algorithm;
    std::size_t n_fe = 0;
    std::size_t runs = 0;
    std::size_t feasible_runs = 0;
    /// Runs without a feasible point count as +infinity.
    double median_best = 0.0;
    double min_best = 0.0;
};

/// Groups by (algorithm, N_fe), sorted by algorithm then N_fe.
std::vector<ComparisonRow> compare_summaries(const std::vector<RunSummary>& runs);
std::string comparison_csv(const std::vector<ComparisonRow>& rows);
std::string comparison_text(const std::vector<ComparisonRow>& rows);

struct ConvergenceSeries {
    std::string label;
    std::vector<std::optional<double>> best_so_far;
};

/// Standalone SVG with one polyline per series (best-so-far vs evaluation index).
std::string convergence_svg(const std::vector<ConvergenceSeries>& series);

/// Entry point of the `archbo` tool. Returns an ExitCode.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace archbo
