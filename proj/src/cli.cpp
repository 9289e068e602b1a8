#include "archbo/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "archbo/bo_loop.hpp"
#include "archbo/design_space_json.hpp"
#include "archbo/errors.hpp"
#include "archbo/problems.hpp"

namespace archbo {

namespace fs = std::filesystem;
using nlohmann::json;

void RunConfig::validate() const {
    if (budget == 0) throw ConfigurationError("budget must be > 0");
    if (algorithm != "bo" && algorithm != "nsga2")
        throw ConfigurationError("unknown algorithm '" + algorithm + "' (expected bo or nsga2)");
    if (!is_registered_problem(problem)) throw ConfigurationError("unknown problem '" + problem + "'");
    acquisition.validate();
    gp.validate();
    evo.validate();
    bench.validate();
}

json to_json(const RunConfig& c, bool with_out_dir) {
    json j = {{"problem", c.problem},
              {"algorithm", c.algorithm},
              {"budget", c.budget},
              {"doe_size", c.doe_size ? json(*c.doe_size) : json(nullptr)},
              {"seed", c.seed},
              {"acquisition", to_json(c.acquisition)},
              {"gp", to_json(c.gp)},
              {"evo", to_json(c.evo)},
              {"bench", turbofan::to_json(c.bench)}};
    if (with_out_dir) j["out_dir"] = c.out_dir;
    return j;
}

RunConfig run_config_from_json(const json& j) {
    static const std::set<std::string> known = {"problem", "algorithm", "budget", "doe_size", "seed",
                                                "acquisition", "gp", "evo", "bench", "out_dir"};
    if (!j.is_object()) throw ConfigurationError("run config must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) throw ConfigurationError("unknown run config key '" + key + "'");
    RunConfig c;
    try {
        c.problem = j.value("problem", c.problem);
        c.algorithm = j.value("algorithm", c.algorithm);
        c.budget = j.value("budget", c.budget);
        if (j.contains("doe_size") && !j.at("doe_size").is_null()) c.doe_size = j.at("doe_size").get<std::size_t>();
        c.seed = j.value("seed", c.seed);
        c.out_dir = j.value("out_dir", c.out_dir);
    } catch (const json::exception& e) {
        throw ConfigurationError(std::string("malformed run config: ") + e.what());
    }
    if (j.contains("acquisition")) c.acquisition = acquisition_spec_from_json(j.at("acquisition"));
    if (j.contains("gp")) c.gp = gp_config_from_json(j.at("gp"));
    if (j.contains("evo")) c.evo = evo_config_from_json(j.at("evo"));
    if (j.contains("bench")) c.bench = turbofan::bench_config_from_json(j.at("bench"));
    return c;
}

RunHistory execute_run(const RunConfig& config) {
    config.validate();
    const Problem problem = make_registered_problem(config.problem, turbofan::to_json(config.bench));
    RunHistory history;
    if (config.algorithm == "bo") {
        BoSettings settings;
        settings.budget = config.budget;
        settings.doe_size = config.doe_size.value_or(default_doe_size(config.budget));
        settings.acquisition = config.acquisition;
        settings.gp = config.gp;
        history = run_bo(problem, settings, config.seed);
    } else {
        history = run_nsga2(problem, config.budget, config.evo, config.seed);
    }
    json resolved = std::move(history.config);
    history.config = to_json(config, false);
    history.config["resolved"] = std::move(resolved);
    return history;
}

json run_summary(const RunHistory& history, double wall_time) {
    const auto& best = history.final_best;
    return {{"algorithm", history.algorithm},
            {"problem", history.problem},
            {"seed", history.seed},
            {"budget", history.budget},
            {"n_fe", history.records.size()},
            {"failures", history.failures()},
            {"feasible", best.has_value()},
            {"best_objective", best ? json(best->objective) : json(nullptr)},
            {"best_index", best ? json(best->record_index) : json(nullptr)},
            {"wall_time", wall_time}};
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
        os << content;
        os.flush();
        if (!os) throw IoError("failed writing " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot rename " + tmp.string() + " to " + path.string());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_best(double v) { return std::isfinite(v) ? format_double(v) : "none"; }

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

std::string default_out_dir() {
    const char* env = std::getenv("ARCHBO_OUT");
    return env && *env ? env : "archbo-out";
}

json parse_json_file(const fs::path& path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigurationError(path.string() + ": " + e.what());
    }
}

std::vector<std::optional<double>> read_best_column(const fs::path& csv) {
    std::istringstream is(read_file(csv));
    std::string line;
    std::getline(is, line);
    std::vector<std::optional<double>> values;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.rfind(',');
        const std::string cell = line.substr(comma + 1);
        values.push_back(cell.empty() ? std::nullopt : std::optional<double>(std::stod(cell)));
    }
    return values;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    const double a = v[n / 2 - 1], b = v[n / 2];
    return std::isfinite(a) && std::isfinite(b) ? 0.5 * (a + b) : b;
}

}  // namespace

std::vector<ComparisonRow> compare_summaries(const std::vector<RunSummary>& runs) {
    std::map<std::pair<std::string, std::size_t>, std::vector<const RunSummary*>> groups;
    for (const auto& r : runs) groups[{r.algorithm, r.n_fe}].push_back(&r);
    std::vector<ComparisonRow> rows;
    for (const auto& [key, members] : groups) {
        ComparisonRow row;
        row.algorithm = key.first;
        row.n_fe = key.second;
        row.runs = members.size();
        std::vector<double> best;
        for (const auto* m : members) {
            best.push_back(m->best.value_or(kInf));
            if (m->best) ++row.feasible_runs;
        }
        row.median_best = median(best);
        row.min_best = *std::min_element(best.begin(), best.end());
        rows.push_back(row);
    }
    return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
    std::ostringstream os;
    os << "algorithm,n_fe,runs,feasible_runs,median_best,min_best\n";
    for (const auto& r : rows)
        os << r.algorithm << ',' << r.n_fe << ',' << r.runs << ',' << r.feasible_runs << ','
           << format_best(r.median_best) << ',' << format_best(r.min_best) << '\n';
    return os.str();
}

std::string comparison_text(const std::vector<ComparisonRow>& rows) {
    std::vector<std::vector<std::string>> cells = {{"algorithm", "N_fe", "runs", "feasible", "median", "min"}};
    for (const auto& r : rows) {
        auto fixed = [](double v) {
            if (!std::isfinite(v)) return std::string("none");
            std::ostringstream os;
            os << std::fixed << std::setprecision(4) << v;
            return os.str();
        };
        cells.push_back({r.algorithm, std::to_string(r.n_fe), std::to_string(r.runs), std::to_string(r.feasible_runs),
                         fixed(r.median_best), fixed(r.min_best)});
    }
    std::vector<std::size_t> width(cells.front().size(), 0);
    for (const auto& row : cells)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::ostringstream os;
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c == 0)
                os << std::left << std::setw(static_cast<int>(width[c])) << row[c];
            else
                os << "  " << std::right << std::setw(static_cast<int>(width[c])) << row[c];
        }
        os << '\n';
    }
    return os.str();
}

std::string convergence_svg(const std::vector<ConvergenceSeries>& series) {
    constexpr double kWidth = 800, kHeight = 500, kMargin = 50;
    std::size_t max_len = 1;
    double lo = kInf, hi = -kInf;
    for (const auto& s : series) {
        max_len = std::max(max_len, s.best_so_far.size());
        for (const auto& v : s.best_so_far)
            if (v) {
                lo = std::min(lo, *v);
                hi = std::max(hi, *v);
            }
    }
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) hi = lo + 1.0;
    auto px = [&](std::size_t i) {
        return kMargin + (kWidth - 2 * kMargin) * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(1, max_len - 1));
    };
    auto py = [&](double v) { return kHeight - kMargin - (kHeight - 2 * kMargin) * (v - lo) / (hi - lo); };
    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

    std::ostringstream os;
    os << std::setprecision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin << "\" y2=\""
       << kHeight - kMargin << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\"" << kHeight - kMargin
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">evaluation</text>\n";
    os << "<text x=\"12\" y=\"" << kMargin - 15 << "\">best feasible objective [" << format_double(lo) << ", "
       << format_double(hi) << "]</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        os << "<polyline fill=\"none\" stroke=\"" << palette[k % 10] << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (std::size_t i = 0; i < series[k].best_so_far.size(); ++i) {
            if (!series[k].best_so_far[i]) continue;
            os << (first ? "" : " ") << px(i) << ',' << py(*series[k].best_so_far[i]);
            first = false;
        }
        os << "\"><title>" << series[k].label << "</title></polyline>\n";
    }
    os << "</svg>\n";
    return os.str();
}

namespace {

struct RunFlags {
    std::string config_path;
    std::optional<std::string> problem, algorithm, out_dir, criterion, hidden;
    std::optional<std::size_t> budget, doe_size;
    std::optional<std::uint64_t> seed;
    std::optional<double> tau;
};

void apply_bench_flags(turbofan::BenchConfig& bench, const std::optional<std::string>& hidden,
                       const std::optional<double>& tau) {
    if (hidden) bench.enable_hidden_constraint = *hidden == "on";
    if (tau) bench.failure_threshold = *tau;
}

int cmd_run(const RunFlags& f, std::ostream& out) {
    RunConfig config;
    if (!f.config_path.empty()) config = run_config_from_json(parse_json_file(f.config_path));
    if (f.problem) config.problem = *f.problem;
    if (f.algorithm) config.algorithm = *f.algorithm;
    if (f.budget) config.budget = *f.budget;
    if (f.doe_size) config.doe_size = *f.doe_size;
    if (f.seed) config.seed = *f.seed;
    if (f.criterion) config.acquisition = acquisition_spec_from_json([&] {
        json j = to_json(config.acquisition);
        j["criterion"] = *f.criterion;
        return j;
    }());
    apply_bench_flags(config.bench, f.hidden, f.tau);
    if (f.out_dir) config.out_dir = *f.out_dir;
    if (config.out_dir.empty()) config.out_dir = default_out_dir();
    config.validate();

    const auto start = std::chrono::steady_clock::now();
    const RunHistory history = execute_run(config);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const Problem problem = make_registered_problem(config.problem, turbofan::to_json(config.bench));
    const fs::path dir(config.out_dir);
    ensure_dir(dir);
    write_file_atomic(dir / "history.json", history_to_json(problem.space, history).dump(2) + "\n");
    write_file_atomic(dir / "convergence.csv", convergence_csv(history));
    write_file_atomic(dir / "timings.csv", timings_csv(history));
    write_file_atomic(dir / "summary.json", run_summary(history, wall).dump(2) + "\n");

    out << "algo=" << history.algorithm << " N_fe=" << history.records.size()
        << " best=" << (history.final_best ? format_double(history.final_best->objective) : "none") << '\n';
    return kExitOk;
}

int cmd_enumerate(const std::string& name, std::ostream& out) {
    const Problem problem = make_registered_problem(name);
    const auto enumeration = enumerate_discrete(problem.space);
    json j = {{"cartesian", enumeration.cartesian},
              {"valid", enumeration.assignments.size()},
              {"architectures", count_distinct_projections(enumeration, problem.space.definition().signature_vars)},
              {"relaxed_dim", problem.space.encoded_dim()}};
    out << j.dump() << '\n';
    return kExitOk;
}

int cmd_compare(const std::vector<std::string>& dirs, const std::optional<std::string>& out_dir,
                const std::optional<std::string>& chart, std::ostream& out, std::ostream& err) {
    if (dirs.size() < 2) {
        err << "compare needs at least 2 run directories\n";
        return kExitUsage;
    }
    std::vector<std::string> missing;
    for (const auto& d : dirs)
        if (!fs::is_regular_file(fs::path(d) / "summary.json")) missing.push_back(d);
    if (!missing.empty()) {
        err << "missing summary.json in:";
        for (const auto& m : missing) err << ' ' << m;
        err << '\n';
        return kExitUsage;
    }
    std::vector<RunSummary> runs;
    std::vector<ConvergenceSeries> series;
    for (const auto& d : dirs) {
        const json s = parse_json_file(fs::path(d) / "summary.json");
        RunSummary r;
        try {
            r.dir = d;
            r.algorithm = s.at("algorithm").get<std::string>();
            r.n_fe = s.at("n_fe").get<std::size_t>();
            if (!s.at("best_objective").is_null()) r.best = s.at("best_objective").get<double>();
        } catch (const json::exception& e) {
            throw SchemaMismatch(d + "/summary.json: " + e.what());
        }
        runs.push_back(r);
        if (chart) series.push_back({r.algorithm + " " + d, read_best_column(fs::path(d) / "convergence.csv")});
    }
    const auto rows = compare_summaries(runs);
    const std::string text = comparison_text(rows);
    const fs::path target(out_dir.value_or(default_out_dir()));
    ensure_dir(target);
    write_file_atomic(target / "comparison.csv", comparison_csv(rows));
    write_file_atomic(target / "comparison.txt", text);
    if (chart) write_file_atomic(*chart, convergence_svg(series));
    out << text;
    return kExitOk;
}

int cmd_oracle(const std::string& name, std::size_t effort, std::uint64_t seed, const std::string& config_path,
               const std::optional<std::string>& hidden, const std::optional<double>& tau,
               const std::optional<std::string>& out_dir, std::ostream& out) {
    if (!is_registered_problem(name)) throw ConfigurationError("unknown problem '" + name + "'");
    turbofan::BenchConfig bench;
    if (!config_path.empty()) bench = run_config_from_json(parse_json_file(config_path)).bench;
    apply_bench_flags(bench, hidden, tau);
    const auto result = turbofan::brute_force_optimum(bench, seed, effort);
    const DesignSpace& space = turbofan::space();

    json per = json::array();
    for (const auto& a : result.per_assignment) {
        json entry;
        for (std::size_t v : space.definition().signature_vars)
            entry[space.variable(v).name] = value_to_json(space.variable(v), a.point.values[v]);
        for (std::size_t v : {std::size_t{turbofan::PowerOfftake}, std::size_t{turbofan::BleedOfftake}})
            entry[space.variable(v).name] = value_to_json(space.variable(v), a.point.values[v]);
        entry["objective"] = a.objective ? json(*a.objective) : json(nullptr);
        per.push_back(std::move(entry));
    }
    json brief = {{"problem", name},
                  {"effort", effort},
                  {"seed", seed},
                  {"bench", turbofan::to_json(bench)},
                  {"objective", result.objective ? json(*result.objective) : json(nullptr)},
                  {"point", result.point ? point_to_json(space, *result.point) : json(nullptr)}};
    json full = brief;
    full["per_assignment"] = std::move(per);
    const fs::path dir(out_dir.value_or(default_out_dir()));
    ensure_dir(dir);
    write_file_atomic(dir / "oracle.json", full.dump(2) + "\n");
    out << brief.dump(2) << '\n';
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bayesian optimization of hierarchical engine architectures", "archbo"};
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "Run one optimizer on a problem");
    run->add_option("--config", run_flags.config_path, "JSON run configuration");
    run->add_option("--problem", run_flags.problem, "Problem name");
    run->add_option("--algo,--algorithm", run_flags.algorithm, "bo or nsga2");
    run->add_option("--budget", run_flags.budget, "Number of evaluations");
    run->add_option("--doe-size", run_flags.doe_size, "BO initial design size");
    run->add_option("--seed", run_flags.seed, "Master seed");
    run->add_option("--criterion", run_flags.criterion, "EI, WB2 or WB2S");
    run->add_option("--hidden-constraint", run_flags.hidden, "on or off")->check(CLI::IsMember({"on", "off"}));
    run->add_option("--tau", run_flags.tau, "Hidden-constraint threshold");
    run->add_option("--out", run_flags.out_dir, "Output directory (default $ARCHBO_OUT)");

    std::string enum_problem = "simple-turbofan";
    auto* enumerate = app.add_subcommand("enumerate", "Count discrete assignments and architectures");
    enumerate->add_option("--problem", enum_problem, "Problem name");

    std::vector<std::string> compare_dirs;
    std::optional<std::string> compare_out, compare_chart;
    auto* compare = app.add_subcommand("compare", "Tabulate results of several runs");
    compare->add_option("run_dirs", compare_dirs, "Run directories containing summary.json");
    compare->add_option("--out", compare_out, "Output directory for comparison.csv/.txt");
    compare->add_option("--chart", compare_chart, "Write a convergence chart (SVG) to this file");

    std::string oracle_problem = "simple-turbofan", oracle_config;
    std::size_t oracle_effort = 100'000;
    std::uint64_t oracle_seed = 0;
    std::optional<std::string> oracle_hidden, oracle_out;
    std::optional<double> oracle_tau;
    auto* oracle = app.add_subcommand("oracle", "Brute-force reference optimum");
    oracle->add_option("--problem", oracle_problem, "Problem name");
    oracle->add_option("--effort", oracle_effort, "Random samples per discrete assignment");
    oracle->add_option("--seed", oracle_seed, "Master seed");
    oracle->add_option("--config", oracle_config, "JSON run configuration (bench section is used)");
    oracle->add_option("--hidden-constraint", oracle_hidden, "on or off")->check(CLI::IsMember({"on", "off"}));
    oracle->add_option("--tau", oracle_tau, "Hidden-constraint threshold");
    oracle->add_option("--out", oracle_out, "Output directory (default $ARCHBO_OUT)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*run) return cmd_run(run_flags, out);
        if (*enumerate) return cmd_enumerate(enum_problem, out);
        if (*compare) return cmd_compare(compare_dirs, compare_out, compare_chart, out, err);
        return cmd_oracle(oracle_problem, oracle_effort, oracle_seed, oracle_config, oracle_hidden, oracle_tau,
                          oracle_out, out);
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const ConfigurationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const SchemaMismatch& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InvalidSpace& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace archbo
