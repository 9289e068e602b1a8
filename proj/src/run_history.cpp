#include "archbo/run_history.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "archbo/design_space_json.hpp"
#include "archbo/errors.hpp"

namespace archbo {

using nlohmann::json;

bool Evaluation::feasible(double tol) const {
    return ok() && std::all_of(constraints.begin(), constraints.end(), [tol](double c) { return c <= tol; });
}

double Evaluation::total_violation() const {
    double total = 0.0;
    for (double c : constraints) total += std::max(0.0, c);
    return total;
}

void RunHistory::append(std::size_t iteration, DesignPoint point, Evaluation evaluation, double fit_time,
                        double infill_time) {
    std::optional<double> best = records.empty() ? std::nullopt : records.back().best_so_far;
    if (evaluation.feasible() && (!best || evaluation.objective < *best)) best = evaluation.objective;
    records.push_back({iteration, std::move(point), std::move(evaluation), best, fit_time, infill_time});
}

std::size_t RunHistory::failures() const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [](const RunRecord& r) { return !r.evaluation.ok(); }));
}

std::optional<Incumbent> incumbent(const RunHistory& history) {
    std::optional<Incumbent> best;
    for (std::size_t i = 0; i < history.records.size(); ++i) {
        const auto& r = history.records[i];
        if (!r.evaluation.feasible()) continue;
        if (!best || r.evaluation.objective < best->objective) best = Incumbent{r.point, r.evaluation.objective, i};
    }
    return best;
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, end);
}

json history_to_json(const DesignSpace& space, const RunHistory& history) {
    json records = json::array();
    for (std::size_t i = 0; i < history.records.size(); ++i) {
        const auto& r = history.records[i];
        json rec;
        rec["index"] = i;
        rec["iteration"] = r.iteration;
        rec["point"] = point_to_json(space, r.point);
        rec["status"] = r.evaluation.ok() ? "ok" : "failed";
        if (r.evaluation.ok()) {
            rec["objective"] = r.evaluation.objective;
            rec["constraints"] = r.evaluation.constraints;
            rec["feasible"] = r.evaluation.feasible();
        } else {
            rec["objective"] = nullptr;
            rec["constraints"] = nullptr;
            rec["feasible"] = false;
        }
        rec["best_so_far"] = r.best_so_far ? json(*r.best_so_far) : json(nullptr);
        records.push_back(std::move(rec));
    }
    json j;
    j["algorithm"] = history.algorithm;
    j["problem"] = history.problem;
    j["seed"] = history.seed;
    j["budget"] = history.budget;
    j["config"] = history.config;
    j["n_fe"] = history.records.size();
    j["failures"] = history.failures();
    j["records"] = std::move(records);
    if (history.final_best) {
        j["final_best"] = {{"point", point_to_json(space, history.final_best->point)},
                           {"objective", history.final_best->objective},
                           {"index", history.final_best->record_index}};
    } else {
        j["final_best"] = nullptr;
    }
    return j;
}

RunHistory history_from_json(const DesignSpace& space, const json& j) {
    RunHistory h;
    try {
        h.algorithm = j.at("algorithm").get<std::string>();
        h.problem = j.value("problem", std::string());
        h.seed = j.at("seed").get<std::uint64_t>();
        h.budget = j.value("budget", std::size_t{0});
        h.config = j.value("config", json::object());
        for (const auto& rec : j.at("records")) {
            Evaluation e = Evaluation::failure();
            if (rec.at("status").get<std::string>() == "ok")
                e = Evaluation::success(rec.at("objective").get<double>(),
                                        rec.at("constraints").get<std::vector<double>>());
            h.append(rec.at("iteration").get<std::size_t>(), point_from_json(space, rec.at("point")), std::move(e));
        }
    } catch (const json::exception& e) {
        throw SchemaMismatch(std::string("schema mismatch: malformed history: ") + e.what());
    }
    h.final_best = incumbent(h);
    return h;
}

std::string convergence_csv(const RunHistory& history) {
    std::ostringstream os;
    os << "eval_index,status,objective,feasible,best_so_far\n";
    for (std::size_t i = 0; i < history.records.size(); ++i) {
        const auto& r = history.records[i];
        os << i << ',' << (r.evaluation.ok() ? "ok" : "failed") << ','
           << (r.evaluation.ok() ? format_double(r.evaluation.objective) : "") << ','
           << (r.evaluation.feasible() ? 1 : 0) << ',' << (r.best_so_far ? format_double(*r.best_so_far) : "")
           << '\n';
    }
    return os.str();
}

std::string timings_csv(const RunHistory& history) {
    std::ostringstream os;
    os << "eval_index,eval_time,fit_time,infill_time\n";
    for (std::size_t i = 0; i < history.records.size(); ++i) {
        const auto& r = history.records[i];
        os << i << ',' << format_double(r.evaluation.wall_time) << ',' << format_double(r.fit_time) << ','
           << format_double(r.infill_time) << '\n';
    }
    return os.str();
}

}  // namespace archbo
