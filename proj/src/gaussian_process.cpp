#include "archbo/gaussian_process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Cholesky>

#include "archbo/compass_search.hpp"
#include "archbo/design_space.hpp"
#include "archbo/errors.hpp"

namespace archbo {

namespace {

constexpr double kDuplicateDistance = 1e-9;
constexpr double kSqrt5 = 2.23606797749978969641;

double correlation_from_sq(KernelType kernel, double sq) {
    if (kernel == KernelType::SquaredExponential) return std::exp(-0.5 * sq);
    const double r = std::sqrt(sq);
    return (1.0 + kSqrt5 * r + 5.0 / 3.0 * sq) * std::exp(-kSqrt5 * r);
}

std::vector<std::size_t> resolve_groups(const GpConfig& config, std::size_t dim) {
    std::vector<std::size_t> groups(dim);
    if (config.anisotropy == Anisotropy::PerVariable && !config.coordinate_groups.empty()) {
        if (config.coordinate_groups.size() != dim)
            throw DimensionMismatch("coordinate_groups has " + std::to_string(config.coordinate_groups.size()) +
                                    " entries for inputs of dimension " + std::to_string(dim));
        // Renumber densely in order of first appearance.
        std::vector<std::size_t> seen;
        for (std::size_t c = 0; c < dim; ++c) {
            auto it = std::find(seen.begin(), seen.end(), config.coordinate_groups[c]);
            if (it == seen.end()) {
                seen.push_back(config.coordinate_groups[c]);
                groups[c] = seen.size() - 1;
            } else {
                groups[c] = static_cast<std::size_t>(it - seen.begin());
            }
        }
        return groups;
    }
    for (std::size_t c = 0; c < dim; ++c) groups[c] = c;
    return groups;
}

Eigen::VectorXd inverse_lengthscales(const Eigen::VectorXd& theta, const std::vector<std::size_t>& groups) {
    Eigen::VectorXd inv(static_cast<Eigen::Index>(groups.size()));
    for (std::size_t c = 0; c < groups.size(); ++c) {
        const auto g = static_cast<Eigen::Index>(groups[c]);
        if (g >= theta.size()) throw DimensionMismatch("theta is shorter than the number of length-scale groups");
        inv[static_cast<Eigen::Index>(c)] = std::pow(10.0, -theta[g]);
    }
    return inv;
}

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& X, const Eigen::VectorXd& inv_ls, KernelType kernel) {
    const Eigen::Index n = X.rows();
    const Eigen::MatrixXd St = (X * inv_ls.asDiagonal()).transpose();
    Eigen::MatrixXd R(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        R(j, j) = 1.0;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const double sq = (St.col(i) - St.col(j)).squaredNorm();
            R(i, j) = R(j, i) = correlation_from_sq(kernel, sq);
        }
    }
    return R;
}

struct Factorization {
    Eigen::MatrixXd L;
    Eigen::VectorXd alpha;
    double nugget = 0.0;
    double mu0 = 0.0;
    double sigma2 = 0.0;
    double log_likelihood = 0.0;
};

std::vector<double> nugget_ladder(double nugget) {
    std::vector<double> ladder{nugget};
    for (double rung : {1e-7, 1e-6})
        if (rung > ladder.back()) ladder.push_back(rung);
    return ladder;
}

std::optional<Factorization> factorize(const Eigen::MatrixXd& R, const Eigen::VectorXd& y, double nugget) {
    const Eigen::Index n = R.rows();
    for (double rung : nugget_ladder(nugget)) {
        Eigen::MatrixXd A = R;
        A.diagonal().array() += rung;
        Eigen::LLT<Eigen::MatrixXd> llt(A);
        if (llt.info() != Eigen::Success) continue;
        Factorization f;
        f.L = llt.matrixL();
        if (!f.L.diagonal().allFinite() || (f.L.diagonal().array() <= 0.0).any()) continue;
        f.nugget = rung;

        const auto Lview = f.L.triangularView<Eigen::Lower>();
        const Eigen::VectorXd v1 = Lview.solve(Eigen::VectorXd::Ones(n));
        const Eigen::VectorXd vy = Lview.solve(y);
        f.mu0 = v1.dot(vy) / v1.dot(v1);
        const Eigen::VectorXd w = vy - f.mu0 * v1;
        f.sigma2 = std::max(w.squaredNorm() / static_cast<double>(n), std::numeric_limits<double>::min());
        f.alpha = f.L.transpose().triangularView<Eigen::Upper>().solve(w);

        const double log_det = 2.0 * f.L.diagonal().array().log().sum();
        const double nd = static_cast<double>(n);
        f.log_likelihood = -0.5 * (nd * std::log(f.sigma2) + log_det + nd * (std::log(2.0 * std::numbers::pi) + 1.0));
        if (!std::isfinite(f.log_likelihood) || !f.alpha.allFinite()) continue;
        return f;
    }
    return std::nullopt;
}

// Merges rows closer than kDuplicateDistance, averaging their targets.
void merge_duplicates(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Eigen::MatrixXd& Xm, Eigen::VectorXd& ym) {
    if (X.rows() != y.size())
        throw DimensionMismatch("X has " + std::to_string(X.rows()) + " rows but y has " + std::to_string(y.size()));
    std::vector<Eigen::Index> representative;
    std::vector<double> sums;
    std::vector<int> counts;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        std::size_t found = representative.size();
        for (std::size_t k = 0; k < representative.size(); ++k) {
            if ((X.row(i) - X.row(representative[k])).norm() < kDuplicateDistance) {
                found = k;
                break;
            }
        }
        if (found == representative.size()) {
            representative.push_back(i);
            sums.push_back(y[i]);
            counts.push_back(1);
        } else {
            sums[found] += y[i];
            ++counts[found];
        }
    }
    const auto m = static_cast<Eigen::Index>(representative.size());
    Xm.resize(m, X.cols());
    ym.resize(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        Xm.row(k) = X.row(representative[static_cast<std::size_t>(k)]);
        ym[k] = sums[static_cast<std::size_t>(k)] / counts[static_cast<std::size_t>(k)];
    }
}

}  // namespace

void GpConfig::validate() const {
    if (!(nugget > 0.0)) throw ConfigurationError("gp.nugget must be > 0");
    if (n_restarts < 1) throw ConfigurationError("gp.n_restarts must be >= 1");
    if (!(log10_lengthscale_lower < log10_lengthscale_upper))
        throw ConfigurationError("gp length-scale bounds must be ordered");
    if (refit_interval < 1) throw ConfigurationError("gp.refit_interval must be >= 1");
}

std::size_t GpConfig::n_lengthscales(std::size_t dim) const {
    auto groups = resolve_groups(*this, dim);
    return groups.empty() ? 0 : *std::max_element(groups.begin(), groups.end()) + 1;
}

double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                               const GpConfig& config) {
    if (X.rows() != y.size()) throw DimensionMismatch("X and y disagree on the number of points");
    const auto groups = resolve_groups(config, static_cast<std::size_t>(X.cols()));
    const Eigen::MatrixXd R = correlation_matrix(X, inverse_lengthscales(theta, groups), config.kernel);
    auto f = factorize(R, y, config.nugget);
    if (!f) throw IllConditioned("ill-conditioned: correlation matrix not positive definite at nugget 1e-6");
    return f->log_likelihood;
}

GpModel GpModel::condition(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                           const GpConfig& config) {
    GpModel m;
    merge_duplicates(X, y, m.X_, m.y_);
    if (m.X_.rows() < 1) throw InsufficientData("insufficient data: no training points");
    m.kernel_ = config.kernel;
    m.groups_ = resolve_groups(config, static_cast<std::size_t>(X.cols()));
    m.theta_ = theta;
    m.inv_lengthscale_ = inverse_lengthscales(theta, m.groups_);
    m.scaled_t_ = (m.X_ * m.inv_lengthscale_.asDiagonal()).transpose();
    auto f = factorize(correlation_matrix(m.X_, m.inv_lengthscale_, m.kernel_), m.y_, config.nugget);
    if (!f) throw IllConditioned("ill-conditioned: correlation matrix not positive definite at nugget 1e-6");
    m.chol_ = std::move(f->L);
    m.alpha_ = std::move(f->alpha);
    m.nugget_ = f->nugget;
    m.mu0_ = f->mu0;
    m.sigma2_ = f->sigma2;
    m.log_likelihood_ = f->log_likelihood;
    return m;
}

double GpModel::correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    const double sq = (a - b).cwiseProduct(inv_lengthscale_).squaredNorm();
    return correlation_from_sq(kernel_, sq);
}

GpModel::Prediction GpModel::predict(const Eigen::VectorXd& x) const {
    if (x.size() != X_.cols())
        throw DimensionMismatch("predict: expected input of length " + std::to_string(X_.cols()) + ", got " +
                                std::to_string(x.size()));
    const Eigen::Index n = X_.rows();
    const Eigen::VectorXd sx = x.cwiseProduct(inv_lengthscale_);
    Eigen::VectorXd k(n);
    for (Eigen::Index i = 0; i < n; ++i) k[i] = correlation_from_sq(kernel_, (scaled_t_.col(i) - sx).squaredNorm());
    Prediction p;
    p.mean = mu0_ + k.dot(alpha_);
    const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k);
    p.std = std::sqrt(sigma2_ * std::max(0.0, 1.0 - v.squaredNorm()));
    return p;
}

void GpModel::predict_batch(const Eigen::MatrixXd& Xq, Eigen::VectorXd& mean_out, Eigen::VectorXd* std_out) const {
    if (Xq.cols() != X_.cols())
        throw DimensionMismatch("predict_batch: expected inputs of length " + std::to_string(X_.cols()));
    const Eigen::Index n = X_.rows();
    const Eigen::Index m = Xq.rows();
    const Eigen::MatrixXd& St = scaled_t_;
    const Eigen::MatrixXd Sq = (Xq * inv_lengthscale_.asDiagonal()).transpose();
    Eigen::MatrixXd K(n, m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < n; ++i) K(i, j) = correlation_from_sq(kernel_, (St.col(i) - Sq.col(j)).squaredNorm());
    mean_out = (K.transpose() * alpha_).array() + mu0_;
    if (std_out) {
        chol_.triangularView<Eigen::Lower>().solveInPlace(K);
        const Eigen::VectorXd explained = K.colwise().squaredNorm().transpose();
        *std_out = (sigma2_ * (1.0 - explained.array()).max(0.0)).sqrt();
    }
}

GpModel fit_gp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GpConfig& config, Rng& rng,
               std::span<const Eigen::VectorXd> warm_starts, FitTrace* trace) {
    config.validate();
    Eigen::MatrixXd Xm;
    Eigen::VectorXd ym;
    merge_duplicates(X, y, Xm, ym);
    if (Xm.rows() < 2) throw InsufficientData("insufficient data: need at least 2 distinct training points");

    const auto groups = resolve_groups(config, static_cast<std::size_t>(X.cols()));
    const std::size_t k = groups.empty() ? 0 : *std::max_element(groups.begin(), groups.end()) + 1;
    const double lo = config.log10_lengthscale_lower;
    const double hi = config.log10_lengthscale_upper;

    std::vector<std::vector<double>> starts;
    for (const auto& w : warm_starts) {
        if (static_cast<std::size_t>(w.size()) != k) continue;
        std::vector<double> s(k);
        for (std::size_t i = 0; i < k; ++i) s[i] = std::clamp(w[static_cast<Eigen::Index>(i)], lo, hi);
        starts.push_back(std::move(s));
    }
    const Eigen::MatrixXd cube = latin_hypercube(config.n_restarts, k, rng);
    for (Eigen::Index r = 0; r < cube.rows(); ++r) {
        std::vector<double> s(k);
        for (std::size_t i = 0; i < k; ++i) s[i] = lo + (hi - lo) * cube(r, static_cast<Eigen::Index>(i));
        starts.push_back(std::move(s));
    }

    // Flat data carries no length-scale information; skip the search.
    if (ym.maxCoeff() - ym.minCoeff() <= 1e-12 * (1.0 + ym.cwiseAbs().maxCoeff())) {
        const auto& t = starts.front();
        return GpModel::condition(Xm, ym, Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(k)),
                                  config);
    }

    // Primary key: how far the model is from interpolating the data (residual
    // nugget * alpha at the training points, or an escalated nugget).
    // Secondary key: negative log-likelihood.
    using Score = std::pair<double, double>;
    constexpr double kInterpolationTolerance = 5e-7;
    const Score failed{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    auto score = [&](const std::vector<double>& t) -> Score {
        Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
        const Eigen::MatrixXd R = correlation_matrix(Xm, inverse_lengthscales(theta, groups), config.kernel);
        auto f = factorize(R, ym, config.nugget);
        if (!f) return failed;
        const double residual =
            (f->nugget * f->alpha.array().abs() / (1.0 + ym.array().abs())).maxCoeff() / kInterpolationTolerance;
        double guard = residual > 1.0 ? std::log10(residual) : 0.0;
        if (f->nugget > config.nugget) guard += 1.0 + std::log10(f->nugget / config.nugget);
        return {guard, -f->log_likelihood};
    };

    CompassOptions options;
    options.initial_step = 0.1;
    options.min_step = 0.004;
    options.max_evals = config.max_search_evals > 0 ? config.max_search_evals : 40 * std::max<std::size_t>(k, 1);
    const std::vector<double> lower(k, lo);
    const std::vector<double> upper(k, hi);

    Score best_score = failed;
    std::vector<double> best_theta;
    for (const auto& start : starts) {
        auto result = compass_search<Score>(score, start, lower, upper, options);
        if (trace) {
            trace->starts.push_back(Eigen::Map<const Eigen::VectorXd>(start.data(), static_cast<Eigen::Index>(k)));
            trace->start_scores.push_back(-score(start).second);
            trace->final_scores.push_back(-result.score.second);
        }
        // Strict comparison keeps the lowest start index on ties.
        if (result.score < best_score) {
            best_score = result.score;
            best_theta = std::move(result.x);
        }
    }
    if (!std::isfinite(best_score.second))
        throw IllConditioned("ill-conditioned: every hyperparameter start failed to factorize");

    return GpModel::condition(Xm, ym,
                              Eigen::Map<const Eigen::VectorXd>(best_theta.data(), static_cast<Eigen::Index>(k)), config);
}

FeasibilityModel FeasibilityModel::constant(double probability) {
    FeasibilityModel m;
    m.constant_ = std::clamp(probability, 0.0, 1.0);
    return m;
}

double FeasibilityModel::probability(const Eigen::VectorXd& x) const {
    if (!inner_) return constant_;
    return std::clamp(inner_->predict(x).mean, 0.0, 1.0);
}

void FeasibilityModel::probability_batch(const Eigen::MatrixXd& Xq, Eigen::VectorXd& out) const {
    if (!inner_) {
        out = Eigen::VectorXd::Constant(Xq.rows(), constant_);
        return;
    }
    inner_->predict_batch(Xq, out, nullptr);
    out = out.cwiseMax(0.0).cwiseMin(1.0);
}

FeasibilityModel fit_feasibility(const Eigen::MatrixXd& X, const std::vector<int>& labels, const GpConfig& config,
                                 Rng& rng, std::span<const Eigen::VectorXd> warm_starts) {
    if (static_cast<std::size_t>(X.rows()) != labels.size())
        throw DimensionMismatch("fit_feasibility: one label per training point required");
    if (labels.size() < 2) throw InsufficientData("insufficient data: need at least 2 labelled points");
    Eigen::VectorXd y(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw ConfigurationError("feasibility labels must be 0 or 1");
        y[static_cast<Eigen::Index>(i)] = labels[i];
    }
    if (y.minCoeff() == y.maxCoeff()) return FeasibilityModel::constant(y[0]);

    Eigen::MatrixXd Xm;
    Eigen::VectorXd ym;
    merge_duplicates(X, y, Xm, ym);
    if (Xm.rows() < 2) return FeasibilityModel::constant(ym.mean());
    return FeasibilityModel(fit_gp(Xm, ym, config, rng, warm_starts));
}

nlohmann::json to_json(const GpConfig& c) {
    return {{"kernel", c.kernel == KernelType::SquaredExponential ? "squared_exponential" : "matern52"},
            {"anisotropy", c.anisotropy == Anisotropy::PerVariable ? "per_variable" : "per_dimension"},
            {"nugget", c.nugget},
            {"n_restarts", c.n_restarts},
            {"lengthscale_log10_bounds", {c.log10_lengthscale_lower, c.log10_lengthscale_upper}},
            {"max_search_evals", c.max_search_evals},
            {"refit_interval", c.refit_interval}};
}

GpConfig gp_config_from_json(const nlohmann::json& j) {
    GpConfig c;
    try {
        const auto kernel = j.value("kernel", std::string("squared_exponential"));
        if (kernel == "squared_exponential")
            c.kernel = KernelType::SquaredExponential;
        else if (kernel == "matern52")
            c.kernel = KernelType::Matern52;
        else
            throw ConfigurationError("unknown gp.kernel '" + kernel + "'");
        const auto aniso = j.value("anisotropy", std::string("per_variable"));
        if (aniso == "per_variable")
            c.anisotropy = Anisotropy::PerVariable;
        else if (aniso == "per_dimension")
            c.anisotropy = Anisotropy::PerDimension;
        else
            throw ConfigurationError("unknown gp.anisotropy '" + aniso + "'");
        c.nugget = j.value("nugget", c.nugget);
        c.n_restarts = j.value("n_restarts", c.n_restarts);
        if (j.contains("lengthscale_log10_bounds")) {
            const auto& b = j.at("lengthscale_log10_bounds");
            c.log10_lengthscale_lower = b.at(0).get<double>();
            c.log10_lengthscale_upper = b.at(1).get<double>();
        }
        c.max_search_evals = j.value("max_search_evals", c.max_search_evals);
        c.refit_interval = j.value("refit_interval", c.refit_interval);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError(std::string("malformed gp config: ") + e.what());
    }
    c.validate();
    return c;
}

nlohmann::json to_json(const GpModel& model) {
    nlohmann::json X = nlohmann::json::array();
    for (Eigen::Index i = 0; i < model.X().rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index d = 0; d < model.X().cols(); ++d) row.push_back(model.X()(i, d));
        X.push_back(std::move(row));
    }
    return {{"theta", std::vector<double>(model.theta().data(), model.theta().data() + model.theta().size())},
            {"sigma2", model.sigma2()},
            {"mu0", model.mu0()},
            {"nugget", model.nugget()},
            {"X", std::move(X)},
            {"y", std::vector<double>(model.y().data(), model.y().data() + model.y().size())}};
}

GpModel gp_model_from_json(const nlohmann::json& j, const GpConfig& config) {
    const auto rows = j.at("X");
    const auto ys = j.at("y").get<std::vector<double>>();
    const auto theta = j.at("theta").get<std::vector<double>>();
    if (rows.size() != ys.size()) throw DimensionMismatch("serialized GP: X and y lengths differ");
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto d = n > 0 ? static_cast<Eigen::Index>(rows.at(0).size()) : 0;
    Eigen::MatrixXd X(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = rows.at(static_cast<std::size_t>(i));
        if (static_cast<Eigen::Index>(row.size()) != d) throw DimensionMismatch("serialized GP: ragged X");
        for (Eigen::Index k = 0; k < d; ++k) X(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
    }
    GpConfig c = config;
    c.nugget = j.at("nugget").get<double>();
    return GpModel::condition(X, Eigen::Map<const Eigen::VectorXd>(ys.data(), n),
                              Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size())),
                              c);
}

}  // namespace archbo
