#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "archbo/random.hpp"

namespace archbo {

enum class KernelType { SquaredExponential, Matern52 };
enum class Anisotropy { PerDimension, PerVariable };

struct GpConfig {
    KernelType kernel = KernelType::SquaredExponential;
    Anisotropy anisotropy = Anisotropy::PerVariable;
    /// Relative to the process variance: the factorized matrix is R + nugget * I.
    double nugget = 1e-8;
    std::size_t n_restarts = 10;
    double log10_lengthscale_lower = -3.0;
    double log10_lengthscale_upper = 2.0;
    /// Likelihood evaluations allowed per local search; 0 picks 40 per hyperparameter.
    std::size_t max_search_evals = 0;
    /// Optimization-loop iterations between hyperparameter searches. In between,
    /// the last hyperparameters are kept and the model is re-conditioned on new data.
    std::size_t refit_interval = 1;
    /// Length-scale index of each input coordinate for Anisotropy::PerVariable
    /// (one shared length-scale per one-hot block). Empty means one per coordinate.
    std::vector<std::size_t> coordinate_groups;

    /// Throws ConfigurationError on a violated invariant.
    void validate() const;

    /// Number of length-scales for inputs of dimension `dim`.
    std::size_t n_lengthscales(std::size_t dim) const;
};

nlohmann::json to_json(const GpConfig& config);
GpConfig gp_config_from_json(const nlohmann::json& j);

/// Concentrated log marginal likelihood with the constant trend and process
/// variance profiled out. `theta` holds log10 length-scales.
/// Throws IllConditioned if every rung of the nugget ladder fails.
double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                               const GpConfig& config);

/// Trained Gaussian-process regression model with constant trend.
class GpModel {
public:
    struct Prediction {
        double mean = 0.0;
        double std = 0.0;
    };

    /// Model with fixed hyperparameters. Duplicate rows are merged (mean of y).
    static GpModel condition(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                             const GpConfig& config);

    /// Throws DimensionMismatch when x has the wrong length.
    Prediction predict(const Eigen::VectorXd& x) const;

    /// Row-wise predictions for a batch of inputs. `std_out` may be null.
    void predict_batch(const Eigen::MatrixXd& Xq, Eigen::VectorXd& mean_out, Eigen::VectorXd* std_out) const;

    const Eigen::MatrixXd& X() const { return X_; }
    const Eigen::VectorXd& y() const { return y_; }
    const Eigen::VectorXd& theta() const { return theta_; }
    double sigma2() const { return sigma2_; }
    double mu0() const { return mu0_; }
    double nugget() const { return nugget_; }
    const Eigen::MatrixXd& chol() const { return chol_; }
    const Eigen::VectorXd& alpha() const { return alpha_; }
    double log_likelihood() const { return log_likelihood_; }
    std::size_t input_dim() const { return static_cast<std::size_t>(X_.cols()); }

    /// Correlation between two inputs under the trained length-scales.
    double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;

private:
    GpModel() = default;

    KernelType kernel_ = KernelType::SquaredExponential;
    Eigen::MatrixXd X_;
    Eigen::VectorXd y_;
    Eigen::VectorXd theta_;
    Eigen::VectorXd inv_lengthscale_;
    Eigen::MatrixXd scaled_t_;  // training inputs divided by length-scales, one column per point
    std::vector<std::size_t> groups_;
    double sigma2_ = 0.0;
    double mu0_ = 0.0;
    double nugget_ = 0.0;
    double log_likelihood_ = 0.0;
    Eigen::MatrixXd chol_;
    Eigen::VectorXd alpha_;
};

/// Starting points and their scores, recorded when a trace is requested.
struct FitTrace {
    std::vector<Eigen::VectorXd> starts;
    std::vector<double> start_scores;
    std::vector<double> final_scores;
};

/// Maximum-likelihood fit: multistart compass search over log10 length-scales.
/// `warm_starts` are tried before the Latin-hypercube starts.
GpModel fit_gp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GpConfig& config, Rng& rng,
               std::span<const Eigen::VectorXd> warm_starts = {}, FitTrace* trace = nullptr);

/// Surrogate of the probability that an evaluation succeeds: a GP regression on
/// 0/1 success labels with its mean clamped to [0, 1].
class FeasibilityModel {
public:
    static FeasibilityModel constant(double probability);
    explicit FeasibilityModel(GpModel inner) : inner_(std::move(inner)) {}

    double probability(const Eigen::VectorXd& x) const;
    void probability_batch(const Eigen::MatrixXd& Xq, Eigen::VectorXd& out) const;

    const std::optional<GpModel>& inner() const { return inner_; }
    bool is_constant() const { return !inner_.has_value(); }

private:
    FeasibilityModel() = default;
    std::optional<GpModel> inner_;
    double constant_ = 1.0;
};

/// `labels[i]` is 1 when evaluation i succeeded and 0 when it failed.
FeasibilityModel fit_feasibility(const Eigen::MatrixXd& X, const std::vector<int>& labels, const GpConfig& config,
                                 Rng& rng, std::span<const Eigen::VectorXd> warm_starts = {});

inline double predict_feasible_prob(const FeasibilityModel& model, const Eigen::VectorXd& x) {
    return model.probability(x);
}

nlohmann::json to_json(const GpModel& model);
GpModel gp_model_from_json(const nlohmann::json& j, const GpConfig& config);

}  // namespace archbo
