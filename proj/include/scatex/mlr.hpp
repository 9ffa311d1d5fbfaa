#pragma once

// Multinomial logistic regression with an L1 (Lasso) penalty.
//
// The fitted objective is the mean multinomial negative log-likelihood plus
// lambda * sum_k ||beta_k||_1 over standardized features, using the
// symmetric parameterization in which every class carries its own beta_k and
// intercepts are unpenalized. It is minimized by monotone accelerated
// proximal gradient (soft-thresholding) with backtracking, warm-started along
// a descending lambda path; lambda is chosen on a stratified validation split.

#include "scatex/scattering.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace scatex {

struct FitConfig {
    // Descending positive values; empty means an automatic geometric grid of
    // n_lambda points from lambda_max down to lambda_min_ratio * lambda_max.
    std::vector<double> lambda_grid;
    int n_lambda = 50;
    double lambda_min_ratio = 1e-3;
    int max_iter = 20000;
    // Convergence threshold on the KKT residual of the mean-loss objective.
    double tol = 1e-5;
    double val_fraction = 0.2;
    std::uint64_t seed = 0;
    // Center and scale each feature column before fitting.
    bool standardize = true;
    // Stop the path once the training deviance ratio exceeds this value.
    double max_deviance_ratio = 0.999;

    void validate() const;
};

struct MlrModel {
    int K = 0;
    int p = 0;
    double lambda = 0.0;
    Eigen::VectorXd alphas;          // K
    Eigen::MatrixXd betas;           // K x p, on standardized features
    Eigen::VectorXd feature_center;  // p
    Eigen::VectorXd feature_scale;   // p, positive
    std::optional<ScatteringConfig> scattering;

    std::size_t nonzero_count() const;
    std::size_t nonzero_count(int k) const; // k is 0-based
};

/// Uniform model: zero betas, equal intercepts, identity standardization.
MlrModel make_uniform_model(int K, int p);

/// Per-lambda record of the validation path.
struct PathPoint {
    double lambda = 0.0;
    std::size_t nonzeros = 0;
    double validation_accuracy = 0.0;
    int iterations = 0;
    double kkt_residual = 0.0;
};

struct FitResult {
    MlrModel model;
    std::vector<PathPoint> path;
    std::size_t selected = 0; // index into path / lambda grid
    std::vector<double> lambda_grid;
    double lambda_max = 0.0;
    double final_kkt_residual = 0.0;
    int final_iterations = 0;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RowMatrix to_matrix(const std::vector<std::vector<double>>& rows);

/// Fits on an N x p feature matrix with labels in 1..K.
FitResult fit(const std::vector<std::vector<double>>& features, const std::vector<int>& labels, int K,
              const FitConfig& config);

struct NllGrad {
    double nll = 0.0;
    Eigen::VectorXd grad_alpha; // K
    Eigen::MatrixXd grad_beta;  // K x p
};

/// Summed multinomial negative log-likelihood of labels (1..K) under logits
/// alpha_k + beta_k . x_i, with its exact gradient. Features are used as given.
NllGrad nll_and_grad(const Eigen::VectorXd& alphas, const Eigen::MatrixXd& betas, const RowMatrix& features,
                     std::span<const int> labels);

/// Class probabilities for one raw feature row (standardization applied).
Eigen::VectorXd predict_proba(const MlrModel& model, std::span<const double> features);

/// Index (0-based) of the most probable class; ties go to the smallest index.
int predict_class(const MlrModel& model, std::span<const double> features);

double accuracy(const MlrModel& model, const std::vector<std::vector<double>>& features,
                std::span<const int> labels);

/// Largest KKT violation of the mean-loss penalized objective at `model`
/// on raw features; zero at an exact minimizer.
double kkt_residual(const MlrModel& model, const std::vector<std::vector<double>>& features,
                    std::span<const int> labels);

nlohmann::json to_json(const FitConfig& config);
/// Missing fields keep their defaults; unknown fields raise ConfigError.
FitConfig fit_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MlrModel& model);
MlrModel mlr_model_from_json(const nlohmann::json& j);

} // namespace scatex
