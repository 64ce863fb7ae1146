#pragma once

#include "ipfsel/dataset.hpp"

#include <span>
#include <vector>

namespace ipfsel {

// Per-modality penalty multipliers on the reference penalty `lambda`. The
// effective penalty of a feature in modality m is lambda * factors[m] and
// the reference modality (index 0) has factor 1.
struct PenaltySpec {
    std::vector<double> factors{1.0};
    double alpha = 1.0;  // 1 = lasso, (0,1) = elastic net
    double lambda = 0.0;

    void validate(Index modalities) const;
};

struct SolverOptions {
    double tolerance = 1e-7;       // max |coefficient change| per sweep, standardized scale
    long max_sweeps = 100000;
    int max_irls = 50;
    double weight_floor = 1e-5;
    bool path_early_stop = false;  // stop a path once the deviance saturates
    std::vector<double>* objective_trace = nullptr;
};

struct FitResult {
    double intercept = 0.0;
    Eigen::VectorXd beta;  // original feature scale
    double lambda = 0.0;
    PenaltySpec spec;
    Family family = Family::linear;
    long n_iter = 0;       // coordinate sweeps
    bool converged = true;

    IndexSet active_set() const;
};

// Expands per-modality factors to one factor per column.
Eigen::VectorXd feature_penalty_factors(const Dataset& data, std::span<const double> factors);

// Smallest reference lambda whose solution is identically zero.
double lambda_max(const Dataset& data, Family family, const PenaltySpec& spec);

FitResult fit(const Dataset& data, Family family, const PenaltySpec& spec,
              const SolverOptions& opts = {});

// Warm-started fits along a decreasing lambda sequence. With
// `opts.path_early_stop` the returned vector may be shorter than `lambdas`.
std::vector<FitResult> fit_path(const Dataset& data, Family family,
                                std::span<const double> factors, double alpha,
                                std::span<const double> lambdas, const SolverOptions& opts = {});

// Log-spaced path from `lambda_hi` down to `lambda_hi * min_ratio`.
std::vector<double> lambda_sequence(double lambda_hi, double min_ratio, int length);

// Fits ordinary lasso on standardized columns divided by their penalty
// factors and maps the coefficients back. Only valid for alpha == 1; used as
// an independent cross-check of the penalty-factor path.
FitResult fit_with_factors_equivalence(const Dataset& data, Family family, const PenaltySpec& spec,
                                       const SolverOptions& opts = {});

// Linear: fitted values. Logistic: class-1 probabilities.
Eigen::VectorXd predict(const FitResult& fit, const Eigen::MatrixXd& x_new);
Eigen::VectorXi classify(const FitResult& fit, const Eigen::MatrixXd& x_new);

// Optimality certificate on the standardized scale.
Eigen::VectorXd kkt_residuals(const FitResult& fit, const Dataset& data, const PenaltySpec& spec);

// Coefficients of `fit` expressed on the standardized scale of `s`.
void to_standardized(const FitResult& fit, const Standardized& s, double& intercept,
                     Eigen::VectorXd& beta);

// (1/n) * sum(log(1 + exp(eta)) - y * eta)
double logistic_loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double intercept,
                     const Eigen::VectorXd& beta);
// Gradient of logistic_loss; element 0 is the intercept.
Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                  double intercept, const Eigen::VectorXd& beta);

// Penalized objective as minimized by the solver, on whatever scale `x` is.
double penalized_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Family family,
                           double intercept, const Eigen::VectorXd& beta,
                           const Eigen::VectorXd& feature_pf, double alpha, double lambda);

double soft_threshold(double z, double gamma) noexcept;

} // namespace ipfsel
