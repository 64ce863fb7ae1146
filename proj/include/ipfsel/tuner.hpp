#pragma once

#include "ipfsel/solver.hpp"

#include <cstdint>
#include <vector>

namespace ipfsel {

using FactorTuple = std::vector<double>;

// The eleven two-modality combinations, in tie-breaking order.
std::vector<FactorTuple> default_factor_grid();

struct TuneGrid {
    std::vector<FactorTuple> factor_combinations = default_factor_grid();
    int lambda_path_length = 100;
    double lambda_min_ratio = 0.01;
    int k_folds = 5;
    int repeats = 10;
    double alpha = 1.0;
    std::uint64_t seed = 0;
    int jobs = 1;

    void validate(Index modalities) const;
};

struct FoldPlan {
    // assignment[r][i] = fold of observation i in repeat r
    std::vector<std::vector<int>> assignment;
    int k = 0;
    bool stratified = true;  // false when a class had fewer than k members
};

FoldPlan make_folds(Index n, int k, int repeats, const Eigen::VectorXd& labels, std::uint64_t seed);

struct CvPath {
    std::vector<double> lambdas;
    std::vector<double> error;  // mean held-out misclassification per lambda
    long nonconverged = 0;      // fold fits that hit an iteration limit
    long failed_folds = 0;
};

// Misclassification at a single lambda, averaged over every repeat and fold.
double cv_error(const Dataset& data, Family family, const FactorTuple& factors, double alpha,
                double lambda, const FoldPlan& folds, long* nonconverged = nullptr);

// Same folds, warm-started along a lambda path.
CvPath cv_error_path(const Dataset& data, Family family, const FactorTuple& factors, double alpha,
                     const std::vector<double>& lambdas, const FoldPlan& folds, int jobs = 1);

struct CombinationResult {
    FactorTuple factors;
    double best_lambda = 0.0;
    double best_error = 1.0;
    long nonconverged = 0;
};

struct TunedConfig {
    FactorTuple best_factors;
    double best_lambda = 0.0;
    double cv_error = 1.0;
    std::vector<CombinationResult> error_table;  // grid order
    bool stratified = true;
    long nonconverged = 0;
};

TunedConfig tune(const Dataset& data, const TuneGrid& grid);

} // namespace ipfsel
