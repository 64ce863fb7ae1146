#include "ipfsel/tuner.hpp"

#include "ipfsel/error.hpp"
#include "ipfsel/parallel.hpp"
#include "ipfsel/rng.hpp"

#include <algorithm>
#include <numeric>

namespace ipfsel {

std::vector<FactorTuple> default_factor_grid() {
    return {{1, 1},  {1, 2},      {1, 4},      {1, 8},      {1, 16},      {1, 32},
            {1, 64}, {1, 1.0 / 2}, {1, 1.0 / 4}, {1, 1.0 / 8}, {1, 1.0 / 16}};
}

void TuneGrid::validate(Index modalities) const {
    require(!factor_combinations.empty(), "tuning grid has no factor combinations");
    for (const auto& c : factor_combinations) {
        require(static_cast<Index>(c.size()) == modalities,
                "factor combination length does not match the number of modalities");
        require(c.front() == 1.0, "reference factor of every combination must be 1");
        for (double f : c) require(f > 0.0, "penalty factors must be positive");
    }
    require(lambda_path_length >= 1, "lambda_path_length must be >= 1");
    require(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0, "lambda_min_ratio must lie in (0,1)");
    require(k_folds >= 2, "k_folds must be >= 2");
    require(repeats >= 1, "repeats must be >= 1");
    require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0,1]");
}

FoldPlan make_folds(Index n, int k, int repeats, const Eigen::VectorXd& labels, std::uint64_t seed) {
    require(k >= 2 && k <= n, "need 2 <= k <= n folds");
    require(labels.size() == n, "label vector length must equal n");
    require(repeats >= 1, "repeats must be >= 1");
    std::vector<Index> cls[2];
    for (Index i = 0; i < n; ++i) cls[labels[i] != 0.0 ? 1 : 0].push_back(i);
    FoldPlan plan;
    plan.k = k;
    plan.stratified = static_cast<Index>(cls[0].size()) >= k && static_cast<Index>(cls[1].size()) >= k;
    plan.assignment.assign(static_cast<std::size_t>(repeats), std::vector<int>(static_cast<std::size_t>(n)));
    for (int r = 0; r < repeats; ++r) {
        Rng rng(derive_seed(seed, {stream::folds, static_cast<std::uint64_t>(r)}));
        auto& a = plan.assignment[static_cast<std::size_t>(r)];
        if (plan.stratified) {
            // Round-robin each shuffled class, continuing where the previous
            // class stopped so overall fold sizes differ by at most one.
            int next = 0;
            for (auto& c : cls) {
                std::vector<Index> idx = c;
                std::shuffle(idx.begin(), idx.end(), rng);
                for (Index i : idx) {
                    a[static_cast<std::size_t>(i)] = next;
                    next = (next + 1) % k;
                }
            }
        } else {
            std::vector<Index> idx(static_cast<std::size_t>(n));
            std::iota(idx.begin(), idx.end(), Index{0});
            std::shuffle(idx.begin(), idx.end(), rng);
            for (std::size_t t = 0; t < idx.size(); ++t)
                a[static_cast<std::size_t>(idx[t])] = static_cast<int>(t % static_cast<std::size_t>(k));
        }
    }
    return plan;
}

namespace {

struct FoldSplit {
    std::vector<Index> train, test;
};

FoldSplit split(const FoldPlan& folds, std::size_t task) {
    const auto k = static_cast<std::size_t>(folds.k);
    const auto& a = folds.assignment[task / k];
    const int f = static_cast<int>(task % k);
    FoldSplit s;
    for (std::size_t i = 0; i < a.size(); ++i)
        (a[i] == f ? s.test : s.train).push_back(static_cast<Index>(i));
    return s;
}

double misclassification(const FitResult& fit, const Dataset& test) {
    const Eigen::VectorXi cls = classify(fit, test.x);
    Index wrong = 0;
    for (Index i = 0; i < test.n(); ++i) wrong += cls[i] != static_cast<int>(test.y[i]);
    return static_cast<double>(wrong) / static_cast<double>(test.n());
}

void require_logistic(Family family) {
    require(family == Family::logistic, "cross-validated classification error needs the logistic family");
}

} // namespace

double cv_error(const Dataset& data, Family family, const FactorTuple& factors, double alpha,
                double lambda, const FoldPlan& folds, long* nonconverged) {
    require_logistic(family);
    require(!folds.assignment.empty() && static_cast<Index>(folds.assignment[0].size()) == data.n(),
            "fold plan does not match the dataset");
    PenaltySpec spec;
    spec.factors = factors;
    spec.alpha = alpha;
    spec.lambda = lambda;
    const std::size_t tasks = folds.assignment.size() * static_cast<std::size_t>(folds.k);
    double sum = 0.0;
    long used = 0, nc = 0;
    for (std::size_t t = 0; t < tasks; ++t) {
        const FoldSplit s = split(folds, t);
        if (s.test.empty()) continue;
        const Dataset train = data.subset_rows(s.train);
        const Dataset test = data.subset_rows(s.test);
        try {
            const FitResult f = fit(train, family, spec);
            nc += !f.converged;
            sum += misclassification(f, test);
            ++used;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::invalid_input) throw;
        }
    }
    if (nonconverged) *nonconverged = nc;
    if (used == 0) fail(ErrorKind::tuning_failed, "every cross-validation fold failed to fit");
    return sum / static_cast<double>(used);
}

CvPath cv_error_path(const Dataset& data, Family family, const FactorTuple& factors, double alpha,
                     const std::vector<double>& lambdas, const FoldPlan& folds, int jobs) {
    require_logistic(family);
    require(!lambdas.empty(), "empty lambda path");
    const std::size_t tasks = folds.assignment.size() * static_cast<std::size_t>(folds.k);
    const std::size_t L = lambdas.size();
    std::vector<std::vector<double>> err(tasks);
    std::vector<long> nc(tasks, 0);
    std::vector<char> failed(tasks, 0);
    SolverOptions opts;
    opts.path_early_stop = true;
    parallel_for(tasks, jobs, [&](std::size_t t) {
        const FoldSplit s = split(folds, t);
        if (s.test.empty()) {
            failed[t] = 1;
            return;
        }
        const Dataset train = data.subset_rows(s.train);
        const Dataset test = data.subset_rows(s.test);
        std::vector<FitResult> path;
        try {
            path = fit_path(train, family, factors, alpha, lambdas, opts);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::invalid_input) throw;
            failed[t] = 1;
            return;
        }
        auto& e = err[t];
        e.resize(L);
        for (std::size_t k = 0; k < path.size(); ++k) {
            e[k] = misclassification(path[k], test);
            nc[t] += !path[k].converged;
        }
        // A path that stopped on a saturated deviance keeps its last model
        // for the remaining smaller lambdas.
        for (std::size_t k = path.size(); k < L; ++k) e[k] = e[path.size() - 1];
    });
    CvPath out;
    out.lambdas = lambdas;
    out.error.assign(L, 0.0);
    long used = 0;
    for (std::size_t t = 0; t < tasks; ++t) {
        out.nonconverged += nc[t];
        if (failed[t]) {
            ++out.failed_folds;
            continue;
        }
        ++used;
        for (std::size_t k = 0; k < L; ++k) out.error[k] += err[t][k];
    }
    if (used == 0) fail(ErrorKind::tuning_failed, "every cross-validation fold failed to fit");
    for (double& e : out.error) e /= static_cast<double>(used);
    return out;
}

TunedConfig tune(const Dataset& data, const TuneGrid& grid) {
    data.validate(Family::logistic);
    grid.validate(data.modalities());
    const FoldPlan folds = make_folds(data.n(), grid.k_folds, grid.repeats, data.y, grid.seed);
    TunedConfig out;
    out.stratified = folds.stratified;
    out.error_table.reserve(grid.factor_combinations.size());
    bool any = false;
    for (const auto& combo : grid.factor_combinations) {
        CombinationResult row;
        row.factors = combo;
        PenaltySpec spec;
        spec.factors = combo;
        spec.alpha = grid.alpha;
        const double top = lambda_max(data, Family::logistic, spec);
        if (!(top > 0.0)) {
            out.error_table.push_back(row);
            continue;
        }
        const auto lambdas = lambda_sequence(top, grid.lambda_min_ratio, grid.lambda_path_length);
        CvPath cv;
        try {
            cv = cv_error_path(data, Family::logistic, combo, grid.alpha, lambdas, folds, grid.jobs);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::tuning_failed) throw;
            out.error_table.push_back(row);
            continue;
        }
        // Ties inside a path go to the largest lambda.
        std::size_t best = 0;
        for (std::size_t k = 1; k < cv.error.size(); ++k)
            if (cv.error[k] < cv.error[best]) best = k;
        row.best_lambda = lambdas[best];
        row.best_error = cv.error[best];
        row.nonconverged = cv.nonconverged;
        out.nonconverged += cv.nonconverged;
        // Ties across combinations go to the earlier grid entry.
        if (!any || row.best_error < out.cv_error) {
            out.best_factors = combo;
            out.best_lambda = row.best_lambda;
            out.cv_error = row.best_error;
            any = true;
        }
        out.error_table.push_back(row);
    }
    if (!any) fail(ErrorKind::tuning_failed, "no factor combination could be cross-validated");
    return out;
}

} // namespace ipfsel
