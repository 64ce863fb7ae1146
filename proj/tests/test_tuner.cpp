#include "doctest.h"

#include "ipfsel/error.hpp"
#include "ipfsel/simgen.hpp"
#include "ipfsel/tuner.hpp"

#include <algorithm>
#include <set>

using namespace ipfsel;

namespace {

Dataset small_design(std::uint64_t seed, Index n = 60) {
    DesignSpec d;
    d.p1 = 20;
    d.p2 = 60;
    d.b1 = 4;
    d.b2 = 4;
    d.n = n;
    return sample(d, seed).dataset;
}

TuneGrid quick_grid(std::uint64_t seed) {
    TuneGrid g;
    g.lambda_path_length = 30;
    g.repeats = 2;
    g.k_folds = 4;
    g.seed = seed;
    return g;
}

} // namespace

TEST_CASE("default factor grid order") {
    const auto g = default_factor_grid();
    REQUIRE(g.size() == 11);
    const double expect[] = {1, 2, 4, 8, 16, 32, 64, 0.5, 0.25, 0.125, 0.0625};
    for (std::size_t k = 0; k < g.size(); ++k) {
        CHECK(g[k].size() == 2);
        CHECK(g[k][0] == 1.0);
        CHECK(g[k][1] == expect[k]);
    }
}

TEST_CASE("stratified folds balance classes") {
    Eigen::VectorXd y(100);
    for (Index i = 0; i < 100; ++i) y[i] = i < 37 ? 1.0 : 0.0;
    const FoldPlan plan = make_folds(100, 5, 3, y, 9);
    CHECK(plan.stratified);
    REQUIRE(plan.assignment.size() == 3);
    for (const auto& a : plan.assignment) {
        std::vector<int> size(5, 0), ones(5, 0);
        for (Index i = 0; i < 100; ++i) {
            REQUIRE(a[static_cast<std::size_t>(i)] >= 0);
            REQUIRE(a[static_cast<std::size_t>(i)] < 5);
            ++size[static_cast<std::size_t>(a[static_cast<std::size_t>(i)])];
            ones[static_cast<std::size_t>(a[static_cast<std::size_t>(i)])] += y[i] != 0.0;
        }
        CHECK(*std::max_element(size.begin(), size.end()) - *std::min_element(size.begin(), size.end()) <= 1);
        CHECK(*std::max_element(ones.begin(), ones.end()) - *std::min_element(ones.begin(), ones.end()) <= 1);
    }
    CHECK(plan.assignment[0] != plan.assignment[1]);
    CHECK(make_folds(100, 5, 3, y, 9).assignment == plan.assignment);
    CHECK(make_folds(100, 5, 3, y, 10).assignment != plan.assignment);
}

TEST_CASE("fold plan falls back when a class is too small") {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(30);
    y[0] = y[1] = y[2] = 1.0;
    const FoldPlan plan = make_folds(30, 5, 1, y, 1);
    CHECK_FALSE(plan.stratified);
    std::vector<int> size(5, 0);
    for (int f : plan.assignment[0]) ++size[static_cast<std::size_t>(f)];
    for (int s : size) CHECK(s == 6);
}

TEST_CASE("CV error bookkeeping matches a direct count") {
    const Dataset data = small_design(4);
    const FoldPlan folds = make_folds(data.n(), 4, 2, data.y, 77);
    PenaltySpec spec;
    spec.factors = {1.0, 2.0};
    const double lambda = 0.3 * lambda_max(data, Family::logistic, spec);
    spec.lambda = lambda;
    double wrong = 0.0;
    for (const auto& a : folds.assignment) {
        for (int f = 0; f < 4; ++f) {
            IndexSet train, test;
            for (Index i = 0; i < data.n(); ++i) (a[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
            const FitResult m = fit(data.subset_rows(train), Family::logistic, spec);
            const Dataset held = data.subset_rows(test);
            const Eigen::VectorXi cls = classify(m, held.x);
            double e = 0.0;
            for (Index i = 0; i < held.n(); ++i) e += cls[i] != static_cast<int>(held.y[i]);
            wrong += e / static_cast<double>(held.n());
        }
    }
    const double expect = wrong / 8.0;
    CHECK(cv_error(data, Family::logistic, spec.factors, 1.0, lambda, folds) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("CV path agrees with single-lambda CV before saturation") {
    const Dataset data = small_design(5);
    const FoldPlan folds = make_folds(data.n(), 4, 2, data.y, 3);
    const FactorTuple f{1.0, 1.0};
    PenaltySpec spec;
    spec.factors = f;
    const auto lambdas = lambda_sequence(lambda_max(data, Family::logistic, spec), 0.01, 30);
    const CvPath path = cv_error_path(data, Family::logistic, f, 1.0, lambdas, folds);
    REQUIRE(path.error.size() == lambdas.size());
    for (std::size_t k : {0u, 3u, 8u, 12u}) {
        const double single = cv_error(data, Family::logistic, f, 1.0, lambdas[k], folds);
        CHECK(path.error[k] == doctest::Approx(single).epsilon(1e-12));
    }
}

TEST_CASE("tune picks the grid minimum with deterministic tie-breaks") {
    const Dataset data = small_design(6);
    TuneGrid g = quick_grid(8);
    const TunedConfig t = tune(data, g);
    REQUIRE(t.error_table.size() == 11);
    double best = 1e9;
    std::size_t arg = 0;
    for (std::size_t k = 0; k < t.error_table.size(); ++k)
        if (t.error_table[k].best_error < best) {
            best = t.error_table[k].best_error;
            arg = k;
        }
    CHECK(t.cv_error == best);
    CHECK(t.best_factors == t.error_table[arg].factors);
    CHECK(t.best_lambda == t.error_table[arg].best_lambda);

    SUBCASE("single-combination grid equals the matching row") {
        TuneGrid one = g;
        one.factor_combinations = {{1.0, 1.0}};
        const TunedConfig l = tune(data, one);
        CHECK(l.best_lambda == t.error_table[0].best_lambda);
        CHECK(l.cv_error == t.error_table[0].best_error);
    }
    SUBCASE("duplicated combination resolves to the first copy") {
        TuneGrid dup = g;
        dup.factor_combinations = {{1.0, 4.0}, {1.0, 4.0}};
        const TunedConfig d = tune(data, dup);
        CHECK(d.error_table[0].best_error == d.error_table[1].best_error);
        CHECK(d.best_factors == FactorTuple{1.0, 4.0});
    }
    SUBCASE("thread count does not change the result") {
        TuneGrid par = g;
        par.jobs = 3;
        const TunedConfig p = tune(data, par);
        CHECK(p.best_lambda == t.best_lambda);
        CHECK(p.best_factors == t.best_factors);
        for (std::size_t k = 0; k < 11; ++k) CHECK(p.error_table[k].best_error == t.error_table[k].best_error);
    }
}

TEST_CASE("tuner input validation") {
    const Dataset data = small_design(7);
    TuneGrid g = quick_grid(1);
    g.k_folds = 1;
    CHECK_THROWS_AS(tune(data, g), Error);
    g = quick_grid(1);
    g.factor_combinations = {{1.0, 1.0, 1.0}};
    CHECK_THROWS_AS(tune(data, g), Error);
    g = quick_grid(1);
    g.factor_combinations = {};
    CHECK_THROWS_AS(tune(data, g), Error);
}
