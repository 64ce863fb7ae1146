#include "doctest.h"

#include "ipfsel/error.hpp"
#include "ipfsel/solver.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace ipfsel;
using namespace ipfsel::testing;

namespace {

Dataset linear_instance(Index n, std::vector<Index> sizes, std::uint64_t seed) {
    Rng rng(seed);
    Index p = 0;
    for (Index s : sizes) p += s;
    Eigen::MatrixXd x = random_matrix(n, p, rng);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    for (Index j = 0; j < std::min<Index>(p, 4); ++j) beta[j] = 1.0 - 0.3 * static_cast<double>(j);
    std::normal_distribution<double> nd;
    Eigen::VectorXd y = x * beta;
    for (Index i = 0; i < n; ++i) y[i] += nd(rng) + 2.0;
    return make_dataset(std::move(y), std::move(x), std::move(sizes));
}

Dataset logistic_instance(Index n, std::vector<Index> sizes, std::uint64_t seed) {
    Rng rng(seed);
    Index p = 0;
    for (Index s : sizes) p += s;
    Eigen::MatrixXd x = random_matrix(n, p, rng);
    x.col(0) = x.col(0) * 3.0 + Eigen::VectorXd::Constant(n, 1.0);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    beta[0] = 0.5;
    if (p > 1) beta[1] = -1.0;
    Eigen::VectorXd y;
    do {
        y = logistic_labels(x, beta, 0.2, rng);
    } while (y.sum() < 2 || y.sum() > static_cast<double>(n) - 2);
    return make_dataset(std::move(y), std::move(x), std::move(sizes));
}

PenaltySpec spec_of(std::vector<double> f, double alpha, double lambda) {
    PenaltySpec s;
    s.factors = std::move(f);
    s.alpha = alpha;
    s.lambda = lambda;
    return s;
}

} // namespace

TEST_CASE("standardize: hand-computed column") {
    Eigen::MatrixXd x(3, 1);
    x << 1, 2, 3;
    const auto s = standardize(x);
    CHECK(s.mean[0] == doctest::Approx(2.0));
    CHECK(s.scale[0] == doctest::Approx(std::sqrt(2.0 / 3.0)));
    CHECK(s.x(0, 0) == doctest::Approx(-1.2247).epsilon(1e-4));
    CHECK(s.x(1, 0) == doctest::Approx(0.0));
    CHECK(s.x(2, 0) == doctest::Approx(1.2247).epsilon(1e-4));
    CHECK_FALSE(s.constant[0]);
}

TEST_CASE("standardize: already standardized column is unchanged") {
    Eigen::MatrixXd x(4, 1);
    x << -1, 1, -1, 1;
    const auto s = standardize(x);
    CHECK(std::abs(s.mean[0]) < 1e-15);
    CHECK(s.scale[0] == doctest::Approx(1.0));
    CHECK((s.x - x).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("standardize: constant column is flagged and never selected") {
    Eigen::MatrixXd x(3, 2);
    x << 5, 1, 5, 2, 5, 4;
    const auto s = standardize(x);
    CHECK(s.constant[0]);
    CHECK(s.scale[0] == 1.0);
    Eigen::VectorXd y(3);
    y << 1.0, 2.0, 3.5;
    Eigen::MatrixXd xx(3, 2);
    xx = x;
    Dataset d = make_dataset(y, xx, {2});
    const FitResult f = fit(d, Family::linear, spec_of({1.0}, 1.0, 1e-3));
    CHECK(f.beta[0] == 0.0);
    CHECK(f.beta[1] != 0.0);
    CHECK_THROWS_AS(standardize(Eigen::MatrixXd(0, 0)), Error);
}

TEST_CASE("lambda_max: definition with unit factors") {
    Dataset d = linear_instance(20, {5}, 11);
    d.y.array() -= d.y.mean();
    const auto s = standardize(d.x);
    const double expect = (s.x.transpose() * d.y).cwiseAbs().maxCoeff() / 20.0;
    CHECK(lambda_max(d, Family::linear, spec_of({1.0}, 1.0, 0)) == doctest::Approx(expect));
    CHECK(lambda_max(d, Family::linear, spec_of({1.0}, 0.5, 0)) == doctest::Approx(2 * expect));
}

TEST_CASE("lambda_max: doubling a modality factor halves its contribution") {
    Dataset d = linear_instance(30, {3, 3}, 5);
    const auto s = standardize(d.x);
    const Eigen::VectorXd c = (s.x.transpose() * (d.y.array() - d.y.mean()).matrix()).cwiseAbs() / 30.0;
    const double m1 = c.head(3).maxCoeff(), m2 = c.tail(3).maxCoeff();
    CHECK(lambda_max(d, Family::linear, spec_of({1.0, 2.0}, 1.0, 0)) ==
          doctest::Approx(std::max(m1, m2 / 2.0)));
    CHECK(lambda_max(d, Family::linear, spec_of({1.0, 0.5}, 1.0, 0)) ==
          doctest::Approx(std::max(m1, 2.0 * m2)));
}

TEST_CASE("lambda_max: zero solution at the top, non-zero just below") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Dataset d = linear_instance(20, {5}, seed);
        const double lm = lambda_max(d, Family::linear, spec_of({1.0}, 1.0, 0));
        const FitResult top = fit(d, Family::linear, spec_of({1.0}, 1.0, lm));
        CHECK(top.active_set().empty());
        CHECK(top.intercept == doctest::Approx(d.y.mean()));
        const FitResult below = fit(d, Family::linear, spec_of({1.0}, 1.0, 0.99 * lm));
        CHECK(below.active_set().size() >= 1);
    }
    Dataset d = logistic_instance(40, {6}, 9);
    const double lm = lambda_max(d, Family::logistic, spec_of({1.0}, 1.0, 0));
    const FitResult top = fit(d, Family::logistic, spec_of({1.0}, 1.0, lm));
    CHECK(top.active_set().empty());
    const double ybar = d.y.mean();
    CHECK(top.intercept == doctest::Approx(std::log(ybar / (1 - ybar))));
    CHECK(fit(d, Family::logistic, spec_of({1.0}, 1.0, 0.99 * lm)).active_set().size() >= 1);
}

TEST_CASE("lambda_max: constant response gives zero and an intercept-only fit") {
    Rng rng(3);
    Eigen::MatrixXd x = random_matrix(10, 3, rng);
    Dataset d = make_dataset(Eigen::VectorXd::Constant(10, 4.0), x, {3});
    CHECK(lambda_max(d, Family::linear, spec_of({1.0}, 1.0, 0)) == 0.0);
    const FitResult f = fit(d, Family::linear, spec_of({1.0}, 1.0, 0.1));
    CHECK(f.active_set().empty());
    CHECK(f.intercept == doctest::Approx(4.0));
}

TEST_CASE("fit: orthonormal design matches the soft-threshold closed form") {
    Rng rng(42);
    for (int rep = 0; rep < 10; ++rep) {
        Eigen::MatrixXd x = orthonormal_design(40, 20, rng);
        Eigen::VectorXd y = random_matrix(40, 1, rng).col(0) * 2.0;
        y.head(5).array() += 3.0;
        const Eigen::VectorXd z = x.transpose() * y / 40.0;
        const double lambda = 0.1 + 0.05 * rep;
        Dataset d = make_dataset(y, x, {20});
        const FitResult f = fit(d, Family::linear, spec_of({1.0}, 1.0, lambda));
        for (Index j = 0; j < 20; ++j) CHECK(std::abs(f.beta[j] - soft_threshold(z[j], lambda)) < 1e-8);
        CHECK(std::abs(f.intercept - y.mean()) < 1e-8);
    }
}

TEST_CASE("fit: logistic objective matches a proximal-gradient oracle") {
    for (std::uint64_t seed = 100; seed < 105; ++seed) {
        Dataset d = logistic_instance(30, {4}, seed);
        const FitResult f = fit(d, Family::logistic, spec_of({1.0}, 1.0, 0.05));
        REQUIRE(f.converged);
        const OracleScale o = oracle_standardize(d.x);
        const Eigen::VectorXd pf = Eigen::VectorXd::Ones(4);
        const Eigen::VectorXd bs = f.beta.cwiseProduct(o.sd);
        const double b0s = f.intercept + o.mean.dot(f.beta);
        const double mine = oracle_logistic_objective(o.xs, d.y, b0s, bs, pf, 1.0, 0.05);
        const double ref = fista_logistic(o.xs, d.y, pf, 1.0, 0.05, 20000);
        CHECK(std::abs(mine - ref) < 1e-5);
        CHECK(mine <= ref + 1e-9);
    }
}

TEST_CASE("kkt: converged fits certify, perturbations do not") {
    Dataset d = logistic_instance(60, {5, 15}, 77);
    const PenaltySpec sp = spec_of({1.0, 2.0}, 0.7, 0.02);
    const FitResult f = fit(d, Family::logistic, sp);
    REQUIRE(f.converged);
    const Eigen::VectorXd r = kkt_residuals(f, d, sp);
    CHECK(r.maxCoeff() <= 1e-6);

    const IndexSet act = f.active_set();
    REQUIRE(!act.empty());
    FitResult bumped = f;
    const auto s = standardize(d.x);
    bumped.beta[act[0]] += 0.1 / s.scale[act[0]];  // +0.1 on the standardized scale
    CHECK(kkt_residuals(bumped, d, sp)[act[0]] > 1e-3);

    const double lm = lambda_max(d, Family::logistic, sp);
    PenaltySpec top = sp;
    top.lambda = lm * 1.01;
    const FitResult z = fit(d, Family::logistic, top);
    CHECK(z.active_set().empty());
    CHECK(kkt_residuals(z, d, top).maxCoeff() == 0.0);
}

TEST_CASE("gradient: logistic loss gradient matches central differences") {
    Rng rng(5);
    for (int rep = 0; rep < 10; ++rep) {
        Eigen::MatrixXd x = random_matrix(25, 6, rng);
        Eigen::VectorXd b = random_matrix(6, 1, rng).col(0) * 0.5;
        Eigen::VectorXd y = logistic_labels(x, b, 0.1, rng);
        const double b0 = 0.3;
        const Eigen::VectorXd g = logistic_gradient(x, y, b0, b);
        Eigen::VectorXd fd(7);
        const double h = 1e-5;
        fd[0] = (logistic_loss(x, y, b0 + h, b) - logistic_loss(x, y, b0 - h, b)) / (2 * h);
        for (Index j = 0; j < 6; ++j) {
            Eigen::VectorXd bp = b, bm = b;
            bp[j] += h;
            bm[j] -= h;
            fd[j + 1] = (logistic_loss(x, y, b0, bp) - logistic_loss(x, y, b0, bm)) / (2 * h);
        }
        CHECK((g - fd).norm() / g.norm() < 1e-6);
    }
}

TEST_CASE("rescaling identity: factor fit equals lasso on rescaled columns") {
    Dataset d = linear_instance(50, {10, 10}, 21);
    for (double f2 : {1.0, 2.0, 0.25}) {
        const PenaltySpec sp = spec_of({1.0, f2}, 1.0, 0.08);
        const FitResult a = fit(d, Family::linear, sp);
        const FitResult b = fit_with_factors_equivalence(d, Family::linear, sp);
        CHECK(a.active_set() == b.active_set());
        CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() < 1e-6);
    }
    Dataset lg = logistic_instance(50, {10, 10}, 8);
    const PenaltySpec sp = spec_of({1.0, 2.0}, 1.0, 0.03);
    const FitResult a = fit(lg, Family::logistic, sp);
    const FitResult b = fit_with_factors_equivalence(lg, Family::logistic, sp);
    CHECK(a.active_set() == b.active_set());
    CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() < 1e-6);

    CHECK_THROWS_AS(fit_with_factors_equivalence(d, Family::linear, spec_of({1.0, 1.0}, 0.7, 0.1)),
                    Error);
}

TEST_CASE("rescaling identity: small second factor lets modality 2 enter earlier") {
    Dataset d = linear_instance(50, {10, 10}, 4);
    d.y += d.x.col(14) * 0.5;
    const std::vector<double> grid = lambda_sequence(5.0, 0.001, 60);
    auto first_m2 = [&](std::vector<double> f) {
        const auto path = fit_path(d, Family::linear, f, 1.0, grid);
        for (std::size_t k = 0; k < path.size(); ++k)
            if (path[k].beta.tail(10).cwiseAbs().maxCoeff() > 0) return k;
        return path.size();
    };
    CHECK(first_m2({1.0, 1.0 / 16}) < first_m2({1.0, 1.0}));
}

TEST_CASE("fit: objective is non-increasing across sweeps") {
    Dataset d = linear_instance(40, {30}, 13);
    std::vector<double> trace;
    SolverOptions opts;
    opts.objective_trace = &trace;
    fit(d, Family::linear, spec_of({1.0}, 0.8, 0.05), opts);
    REQUIRE(trace.size() > 3);
    // Moving to a smaller lambda on the warm path lowers the objective at
    // fixed beta, so the trace is monotone across lambda steps too.
    std::size_t violations = 0;
    for (std::size_t k = 1; k < trace.size(); ++k)
        if (trace[k] > trace[k - 1] + 1e-12) ++violations;
    CHECK(violations == 0);

    Dataset lg = logistic_instance(60, {20}, 14);
    trace.clear();
    fit(lg, Family::logistic, spec_of({1.0}, 1.0, 0.01), opts);
    for (std::size_t k = 1; k < trace.size(); ++k) CHECK(trace[k] <= trace[k - 1] + 1e-12);
}

TEST_CASE("fit: deterministic bit-identical output") {
    Dataset d = logistic_instance(50, {5, 25}, 99);
    const PenaltySpec sp = spec_of({1.0, 4.0}, 1.0, 0.02);
    const FitResult a = fit(d, Family::logistic, sp);
    const FitResult b = fit(d, Family::logistic, sp);
    CHECK(a.intercept == b.intercept);
    CHECK(a.beta == b.beta);
}

TEST_CASE("predict: link functions and shape checks") {
    FitResult f;
    f.beta = Eigen::VectorXd::Zero(1);
    f.intercept = 0.0;
    f.family = Family::logistic;
    Eigen::MatrixXd x(2, 1);
    x << 0.847, -3.0;
    CHECK(predict(f, x)[0] == doctest::Approx(0.5));
    f.beta[0] = 1.0;
    CHECK(predict(f, x)[0] == doctest::Approx(0.6999).epsilon(1e-4));
    CHECK(classify(f, x)[0] == 1);
    CHECK(classify(f, x)[1] == 0);
    f.family = Family::linear;
    f.beta[0] = 0.0;
    f.intercept = 2.5;
    CHECK(predict(f, x)[1] == 2.5);
    CHECK_THROWS_AS(predict(f, Eigen::MatrixXd(2, 3)), Error);
}

TEST_CASE("dataset and spec validation") {
    Rng rng(1);
    Eigen::MatrixXd x = random_matrix(5, 4, rng);
    CHECK_THROWS_AS(make_dataset(Eigen::VectorXd::Zero(5), x, {3}), Error);
    Dataset d = make_dataset(Eigen::VectorXd::Zero(5), x, {2, 2});
    CHECK_THROWS_AS(fit(d, Family::logistic, spec_of({1.0, 1.0}, 1.0, 0.1)), Error);
    d.y[0] = 1.0;
    CHECK_THROWS_AS(fit(d, Family::logistic, spec_of({2.0, 1.0}, 1.0, 0.1)), Error);
    CHECK_THROWS_AS(fit(d, Family::logistic, spec_of({1.0, -1.0}, 1.0, 0.1)), Error);
    CHECK_THROWS_AS(fit(d, Family::logistic, spec_of({1.0, 1.0}, 0.0, 0.1)), Error);
    CHECK_THROWS_AS(fit(d, Family::logistic, spec_of({1.0}, 1.0, 0.1)), Error);
    d.y[1] = 0.5;
    CHECK_THROWS_AS(fit(d, Family::logistic, spec_of({1.0, 1.0}, 1.0, 0.1)), Error);
}
