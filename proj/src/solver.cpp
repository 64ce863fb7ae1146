#include "ipfsel/solver.hpp"

#include "ipfsel/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ipfsel {

namespace {

double log1pexp(double t) noexcept {
    return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double sigmoid(double t) noexcept {
    if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

// Path step used when a single fit is reached by warm starts from the top.
const double kPathRatio = std::pow(0.01, 1.0 / 99.0);

// Cyclic coordinate descent on a prepared (standardized or rescaled) design.
// Logistic problems run an IRLS outer loop around the same inner solver.
// The state persists between solve() calls so paths are warm-started.
class Engine {
public:
    Engine(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Eigen::VectorXd pf,
           std::vector<char> selectable, Family family, double alpha, const SolverOptions& opts)
        : x_(x), y_(y), pf_(std::move(pf)), selectable_(std::move(selectable)), family_(family),
          alpha_(alpha), opts_(opts), n_(static_cast<double>(x.rows())) {
        const Index p = x_.cols();
        beta_ = Eigen::VectorXd::Zero(p);
        in_set_.assign(static_cast<std::size_t>(p), 0);
        v_.resize(p);
        const double ybar = y_.mean();
        if (family_ == Family::linear) {
            b0_ = ybar;
            for (Index j = 0; j < p; ++j) v_[j] = x_.col(j).squaredNorm() / n_;
        } else {
            b0_ = std::log(ybar / (1.0 - ybar));
        }
        null_b0_ = b0_;
        eta_ = Eigen::VectorXd::Constant(x_.rows(), b0_);
        null_deviance_ = deviance();
        update_score();
        lambda_max_ = 0.0;
        for (Index j = 0; j < p; ++j) {
            if (!selectable_[static_cast<std::size_t>(j)]) continue;
            lambda_max_ = std::max(lambda_max_, std::abs(score_[j]) / (alpha_ * pf_[j]));
        }
        lambda_prev_ = lambda_max_;
    }

    double lambda_max() const noexcept { return lambda_max_; }
    double intercept() const noexcept { return b0_; }
    const Eigen::VectorXd& beta() const noexcept { return beta_; }
    bool converged() const noexcept { return converged_; }
    long sweeps() const noexcept { return sweeps_; }
    double null_deviance() const noexcept { return null_deviance_; }

    double deviance() const {
        if (family_ == Family::linear) return (y_ - eta_).squaredNorm();
        double d = 0.0;
        for (Index i = 0; i < eta_.size(); ++i)
            d += y_[i] != 0.0 ? log1pexp(-eta_[i]) : log1pexp(eta_[i]);
        return 2.0 * d;
    }

    void solve(double lambda) {
        converged_ = true;
        sweeps_ = 0;
        const Index p = x_.cols();
        if (lambda >= lambda_max_) {
            // The null model is exact here; solving would only add rounding.
            beta_.setZero();
            b0_ = null_b0_;
            eta_.setConstant(b0_);
            update_score();
            lambda_prev_ = lambda_max_;
            return;
        }
        // Sequential strong rule screens the working set; a KKT pass over
        // the remaining columns adds any violators back.
        const double strong = alpha_ * (2.0 * lambda - lambda_prev_);
        set_.clear();
        for (Index j = 0; j < p; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            in_set_[uj] = selectable_[uj] &&
                          (beta_[j] != 0.0 || std::abs(score_[j]) >= strong * pf_[j]);
            if (in_set_[uj]) set_.push_back(j);
        }
        for (;;) {
            outer(lambda);
            update_score();
            bool added = false;
            for (Index j = 0; j < p; ++j) {
                const auto uj = static_cast<std::size_t>(j);
                if (in_set_[uj] || !selectable_[uj]) continue;
                if (std::abs(score_[j]) > alpha_ * lambda * pf_[j]) {
                    in_set_[uj] = 1;
                    added = true;
                }
            }
            if (!added) break;
            set_.clear();
            for (Index j = 0; j < p; ++j)
                if (in_set_[static_cast<std::size_t>(j)]) set_.push_back(j);
        }
        lambda_prev_ = lambda;
    }

private:
    void update_score() {
        Eigen::VectorXd res(y_.size());
        if (family_ == Family::linear) {
            res = y_ - eta_;
        } else {
            for (Index i = 0; i < res.size(); ++i) res[i] = y_[i] - sigmoid(eta_[i]);
        }
        score_.noalias() = x_.transpose() * res;
        score_ /= n_;
    }

    double penalty(double lambda) const {
        double pen = 0.0;
        for (Index j : set_) {
            const double b = beta_[j];
            if (b != 0.0) pen += pf_[j] * (alpha_ * std::abs(b) + 0.5 * (1.0 - alpha_) * b * b);
        }
        return lambda * pen;
    }

    double objective(double lambda) const {
        double loss;
        if (family_ == Family::linear) {
            loss = 0.5 * (y_ - eta_).squaredNorm() / n_;
        } else {
            loss = 0.0;
            for (Index i = 0; i < eta_.size(); ++i) loss += log1pexp(eta_[i]) - y_[i] * eta_[i];
            loss /= n_;
        }
        return loss + penalty(lambda);
    }

    void outer(double lambda) {
        if (family_ == Family::linear) {
            inner_tol_ = opts_.tolerance;
            wr_ = y_ - eta_;
            if (!inner(lambda, false)) converged_ = false;
            eta_ = y_ - wr_;
            return;
        }
        w_.resize(y_.size());
        wr_.resize(y_.size());
        Eigen::VectorXd beta_old(static_cast<Index>(set_.size()));
        Eigen::VectorXd eta_old;
        // Inexact Newton: early outer iterations solve the weighted problem
        // loosely; the accepted iterate always comes from a full-tolerance
        // inner solve.
        double last_change = std::numeric_limits<double>::infinity();
        for (int it = 0; it < opts_.max_irls; ++it) {
            inner_tol_ = std::max(opts_.tolerance, std::min(1e-3, 1e-2 * last_change));
            z_.resize(y_.size());
            for (Index i = 0; i < y_.size(); ++i) {
                const double mu = sigmoid(eta_[i]);
                w_[i] = std::max(mu * (1.0 - mu), opts_.weight_floor);
                wr_[i] = y_[i] - mu;
                z_[i] = eta_[i] + wr_[i] / w_[i];
            }
            for (Index j : set_) v_[j] = w_.dot(x_.col(j).cwiseAbs2()) / n_;
            v0_ = w_.sum() / n_;

            for (std::size_t k = 0; k < set_.size(); ++k)
                beta_old[static_cast<Index>(k)] = beta_[set_[k]];
            const double b0_old = b0_;
            eta_old = eta_;
            const double obj_old = objective(lambda);

            const bool inner_ok = inner(lambda, true);
            // The sweeps track only the weighted residual w * (z - eta).
            eta_ = z_ - wr_.cwiseQuotient(w_);

            // Step halving keeps the outer iterates monotone in the objective.
            double obj = objective(lambda);
            for (int h = 0; h < 30 && obj > obj_old + 1e-13 * (1.0 + std::abs(obj_old)); ++h) {
                for (std::size_t k = 0; k < set_.size(); ++k) {
                    double& b = beta_[set_[k]];
                    b = 0.5 * (b + beta_old[static_cast<Index>(k)]);
                }
                b0_ = 0.5 * (b0_ + b0_old);
                eta_ = 0.5 * (eta_ + eta_old);
                obj = objective(lambda);
            }
            if (opts_.objective_trace) opts_.objective_trace->push_back(obj);

            double dmax = std::abs(b0_ - b0_old);
            for (std::size_t k = 0; k < set_.size(); ++k)
                dmax = std::max(dmax, std::abs(beta_[set_[k]] - beta_old[static_cast<Index>(k)]));
            if (dmax < opts_.tolerance && inner_ok && inner_tol_ == opts_.tolerance) return;
            last_change = dmax;
            if (sweeps_ >= opts_.max_sweeps) break;
        }
        converged_ = false;
    }

    // Full sweep over the working set, then sweeps restricted to the nonzero
    // coordinates until they settle, repeated until a full sweep is quiet.
    bool inner(double lambda, bool weighted) {
        for (;;) {
            double d = sweep(set_, lambda, weighted);
            if (d < inner_tol_) return true;
            active_.clear();
            for (Index j : set_)
                if (beta_[j] != 0.0) active_.push_back(j);
            for (;;) {
                if (sweeps_ >= opts_.max_sweeps) return false;
                d = sweep(active_, lambda, weighted);
                if (d < inner_tol_) break;
            }
            if (sweeps_ >= opts_.max_sweeps) return false;
        }
    }

    double sweep(const std::vector<Index>& idx, double lambda, bool weighted) {
        ++sweeps_;
        double dmax = 0.0;
        for (Index j : idx) {
            const auto xj = x_.col(j);
            const double bj = beta_[j];
            const double vj = v_[j];
            const double u = xj.dot(wr_) / n_ + vj * bj;
            const double pen = lambda * pf_[j];
            const double nb = soft_threshold(u, pen * alpha_) / (vj + pen * (1.0 - alpha_));
            if (nb == bj) continue;
            const double d = nb - bj;
            if (weighted) {
                wr_.array() -= d * w_.array() * xj.array();
            } else {
                wr_.noalias() -= d * xj;
            }
            beta_[j] = nb;
            dmax = std::max(dmax, std::abs(d));
        }
        const double d0 = weighted ? wr_.sum() / n_ / v0_ : wr_.sum() / n_;
        if (d0 != 0.0) {
            if (weighted) {
                wr_.noalias() -= d0 * w_;
            } else {
                wr_.array() -= d0;
            }
            b0_ += d0;
            dmax = std::max(dmax, std::abs(d0));
        }
        if (opts_.objective_trace && !weighted) {
            eta_ = y_ - wr_;
            opts_.objective_trace->push_back(objective(lambda));
        }
        return dmax;
    }

    const Eigen::MatrixXd& x_;
    const Eigen::VectorXd& y_;
    Eigen::VectorXd pf_;
    std::vector<char> selectable_;
    Family family_;
    double alpha_;
    SolverOptions opts_;
    double n_;

    double b0_ = 0.0, null_b0_ = 0.0;
    Eigen::VectorXd beta_, eta_, score_, v_, w_, wr_, z_;
    double v0_ = 1.0;
    double inner_tol_ = 1e-7;
    std::vector<char> in_set_;
    std::vector<Index> set_, active_;
    double lambda_max_ = 0.0, lambda_prev_ = 0.0, null_deviance_ = 0.0;
    bool converged_ = true;
    long sweeps_ = 0;
};

std::vector<char> selectable_columns(const Standardized& s) {
    std::vector<char> sel(s.constant.size());
    for (std::size_t j = 0; j < sel.size(); ++j) sel[j] = !s.constant[j];
    return sel;
}

FitResult make_result(const Engine& e, const Standardized& s, const Eigen::VectorXd& col_scale,
                      double lambda, const PenaltySpec& spec, Family family) {
    FitResult r;
    r.family = family;
    r.lambda = lambda;
    r.spec = spec;
    r.spec.lambda = lambda;
    r.n_iter = e.sweeps();
    r.converged = e.converged();
    const Index p = e.beta().size();
    r.beta.resize(p);
    double b0 = e.intercept();
    for (Index j = 0; j < p; ++j) {
        const double bj = e.beta()[j];
        r.beta[j] = bj == 0.0 ? 0.0 : bj / (s.scale[j] * col_scale[j]);
        b0 -= s.mean[j] * r.beta[j];
    }
    r.intercept = b0;
    return r;
}

// Points from just below `top` down to `lambda`, ending exactly at `lambda`.
std::vector<double> warm_path(double top, double lambda) {
    std::vector<double> path;
    double l = top * kPathRatio;
    while (l > lambda) {
        path.push_back(l);
        l *= kPathRatio;
    }
    path.push_back(lambda);
    return path;
}

void check_family(const Dataset& data, Family family) { data.validate(family); }

} // namespace

double soft_threshold(double z, double gamma) noexcept {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

void PenaltySpec::validate(Index modalities) const {
    require(static_cast<Index>(factors.size()) == modalities,
            "penalty spec has " + std::to_string(factors.size()) + " factors for " +
                std::to_string(modalities) + " modalities");
    require(factors.front() == 1.0, "reference modality penalty factor must be 1");
    for (double f : factors) require(f > 0.0 && std::isfinite(f), "penalty factors must be positive");
    require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
    require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be non-negative");
}

IndexSet FitResult::active_set() const {
    IndexSet s;
    for (Index j = 0; j < beta.size(); ++j)
        if (beta[j] != 0.0) s.push_back(j);
    return s;
}

Eigen::VectorXd feature_penalty_factors(const Dataset& data, std::span<const double> factors) {
    require(static_cast<Index>(factors.size()) == data.modalities(),
            "one penalty factor per modality is required");
    Eigen::VectorXd pf(data.p());
    Index j = 0;
    for (Index m = 0; m < data.modalities(); ++m)
        for (Index k = 0; k < data.modality_sizes[m]; ++k) pf[j++] = factors[m];
    return pf;
}

double lambda_max(const Dataset& data, Family family, const PenaltySpec& spec) {
    check_family(data, family);
    PenaltySpec s = spec;
    s.lambda = 0.0;
    s.validate(data.modalities());
    const Standardized st = standardize(data.x);
    Engine e(st.x, data.y, feature_penalty_factors(data, spec.factors), selectable_columns(st),
             family, spec.alpha, {});
    return e.lambda_max();
}

std::vector<double> lambda_sequence(double lambda_hi, double min_ratio, int length) {
    require(length >= 1, "lambda path needs at least one point");
    require(min_ratio > 0.0 && min_ratio < 1.0, "lambda_min_ratio must lie in (0, 1)");
    std::vector<double> out(static_cast<std::size_t>(length));
    if (length == 1) {
        out[0] = lambda_hi;
        return out;
    }
    const double step = std::log(min_ratio) / static_cast<double>(length - 1);
    for (int k = 0; k < length; ++k) out[static_cast<std::size_t>(k)] = lambda_hi * std::exp(step * k);
    return out;
}

std::vector<FitResult> fit_path(const Dataset& data, Family family, std::span<const double> factors,
                                double alpha, std::span<const double> lambdas,
                                const SolverOptions& opts) {
    check_family(data, family);
    PenaltySpec spec;
    spec.factors.assign(factors.begin(), factors.end());
    spec.alpha = alpha;
    spec.validate(data.modalities());
    const Standardized st = standardize(data.x);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(data.p());
    Engine e(st.x, data.y, feature_penalty_factors(data, factors), selectable_columns(st), family,
             alpha, opts);
    std::vector<FitResult> out;
    out.reserve(lambdas.size());
    const double null_dev = e.null_deviance();
    double prev_ratio = 0.0;
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        require(lambdas[k] >= 0.0, "lambda values must be non-negative");
        e.solve(lambdas[k]);
        out.push_back(make_result(e, st, ones, lambdas[k], spec, family));
        if (!opts.path_early_stop || null_dev <= 0.0) continue;
        const double ratio = 1.0 - e.deviance() / null_dev;
        if (k + 1 >= 5 && (ratio - prev_ratio < 1e-5 * ratio || ratio > 0.999)) break;
        prev_ratio = ratio;
    }
    return out;
}

FitResult fit(const Dataset& data, Family family, const PenaltySpec& spec, const SolverOptions& opts) {
    check_family(data, family);
    spec.validate(data.modalities());
    require(spec.lambda > 0.0, "lambda must be positive");
    const Standardized st = standardize(data.x);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(data.p());
    Engine e(st.x, data.y, feature_penalty_factors(data, spec.factors), selectable_columns(st),
             family, spec.alpha, opts);
    long sweeps = 0;
    bool ok = true;
    if (spec.lambda < e.lambda_max()) {
        for (double l : warm_path(e.lambda_max(), spec.lambda)) {
            e.solve(l);
            sweeps += e.sweeps();
        }
        ok = e.converged();
    } else {
        e.solve(spec.lambda);
        sweeps = e.sweeps();
        ok = e.converged();
    }
    FitResult r = make_result(e, st, ones, spec.lambda, spec, family);
    r.n_iter = sweeps;
    r.converged = ok;
    return r;
}

FitResult fit_with_factors_equivalence(const Dataset& data, Family family, const PenaltySpec& spec,
                                       const SolverOptions& opts) {
    check_family(data, family);
    spec.validate(data.modalities());
    require(spec.lambda > 0.0, "lambda must be positive");
    if (spec.alpha != 1.0)
        fail(ErrorKind::invalid_input,
             "penalty-factor rescaling identity only holds for alpha = 1 (lasso)");
    const Standardized st = standardize(data.x);
    const Eigen::VectorXd pf = feature_penalty_factors(data, spec.factors);
    Eigen::MatrixXd rescaled = st.x;
    for (Index j = 0; j < rescaled.cols(); ++j) rescaled.col(j) /= pf[j];
    Engine e(rescaled, data.y, Eigen::VectorXd::Ones(data.p()), selectable_columns(st), family, 1.0,
             opts);
    long sweeps = 0;
    if (spec.lambda < e.lambda_max()) {
        for (double l : warm_path(e.lambda_max(), spec.lambda)) {
            e.solve(l);
            sweeps += e.sweeps();
        }
    } else {
        e.solve(spec.lambda);
        sweeps = e.sweeps();
    }
    // beta_rescaled_j = beta_j * pf_j, so dividing by pf_j recovers beta_j.
    FitResult r = make_result(e, st, pf, spec.lambda, spec, family);
    r.n_iter = sweeps;
    return r;
}

Eigen::VectorXd predict(const FitResult& fit, const Eigen::MatrixXd& x_new) {
    require(x_new.cols() == fit.beta.size(),
            "prediction matrix has " + std::to_string(x_new.cols()) + " columns, expected " +
                std::to_string(fit.beta.size()));
    Eigen::VectorXd eta = (x_new * fit.beta).array() + fit.intercept;
    if (fit.family == Family::logistic)
        for (Index i = 0; i < eta.size(); ++i) eta[i] = sigmoid(eta[i]);
    return eta;
}

Eigen::VectorXi classify(const FitResult& fit, const Eigen::MatrixXd& x_new) {
    require(x_new.cols() == fit.beta.size(), "prediction matrix column count mismatch");
    const Eigen::VectorXd eta = (x_new * fit.beta).array() + fit.intercept;
    Eigen::VectorXi out(eta.size());
    if (fit.family == Family::logistic) {
        for (Index i = 0; i < eta.size(); ++i) out[i] = eta[i] > 0.0 ? 1 : 0;
    } else {
        for (Index i = 0; i < eta.size(); ++i) out[i] = eta[i] > 0.5 ? 1 : 0;
    }
    return out;
}

void to_standardized(const FitResult& fit, const Standardized& s, double& intercept,
                     Eigen::VectorXd& beta) {
    beta = fit.beta.cwiseProduct(s.scale);
    intercept = fit.intercept + s.mean.dot(fit.beta);
}

Eigen::VectorXd kkt_residuals(const FitResult& fit, const Dataset& data, const PenaltySpec& spec) {
    require(fit.beta.size() == data.p(), "fit and dataset dimensions differ");
    const Standardized st = standardize(data.x);
    double b0;
    Eigen::VectorXd beta;
    to_standardized(fit, st, b0, beta);
    Eigen::VectorXd eta = (st.x * beta).array() + b0;
    Eigen::VectorXd res(eta.size());
    for (Index i = 0; i < eta.size(); ++i)
        res[i] = data.y[i] - (fit.family == Family::logistic ? sigmoid(eta[i]) : eta[i]);
    const Eigen::VectorXd grad = -(st.x.transpose() * res) / static_cast<double>(data.n());
    const Eigen::VectorXd pf = feature_penalty_factors(data, spec.factors);
    Eigen::VectorXd out(data.p());
    for (Index j = 0; j < data.p(); ++j) {
        if (st.constant[static_cast<std::size_t>(j)]) {
            out[j] = 0.0;
            continue;
        }
        const double pen = spec.lambda * pf[j];
        if (beta[j] != 0.0) {
            const double sgn = beta[j] > 0 ? 1.0 : -1.0;
            out[j] = std::abs(grad[j] + pen * spec.alpha * sgn + pen * (1.0 - spec.alpha) * beta[j]);
        } else {
            out[j] = std::max(0.0, std::abs(grad[j]) - pen * spec.alpha);
        }
    }
    return out;
}

double logistic_loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double intercept,
                     const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = (x * beta).array() + intercept;
    double s = 0.0;
    for (Index i = 0; i < eta.size(); ++i) s += log1pexp(eta[i]) - y[i] * eta[i];
    return s / static_cast<double>(x.rows());
}

Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                  double intercept, const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = (x * beta).array() + intercept;
    Eigen::VectorXd r(eta.size());
    for (Index i = 0; i < eta.size(); ++i) r[i] = sigmoid(eta[i]) - y[i];
    Eigen::VectorXd g(beta.size() + 1);
    const double n = static_cast<double>(x.rows());
    g[0] = r.sum() / n;
    g.tail(beta.size()) = x.transpose() * r / n;
    return g;
}

double penalized_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Family family,
                           double intercept, const Eigen::VectorXd& beta,
                           const Eigen::VectorXd& feature_pf, double alpha, double lambda) {
    double loss;
    if (family == Family::logistic) {
        loss = logistic_loss(x, y, intercept, beta);
    } else {
        const Eigen::VectorXd r = y - ((x * beta).array() + intercept).matrix();
        loss = 0.5 * r.squaredNorm() / static_cast<double>(x.rows());
    }
    double pen = 0.0;
    for (Index j = 0; j < beta.size(); ++j)
        pen += feature_pf[j] * (alpha * std::abs(beta[j]) + 0.5 * (1.0 - alpha) * beta[j] * beta[j]);
    return loss + lambda * pen;
}

} // namespace ipfsel
