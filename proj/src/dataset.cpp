#include "ipfsel/dataset.hpp"

#include "ipfsel/error.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

namespace ipfsel {

const char* to_string(Family f) noexcept {
    return f == Family::linear ? "linear" : "logistic";
}

std::vector<Index> Dataset::column_modality() const {
    std::vector<Index> out;
    out.reserve(static_cast<std::size_t>(p()));
    for (Index m = 0; m < modalities(); ++m)
        out.insert(out.end(), static_cast<std::size_t>(modality_sizes[m]), m);
    return out;
}

void Dataset::validate(Family family) const {
    require(n() >= 2, "dataset needs at least 2 observations");
    require(y.size() == n(), "response length does not match number of rows");
    require(!modality_sizes.empty(), "dataset needs at least one modality");
    Index total = 0;
    for (Index s : modality_sizes) {
        require(s > 0, "every modality must be nonempty");
        total += s;
    }
    require(total == p(), "modality sizes sum to " + std::to_string(total) +
                              " but the matrix has " + std::to_string(p()) + " columns");
    require(feature_names.empty() || static_cast<Index>(feature_names.size()) == p(),
            "feature name count does not match number of columns");
    require(x.allFinite() && y.allFinite(), "dataset contains non-finite values");
    if (family == Family::logistic) {
        Index ones = 0;
        for (Index i = 0; i < n(); ++i) {
            require(y[i] == 0.0 || y[i] == 1.0, "logistic response must be 0/1");
            ones += y[i] == 1.0;
        }
        require(ones > 0 && ones < n(), "logistic response needs both classes");
    }
}

Dataset Dataset::subset_rows(std::span<const Index> rows) const {
    Dataset out;
    const auto m = static_cast<Index>(rows.size());
    out.y.resize(m);
    out.x.resize(m, p());
    for (Index i = 0; i < m; ++i) out.y[i] = y[rows[i]];
    for (Index j = 0; j < p(); ++j) {
        auto src = x.col(j);
        auto dst = out.x.col(j);
        for (Index i = 0; i < m; ++i) dst[i] = src[rows[i]];
    }
    out.modality_sizes = modality_sizes;
    out.feature_names = feature_names;
    return out;
}

Dataset make_dataset(Eigen::VectorXd y, Eigen::MatrixXd x, std::vector<Index> modality_sizes,
                     std::vector<std::string> feature_names) {
    Dataset d;
    d.y = std::move(y);
    d.x = std::move(x);
    d.modality_sizes = std::move(modality_sizes);
    if (feature_names.empty()) {
        char buf[64];
        for (Index m = 0; m < d.modalities(); ++m)
            for (Index j = 0; j < d.modality_sizes[m]; ++j) {
                std::snprintf(buf, sizeof buf, "m%ld_%04ld", static_cast<long>(m + 1),
                              static_cast<long>(j + 1));
                feature_names.emplace_back(buf);
            }
    }
    d.feature_names = std::move(feature_names);
    if (d.x.size() == 0) fail(ErrorKind::invalid_input, "empty feature matrix");
    Index total = std::accumulate(d.modality_sizes.begin(), d.modality_sizes.end(), Index{0});
    require(total == d.p(), "modality sizes do not sum to the number of columns");
    return d;
}

Standardized standardize(const Eigen::MatrixXd& x) {
    if (x.rows() == 0 || x.cols() == 0) fail(ErrorKind::invalid_input, "empty feature matrix");
    require(x.rows() >= 2, "standardization needs at least 2 observations");
    const Index n = x.rows(), p = x.cols();
    Standardized s;
    s.x.resize(n, p);
    s.mean.resize(p);
    s.scale.resize(p);
    s.constant.assign(static_cast<std::size_t>(p), 0);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (Index j = 0; j < p; ++j) {
        auto col = x.col(j);
        const double mu = col.sum() * inv_n;
        auto out = s.x.col(j);
        out = col.array() - mu;
        const double var = out.squaredNorm() * inv_n;
        double sd = std::sqrt(var);
        // Relative test: a column that is constant up to rounding has a
        // spread that is tiny next to its magnitude.
        const double mag = col.cwiseAbs().maxCoeff();
        if (!(sd > 1e-10 * std::max(1.0, mag))) {
            s.constant[static_cast<std::size_t>(j)] = 1;
            sd = 1.0;
            out.setZero();
        } else {
            out /= sd;
        }
        s.mean[j] = mu;
        s.scale[j] = sd;
    }
    return s;
}

} // namespace ipfsel
