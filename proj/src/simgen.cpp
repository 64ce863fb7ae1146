#include "ipfsel/simgen.hpp"

#include "ipfsel/error.hpp"
#include "ipfsel/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace ipfsel {

const char* to_string(Setting s) noexcept {
    return s == Setting::independent ? "independent" : "correlated";
}

Setting parse_setting(const std::string& s) {
    if (s == "independent") return Setting::independent;
    if (s == "correlated") return Setting::correlated;
    fail(ErrorKind::invalid_input, "unknown setting '" + s + "' (expected independent|correlated)");
}

void DesignSpec::validate() const {
    require(p1 > 0 && p2 > 0, "both modalities need at least one variable");
    require(b1 >= 0 && b1 <= p1 && b2 >= 0 && b2 <= p2, "b1 <= p1 and b2 <= p2 are required");
    require(n >= 4, "sample size must be >= 4");
    require(std::isfinite(beta), "signal strength must be finite");
    if (setting == Setting::correlated) {
        require(rho >= 0.0 && rho < 1.0, "rho must lie in [0, 1)");
        require(blocks_per_modality >= 1 && p1 % blocks_per_modality == 0 &&
                    p2 % blocks_per_modality == 0,
                "blocks_per_modality must divide both modality sizes");
    }
}

DesignSpec named_design(const std::string& id, Setting setting) {
    struct Row {
        char id;
        Index p1, p2, b1, b2;
    };
    static constexpr std::array<Row, 9> table{{
        {'A', 1000, 1000, 10, 10},
        {'B', 100, 1000, 3, 30},
        {'C', 100, 1000, 10, 10},
        {'D', 100, 1000, 20, 0},
        {'E', 20, 1000, 3, 10},
        {'F', 20, 1000, 15, 3},
        {'G', 20, 1000, 10, 10},
        {'H', 20, 1000, 3, 3},
        {'I', 20, 2000, 20, 0},
    }};
    for (const Row& r : table) {
        if (id.size() == 1 && id[0] == r.id) {
            DesignSpec d;
            d.id = id;
            d.p1 = r.p1;
            d.p2 = r.p2;
            d.b1 = r.b1;
            d.b2 = r.b2;
            d.setting = setting;
            return d;
        }
    }
    fail(ErrorKind::invalid_input, "unknown design '" + id + "' (expected A..I)");
}

Eigen::VectorXd correlated_row(const DesignSpec& design, const Eigen::VectorXd& class_mean, Rng& rng) {
    require(design.rho >= 0.0 && design.rho < 1.0, "rho must lie in [0, 1)");
    require(design.blocks_per_modality >= 1 && design.p1 % design.blocks_per_modality == 0 &&
                design.p2 % design.blocks_per_modality == 0,
            "blocks_per_modality must divide both modality sizes");
    const Index p = design.p1 + design.p2;
    require(class_mean.size() == 0 || class_mean.size() == p, "class mean has the wrong length");
    std::normal_distribution<double> nd;
    const Index nb = design.blocks_per_modality;
    const Index s1 = design.p1 / nb, s2 = design.p2 / nb;
    const double shared = std::sqrt(design.rho), own = std::sqrt(1.0 - design.rho);
    Eigen::VectorXd row(p);
    for (Index k = 0; k < nb; ++k) {
        const double z = nd(rng);
        for (Index j = k * s1; j < (k + 1) * s1; ++j) row[j] = shared * z + own * nd(rng);
        for (Index j = design.p1 + k * s2; j < design.p1 + (k + 1) * s2; ++j)
            row[j] = shared * z + own * nd(rng);
    }
    if (class_mean.size() != 0) row += class_mean;
    return row;
}

namespace {

Eigen::VectorXd class_one_mean(const DesignSpec& d) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(d.p1 + d.p2);
    mu.head(d.b1).setConstant(d.beta);
    mu.segment(d.p1, d.b2).setConstant(d.beta);
    return mu;
}

void draw(const DesignSpec& d, std::uint64_t seed, Eigen::VectorXd& y, Eigen::MatrixXd& x) {
    Rng rng(seed);
    std::bernoulli_distribution coin(0.5);
    std::normal_distribution<double> nd;
    const Index p = d.p1 + d.p2;
    const Eigen::VectorXd mu = class_one_mean(d);
    const Eigen::VectorXd zero;
    y.resize(d.n);
    for (Index i = 0; i < d.n; ++i) y[i] = coin(rng) ? 1.0 : 0.0;
    // Row-major fill keeps the draw order independent of storage layout.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(d.n, p);
    for (Index i = 0; i < d.n; ++i) {
        if (d.setting == Setting::correlated) {
            rows.row(i) = correlated_row(d, y[i] != 0.0 ? mu : zero, rng).transpose();
        } else {
            for (Index j = 0; j < p; ++j) rows(i, j) = nd(rng);
            if (y[i] != 0.0) rows.row(i) += mu.transpose();
        }
    }
    x = rows;
}

} // namespace

SimulatedDataset sample(const DesignSpec& design, std::uint64_t seed) {
    design.validate();
    Eigen::VectorXd y;
    Eigen::MatrixXd x;
    const std::uint64_t s0 = derive_seed(seed, {stream::simulate});
    draw(design, s0, y, x);
    const double ones = y.sum();
    if (ones == 0.0 || ones == static_cast<double>(design.n)) {
        draw(design, derive_seed(seed, {stream::resample}), y, x);
        const double again = y.sum();
        if (again == 0.0 || again == static_cast<double>(design.n))
            fail(ErrorKind::runtime, "simulated outcome has a single class after resampling");
    }
    const Index p = design.p1 + design.p2;
    std::vector<Index> perm(static_cast<std::size_t>(p));
    std::iota(perm.begin(), perm.end(), Index{0});
    if (design.setting == Setting::correlated) {
        // Shuffle within each modality; perm[new] = old column.
        Rng rng(derive_seed(seed, {stream::permute}));
        std::shuffle(perm.begin(), perm.begin() + design.p1, rng);
        std::shuffle(perm.begin() + design.p1, perm.end(), rng);
    }
    Eigen::MatrixXd xp(design.n, p);
    for (Index j = 0; j < p; ++j) xp.col(j) = x.col(perm[static_cast<std::size_t>(j)]);

    SimulatedDataset out;
    for (Index j = 0; j < p; ++j) {
        const Index old = perm[static_cast<std::size_t>(j)];
        const bool active = design.beta != 0.0 &&
                            (old < design.b1 || (old >= design.p1 && old < design.p1 + design.b2));
        if (active) out.truth.push_back(j);
    }
    out.dataset = make_dataset(std::move(y), std::move(xp), {design.p1, design.p2});
    out.source_column = std::move(perm);
    out.design = design;
    out.seed = seed;
    return out;
}

} // namespace ipfsel
