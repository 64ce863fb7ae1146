#include "doctest.h"

#include "ipfsel/error.hpp"
#include "ipfsel/simgen.hpp"
#include "moments.hpp"

#include <algorithm>
#include <cmath>

using namespace ipfsel;
using namespace ipfsel::testing;

TEST_CASE("design table") {
    const auto a = named_design("A");
    CHECK(a.p1 == 1000);
    CHECK(a.p2 == 1000);
    CHECK(a.b1 == 10);
    CHECK(a.b2 == 10);
    CHECK(a.n == 100);
    CHECK(a.beta == 1.0);
    const auto i = named_design("I", Setting::correlated);
    CHECK(i.p1 == 20);
    CHECK(i.p2 == 2000);
    CHECK(i.b1 == 20);
    CHECK(i.b2 == 0);
    CHECK(i.setting == Setting::correlated);
    CHECK(named_design("D").b2 == 0);
    CHECK(named_design("F").b1 == 15);
    CHECK_THROWS_AS(named_design("J"), Error);
    CHECK_THROWS_AS(parse_setting("mixed"), Error);
}

TEST_CASE("sampling is deterministic and labels are balanced") {
    const auto d = named_design("H");
    const auto s1 = sample(d, 11), s2 = sample(d, 11), s3 = sample(d, 12);
    CHECK(s1.dataset.x == s2.dataset.x);
    CHECK(s1.dataset.y == s2.dataset.y);
    CHECK(s1.dataset.x != s3.dataset.x);
    CHECK(s1.dataset.p() == 1020);
    CHECK(s1.dataset.modality_sizes == std::vector<Index>{20, 1000});
    CHECK(s1.dataset.feature_names[0] == "m1_0001");
    CHECK(s1.dataset.feature_names[20] == "m2_0001");
    CHECK(s1.truth.size() == 6);
}

TEST_CASE("truth, class means and permutation bookkeeping") {
    for (Setting st : {Setting::independent, Setting::correlated}) {
        DesignSpec d = named_design("C", st);
        d.n = 4000;
        const auto sim = sample(d, 5);
        CHECK(sim.truth.size() == 20);
        std::vector<Index> src = sim.source_column;
        std::sort(src.begin(), src.end());
        for (Index j = 0; j < d.p1 + d.p2; ++j) CHECK(src[static_cast<std::size_t>(j)] == j);
        for (Index j = 0; j < d.p1; ++j) CHECK(sim.source_column[static_cast<std::size_t>(j)] < d.p1);
        for (Index j : sim.truth) {
            const Index s = sim.source_column[static_cast<std::size_t>(j)];
            CHECK((s < 10 || (s >= 100 && s < 110)));
        }
        if (st == Setting::independent) CHECK(sim.truth.back() == 109);
        // Class-1 minus class-0 means are beta on active columns, 0 elsewhere.
        const auto& x = sim.dataset.x;
        const auto& y = sim.dataset.y;
        const double n1 = y.sum(), n0 = static_cast<double>(d.n) - n1;
        double worst_active = 0.0, worst_null = 0.0;
        for (Index j = 0; j < x.cols(); ++j) {
            double m1 = 0.0, m0 = 0.0;
            for (Index i = 0; i < d.n; ++i) (y[i] != 0.0 ? m1 : m0) += x(i, j);
            const double diff = m1 / n1 - m0 / n0;
            if (std::binary_search(sim.truth.begin(), sim.truth.end(), j))
                worst_active = std::max(worst_active, std::abs(diff - 1.0));
            else
                worst_null = std::max(worst_null, std::abs(diff));
        }
        CHECK(worst_active < 0.15);
        CHECK(worst_null < 0.15);
    }
}

TEST_CASE("zero signal has empty truth") {
    DesignSpec d = named_design("A");
    d.beta = 0.0;
    CHECK(sample(d, 1).truth.empty());
}

TEST_CASE("block correlation structure") {
    DesignSpec d = named_design("C", Setting::correlated);
    d.n = 2000;
    const auto sim = sample(d, 21);
    const auto labels = block_labels(sim);
    const auto m = block_pair_means(within_class_correlation(sim.dataset), labels, 20).mean;
    for (Index a = 0; a < 20; ++a)
        for (Index b = 0; b < 20; ++b) {
            const bool linked = a == b || std::abs(a - b) == 10;
            INFO("blocks " << a << "," << b);
            CHECK(std::abs(m(a, b) - (linked ? 0.4 : 0.0)) <= 0.05);
        }
    DesignSpec di = named_design("C");
    di.n = 2000;
    const auto sind = sample(di, 22);
    const auto ci = within_class_correlation(sind.dataset);
    double off = 0.0;
    for (Index j = 0; j < ci.rows(); ++j)
        for (Index k = 0; k < ci.cols(); ++k)
            if (j != k) off = std::max(off, std::abs(ci(j, k)));
    CHECK(off < 0.15);
    const auto mi = block_pair_means(ci, block_labels(sind), 20).mean;
    CHECK(mi.cwiseAbs().maxCoeff() <= 0.05);
}

TEST_CASE("correlated row draws the documented factor model") {
    DesignSpec d;
    d.p1 = 4;
    d.p2 = 6;
    d.blocks_per_modality = 2;
    Rng rng(1);
    const auto r = correlated_row(d, Eigen::VectorXd(), rng);
    CHECK(r.size() == 10);
    d.blocks_per_modality = 3;
    CHECK_THROWS_AS(correlated_row(d, Eigen::VectorXd(), rng), Error);
}

TEST_CASE("design validation") {
    DesignSpec d = named_design("A");
    d.b1 = 2000;
    CHECK_THROWS_AS(sample(d, 1), Error);
    d = named_design("A");
    d.n = 3;
    CHECK_THROWS_AS(sample(d, 1), Error);
}
