#include "doctest.h"

#include "ipfsel/metrics.hpp"

using namespace ipfsel;

TEST_CASE("tpp and false positives") {
    const IndexSet truth{1, 3, 5, 7};
    CHECK(*tpp({1, 3, 9}, truth) == doctest::Approx(0.5));
    CHECK(false_positives({1, 3, 9}, truth) == 1);
    CHECK(true_positives({1, 3, 9}, truth) == 2);
    CHECK(*tpp({}, truth) == 0.0);
    CHECK(false_positives({}, truth) == 0);
    CHECK(*tpp(truth, truth) == 1.0);
    CHECK_FALSE(tpp({1, 2}, {}).has_value());
    CHECK(false_positives({1, 2}, {}) == 2);
}
