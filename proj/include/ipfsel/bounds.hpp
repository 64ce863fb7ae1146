#pragma once

#include <string>
#include <vector>

namespace ipfsel {

enum class BoundMethod { mb, r_concave };

const char* to_string(BoundMethod m) noexcept;

// Thresholds accepted by each method: MB needs tau in (1/2, 1]; the
// r-concave bound is evaluated on [1/2, 1], where at tau = 1/2 only the
// single-subsample term is informative.
struct ValidRegion {
    double lo;
    bool lo_open;
    double hi;
    bool contains(double tau) const noexcept { return (lo_open ? tau > lo : tau >= lo) && tau <= hi; }
    std::string describe() const;
};

ValidRegion valid_region(BoundMethod m) noexcept;

// Upper bound on P(X >= t) over r-concave distributions on {0, ..., B}
// with E[X] <= eta * B. The extremal laws are (a + j)^(1/r) on {0..k}
// interpolated with a point mass at k + 1; for each k the family parameter
// a is fixed by the mean constraint and the tail is maximized over the
// interpolating segment. Markov's bound caps the result.
class RConcaveTail {
public:
    RConcaveTail(double eta, int support, double r);
    double operator()(int t) const;

private:
    double tail(double a, int t, int k) const;

    double mean_;
    int support_;
    double s_;
    int k_start_;
    std::vector<double> a_;  // a_[k] for k in [k_start_ - 1, support_]
};

double rconcave_tail_bound(double eta, int t, int support, double r);

// Threshold in units of 1/(2B), rounded the way the frequency grid is.
int threshold_count(double tau, int pairs) noexcept;

// Bound on E[V] / p for per-variable selection probability theta = q / p.
// Throws ErrorKind::region when tau is outside the method's region.
double fp_bound(double theta, double tau, int pairs, BoundMethod method);

struct ThresholdChoice {
    double tau = 1.0;
    double bound_ev = 0.0;  // p * fp_bound at tau
    bool achieved = true;
    bool degenerate = false;  // q_avg == 0
};

// Smallest tau on a 0.01 grid over the method's region with
// p * fp_bound <= v_target.
ThresholdChoice optimal_threshold(double q_avg, long p, int pairs, double v_target,
                                  BoundMethod method = BoundMethod::r_concave);

} // namespace ipfsel
