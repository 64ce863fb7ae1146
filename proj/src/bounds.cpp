#include "ipfsel/bounds.hpp"

#include "ipfsel/error.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>

namespace ipfsel {

const char* to_string(BoundMethod m) noexcept { return m == BoundMethod::mb ? "mb" : "r-concave"; }

std::string ValidRegion::describe() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%c%g, %g]", lo_open ? '(' : '[', lo, hi);
    return buf;
}

ValidRegion valid_region(BoundMethod m) noexcept {
    return m == BoundMethod::mb ? ValidRegion{0.5, true, 1.0} : ValidRegion{0.5, false, 1.0};
}

RConcaveTail::RConcaveTail(double eta, int support, double r)
    : mean_(eta * support), support_(support), s_(1.0 / r) {
    require(support >= 1, "r-concave support size must be >= 1");
    require(r < 0.0, "r-concave exponent must be negative");
    require(eta >= 0.0 && eta < 1.0, "r-concave mean bound must lie in [0, 1)");
    k_start_ = static_cast<int>(std::ceil(2.0 * mean_)) + 1;
    if (k_start_ >= support_) return;
    a_.assign(static_cast<std::size_t>(support_ + 1), 0.0);
    a_[static_cast<std::size_t>(k_start_ - 1)] = 1e5;
    for (int k = k_start_; k <= support_; ++k) {
        // Mean of (a + j)^s on {0..k} increases in a from ~0 to k/2.
        auto excess = [&](double a) {
            double num = 0.0, den = 0.0;
            for (int j = 0; j <= k; ++j) {
                const double w = std::pow(a + j, s_);
                num += j * w;
                den += w;
            }
            return num / den - mean_;
        };
        double lo = 1e-5, hi = a_[static_cast<std::size_t>(k - 1)];
        if (excess(lo) >= 0.0) {
            a_[static_cast<std::size_t>(k)] = lo;
            continue;
        }
        if (excess(hi) <= 0.0) {
            a_[static_cast<std::size_t>(k)] = hi;
            continue;
        }
        std::uintmax_t iters = 200;
        auto root = boost::math::tools::toms748_solve(
            excess, lo, hi, boost::math::tools::eps_tolerance<double>(45), iters);
        a_[static_cast<std::size_t>(k)] = 0.5 * (root.first + root.second);
    }
}

double RConcaveTail::tail(double a, int t, int k) const {
    double head = 0.0;
    for (int j = 0; j < t; ++j) head += std::pow(a + j, s_);
    double den = 0.0;
    for (int j = 0; j <= k; ++j) den += (k + 1 - j) * std::pow(a + j, s_);
    return 1.0 - (k + 1 - mean_) * head / den;
}

double RConcaveTail::operator()(int t) const {
    if (t <= 0) return 1.0;
    const double markov = std::min(1.0, mean_ / t);
    if (t <= k_start_ || k_start_ >= support_) return markov;
    double best = 0.0;
    for (int k = k_start_; k < support_; ++k) {
        const double lo = a_[static_cast<std::size_t>(k + 1)];
        const double hi = a_[static_cast<std::size_t>(k)];
        auto neg = [&](double a) { return -tail(a, t, k); };
        best = std::max({best, -neg(lo), -neg(hi)});
        if (!(hi > lo)) continue;
        // Coarse scan then a Brent refinement around the best grid point.
        constexpr int grid = 24;
        const double ratio = std::pow(hi / lo, 1.0 / grid);
        int arg = 0;
        double val = -neg(lo);
        double x = lo;
        for (int g = 1; g < grid; ++g) {
            x *= ratio;
            const double v = -neg(x);
            if (v > val) {
                val = v;
                arg = g;
            }
        }
        const double left = lo * std::pow(ratio, std::max(0, arg - 1));
        const double right = std::min(hi, lo * std::pow(ratio, arg + 1));
        std::uintmax_t iters = 200;
        auto m = boost::math::tools::brent_find_minima(neg, left, right, 30, iters);
        best = std::max({best, val, -m.second});
    }
    return std::clamp(std::min(best, markov), 0.0, 1.0);
}

double rconcave_tail_bound(double eta, int t, int support, double r) {
    return RConcaveTail(eta, support, r)(t);
}

int threshold_count(double tau, int pairs) noexcept {
    const double x = tau * 2.0 * pairs;
    return static_cast<int>(std::ceil(x - 1e-9 * std::max(1.0, x)));
}

namespace {

void check_bound_args(double theta, double tau, int pairs, BoundMethod method) {
    require(pairs >= 1, "number of complementary pairs must be >= 1");
    require(theta > 0.0 && theta < 1.0, "theta = q/p must lie in (0, 1)");
    const ValidRegion reg = valid_region(method);
    if (!reg.contains(tau) || !(tau > theta))
        fail(ErrorKind::region, std::string("threshold ") + std::to_string(tau) + " outside the " +
                                    to_string(method) + " validity region " + reg.describe() +
                                    " (and above theta)");
}

double mb_bound(double theta, double tau) { return theta * theta / (2.0 * tau - 1.0); }

double rconcave_bound(int which, int pairs, const RConcaveTail& pair_tail,
                      const RConcaveTail& single_tail) {
    return std::min({1.0, pair_tail(which - pairs), single_tail(which)});
}

} // namespace

double fp_bound(double theta, double tau, int pairs, BoundMethod method) {
    check_bound_args(theta, tau, pairs, method);
    if (method == BoundMethod::mb) return mb_bound(theta, tau);
    const RConcaveTail pair_tail(theta * theta, pairs, -0.5);
    const RConcaveTail single_tail(theta, 2 * pairs, -0.25);
    return rconcave_bound(threshold_count(tau, pairs), pairs, pair_tail, single_tail);
}

ThresholdChoice optimal_threshold(double q_avg, long p, int pairs, double v_target,
                                  BoundMethod method) {
    require(v_target > 0.0, "target number of false positives must be positive");
    require(p >= 1, "number of features must be >= 1");
    require(q_avg >= 0.0 && q_avg < static_cast<double>(p), "q_avg must lie in [0, p)");
    ThresholdChoice out;
    if (q_avg == 0.0) {
        out.tau = 0.5;
        out.bound_ev = 0.0;
        out.achieved = false;
        out.degenerate = true;
        return out;
    }
    const double theta = q_avg / static_cast<double>(p);
    const ValidRegion reg = valid_region(method);
    const int start = static_cast<int>(std::lround(reg.lo * 100)) + (reg.lo_open ? 1 : 0);
    std::optional<RConcaveTail> pair_tail, single_tail;
    if (method == BoundMethod::r_concave) {
        pair_tail.emplace(theta * theta, pairs, -0.5);
        single_tail.emplace(theta, 2 * pairs, -0.25);
    }
    auto bound_at = [&](double tau) {
        if (method == BoundMethod::mb) return mb_bound(theta, tau);
        return rconcave_bound(threshold_count(tau, pairs), pairs, *pair_tail, *single_tail);
    };
    for (int c = start; c <= 100; ++c) {
        const double tau = c / 100.0;
        if (!(tau > theta)) continue;
        const double ev = static_cast<double>(p) * bound_at(tau);
        if (ev <= v_target) {
            out.tau = tau;
            out.bound_ev = ev;
            return out;
        }
    }
    out.tau = 1.0;
    out.bound_ev = static_cast<double>(p) * bound_at(1.0);
    out.achieved = false;
    return out;
}

} // namespace ipfsel
