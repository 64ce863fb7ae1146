#pragma once

#include "ipfsel/bounds.hpp"
#include "ipfsel/solver.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace ipfsel {

struct SubsamplePlan {
    int pairs = 0;  // B
    Index n = 0;
    std::vector<std::pair<IndexSet, IndexSet>> halves;
    std::uint64_t seed = 0;
};

// B random complementary pairs of disjoint floor(n/2)-element index sets.
SubsamplePlan draw_plan(Index n, int pairs, std::uint64_t seed);

struct Selection {
    IndexSet features;
    bool converged = true;
};

using Selector = std::function<Selection(const Dataset&)>;

// Active set of a penalized fit at a fixed configuration.
Selector make_fit_selector(Family family, PenaltySpec spec);

struct FrequencyProfile {
    Eigen::VectorXd freq;              // selection proportion over 2B fits
    std::vector<int> counts;           // freq * 2B
    double q_avg = 0.0;                // mean selected-set size
    std::vector<IndexSet> per_fit_sets;
    int fits = 0;
    int failures = 0;                  // selector errors, counted as empty sets
    int nonconverged = 0;
};

FrequencyProfile estimate_frequencies(const Dataset& data, const Selector& selector,
                                      const SubsamplePlan& plan, int jobs = 1);

struct SelectionOutcome {
    IndexSet stable_set;
    double threshold = 1.0;
    double bound_ev = 0.0;   // certified bound on E[V] at `threshold`
    double v_target = 0.0;   // 0 for manually chosen thresholds
    bool target_achieved = true;
    BoundMethod method = BoundMethod::r_concave;
    std::string procedure;
};

// Certificate p * fp_bound at tau; p when tau is outside the method's
// region (the trivial bound) and 0 when nothing was ever selected.
double certified_bound(const FrequencyProfile& profile, Index p, int pairs, double tau,
                       BoundMethod method = BoundMethod::r_concave);

SelectionOutcome stable_set(const FrequencyProfile& profile, double tau, int pairs,
                            BoundMethod method = BoundMethod::r_concave);

SelectionOutcome select_optimal(const FrequencyProfile& profile, int pairs, double v_target,
                                BoundMethod method = BoundMethod::r_concave);

} // namespace ipfsel
