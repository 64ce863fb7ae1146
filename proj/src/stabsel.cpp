#include "ipfsel/stabsel.hpp"

#include "ipfsel/error.hpp"
#include "ipfsel/parallel.hpp"
#include "ipfsel/rng.hpp"

#include <algorithm>
#include <numeric>

namespace ipfsel {

SubsamplePlan draw_plan(Index n, int pairs, std::uint64_t seed) {
    require(n >= 4, "complementary pairs need n >= 4");
    require(pairs >= 1, "need at least one complementary pair");
    SubsamplePlan plan;
    plan.pairs = pairs;
    plan.n = n;
    plan.seed = seed;
    const Index half = n / 2;
    std::vector<Index> idx(static_cast<std::size_t>(n));
    for (int b = 0; b < pairs; ++b) {
        std::iota(idx.begin(), idx.end(), Index{0});
        Rng rng(derive_seed(seed, {stream::subsamples, static_cast<std::uint64_t>(b)}));
        std::shuffle(idx.begin(), idx.end(), rng);
        IndexSet first(idx.begin(), idx.begin() + half);
        IndexSet second(idx.begin() + half, idx.begin() + 2 * half);
        std::sort(first.begin(), first.end());
        std::sort(second.begin(), second.end());
        plan.halves.emplace_back(std::move(first), std::move(second));
    }
    return plan;
}

Selector make_fit_selector(Family family, PenaltySpec spec) {
    return [family, spec = std::move(spec)](const Dataset& d) {
        const FitResult f = fit(d, family, spec);
        return Selection{f.active_set(), f.converged};
    };
}

FrequencyProfile estimate_frequencies(const Dataset& data, const Selector& selector,
                                      const SubsamplePlan& plan, int jobs) {
    require(plan.n == data.n(), "subsample plan was drawn for a different sample size");
    const std::size_t fits = 2 * plan.halves.size();
    std::vector<Selection> out(fits);
    std::vector<char> failed(fits, 0);
    parallel_for(fits, jobs, [&](std::size_t t) {
        const auto& pr = plan.halves[t / 2];
        const IndexSet& rows = t % 2 == 0 ? pr.first : pr.second;
        try {
            out[t] = selector(data.subset_rows(rows));
        } catch (const Error&) {
            failed[t] = 1;
            out[t] = Selection{};
        }
    });
    FrequencyProfile prof;
    prof.fits = static_cast<int>(fits);
    prof.counts.assign(static_cast<std::size_t>(data.p()), 0);
    long total = 0;
    for (std::size_t t = 0; t < fits; ++t) {
        prof.failures += failed[t];
        prof.nonconverged += !out[t].converged;
        for (Index j : out[t].features) {
            require(j >= 0 && j < data.p(), "selector returned an out-of-range feature index");
            ++prof.counts[static_cast<std::size_t>(j)];
        }
        total += static_cast<long>(out[t].features.size());
        prof.per_fit_sets.push_back(std::move(out[t].features));
    }
    prof.freq.resize(data.p());
    for (Index j = 0; j < data.p(); ++j)
        prof.freq[j] = static_cast<double>(prof.counts[static_cast<std::size_t>(j)]) / static_cast<double>(fits);
    prof.q_avg = static_cast<double>(total) / static_cast<double>(fits);
    return prof;
}

double certified_bound(const FrequencyProfile& profile, Index p, int pairs, double tau,
                       BoundMethod method) {
    if (profile.q_avg == 0.0) return 0.0;
    const double theta = profile.q_avg / static_cast<double>(p);
    if (!valid_region(method).contains(tau) || !(tau > theta)) return static_cast<double>(p);
    return std::min(static_cast<double>(p),
                    static_cast<double>(p) * fp_bound(theta, tau, pairs, method));
}

SelectionOutcome stable_set(const FrequencyProfile& profile, double tau, int pairs,
                            BoundMethod method) {
    require(tau > 0.0 && tau <= 1.0, "threshold must lie in (0, 1]");
    SelectionOutcome out;
    out.threshold = tau;
    out.method = method;
    const int need = threshold_count(tau, pairs);
    for (std::size_t j = 0; j < profile.counts.size(); ++j)
        if (profile.counts[j] > 0 && profile.counts[j] >= need) out.stable_set.push_back(static_cast<Index>(j));
    out.bound_ev = certified_bound(profile, profile.freq.size(), pairs, tau, method);
    return out;
}

SelectionOutcome select_optimal(const FrequencyProfile& profile, int pairs, double v_target,
                                BoundMethod method) {
    const Index p = profile.freq.size();
    const ThresholdChoice c = optimal_threshold(profile.q_avg, p, pairs, v_target, method);
    SelectionOutcome out = stable_set(profile, c.tau, pairs, method);
    out.bound_ev = c.bound_ev;
    out.v_target = v_target;
    out.target_achieved = c.achieved;
    return out;
}

} // namespace ipfsel
