#include "ipfsel/metrics.hpp"

#include <algorithm>
#include <iterator>

namespace ipfsel {

Index true_positives(const IndexSet& selected, const IndexSet& truth) {
    IndexSet both;
    std::set_intersection(selected.begin(), selected.end(), truth.begin(), truth.end(),
                          std::back_inserter(both));
    return static_cast<Index>(both.size());
}

std::optional<double> tpp(const IndexSet& selected, const IndexSet& truth) {
    if (truth.empty()) return std::nullopt;
    return static_cast<double>(true_positives(selected, truth)) / static_cast<double>(truth.size());
}

Index false_positives(const IndexSet& selected, const IndexSet& truth) {
    return static_cast<Index>(selected.size()) - true_positives(selected, truth);
}

} // namespace ipfsel
