#pragma once

#include "ipfsel/dataset.hpp"

#include <optional>

namespace ipfsel {

// |selected ∩ truth| / |truth|; empty when there is no truth to recover.
std::optional<double> tpp(const IndexSet& selected, const IndexSet& truth);

// |selected \ truth|
Index false_positives(const IndexSet& selected, const IndexSet& truth);

Index true_positives(const IndexSet& selected, const IndexSet& truth);

} // namespace ipfsel
