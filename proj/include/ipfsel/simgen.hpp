#pragma once

#include "ipfsel/dataset.hpp"
#include "ipfsel/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ipfsel {

enum class Setting { independent, correlated };

const char* to_string(Setting s) noexcept;
Setting parse_setting(const std::string& s);

struct DesignSpec {
    std::string id = "custom";
    Index p1 = 0, p2 = 0;  // modality sizes
    Index b1 = 0, b2 = 0;  // non-zero mean shifts per modality
    double beta = 1.0;
    Index n = 100;
    Setting setting = Setting::independent;
    double rho = 0.4;
    Index blocks_per_modality = 10;

    void validate() const;
};

// Designs A..I with the default n, beta, rho and block count.
DesignSpec named_design(const std::string& id, Setting setting = Setting::independent);

struct SimulatedDataset {
    Dataset dataset;
    IndexSet truth;  // sorted column indices with a non-zero class-1 mean (empty if beta == 0)
    std::vector<Index> source_column;  // generation-order column behind each output column
    DesignSpec design;
    std::uint64_t seed = 0;
};

SimulatedDataset sample(const DesignSpec& design, std::uint64_t seed);

// One row of the joint block structure: block k of modality 1 and block k
// of modality 2 are equicorrelated at rho via a shared latent factor.
// Columns are in generation order (no permutation). `class_mean` may be
// empty for a zero mean.
Eigen::VectorXd correlated_row(const DesignSpec& design, const Eigen::VectorXd& class_mean, Rng& rng);

} // namespace ipfsel
