#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ipfsel {

using Index = Eigen::Index;
using IndexSet = std::vector<Index>;  // sorted ascending, unique

enum class Family { linear, logistic };

const char* to_string(Family f) noexcept;

struct Dataset {
    Eigen::VectorXd y;
    Eigen::MatrixXd x;                 // n x p, column-major
    std::vector<Index> modality_sizes; // p_1..p_M, sums to p
    std::vector<std::string> feature_names;

    Index n() const noexcept { return x.rows(); }
    Index p() const noexcept { return x.cols(); }
    Index modalities() const noexcept { return static_cast<Index>(modality_sizes.size()); }

    // Modality of every column, 0-based.
    std::vector<Index> column_modality() const;

    // Throws invalid_input if structural invariants fail. Logistic also
    // requires y in {0,1} with both classes present.
    void validate(Family family) const;

    Dataset subset_rows(std::span<const Index> rows) const;
};

// Builds a dataset and validates its shape; feature names default to
// m<modality>_<index> when empty.
Dataset make_dataset(Eigen::VectorXd y, Eigen::MatrixXd x,
                     std::vector<Index> modality_sizes,
                     std::vector<std::string> feature_names = {});

struct Standardized {
    Eigen::MatrixXd x;
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;
    std::vector<char> constant;  // never-selectable columns
};

// Column centering and scaling with the n-denominator variance. Constant
// columns keep scale 1 and are flagged.
Standardized standardize(const Eigen::MatrixXd& x);

} // namespace ipfsel
