#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace lkconf {

// One row per sample: features(i, :) with outcome outcomes(i).
struct LabeledDataset {
    Eigen::MatrixXd features;
    Eigen::VectorXd outcomes;

    Eigen::Index size() const { return features.rows(); }
    Eigen::Index dim() const { return features.cols(); }

    // Row-count agreement and finiteness of every entry.
    void validate() const;
};

struct SplitSpec {
    std::vector<Eigen::Index> sizes;
    std::uint64_t seed = 0;
};

// Applies a seeded uniform permutation, then cuts consecutive blocks of the
// requested sizes. Leftover rows are dropped. Throws if sizes exceed n.
std::vector<LabeledDataset> split(const LabeledDataset& data, const SplitSpec& spec);

// Per-column affine rescaling fitted on a reference set (population sd,
// divide-by-n). Constant columns pass through unscaled and are flagged.
struct ScalingRecord {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;                 // 1.0 for constant columns
    std::vector<bool> constant_column;

    Eigen::MatrixXd apply(const Eigen::MatrixXd& features) const;
};

ScalingRecord fit_scaling(const LabeledDataset& reference);

// Shift/scale the feature columns of `data` by the reference column mean/sd.
std::pair<LabeledDataset, ScalingRecord> standardize(const LabeledDataset& data,
                                                     const LabeledDataset& reference);

}  // namespace lkconf
