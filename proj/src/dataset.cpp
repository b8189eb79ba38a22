#include "lkconf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lkconf/errors.hpp"
#include "lkconf/rng.hpp"

namespace lkconf {

void LabeledDataset::validate() const {
    if (features.rows() != outcomes.size())
        throw InvalidArgument("dataset row count mismatch: " + std::to_string(features.rows()) +
                              " feature rows vs " + std::to_string(outcomes.size()) + " outcomes");
    if (!features.allFinite() || !outcomes.allFinite())
        throw InvalidArgument("dataset contains non-finite entries");
}

std::vector<LabeledDataset> split(const LabeledDataset& data, const SplitSpec& spec) {
    const Eigen::Index n = data.size();
    Eigen::Index total = 0;
    for (Eigen::Index s : spec.sizes) {
        if (s < 0) throw InvalidArgument("split size must be nonnegative");
        total += s;
    }
    if (total > n)
        throw InvalidArgument("split sizes sum to " + std::to_string(total) + " but dataset has " +
                              std::to_string(n) + " rows");

    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    auto engine = make_engine(spec.seed);
    std::shuffle(perm.begin(), perm.end(), engine);

    std::vector<LabeledDataset> parts;
    parts.reserve(spec.sizes.size());
    Eigen::Index offset = 0;
    for (Eigen::Index s : spec.sizes) {
        LabeledDataset part;
        part.features.resize(s, data.dim());
        part.outcomes.resize(s);
        for (Eigen::Index i = 0; i < s; ++i) {
            part.features.row(i) = data.features.row(perm[static_cast<std::size_t>(offset + i)]);
            part.outcomes(i) = data.outcomes(perm[static_cast<std::size_t>(offset + i)]);
        }
        offset += s;
        parts.push_back(std::move(part));
    }
    return parts;
}

ScalingRecord fit_scaling(const LabeledDataset& reference) {
    if (reference.size() == 0) throw InvalidArgument("scaling reference is empty");
    const Eigen::Index p = reference.dim();
    const double n = static_cast<double>(reference.size());

    ScalingRecord rec;
    rec.mean = reference.features.colwise().mean();
    rec.sd.resize(p);
    rec.constant_column.assign(static_cast<std::size_t>(p), false);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double var = (reference.features.col(j).array() - rec.mean(j)).square().sum() / n;
        const double sd = std::sqrt(var);
        if (sd > 0.0) {
            rec.sd(j) = sd;
        } else {
            rec.sd(j) = 1.0;
            rec.mean(j) = 0.0;  // constant column passes through untouched
            rec.constant_column[static_cast<std::size_t>(j)] = true;
        }
    }
    return rec;
}

Eigen::MatrixXd ScalingRecord::apply(const Eigen::MatrixXd& features) const {
    if (features.cols() != mean.size())
        throw InvalidArgument("scaling record has " + std::to_string(mean.size()) +
                              " columns, data has " + std::to_string(features.cols()));
    Eigen::MatrixXd out = features;
    out.rowwise() -= mean.transpose();
    out.array().rowwise() /= sd.transpose().array();
    return out;
}

std::pair<LabeledDataset, ScalingRecord> standardize(const LabeledDataset& data,
                                                     const LabeledDataset& reference) {
    if (data.dim() != reference.dim())
        throw InvalidArgument("dimension mismatch between data and scaling reference");
    ScalingRecord rec = fit_scaling(reference);
    LabeledDataset out;
    out.features = rec.apply(data.features);
    out.outcomes = data.outcomes;
    return {std::move(out), std::move(rec)};
}

}  // namespace lkconf
