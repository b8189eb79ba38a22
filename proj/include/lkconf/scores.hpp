#pragma once

#include <Eigen/Dense>

#include "lkconf/dataset.hpp"

namespace lkconf {

// Closed interval, possibly unbounded on either side; `empty` marks the
// degenerate case where no y qualifies.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool empty = false;

    double width() const;
    bool contains(double y) const { return !empty && lo <= y && y <= hi; }
};

// Fitted nonconformity score s(x, y) >= 0 whose sublevel sets in y are
// closed intervals. Immutable after fitting; evaluation is thread-safe.
class ScoreModel {
public:
    enum class Kind { LinearResidual, KnnQuantile };

    Kind kind() const { return kind_; }
    Eigen::Index dim() const { return dim_; }

    double score(const Eigen::Ref<const Eigen::VectorXd>& x, double y) const;

    // {y : s(x, y) <= t} as an interval; t = inf gives the whole line.
    Interval set_interval(const Eigen::Ref<const Eigen::VectorXd>& x, double t) const;

    // Endpoints of the zero-score set at x (lo == hi for the residual score).
    // set_interval(x, t) == [lo - t, hi + t] for finite t >= 0.
    void band(const Eigen::Ref<const Eigen::VectorXd>& x, double& lo, double& hi) const;

    // OLS coefficients, intercept first (linear-residual only).
    const Eigen::VectorXd& coefficients() const { return coef_; }

private:
    friend ScoreModel fit_linear_residual(const LabeledDataset& train);
    friend ScoreModel fit_knn_quantile(const LabeledDataset& train, double alpha, int k_neighbors);

    Kind kind_ = Kind::LinearResidual;
    Eigen::Index dim_ = 0;
    Eigen::VectorXd coef_;  // [intercept, slopes...]
    // knn-quantile state
    Eigen::MatrixXd train_x_;
    Eigen::VectorXd train_y_;
    int k_neighbors_ = 0;
    double level_lo_ = 0.0, level_hi_ = 0.0;
};

// Ordinary least squares with intercept; score(x, y) = |y - mu_hat(x)|.
// Throws RankDeficientError naming deficient columns.
ScoreModel fit_linear_residual(const LabeledDataset& train);

// Empirical alpha/2 and 1-alpha/2 quantiles of the outcomes among the
// k nearest training features (Euclidean, ties by lowest row index);
// score(x, y) = max{q_lo(x) - y, y - q_hi(x), 0}.
ScoreModel fit_knn_quantile(const LabeledDataset& train, double alpha, int k_neighbors);

}  // namespace lkconf
