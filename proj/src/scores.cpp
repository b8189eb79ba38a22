#include "lkconf/scores.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "lkconf/errors.hpp"
#include "lkconf/math_util.hpp"

namespace lkconf {

double Interval::width() const {
    if (empty) return 0.0;
    return hi - lo;  // inf endpoints propagate naturally
}

ScoreModel fit_linear_residual(const LabeledDataset& train) {
    train.validate();
    const Eigen::Index n = train.size();
    const Eigen::Index p = train.dim();
    if (n < p + 1)
        throw InvalidArgument("need at least " + std::to_string(p + 1) + " rows to fit " +
                              std::to_string(p) + "-dimensional OLS, got " + std::to_string(n));

    Eigen::MatrixXd design(n, p + 1);
    design.col(0).setOnes();
    design.rightCols(p) = train.features;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < p + 1) {
        // pivot order puts the dependent columns last
        const auto perm = qr.colsPermutation().indices();
        std::string cols;
        for (Eigen::Index i = qr.rank(); i < p + 1; ++i) {
            if (!cols.empty()) cols += ", ";
            cols += std::to_string(perm(i));
        }
        throw RankDeficientError("design matrix is rank-deficient in column(s) " + cols +
                                 " (0 = intercept)");
    }

    ScoreModel model;
    model.kind_ = ScoreModel::Kind::LinearResidual;
    model.dim_ = p;
    model.coef_ = qr.solve(train.outcomes);
    return model;
}

ScoreModel fit_knn_quantile(const LabeledDataset& train, double alpha, int k_neighbors) {
    train.validate();
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0,1)");
    if (k_neighbors < 1 || k_neighbors > train.size())
        throw InvalidArgument("k_neighbors = " + std::to_string(k_neighbors) +
                              " must lie in [1, " + std::to_string(train.size()) + "]");
    ScoreModel model;
    model.kind_ = ScoreModel::Kind::KnnQuantile;
    model.dim_ = train.dim();
    model.train_x_ = train.features;
    model.train_y_ = train.outcomes;
    model.k_neighbors_ = k_neighbors;
    model.level_lo_ = alpha / 2.0;
    model.level_hi_ = 1.0 - alpha / 2.0;
    return model;
}

void ScoreModel::band(const Eigen::Ref<const Eigen::VectorXd>& x, double& lo, double& hi) const {
    if (x.size() != dim_)
        throw InvalidArgument("feature dimension mismatch: expected " + std::to_string(dim_) +
                              ", got " + std::to_string(x.size()));
    if (kind_ == Kind::LinearResidual) {
        const double mu = coef_(0) + coef_.tail(dim_).dot(x);
        lo = hi = mu;
        return;
    }
    // k nearest training rows by (squared distance, row index)
    const Eigen::Index n = train_x_.rows();
    const int k = k_neighbors_;
    std::vector<std::pair<double, Eigen::Index>> dist(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        dist[static_cast<std::size_t>(i)] = {(train_x_.row(i).transpose() - x).squaredNorm(), i};
    std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
    std::vector<double> ys(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) ys[static_cast<std::size_t>(i)] = train_y_(dist[static_cast<std::size_t>(i)].second);
    std::sort(ys.begin(), ys.end());
    // empirical quantile at index ceil(q * k), 1-based
    auto at_level = [&](double q) {
        const int idx = std::max(1, static_cast<int>(std::ceil(q * k)));
        return ys[static_cast<std::size_t>(std::min(idx, k) - 1)];
    };
    lo = at_level(level_lo_);
    hi = at_level(level_hi_);
}

double ScoreModel::score(const Eigen::Ref<const Eigen::VectorXd>& x, double y) const {
    double lo, hi;
    band(x, lo, hi);
    return std::max({lo - y, y - hi, 0.0});
}

Interval ScoreModel::set_interval(const Eigen::Ref<const Eigen::VectorXd>& x, double t) const {
    if (!(t >= 0.0)) throw InvalidArgument("threshold must be >= 0 or inf");
    if (t == kInf) return {-kInf, kInf, false};
    double lo, hi;
    band(x, lo, hi);
    return {lo - t, hi + t, false};
}

}  // namespace lkconf
