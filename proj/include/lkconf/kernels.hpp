#pragma once

#include <Eigen/Dense>
#include <vector>

#include "lkconf/scores.hpp"
#include "lkconf/weight_functions.hpp"

// Data-parallel inner loops, each in two builds: a plain serial reference
// (namespace serial) and an OpenMP version (namespace parallel). The parallel
// reductions accumulate fixed-size chunks combined in index order, so their
// results do not depend on the thread count. bench/ compares the two.

namespace lkconf {

struct WeightFunction;

// Per-draw quantities for Monte Carlo miscoverage evaluation. band_lo/band_hi
// are the zero-score set endpoints at each draw; the prediction interval at
// threshold t is [band_lo - t, band_hi + t].
struct EvalBatch {
    Eigen::VectorXd mu_true;
    Eigen::VectorXd sd_true;
    Eigen::VectorXd band_lo;
    Eigen::VectorXd band_hi;
    Eigen::VectorXd f_values;  // extra-f weights at the draws

    Eigen::Index size() const { return mu_true.size(); }
};

struct MiscoverageSums {
    double sum_f_alpha = 0.0;  // sum_j f(X_j) * alpha_D(X_j)
    double sum_f = 0.0;        // sum_j f(X_j)
    double sum_alpha = 0.0;    // sum_j alpha_D(X_j)
};

namespace serial {

// f evaluated over the rows of X.
void weight_values(const WeightFunction& f, const Eigen::MatrixXd& X, Eigen::VectorXd& out);

// (sum_l prod_j f(row((l-1)k+j)) + b^k) / (m_train + 1); m_train = rows / k.
double gamma_pow(const WeightFunction& f, const Eigen::MatrixXd& train_features, int k);

// gamma(f) for a batch of functions over the same grouped training rows.
std::vector<double> gamma_batch(const std::vector<WeightFunction>& fs,
                                const Eigen::MatrixXd& train_features, int k);

MiscoverageSums miscoverage_sums(const EvalBatch& batch, double threshold);

// Zero-score band endpoints of a score model over the rows of X.
void score_bands(const ScoreModel& model, const Eigen::MatrixXd& X, Eigen::VectorXd& lo,
                 Eigen::VectorXd& hi);

}  // namespace serial

namespace parallel {

void weight_values(const WeightFunction& f, const Eigen::MatrixXd& X, Eigen::VectorXd& out);
std::vector<double> gamma_batch(const std::vector<WeightFunction>& fs,
                                const Eigen::MatrixXd& train_features, int k);
MiscoverageSums miscoverage_sums(const EvalBatch& batch, double threshold);
void score_bands(const ScoreModel& model, const Eigen::MatrixXd& X, Eigen::VectorXd& lo,
                 Eigen::VectorXd& hi);

}  // namespace parallel

}  // namespace lkconf
