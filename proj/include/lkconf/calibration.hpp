#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lkconf/dataset.hpp"
#include "lkconf/weight_functions.hpp"

namespace lkconf {

enum class Variant {
    L2,
    L2Alt,
    L2Conservative,
    L2Grouped,
    Lk,
    SplitConformal,
};

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

// Threshold t_hat in [0, inf] plus diagnostics. The induced prediction set is
// C(x) = {y : s(x, y) <= threshold}.
struct CalibrationResult {
    double threshold = 0.0;
    double weight_sum = 0.0;         // denominator sum of group weights
    double ratio_at_threshold = 0.0; // condition left-hand side at threshold
    Variant variant = Variant::L2;
    int used_pair_count = 0;         // number of groups m
};

// A sampled function assigned to r calibration rows, with its normalizer
// already applied: member_values(j) = f(X_row(j)) / gamma(f).
struct CalibrationGroup {
    NormalizedFunction fn;
    std::vector<Eigen::Index> rows;
    Eigen::VectorXd member_values;
};

struct PairedCalibration {
    std::vector<CalibrationGroup> groups;
    NormalizedFunction extra;  // the independent f entering the correction term
    int group_size = 2;        // r
};

// Shuffles the calibration rows once (seeded), assigns consecutive blocks of
// size r to the functions in order (leftover rows unused), and normalizes
// every function plus extra_f against the grouped training features with
// normalizer order k. Requires exactly floor(n/r) functions.
PairedCalibration pair_calibration(const LabeledDataset& cal,
                                   const std::vector<WeightFunction>& functions,
                                   const WeightFunction& extra_f, int r,
                                   const Eigen::MatrixXd& train_features, int k,
                                   std::uint64_t seed);

// Smallest value in {0} U candidates satisfying a monotone predicate (false
// then true as t grows), found by binary search; inf if none. Candidates must
// be sorted ascending.
double min_threshold(const std::function<bool(double)>& satisfied,
                     std::span<const double> candidates);

// Main L2 rule: smallest t with
//   (sum_i w_i Z_i(t) + b^2/gamma(f)^2) / sum_i w_i <= alpha^2,
// where w_i is the product of the two normalized member values and Z_i(t)
// indicates both member scores exceed t. Requires group_size == 2 and
// normalizers computed with k = 2.
CalibrationResult calibrate_l2(const PairedCalibration& pc, const Eigen::VectorXd& scores,
                               double alpha);

// Same numerator with denominator m + 1 instead of the weight sum.
CalibrationResult calibrate_l2_alt(const PairedCalibration& pc, const Eigen::VectorXd& scores,
                                   double alpha);

// De-randomized variant: the correction uses a class-wide lower bound
// gamma_min <= gamma(f) instead of the drawn f.
CalibrationResult calibrate_l2_conservative(const PairedCalibration& pc,
                                            const Eigen::VectorXd& scores, double alpha,
                                            double gamma_min);

// r-point extension: each group contributes the mean over its member pairs
// (j1 < j2) of v_j1 v_j2 Z_j1 Z_j2.
CalibrationResult calibrate_l2_grouped(const PairedCalibration& pc, const Eigen::VectorXd& scores,
                                       double alpha);

// General order-k rule with k-fold products and target alpha^k; k is the
// group size of pc (normalizers must use the same k). Conservative at small
// n: the condition compares a ratio of order 1/m against alpha^k.
CalibrationResult calibrate_lk(const PairedCalibration& pc, const Eigen::VectorXd& scores,
                               double alpha);

// Convenience overload that builds the grouping itself.
CalibrationResult calibrate_lk(const LabeledDataset& cal,
                               const std::vector<WeightFunction>& functions,
                               const WeightFunction& extra_f, int k, const Eigen::VectorXd& scores,
                               double alpha, const Eigen::MatrixXd& train_features,
                               std::uint64_t seed);

// Baseline: the ceil((n+1)(1-alpha))-th smallest score; inf when the rank
// exceeds n.
CalibrationResult calibrate_split_conformal(const Eigen::VectorXd& scores, double alpha);

// Approximate min over the function class of gamma(f), from sampler draws.
double gamma_min_estimate(const FunctionSampler& sampler, const Eigen::MatrixXd& train_features,
                          int k, int draws, std::uint64_t seed);

namespace reference {

// Brute-force linear scan over {0} U sorted distinct scores, evaluating the
// raw rule definition at every candidate. Kept independent of the binary
// search path above; used by the oracle-check suite and the benchmarks.
double linear_scan_threshold(const PairedCalibration& pc, const Eigen::VectorXd& scores,
                             double alpha, Variant variant, double gamma_min = 0.0);

double linear_scan_split(const Eigen::VectorXd& scores, double alpha);

}  // namespace reference

}  // namespace lkconf
