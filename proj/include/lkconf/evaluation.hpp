#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>

#include "lkconf/dgp.hpp"
#include "lkconf/kernels.hpp"
#include "lkconf/scores.hpp"
#include "lkconf/weight_functions.hpp"

namespace lkconf {

// A fitted score model together with a calibrated threshold:
// y in C(x)  <=>  score(x, y) <= threshold.
struct PredictionRule {
    const ScoreModel* model = nullptr;
    double threshold = 0.0;

    bool contains(const Eigen::Ref<const Eigen::VectorXd>& x, double y) const {
        return model->score(x, y) <= threshold;
    }
    Interval interval_at(const Eigen::Ref<const Eigen::VectorXd>& x) const {
        return model->set_interval(x, threshold);
    }
};

// P{Y not in C(x) | X = x} under the oracle's Gaussian conditional law.
double conditional_miscoverage(const DgpOracle& oracle, const PredictionRule& rule,
                               const Eigen::Ref<const Eigen::VectorXd>& x);

// Interval length of the rule's set at x; inf when the threshold is inf.
double width_at(const PredictionRule& rule, const Eigen::Ref<const Eigen::VectorXd>& x);

struct Normalization {
    enum class Kind { Exact, DataDriven } kind = Kind::Exact;
    double gamma = 1.0;  // used by DataDriven

    static Normalization exact() { return {Kind::Exact, 1.0}; }
    static Normalization data_driven(double gamma) { return {Kind::DataDriven, gamma}; }
};

struct WeightedMiscoverage {
    double value = 0.0;
    bool defined = true;  // exact mode is undefined when every weight vanishes
};

// Monte Carlo estimate of the f-weighted conditional miscoverage over n_mc
// feature draws from `law`:
//   exact:       (mean_j f(X_j) alpha_D(X_j)) / (mean_j f(X_j))
//   data-driven: (mean_j f(X_j) alpha_D(X_j)) / gamma
WeightedMiscoverage f_weighted_miscoverage(const DgpOracle& oracle, const FeatureLaw& law,
                                           const PredictionRule& rule, const WeightFunction& f,
                                           const Normalization& normalization, Eigen::Index n_mc,
                                           std::uint64_t seed);

// Convenience overload evaluating under the oracle's own feature law.
WeightedMiscoverage f_weighted_miscoverage(const DgpOracle& oracle, const PredictionRule& rule,
                                           const WeightFunction& f,
                                           const Normalization& normalization, Eigen::Index n_mc,
                                           std::uint64_t seed);

// ((1/N) sum v^k)^(1/k).
double lk_norm(std::span<const double> values, int k);

struct TailBound {
    double empirical_frequency = 0.0;
    double bound = 0.0;
    bool trivial = false;  // eps < alpha: the bound exceeds 1
};

// Frequency of values >= eps, paired with the Markov bound (alpha/eps)^k.
TailBound tail_bound_check(std::span<const double> values, double alpha, double eps, int k);

// mean over test rows of (f(x) / gamma_or_mean) * 1{y not in C(x)}.
double empirical_f_miscoverage(const LabeledDataset& test, const WeightFunction& f,
                               double gamma_or_mean, const PredictionRule& rule);

// Fraction of uncovered rows among test rows within `radius` of `center`;
// empty neighborhoods yield nullopt.
struct LocalMiscoverage {
    double value = 0.0;
    Eigen::Index neighbor_count = 0;
};
std::optional<LocalMiscoverage> empirical_local_miscoverage(
    const LabeledDataset& test, const Eigen::Ref<const Eigen::VectorXd>& center, double radius,
    const PredictionRule& rule);

// Assembles the per-draw batch once so several (threshold, alpha) cells can
// reuse the same Monte Carlo sample. Draws come from `law`.
EvalBatch make_eval_batch(const DgpOracle& oracle, const FeatureLaw& law, const ScoreModel& model,
                          const WeightFunction& extra_f, Eigen::Index n_mc, std::uint64_t seed);

}  // namespace lkconf
