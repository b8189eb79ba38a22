#include "lkconf/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "lkconf/errors.hpp"
#include "lkconf/math_util.hpp"

namespace lkconf {

double conditional_miscoverage(const DgpOracle& oracle, const PredictionRule& rule,
                               const Eigen::Ref<const Eigen::VectorXd>& x) {
    const Interval set = rule.interval_at(x);
    if (set.empty) return 1.0;
    return gaussian_miss(set.lo, set.hi, oracle.mean_fn(x), oracle.sd_fn(x));
}

double width_at(const PredictionRule& rule, const Eigen::Ref<const Eigen::VectorXd>& x) {
    return rule.interval_at(x).width();
}

EvalBatch make_eval_batch(const DgpOracle& oracle, const FeatureLaw& law, const ScoreModel& model,
                          const WeightFunction& extra_f, Eigen::Index n_mc, std::uint64_t seed) {
    if (n_mc < 1) throw InvalidArgument("n_mc must be positive");
    const Eigen::MatrixXd draws = sample_feature_law(law, n_mc, seed);
    EvalBatch batch;
    batch.mu_true.resize(n_mc);
    batch.sd_true.resize(n_mc);
    for (Eigen::Index j = 0; j < n_mc; ++j) {
        batch.mu_true(j) = oracle.mean_fn(draws.row(j));
        batch.sd_true(j) = oracle.sd_fn(draws.row(j));
    }
    parallel::score_bands(model, draws, batch.band_lo, batch.band_hi);
    parallel::weight_values(extra_f, draws, batch.f_values);
    return batch;
}

WeightedMiscoverage f_weighted_miscoverage(const DgpOracle& oracle, const FeatureLaw& law,
                                           const PredictionRule& rule, const WeightFunction& f,
                                           const Normalization& normalization, Eigen::Index n_mc,
                                           std::uint64_t seed) {
    const EvalBatch batch = make_eval_batch(oracle, law, *rule.model, f, n_mc, seed);
    const MiscoverageSums sums = parallel::miscoverage_sums(batch, rule.threshold);
    const double n = static_cast<double>(n_mc);
    if (normalization.kind == Normalization::Kind::DataDriven)
        return {sums.sum_f_alpha / n / normalization.gamma, true};
    if (sums.sum_f <= 0.0) return {0.0, false};
    return {sums.sum_f_alpha / sums.sum_f, true};
}

WeightedMiscoverage f_weighted_miscoverage(const DgpOracle& oracle, const PredictionRule& rule,
                                           const WeightFunction& f,
                                           const Normalization& normalization, Eigen::Index n_mc,
                                           std::uint64_t seed) {
    return f_weighted_miscoverage(oracle, oracle.feature_law, rule, f, normalization, n_mc, seed);
}

double lk_norm(std::span<const double> values, int k) {
    if (values.empty()) throw InvalidArgument("lk_norm of an empty list");
    if (k < 1) throw InvalidArgument("lk_norm order must be >= 1");
    double sum = 0.0;
    for (double v : values) {
        double p = 1.0;
        for (int i = 0; i < k; ++i) p *= v;
        sum += p;
    }
    return std::pow(sum / static_cast<double>(values.size()), 1.0 / static_cast<double>(k));
}

TailBound tail_bound_check(std::span<const double> values, double alpha, double eps, int k) {
    if (!(alpha > 0.0 && alpha < 1.0 && eps > 0.0 && eps < 1.0))
        throw InvalidArgument("tail_bound_check requires alpha, eps in (0,1)");
    TailBound out;
    double count = 0.0;
    for (double v : values)
        if (v >= eps) count += 1.0;
    out.empirical_frequency = values.empty() ? 0.0 : count / static_cast<double>(values.size());
    out.bound = 1.0;
    for (int i = 0; i < k; ++i) out.bound *= alpha / eps;
    out.trivial = eps < alpha;  // bound exceeds 1, still reported
    return out;
}

double empirical_f_miscoverage(const LabeledDataset& test, const WeightFunction& f,
                               double gamma_or_mean, const PredictionRule& rule) {
    if (test.size() == 0) throw InvalidArgument("empirical_f_miscoverage on empty test set");
    if (!(gamma_or_mean > 0.0)) throw InvalidArgument("normalizer must be positive");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < test.size(); ++i) {
        if (!rule.contains(test.features.row(i), test.outcomes(i)))
            sum += f(test.features.row(i)) / gamma_or_mean;
    }
    return sum / static_cast<double>(test.size());
}

std::optional<LocalMiscoverage> empirical_local_miscoverage(
    const LabeledDataset& test, const Eigen::Ref<const Eigen::VectorXd>& center, double radius,
    const PredictionRule& rule) {
    if (!(radius > 0.0)) throw InvalidArgument("radius must be positive");
    const double r2 = radius * radius;
    Eigen::Index neighbors = 0;
    Eigen::Index uncovered = 0;
    for (Eigen::Index i = 0; i < test.size(); ++i) {
        if ((test.features.row(i).transpose() - center).squaredNorm() > r2) continue;
        ++neighbors;
        if (!rule.contains(test.features.row(i), test.outcomes(i))) ++uncovered;
    }
    if (neighbors == 0) return std::nullopt;
    return LocalMiscoverage{static_cast<double>(uncovered) / static_cast<double>(neighbors),
                            neighbors};
}

}  // namespace lkconf
