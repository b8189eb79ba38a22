#include "lkconf/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lkconf/errors.hpp"
#include "lkconf/kernels.hpp"
#include "lkconf/math_util.hpp"
#include "lkconf/rng.hpp"

namespace lkconf {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::L2: return "l2";
        case Variant::L2Alt: return "l2-alt";
        case Variant::L2Conservative: return "l2-conservative";
        case Variant::L2Grouped: return "l2-grouped";
        case Variant::Lk: return "lk";
        case Variant::SplitConformal: return "split-conformal";
    }
    return "?";
}

Variant variant_from_string(const std::string& s) {
    if (s == "l2") return Variant::L2;
    if (s == "l2-alt") return Variant::L2Alt;
    if (s == "l2-conservative") return Variant::L2Conservative;
    if (s == "l2-grouped") return Variant::L2Grouped;
    if (s == "lk") return Variant::Lk;
    if (s == "split-conformal") return Variant::SplitConformal;
    throw ConfigError("unknown calibration variant '" + s + "'");
}

PairedCalibration pair_calibration(const LabeledDataset& cal,
                                   const std::vector<WeightFunction>& functions,
                                   const WeightFunction& extra_f, int r,
                                   const Eigen::MatrixXd& train_features, int k,
                                   std::uint64_t seed) {
    cal.validate();
    if (r < 2) throw InvalidArgument("group size r must be >= 2");
    const Eigen::Index n = cal.size();
    const Eigen::Index m = n / r;
    if (static_cast<Eigen::Index>(functions.size()) != m)
        throw InvalidArgument("expected exactly floor(n/r) = " + std::to_string(m) +
                              " functions, got " + std::to_string(functions.size()));

    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    auto engine = make_engine(seed);
    std::shuffle(perm.begin(), perm.end(), engine);

    std::vector<WeightFunction> all = functions;
    all.push_back(extra_f);
    const std::vector<double> gammas = parallel::gamma_batch(all, train_features, k);

    PairedCalibration pc;
    pc.group_size = r;
    pc.groups.resize(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
        auto& g = pc.groups[static_cast<std::size_t>(i)];
        g.fn = {functions[static_cast<std::size_t>(i)], gammas[static_cast<std::size_t>(i)]};
        g.rows.resize(static_cast<std::size_t>(r));
        g.member_values.resize(r);
        for (int j = 0; j < r; ++j) {
            const Eigen::Index row = perm[static_cast<std::size_t>(i * r + j)];
            g.rows[static_cast<std::size_t>(j)] = row;
            g.member_values(j) = g.fn(cal.features.row(row));
        }
    }
    pc.extra = {extra_f, gammas.back()};
    return pc;
}

double min_threshold(const std::function<bool(double)>& satisfied,
                     std::span<const double> candidates) {
    if (satisfied(0.0)) return 0.0;
    if (candidates.empty() || !satisfied(candidates.back())) return kInf;
    // first satisfied candidate; the predicate is monotone in t
    std::size_t lo = 0, hi = candidates.size() - 1;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (satisfied(candidates[mid]))
            hi = mid;
        else
            lo = mid + 1;
    }
    return candidates[lo];
}

namespace {

double ipow(double base, int exp) {
    double out = 1.0;
    for (int i = 0; i < exp; ++i) out *= base;
    return out;
}

std::vector<double> candidate_grid(const Eigen::VectorXd& scores) {
    std::vector<double> cand(scores.data(), scores.data() + scores.size());
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    return cand;
}

struct GroupStats {
    double weight = 0.0;     // product of member values (product rules)
    double min_score = 0.0;  // all-members indicator flips here
};

// Shared engine for the product-form rules (l2, l2-alt, l2-conservative, lk):
//   condition(t): (sum_i w_i 1{min_i > t} + correction) / denom <= alpha^k
CalibrationResult product_rule(const PairedCalibration& pc, const Eigen::VectorXd& scores,
                               double alpha, int k, double correction, bool denom_m_plus_1,
                               Variant tag) {
    const auto m = static_cast<Eigen::Index>(pc.groups.size());
    std::vector<GroupStats> stats(static_cast<std::size_t>(m));
    double weight_sum = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& g = pc.groups[static_cast<std::size_t>(i)];
        double prod = 1.0;
        double mn = kInf;
        for (Eigen::Index j = 0; j < g.member_values.size(); ++j) {
            prod *= g.member_values(j);
            mn = std::min(mn, scores(g.rows[static_cast<std::size_t>(j)]));
        }
        stats[static_cast<std::size_t>(i)] = {prod, mn};
        weight_sum += prod;
    }

    const double target = ipow(alpha, k);
    const double denom = denom_m_plus_1 ? static_cast<double>(m + 1) : weight_sum;

    CalibrationResult result;
    result.variant = tag;
    result.weight_sum = weight_sum;
    result.used_pair_count = static_cast<int>(m);

    auto numerator_at = [&](double t) {
        double num = correction;
        for (const auto& s : stats)
            if (s.min_score > t) num += s.weight;
        return num;
    };

    // The ratio-denominator rules are undefined at zero weight mass; the
    // (m+1)-denominator rule stays well-defined and may still admit t = 0.
    if (denom <= 0.0) {
        result.threshold = kInf;
        result.ratio_at_threshold = kInf;
        return result;
    }

    const auto cand = candidate_grid(scores);
    auto satisfied = [&](double t) { return numerator_at(t) / denom <= target; };
    result.threshold = min_threshold(satisfied, cand);
    result.ratio_at_threshold =
        std::isinf(result.threshold) ? correction / denom : numerator_at(result.threshold) / denom;
    return result;
}

}  // namespace

CalibrationResult calibrate_l2(const PairedCalibration& pc, const Eigen::VectorXd& scores,
                               double alpha) {
    if (pc.group_size != 2) throw InvalidArgument("calibrate_l2 requires group size 2");
    const double b = pc.extra.f.bound();
    const double corr = ipow(b, 2) / ipow(pc.extra.gamma, 2);
    return product_rule(pc, scores, alpha, 2, corr, false, Variant::L2);
}

CalibrationResult calibrate_l2_alt(const PairedCalibration& pc, const Eigen::VectorXd& scores,
                                   double alpha) {
    if (pc.group_size != 2) throw InvalidArgument("calibrate_l2_alt requires group size 2");
    const double b = pc.extra.f.bound();
    const double corr = ipow(b, 2) / ipow(pc.extra.gamma, 2);
    return product_rule(pc, scores, alpha, 2, corr, true, Variant::L2Alt);
}

CalibrationResult calibrate_l2_conservative(const PairedCalibration& pc,
                                            const Eigen::VectorXd& scores, double alpha,
                                            double gamma_min) {
    if (pc.group_size != 2)
        throw InvalidArgument("calibrate_l2_conservative requires group size 2");
    if (!(gamma_min > 0.0)) throw InvalidArgument("gamma_min must be positive");
    const double b = pc.extra.f.bound();
    const double corr = ipow(b, 2) / ipow(gamma_min, 2);
    return product_rule(pc, scores, alpha, 2, corr, false, Variant::L2Conservative);
}

CalibrationResult calibrate_lk(const PairedCalibration& pc, const Eigen::VectorXd& scores,
                               double alpha) {
    const int k = pc.group_size;
    if (k < 2) throw InvalidArgument("calibrate_lk requires k >= 2");
    const double b = pc.extra.f.bound();
    const double corr = ipow(b, k) / ipow(pc.extra.gamma, k);
    CalibrationResult result = product_rule(pc, scores, alpha, k, corr, false, Variant::Lk);
    return result;
}

CalibrationResult calibrate_lk(const LabeledDataset& cal,
                               const std::vector<WeightFunction>& functions,
                               const WeightFunction& extra_f, int k, const Eigen::VectorXd& scores,
                               double alpha, const Eigen::MatrixXd& train_features,
                               std::uint64_t seed) {
    const PairedCalibration pc =
        pair_calibration(cal, functions, extra_f, k, train_features, k, seed);
    return calibrate_lk(pc, scores, alpha);
}

CalibrationResult calibrate_l2_grouped(const PairedCalibration& pc, const Eigen::VectorXd& scores,
                                       double alpha) {
    const int r = pc.group_size;
    if (r < 2) throw InvalidArgument("calibrate_l2_grouped requires r >= 2");
    const auto m = static_cast<Eigen::Index>(pc.groups.size());
    const double b = pc.extra.f.bound();
    const double correction = ipow(b, 2) / ipow(pc.extra.gamma, 2);
    const double pair_count = static_cast<double>(r) * (r - 1) / 2.0;

    // group term at t: mean over member pairs of v_j1 v_j2 Z_j1 Z_j2
    auto group_term = [&](const CalibrationGroup& g, double t, bool with_z) {
        double sum = 0.0;
        for (Eigen::Index j1 = 0; j1 + 1 < g.member_values.size(); ++j1) {
            if (with_z && !(scores(g.rows[static_cast<std::size_t>(j1)]) > t)) continue;
            for (Eigen::Index j2 = j1 + 1; j2 < g.member_values.size(); ++j2) {
                if (with_z && !(scores(g.rows[static_cast<std::size_t>(j2)]) > t)) continue;
                sum += g.member_values(j1) * g.member_values(j2);
            }
        }
        return sum / pair_count;
    };

    double weight_sum = 0.0;
    for (const auto& g : pc.groups) weight_sum += group_term(g, 0.0, false);

    CalibrationResult result;
    result.variant = Variant::L2Grouped;
    result.weight_sum = weight_sum;
    result.used_pair_count = static_cast<int>(m);

    auto numerator_at = [&](double t) {
        double num = correction;
        for (const auto& g : pc.groups) num += group_term(g, t, true);
        return num;
    };

    if (weight_sum <= 0.0) {
        result.threshold = kInf;
        result.ratio_at_threshold = kInf;
        return result;
    }

    const double target = alpha * alpha;
    const auto cand = candidate_grid(scores);
    auto satisfied = [&](double t) { return numerator_at(t) / weight_sum <= target; };
    result.threshold = min_threshold(satisfied, cand);
    result.ratio_at_threshold = std::isinf(result.threshold)
                                    ? correction / weight_sum
                                    : numerator_at(result.threshold) / weight_sum;
    return result;
}

CalibrationResult calibrate_split_conformal(const Eigen::VectorXd& scores, double alpha) {
    const Eigen::Index n = scores.size();
    if (n < 1) throw InvalidArgument("split conformal needs at least one score");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0,1)");
    // tiny downward nudge so exact-integer products do not round up
    const double raw = static_cast<double>(n + 1) * (1.0 - alpha);
    const auto rank = static_cast<Eigen::Index>(std::ceil(raw - 1e-9));

    CalibrationResult result;
    result.variant = Variant::SplitConformal;
    result.weight_sum = static_cast<double>(n);
    result.used_pair_count = static_cast<int>(n);
    if (rank > n) {
        result.threshold = kInf;
        result.ratio_at_threshold = 0.0;
        return result;
    }
    std::vector<double> sorted(scores.data(), scores.data() + n);
    std::nth_element(sorted.begin(), sorted.begin() + (rank - 1), sorted.end());
    result.threshold = sorted[static_cast<std::size_t>(rank - 1)];
    // realized upper bound on marginal miscoverage: rank / (n+1)
    result.ratio_at_threshold = 1.0 - static_cast<double>(rank) / static_cast<double>(n + 1);
    return result;
}

double gamma_min_estimate(const FunctionSampler& sampler, const Eigen::MatrixXd& train_features,
                          int k, int draws, std::uint64_t seed) {
    if (draws < 1) throw InvalidArgument("gamma_min_estimate needs at least one draw");
    const auto fs = sample_functions(sampler, draws, seed);
    const auto gammas = parallel::gamma_batch(fs, train_features, k);
    return *std::min_element(gammas.begin(), gammas.end());
}

namespace reference {

double linear_scan_split(const Eigen::VectorXd& scores, double alpha) {
    const Eigen::Index n = scores.size();
    const auto rank = static_cast<Eigen::Index>(
        std::ceil(static_cast<double>(n + 1) * (1.0 - alpha) - 1e-9));
    if (rank > n) return kInf;
    std::vector<double> sorted(scores.data(), scores.data() + n);
    std::sort(sorted.begin(), sorted.end());
    return sorted[static_cast<std::size_t>(rank - 1)];
}

double linear_scan_threshold(const PairedCalibration& pc, const Eigen::VectorXd& scores,
                             double alpha, Variant variant, double gamma_min) {
    const int r = pc.group_size;
    const auto m = static_cast<Eigen::Index>(pc.groups.size());
    const double b = pc.extra.f.bound();

    int order = 2;
    if (variant == Variant::Lk) order = r;
    double target = 1.0;
    for (int i = 0; i < order; ++i) target *= alpha;

    double correction = 1.0;
    const double g = variant == Variant::L2Conservative ? gamma_min : pc.extra.gamma;
    for (int i = 0; i < order; ++i) correction *= b / g;

    std::vector<double> cand(scores.data(), scores.data() + scores.size());
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    cand.insert(cand.begin(), 0.0);

    for (double t : cand) {
        double numerator = correction;
        double denominator = 0.0;
        for (const auto& grp : pc.groups) {
            if (variant == Variant::L2Grouped) {
                double num_g = 0.0, den_g = 0.0;
                for (Eigen::Index j1 = 0; j1 < r; ++j1)
                    for (Eigen::Index j2 = j1 + 1; j2 < r; ++j2) {
                        const double vv = grp.member_values(j1) * grp.member_values(j2);
                        const bool z1 = scores(grp.rows[static_cast<std::size_t>(j1)]) > t;
                        const bool z2 = scores(grp.rows[static_cast<std::size_t>(j2)]) > t;
                        den_g += vv;
                        if (z1 && z2) num_g += vv;
                    }
                const double pairs = static_cast<double>(r) * (r - 1) / 2.0;
                numerator += num_g / pairs;
                denominator += den_g / pairs;
            } else {
                double prod = 1.0;
                double prod_z = 1.0;
                for (Eigen::Index j = 0; j < r; ++j) {
                    const double v = grp.member_values(j);
                    prod *= v;
                    prod_z *= v * (scores(grp.rows[static_cast<std::size_t>(j)]) > t ? 1.0 : 0.0);
                }
                numerator += prod_z;
                denominator += prod;
            }
        }
        if (variant == Variant::L2Alt) denominator = static_cast<double>(m + 1);
        if (denominator > 0.0 && numerator / denominator <= target) return t;
    }
    return kInf;
}

}  // namespace reference

}  // namespace lkconf
