#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <map>
#include <numeric>
#include <tuple>

#include "lkconf/csv.hpp"
#include "lkconf/errors.hpp"
#include "lkconf/experiment.hpp"
#include "lkconf/math_util.hpp"
#include "lkconf/rng.hpp"

namespace lkconf {

namespace {

int resolve_threads(int configured) {
    if (configured > 0) return configured;
    if (const char* env = std::getenv("LKCONF_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
    omp_set_num_threads(n);
#else
    (void)n;
#endif
}

Eigen::MatrixXd shuffled_rows(const Eigen::MatrixXd& m, std::uint64_t seed) {
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(m.rows()));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    auto engine = make_engine(seed);
    std::shuffle(perm.begin(), perm.end(), engine);
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.row(i) = m.row(perm[static_cast<std::size_t>(i)]);
    return out;
}

// Scenario-dependent pieces of a simulation run.
struct ScenarioContext {
    DgpOracle oracle;
    LabeledDataset (*generate)(Eigen::Index, std::uint64_t);
    UniformBox box;  // feature support, used by the uniform-box sampler source
};

LabeledDataset gen_multivariate_default(Eigen::Index n, std::uint64_t seed) {
    return gen_multivariate(n, seed);
}

ScenarioContext make_scenario(Scenario s) {
    switch (s) {
        case Scenario::Setting1: {
            UniformBox box{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 10.0)};
            return {setting1_oracle(), &gen_setting1, box};
        }
        case Scenario::Setting2: {
            UniformBox box{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 10.0)};
            return {setting2_oracle(), &gen_setting2, box};
        }
        case Scenario::Multivariate:
            return {multivariate_oracle(), &gen_multivariate_default, multivariate_box()};
        case Scenario::Csv:
            throw ConfigError("scenario: csv runs use run_real_data");
    }
    throw ConfigError("scenario: unknown");
}

// (group size, normalizer order) backing each method's calibration object.
std::pair<int, int> pc_key_for(const MethodSpec& ms) {
    switch (ms.variant) {
        case Variant::L2Grouped: return {ms.r, 2};
        case Variant::Lk: return {ms.k, ms.k};
        default: return {2, 2};
    }
}

double quantile_sorted(std::vector<double>& v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= v.size()) return v.back();
    const double frac = pos - static_cast<double>(i);
    return v[i] * (1.0 - frac) + v[i + 1] * frac;
}

}  // namespace

std::vector<AggregateRow> compute_simulation_aggregates(const std::vector<TrialRecord>& records,
                                                        const std::vector<double>& tail_eps) {
    std::map<std::tuple<int, double, double>, std::size_t> index;
    std::vector<AggregateRow> rows;
    struct Bucket {
        std::vector<double> tilde, bar, widths;
        double sum_alpha_d = 0.0, sum_marginal = 0.0;
        int inf_thresholds = 0, undefined_bar = 0, inf_widths = 0;
    };
    std::vector<Bucket> buckets;

    for (const auto& r : records) {
        const auto key = std::make_tuple(static_cast<int>(r.variant), r.alpha, r.bandwidth);
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, rows.size()).first;
            AggregateRow row;
            row.variant = r.variant;
            row.alpha = r.alpha;
            row.bandwidth = r.bandwidth;
            rows.push_back(row);
            buckets.emplace_back();
        }
        auto& b = buckets[it->second];
        b.tilde.push_back(r.alpha_tilde_f);
        if (r.alpha_bar_defined)
            b.bar.push_back(r.alpha_bar_f);
        else
            ++b.undefined_bar;
        if (std::isinf(r.width_at_test))
            ++b.inf_widths;
        else
            b.widths.push_back(r.width_at_test);
        if (std::isinf(r.threshold)) ++b.inf_thresholds;
        b.sum_alpha_d += r.alpha_d_at_test;
        b.sum_marginal += r.alpha_marginal;
    }

    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto& row = rows[i];
        auto& b = buckets[i];
        row.n = static_cast<int>(b.tilde.size());
        row.infinite_thresholds = b.inf_thresholds;
        row.undefined_bar = b.undefined_bar;
        row.mean_alpha_d = b.sum_alpha_d / row.n;
        row.mean_marginal = b.sum_marginal / row.n;
        row.l1_tilde = lk_norm(b.tilde, 1);
        row.l2_tilde = lk_norm(b.tilde, 2);
        row.l4_tilde = lk_norm(b.tilde, 4);
        if (!b.bar.empty()) {
            row.l1_bar = lk_norm(b.bar, 1);
            row.l2_bar = lk_norm(b.bar, 2);
            row.l4_bar = lk_norm(b.bar, 4);
        }
        row.infinite_widths = b.inf_widths;
        if (!b.widths.empty()) {
            row.mean_width =
                std::accumulate(b.widths.begin(), b.widths.end(), 0.0) / b.widths.size();
            row.median_width = quantile_sorted(b.widths, 0.5);
        }
        for (double eps : tail_eps) {
            const TailBound tb = tail_bound_check(b.tilde, row.alpha, eps, 2);
            row.tails.push_back({eps, tb.empirical_frequency, tb.bound});
        }
    }
    return rows;
}

std::vector<AggregateRow> compute_real_data_aggregates(const std::vector<RealDataRecord>& records,
                                                       const std::vector<double>& tail_eps) {
    std::map<std::tuple<int, double, double>, std::size_t> index;
    std::vector<AggregateRow> rows;
    struct Bucket {
        std::vector<double> fw, widths;
        double sum_local = 0.0;
        int local_defined = 0, undefined_local = 0, uncovered = 0, inf_widths = 0,
            inf_thresholds = 0;
    };
    std::vector<Bucket> buckets;

    for (const auto& r : records) {
        const auto key = std::make_tuple(static_cast<int>(r.variant), r.alpha, r.bandwidth);
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, rows.size()).first;
            AggregateRow row;
            row.variant = r.variant;
            row.alpha = r.alpha;
            row.bandwidth = r.bandwidth;
            rows.push_back(row);
            buckets.emplace_back();
        }
        auto& b = buckets[it->second];
        b.fw.push_back(r.f_weighted);
        if (r.local_defined) {
            b.sum_local += r.local;
            ++b.local_defined;
        } else {
            ++b.undefined_local;
        }
        if (!r.covered) ++b.uncovered;
        if (std::isinf(r.width))
            ++b.inf_widths;
        else
            b.widths.push_back(r.width);
        if (std::isinf(r.threshold)) ++b.inf_thresholds;
    }

    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto& row = rows[i];
        auto& b = buckets[i];
        row.n = static_cast<int>(b.fw.size());
        row.infinite_thresholds = b.inf_thresholds;
        // f-weighted estimates use the data-driven normalizer, so they live in
        // the tilde columns; the bar columns stay zero for real-data runs.
        row.l1_tilde = lk_norm(b.fw, 1);
        row.l2_tilde = lk_norm(b.fw, 2);
        row.l4_tilde = lk_norm(b.fw, 4);
        row.mean_marginal = static_cast<double>(b.uncovered) / row.n;
        row.mean_local = b.local_defined > 0 ? b.sum_local / b.local_defined : 0.0;
        row.undefined_local = b.undefined_local;
        row.infinite_widths = b.inf_widths;
        if (!b.widths.empty()) {
            row.mean_width =
                std::accumulate(b.widths.begin(), b.widths.end(), 0.0) / b.widths.size();
            row.median_width = quantile_sorted(b.widths, 0.5);
        }
        for (double eps : tail_eps) {
            const TailBound tb = tail_bound_check(b.fw, row.alpha, eps, 2);
            row.tails.push_back({eps, tb.empirical_frequency, tb.bound});
        }
    }
    return rows;
}

namespace {

nlohmann::json betas_json() {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& b : default_betas().beta)
        out.push_back(std::vector<double>(b.data(), b.data() + b.size()));
    return out;
}

nlohmann::json base_provenance(const ExperimentConfig& cfg) {
    nlohmann::json p;
    p["version"] = kVersion;
    p["base_seed"] = cfg.base_seed;
    p["seed_derivation"] = "splitmix64(base + 0x9E3779B97F4A7C15 * (stream + 1))";
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    p["timestamp"] = buf;
    if (cfg.scenario == Scenario::Multivariate) p["betas"] = betas_json();
    return p;
}

}  // namespace

Report run_simulation(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.scenario == Scenario::Csv)
        throw ConfigError("scenario: run_simulation does not accept csv");
    set_threads(resolve_threads(cfg.threads));

    const ScenarioContext ctx = make_scenario(cfg.scenario);

    // Function-center source and the law the miscoverage integrals use. With
    // uniform-box centers the evaluation follows the same uniform law (the
    // covariate-shift reading); otherwise both are the DGP feature law.
    FeatureLaw center_law = ctx.oracle.feature_law;
    FeatureLaw eval_law = ctx.oracle.feature_law;
    std::optional<Eigen::MatrixXd> center_pool;
    if (cfg.sampler_source == SamplerSource::UniformBox) {
        center_law = ctx.box;
        eval_law = ctx.box;
    } else if (cfg.sampler_source == SamplerSource::Pool) {
        center_pool = sample_feature_law(ctx.oracle.feature_law, cfg.sizes.pool,
                                         derive_seed(cfg.base_seed, streams::kPool));
    }

    // one training pass per configuration
    const LabeledDataset train = ctx.generate(cfg.sizes.n_train, derive_seed(cfg.base_seed, streams::kTrainData));
    const Eigen::MatrixXd train_grouped =
        shuffled_rows(train.features, derive_seed(cfg.base_seed, streams::kGammaShuffle));

    const std::size_t n_alpha = cfg.alphas.size();
    std::vector<ScoreModel> models;
    models.reserve(n_alpha);
    for (double a : cfg.alphas) {
        if (cfg.score == ScoreKind::LinearResidual) {
            if (models.empty()) models.push_back(fit_linear_residual(train));
            else models.push_back(models.front());
        } else {
            models.push_back(fit_knn_quantile(train, a, cfg.k_neighbors));
        }
    }

    const bool mixture = !cfg.kernel_mixture.empty();
    const std::vector<double> bandwidth_cells = mixture ? std::vector<double>{0.0} : cfg.bandwidths;
    auto sampler_for = [&](double h) {
        FunctionSampler s;
        if (mixture)
            s.components = cfg.kernel_mixture;
        else
            s.components = {{cfg.kernel, h, 1.0}};
        if (center_pool) {
            s.pool = *center_pool;
            s.with_replacement = cfg.pool_with_replacement;
        } else {
            s.center_law = center_law;
        }
        return s;
    };

    // class-wide gamma lower bounds for the de-randomized variant
    std::map<std::pair<std::size_t, int>, double> gamma_mins;  // (h_idx, draws) -> min
    for (std::size_t hi = 0; hi < bandwidth_cells.size(); ++hi)
        for (const auto& ms : cfg.methods)
            if (ms.variant == Variant::L2Conservative) {
                const auto key = std::make_pair(hi, ms.gamma_min_draws);
                if (!gamma_mins.count(key))
                    gamma_mins[key] = gamma_min_estimate(
                        sampler_for(bandwidth_cells[hi]), train_grouped, 2, ms.gamma_min_draws,
                        derive_seed(cfg.base_seed, streams::kGammaMin + hi));
            }

    const std::size_t n_h = bandwidth_cells.size();
    const std::size_t n_methods = cfg.methods.size();
    const std::size_t cells = n_h * n_methods * n_alpha;
    std::vector<TrialRecord> records(static_cast<std::size_t>(cfg.trials) * cells);

    std::exception_ptr first_error;

#pragma omp parallel for schedule(dynamic)
    for (int tr = 0; tr < cfg.trials; ++tr) {
        try {
            const std::uint64_t tseed =
                derive_seed(cfg.base_seed, streams::kTrialBase + static_cast<std::uint64_t>(tr));
            const LabeledDataset cal =
                ctx.generate(cfg.sizes.n_cal, derive_seed(tseed, streams::kCalibration));
            const Eigen::MatrixXd xtest_m =
                sample_feature_law(eval_law, 1, derive_seed(tseed, streams::kTestPoint));
            const Eigen::VectorXd xtest = xtest_m.row(0);

            const Eigen::MatrixXd draws =
                sample_feature_law(eval_law, cfg.n_mc, derive_seed(tseed, streams::kMonteCarlo));
            Eigen::VectorXd mu_mc(cfg.n_mc), sd_mc(cfg.n_mc);
            for (Eigen::Index j = 0; j < cfg.n_mc; ++j) {
                mu_mc(j) = ctx.oracle.mean_fn(draws.row(j));
                sd_mc(j) = ctx.oracle.sd_fn(draws.row(j));
            }

            // per-alpha calibration scores and per-draw score bands
            std::vector<Eigen::VectorXd> scores_a(n_alpha), lo_a(n_alpha), hi_a(n_alpha);
            for (std::size_t a = 0; a < n_alpha; ++a) {
                if (cfg.score == ScoreKind::LinearResidual && a > 0) {
                    scores_a[a] = scores_a[0];
                    lo_a[a] = lo_a[0];
                    hi_a[a] = hi_a[0];
                    continue;
                }
                const ScoreModel& model = models[a];
                Eigen::VectorXd s(cal.size());
                for (Eigen::Index i = 0; i < cal.size(); ++i)
                    s(i) = model.score(cal.features.row(i), cal.outcomes(i));
                scores_a[a] = std::move(s);
                serial::score_bands(model, draws, lo_a[a], hi_a[a]);
            }

            for (std::size_t hi_idx = 0; hi_idx < n_h; ++hi_idx) {
                const double h = bandwidth_cells[hi_idx];
                const FunctionSampler sampler = sampler_for(h);

                // calibration objects shared by methods with the same layout
                std::map<std::pair<int, int>, PairedCalibration> pcs;
                std::map<std::pair<int, int>, Eigen::VectorXd> f_mc;  // extra-f over the draws
                auto ensure_pc = [&](std::pair<int, int> key) -> const PairedCalibration& {
                    auto it = pcs.find(key);
                    if (it != pcs.end()) return it->second;
                    const int g = key.first;
                    const Eigen::Index m = cfg.sizes.n_cal / g;
                    const auto funcs = sample_functions(
                        sampler, static_cast<int>(m) + 1,
                        derive_seed(tseed, streams::kFunctions + 8 * hi_idx +
                                               static_cast<std::uint64_t>(g)));
                    std::vector<WeightFunction> cal_funcs(funcs.begin(), funcs.end() - 1);
                    PairedCalibration pc =
                        pair_calibration(cal, cal_funcs, funcs.back(), g, train_grouped,
                                         key.second, derive_seed(tseed, streams::kPairShuffle));
                    Eigen::VectorXd fv;
                    serial::weight_values(pc.extra.f, draws, fv);
                    f_mc[key] = std::move(fv);
                    return pcs.emplace(key, std::move(pc)).first->second;
                };
                ensure_pc({2, 2});  // split-conformal records evaluate against this extra f

                for (std::size_t mi = 0; mi < n_methods; ++mi) {
                    const MethodSpec& ms = cfg.methods[mi];
                    const auto key = pc_key_for(ms);
                    const PairedCalibration& pc = ensure_pc(key);
                    const Eigen::VectorXd& fv = f_mc.at(key);

                    for (std::size_t a = 0; a < n_alpha; ++a) {
                        const double alpha = cfg.alphas[a];
                        CalibrationResult res;
                        switch (ms.variant) {
                            case Variant::L2: res = calibrate_l2(pc, scores_a[a], alpha); break;
                            case Variant::L2Alt:
                                res = calibrate_l2_alt(pc, scores_a[a], alpha);
                                break;
                            case Variant::L2Conservative:
                                res = calibrate_l2_conservative(
                                    pc, scores_a[a], alpha,
                                    gamma_mins.at({hi_idx, ms.gamma_min_draws}));
                                break;
                            case Variant::L2Grouped:
                                res = calibrate_l2_grouped(pc, scores_a[a], alpha);
                                break;
                            case Variant::Lk: res = calibrate_lk(pc, scores_a[a], alpha); break;
                            case Variant::SplitConformal:
                                res = calibrate_split_conformal(scores_a[a], alpha);
                                break;
                        }

                        EvalBatch batch{mu_mc, sd_mc, lo_a[a], hi_a[a], fv};
                        const MiscoverageSums sums =
                            serial::miscoverage_sums(batch, res.threshold);
                        const double n = static_cast<double>(cfg.n_mc);

                        TrialRecord rec;
                        rec.trial = tr;
                        rec.seed = tseed;
                        rec.variant = ms.variant;
                        rec.alpha = alpha;
                        rec.bandwidth = h;
                        rec.threshold = res.threshold;
                        rec.weight_sum = res.weight_sum;
                        rec.ratio_at_threshold = res.ratio_at_threshold;
                        rec.group_count = res.used_pair_count;
                        rec.gamma_extra = pc.extra.gamma;
                        rec.test_x0 = xtest(0);
                        rec.alpha_marginal = sums.sum_alpha / n;
                        rec.alpha_bar_defined = sums.sum_f > 0.0;
                        rec.alpha_bar_f =
                            rec.alpha_bar_defined ? sums.sum_f_alpha / sums.sum_f : 0.0;
                        rec.alpha_tilde_f = sums.sum_f_alpha / n / pc.extra.gamma;
                        const PredictionRule rule{&models[a], res.threshold};
                        rec.alpha_d_at_test = conditional_miscoverage(ctx.oracle, rule, xtest);
                        rec.width_at_test = width_at(rule, xtest);

                        const std::size_t slot =
                            ((static_cast<std::size_t>(tr) * n_h + hi_idx) * n_methods + mi) *
                                n_alpha +
                            a;
                        records[slot] = rec;
                    }
                }
            }
        } catch (...) {
#pragma omp critical
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (first_error) std::rethrow_exception(first_error);

    Report report;
    report.config = cfg;
    report.provenance = base_provenance(cfg);
    report.provenance["eval_feature_law"] =
        cfg.sampler_source == SamplerSource::UniformBox ? "uniform-box" : "feature-law";
    if (mixture) report.provenance["kernel_mixture_cells"] = true;
    report.records = std::move(records);
    report.aggregates = compute_simulation_aggregates(report.records, cfg.tail_eps);
    return report;
}

Report run_real_data(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.scenario != Scenario::Csv)
        throw ConfigError("scenario: run_real_data requires the csv scenario");
    set_threads(resolve_threads(cfg.threads));

    const LabeledDataset data = load_csv(cfg.csv.path, abalone_schema());
    const SplitSpec split_spec{cfg.csv.splits, derive_seed(cfg.base_seed, streams::kTrainData)};
    auto parts = split(data, split_spec);
    LabeledDataset& train = parts[0];
    LabeledDataset& cal = parts[1];
    LabeledDataset& funcs_split = parts[2];
    LabeledDataset& test = parts[3];

    // rescale every split against the function-construction split
    const ScalingRecord scaling = fit_scaling(funcs_split);
    for (auto* part : {&train, &cal, &funcs_split, &test})
        part->features = scaling.apply(part->features);

    const Eigen::MatrixXd train_grouped =
        shuffled_rows(train.features, derive_seed(cfg.base_seed, streams::kGammaShuffle));

    const std::size_t n_alpha = cfg.alphas.size();
    std::vector<ScoreModel> models;
    for (double a : cfg.alphas) {
        if (cfg.score == ScoreKind::LinearResidual) {
            if (models.empty()) models.push_back(fit_linear_residual(train));
            else models.push_back(models.front());
        } else {
            models.push_back(fit_knn_quantile(train, a, cfg.k_neighbors));
        }
    }

    const Eigen::Index m = cal.size() / 2;
    if (funcs_split.size() < m + 1)
        throw ConfigError("csv.splits: function split needs at least floor(n_cal/2) + 1 = " +
                          std::to_string(m + 1) + " rows");

    const std::size_t n_h = cfg.bandwidths.size();
    const std::size_t n_methods = cfg.methods.size();
    const auto n_test = static_cast<std::size_t>(test.size());
    std::vector<RealDataRecord> records(n_h * n_methods * n_alpha * n_test);

    for (std::size_t hi_idx = 0; hi_idx < n_h; ++hi_idx) {
        const double h = cfg.bandwidths[hi_idx];

        FunctionSampler sampler;
        sampler.components = {{cfg.kernel, h, 1.0}};
        sampler.pool = funcs_split.features;
        sampler.with_replacement = false;  // each pool point backs one function
        const auto funcs = sample_functions(
            sampler, static_cast<int>(m) + 1,
            derive_seed(cfg.base_seed, streams::kFunctions + 8 * hi_idx + 2));
        std::vector<WeightFunction> cal_funcs(funcs.begin(), funcs.end() - 1);
        const PairedCalibration pc =
            pair_calibration(cal, cal_funcs, funcs.back(), 2, train_grouped, 2,
                             derive_seed(cfg.base_seed, streams::kPairShuffle));

        // data-driven normalizers of the test-centered kernels
        std::vector<WeightFunction> test_kernels;
        test_kernels.reserve(n_test);
        for (std::size_t i = 0; i < n_test; ++i) {
            if (cfg.kernel == WeightFunction::Kind::GaussianKernel)
                test_kernels.push_back(gaussian_kernel(test.features.row(static_cast<Eigen::Index>(i)), h));
            else
                test_kernels.push_back(ball_indicator(test.features.row(static_cast<Eigen::Index>(i)), h));
        }
        const std::vector<double> test_gammas = parallel::gamma_batch(test_kernels, train_grouped, 2);

        double gamma_min = 0.0;
        for (const auto& ms : cfg.methods)
            if (ms.variant == Variant::L2Conservative && gamma_min == 0.0)
                gamma_min = gamma_min_estimate(sampler, train_grouped, 2, ms.gamma_min_draws,
                                               derive_seed(cfg.base_seed, streams::kGammaMin + hi_idx));

        for (std::size_t a = 0; a < n_alpha; ++a) {
            const double alpha = cfg.alphas[a];
            const ScoreModel& model = models[a];
            Eigen::VectorXd scores(cal.size());
            for (Eigen::Index i = 0; i < cal.size(); ++i)
                scores(i) = model.score(cal.features.row(i), cal.outcomes(i));

            for (std::size_t mi = 0; mi < n_methods; ++mi) {
                const MethodSpec& ms = cfg.methods[mi];
                CalibrationResult res;
                switch (ms.variant) {
                    case Variant::L2: res = calibrate_l2(pc, scores, alpha); break;
                    case Variant::L2Alt: res = calibrate_l2_alt(pc, scores, alpha); break;
                    case Variant::L2Conservative:
                        res = calibrate_l2_conservative(pc, scores, alpha, gamma_min);
                        break;
                    case Variant::L2Grouped: res = calibrate_l2_grouped(pc, scores, alpha); break;
                    case Variant::Lk: res = calibrate_lk(pc, scores, alpha); break;
                    case Variant::SplitConformal:
                        res = calibrate_split_conformal(scores, alpha);
                        break;
                }
                const PredictionRule rule{&model, res.threshold};

                std::vector<bool> covered(n_test);
                for (std::size_t i = 0; i < n_test; ++i) {
                    const auto idx = static_cast<Eigen::Index>(i);
                    covered[i] = rule.contains(test.features.row(idx), test.outcomes(idx));
                }

#pragma omp parallel for schedule(static)
                for (Eigen::Index i = 0; i < test.size(); ++i) {
                    const auto ui = static_cast<std::size_t>(i);
                    RealDataRecord rec;
                    rec.test_index = static_cast<int>(i);
                    rec.variant = ms.variant;
                    rec.alpha = alpha;
                    rec.bandwidth = h;
                    rec.threshold = res.threshold;
                    rec.gamma_center = test_gammas[ui];
                    rec.f_weighted = empirical_f_miscoverage(test, test_kernels[ui],
                                                             test_gammas[ui], rule);
                    const auto local = empirical_local_miscoverage(
                        test, test.features.row(i), cfg.csv.local_radius, rule);
                    rec.local_defined = local.has_value();
                    if (local) {
                        rec.local = local->value;
                        rec.neighbor_count = static_cast<int>(local->neighbor_count);
                    }
                    rec.width = width_at(rule, test.features.row(i));
                    rec.covered = covered[ui];
                    const std::size_t slot =
                        ((hi_idx * n_alpha + a) * n_methods + mi) * n_test + ui;
                    records[slot] = rec;
                }
            }
        }
    }

    Report report;
    report.config = cfg;
    report.provenance = base_provenance(cfg);
    report.provenance["function_split"] =
        "pool of " + std::to_string(funcs_split.size()) + " rows: " + std::to_string(m) +
        " calibration functions + 1 extra, drawn without replacement";
    {
        nlohmann::json sc;
        sc["mean"] = std::vector<double>(scaling.mean.data(), scaling.mean.data() + scaling.mean.size());
        sc["sd"] = std::vector<double>(scaling.sd.data(), scaling.sd.data() + scaling.sd.size());
        sc["constant_columns"] = scaling.constant_column;
        report.provenance["feature_scaling"] = sc;
    }
    report.real_records = std::move(records);
    report.aggregates = compute_real_data_aggregates(report.real_records, cfg.tail_eps);
    return report;
}

}  // namespace lkconf
