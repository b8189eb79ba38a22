#include "lkconf/weight_functions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lkconf/errors.hpp"
#include "lkconf/kernels.hpp"
#include "lkconf/rng.hpp"

namespace lkconf {

WeightFunction gaussian_kernel(Eigen::VectorXd center, double h) {
    if (!(h > 0.0)) throw InvalidArgument("gaussian kernel bandwidth must be positive");
    return {WeightFunction::Kind::GaussianKernel, std::move(center), h, 1.0};
}

WeightFunction ball_indicator(Eigen::VectorXd center, double r) {
    if (!(r > 0.0)) throw InvalidArgument("ball indicator radius must be positive");
    return {WeightFunction::Kind::BallIndicator, std::move(center), r, 1.0};
}

NormalizedFunction normalize(const WeightFunction& f, const Eigen::MatrixXd& train_features,
                             int k) {
    if (k < 2) throw InvalidArgument("normalizer order k must be >= 2");
    if (train_features.rows() < k)
        throw InvalidArgument("need at least k = " + std::to_string(k) +
                              " training rows to normalize, got " +
                              std::to_string(train_features.rows()));
    const double gamma_pow = serial::gamma_pow(f, train_features, k);
    return {f, std::pow(gamma_pow, 1.0 / static_cast<double>(k))};
}

std::vector<WeightFunction> sample_functions(const FunctionSampler& sampler, int count,
                                             std::uint64_t seed) {
    if (count < 1) throw InvalidArgument("function count must be positive");
    if (sampler.components.empty()) throw InvalidArgument("sampler has no kernel components");
    if (!sampler.center_law && !sampler.pool)
        throw InvalidArgument("sampler needs a center law or a pool");

    auto engine = make_engine(seed);

    // component choice (degenerate for a single component)
    std::vector<double> weights;
    for (const auto& c : sampler.components) {
        if (!(c.mix_weight > 0.0)) throw InvalidArgument("mixture weights must be positive");
        weights.push_back(c.mix_weight);
    }
    std::discrete_distribution<int> pick_component(weights.begin(), weights.end());

    // centers
    Eigen::MatrixXd centers;
    if (sampler.pool) {
        const Eigen::MatrixXd& pool = *sampler.pool;
        if (pool.rows() == 0) throw InvalidArgument("center pool is empty");
        centers.resize(count, pool.cols());
        if (sampler.with_replacement) {
            std::uniform_int_distribution<Eigen::Index> pick_row(0, pool.rows() - 1);
            for (int i = 0; i < count; ++i) centers.row(i) = pool.row(pick_row(engine));
        } else {
            if (pool.rows() < count)
                throw InvalidArgument("pool has " + std::to_string(pool.rows()) +
                                      " rows, cannot draw " + std::to_string(count) +
                                      " without replacement");
            std::vector<Eigen::Index> idx(static_cast<std::size_t>(pool.rows()));
            std::iota(idx.begin(), idx.end(), Eigen::Index{0});
            std::shuffle(idx.begin(), idx.end(), engine);
            for (int i = 0; i < count; ++i) centers.row(i) = pool.row(idx[static_cast<std::size_t>(i)]);
        }
    } else {
        centers = sample_feature_law(*sampler.center_law, count,
                                     derive_seed(seed, streams::kPool));
    }

    std::vector<WeightFunction> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const auto& comp = sampler.components[static_cast<std::size_t>(
            sampler.components.size() == 1 ? 0 : pick_component(engine))];
        if (comp.kind == WeightFunction::Kind::GaussianKernel)
            out.push_back(gaussian_kernel(centers.row(i), comp.width));
        else
            out.push_back(ball_indicator(centers.row(i), comp.width));
    }
    return out;
}

MeanEstimate expected_weight_oracle(const WeightFunction& f, const FeatureLaw& law,
                                    Eigen::Index n_mc, std::uint64_t seed) {
    if (n_mc < 1) throw InvalidArgument("n_mc must be positive");
    const Eigen::MatrixXd draws = sample_feature_law(law, n_mc, seed);
    Eigen::VectorXd values(n_mc);
    serial::weight_values(f, draws, values);
    const double mean = values.mean();
    const double var = (values.array() - mean).square().sum() / static_cast<double>(n_mc);
    return {mean, std::sqrt(var / static_cast<double>(n_mc))};
}

}  // namespace lkconf
