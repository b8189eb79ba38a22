#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <variant>

#include "lkconf/dataset.hpp"

namespace lkconf {

struct UniformBox {
    Eigen::VectorXd lo, hi;
};

struct TruncatedNormalLaw {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
    Eigen::VectorXd lo, hi;
};

using FeatureLaw = std::variant<UniformBox, TruncatedNormalLaw>;

Eigen::MatrixXd sample_feature_law(const FeatureLaw& law, Eigen::Index n, std::uint64_t seed);

// Known conditional law of Y given X: Y | X=x ~ N(mean_fn(x), sd_fn(x)^2),
// with the marginal feature law attached.
struct DgpOracle {
    std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)> mean_fn;
    std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)> sd_fn;
    FeatureLaw feature_law;
};

// 1-D benchmark settings: X ~ Unif([0,10]), E[Y|X] = 0.5 X + 0.1 X^2,
// with sd 3 (homoscedastic) or 1{x<=8} + 5*1{x>8} (heteroscedastic).
DgpOracle setting1_oracle();
DgpOracle setting2_oracle();

LabeledDataset gen_setting1(Eigen::Index n, std::uint64_t seed);
LabeledDataset gen_setting2(Eigen::Index n, std::uint64_t seed);

// Multivariate study: X ~ TN(mu, Sigma; [0,5]^10) with mu = 2*1, Sigma =
// 1 1^T + 2 I; Y | X ~ N(b1'x + (b2'x)^2 + log|b3'x|, (1 + exp(b4'x))^2).
struct BetaParams {
    std::array<Eigen::VectorXd, 4> beta;
};

// Frozen coefficient vectors used by default; echoed in every report.
const BetaParams& default_betas();

inline constexpr int kMultivariateDim = 10;
TruncatedNormalLaw multivariate_feature_law();
UniformBox multivariate_box();

DgpOracle multivariate_oracle(const BetaParams& betas = default_betas());

// Rows with |b3'x| < 1e-12 are redrawn so the log term stays finite.
LabeledDataset gen_multivariate(Eigen::Index n, std::uint64_t seed,
                                const BetaParams& betas = default_betas());

// Rejection sampling from N(mu, sigma) conditioned on the axis-aligned box
// [lo, hi]. Throws TruncationError when the observed acceptance rate over a
// probe window falls below 1e-6, and InvalidArgument for an empty-interior box.
Eigen::MatrixXd sample_truncated_normal(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                                        const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                        Eigen::Index n, std::uint64_t seed);

}  // namespace lkconf
