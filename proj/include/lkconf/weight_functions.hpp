#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "lkconf/dgp.hpp"

namespace lkconf {

// Bounded nonnegative weight on feature space: a Gaussian kernel or a closed
// ball indicator, peaking at `amplitude` (the bound b) at the center. The
// built-in constructors produce amplitude 1.
struct WeightFunction {
    enum class Kind { GaussianKernel, BallIndicator };

    Kind kind = Kind::GaussianKernel;
    Eigen::VectorXd center;
    double width = 1.0;      // bandwidth h (gaussian) or radius r (ball)
    double amplitude = 1.0;  // sup-norm bound b

    double operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
        const double d2 = (x - center).squaredNorm();
        if (kind == Kind::GaussianKernel) return amplitude * std::exp(-0.5 * d2 / (width * width));
        return d2 <= width * width ? amplitude : 0.0;
    }
    double bound() const { return amplitude; }
};

WeightFunction gaussian_kernel(Eigen::VectorXd center, double h);
WeightFunction ball_indicator(Eigen::VectorXd center, double r);

// f paired with its data-driven normalizer gamma(f) > 0.
struct NormalizedFunction {
    WeightFunction f;
    double gamma = 1.0;

    double operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const { return f(x) / gamma; }
};

// gamma(f) = ((sum_l prod_j f(row((l-1)k+j)) + b^k) / (m_train + 1))^(1/k)
// over consecutive k-tuples of `train_features` rows; leftover rows unused.
// Callers pass features already shuffled once per experiment.
NormalizedFunction normalize(const WeightFunction& f, const Eigen::MatrixXd& train_features, int k);

// Specification of the function-sampling distribution P_f: a (possibly
// mixture) kernel family plus a center source. Centers come either from an
// explicit feature-space law or from rows of an unlabeled pool.
struct KernelComponent {
    WeightFunction::Kind kind = WeightFunction::Kind::GaussianKernel;
    double width = 1.0;
    double mix_weight = 1.0;
};

struct FunctionSampler {
    std::vector<KernelComponent> components;
    std::optional<FeatureLaw> center_law;
    std::optional<Eigen::MatrixXd> pool;
    bool with_replacement = true;
};

std::vector<WeightFunction> sample_functions(const FunctionSampler& sampler, int count,
                                             std::uint64_t seed);

// Monte Carlo estimate of E[f(X)] under the given feature law.
struct MeanEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
};

MeanEstimate expected_weight_oracle(const WeightFunction& f, const FeatureLaw& law, Eigen::Index n_mc,
                                    std::uint64_t seed);

}  // namespace lkconf
