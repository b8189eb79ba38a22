#include "lkconf/dgp.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <random>

#include "lkconf/errors.hpp"
#include "lkconf/rng.hpp"

namespace lkconf {

namespace {

Eigen::MatrixXd sample_uniform_box(const UniformBox& box, Eigen::Index n, std::mt19937_64& engine) {
    const Eigen::Index p = box.lo.size();
    Eigen::MatrixXd out(n, p);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            out(i, j) = box.lo(j) + (box.hi(j) - box.lo(j)) * unit(engine);
    return out;
}

}  // namespace

Eigen::MatrixXd sample_truncated_normal(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                                        const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                        Eigen::Index n, std::uint64_t seed) {
    const Eigen::Index p = mu.size();
    if (sigma.rows() != p || sigma.cols() != p)
        throw InvalidArgument("covariance shape does not match mean");
    for (Eigen::Index j = 0; j < p; ++j)
        if (!(lo(j) < hi(j)))
            throw InvalidArgument("truncation box has empty interior in coordinate " +
                                  std::to_string(j));

    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw InvalidArgument("covariance is not symmetric positive definite");
    const Eigen::MatrixXd L = llt.matrixL();

    auto engine = make_engine(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Eigen::MatrixXd out(n, p);
    Eigen::VectorXd z(p);
    // Acceptance-rate guard: a window this long with no accepted draw means
    // the rate is below ~1e-6 and the box mass is effectively zero.
    constexpr long kProbeWindow = 1L << 20;
    long rejected_in_window = 0;
    for (Eigen::Index got = 0; got < n;) {
        for (Eigen::Index j = 0; j < p; ++j) z(j) = gauss(engine);
        Eigen::VectorXd x = mu + L * z;
        bool inside = true;
        for (Eigen::Index j = 0; j < p; ++j)
            if (x(j) < lo(j) || x(j) > hi(j)) {
                inside = false;
                break;
            }
        if (inside) {
            out.row(got++) = x.transpose();
            rejected_in_window = 0;
        } else if (++rejected_in_window >= kProbeWindow) {
            throw TruncationError("acceptance rate below 1e-6 over a probe window of " +
                                  std::to_string(kProbeWindow) + " draws; truncation box mass too small");
        }
    }
    return out;
}

Eigen::MatrixXd sample_feature_law(const FeatureLaw& law, Eigen::Index n, std::uint64_t seed) {
    if (const auto* box = std::get_if<UniformBox>(&law)) {
        auto engine = make_engine(seed);
        return sample_uniform_box(*box, n, engine);
    }
    const auto& tn = std::get<TruncatedNormalLaw>(law);
    return sample_truncated_normal(tn.mu, tn.sigma, tn.lo, tn.hi, n, seed);
}

namespace {

UniformBox unit_interval_0_10() {
    UniformBox box;
    box.lo = Eigen::VectorXd::Constant(1, 0.0);
    box.hi = Eigen::VectorXd::Constant(1, 10.0);
    return box;
}

double curve_mean(double x) { return 0.5 * x + 0.1 * x * x; }

LabeledDataset gen_1d(Eigen::Index n, std::uint64_t seed, double (*sd_at)(double)) {
    if (n < 0) throw InvalidArgument("sample size must be nonnegative");
    auto engine = make_engine(seed);
    std::uniform_real_distribution<double> ux(0.0, 10.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    LabeledDataset data;
    data.features.resize(n, 1);
    data.outcomes.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) data.features(i, 0) = ux(engine);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = data.features(i, 0);
        data.outcomes(i) = curve_mean(x) + sd_at(x) * gauss(engine);
    }
    return data;
}

double sd1(double) { return 3.0; }
double sd2(double x) { return x <= 8.0 ? 1.0 : 5.0; }

}  // namespace

DgpOracle setting1_oracle() {
    return DgpOracle{
        [](const Eigen::Ref<const Eigen::VectorXd>& x) { return curve_mean(x(0)); },
        [](const Eigen::Ref<const Eigen::VectorXd>&) { return 3.0; },
        unit_interval_0_10(),
    };
}

DgpOracle setting2_oracle() {
    return DgpOracle{
        [](const Eigen::Ref<const Eigen::VectorXd>& x) { return curve_mean(x(0)); },
        [](const Eigen::Ref<const Eigen::VectorXd>& x) { return sd2(x(0)); },
        unit_interval_0_10(),
    };
}

LabeledDataset gen_setting1(Eigen::Index n, std::uint64_t seed) { return gen_1d(n, seed, sd1); }
LabeledDataset gen_setting2(Eigen::Index n, std::uint64_t seed) { return gen_1d(n, seed, sd2); }

const BetaParams& default_betas() {
    // Coefficient vectors frozen once for the default configuration. They are
    // scaled standard-normal draws (norms 1, 0.3, 1, 0.35) so the conditional
    // sd stays within roughly [1.1, 2.6] over the feature box.
    static const BetaParams params = [] {
        BetaParams p;
        auto fill = [](std::initializer_list<double> v) {
            Eigen::VectorXd b(kMultivariateDim);
            Eigen::Index i = 0;
            for (double x : v) b(i++) = x;
            return b;
        };
        p.beta[0] = fill({0.3901085200203986, -0.4884988790526893, 0.07991689656360786,
                          -0.1085254963992908, -0.08652099124517966, -0.04121000647809194,
                          -0.386107313634525, -0.04433237732918025, -0.1653798963179062,
                          0.6351699143212539});
        p.beta[1] = fill({0.03778767101688169, -0.05901632632910244, -0.047076291487492,
                          -0.1118043057996191, -0.1765901057294826, -0.06540449209852797,
                          0.08065843022594896, -0.03992435634784678, 0.1602905959020039,
                          -0.03343890505155415});
        p.beta[2] = fill({0.008498089491215263, 0.5414987403722711, 0.1909496522017684,
                          -0.1769808731200782, -0.06404822030829295, 0.1893451480843599,
                          0.6778584543945493, -0.09444759884035617, -0.08531824229476162,
                          0.3511089607330322});
        p.beta[3] = fill({-0.07960438777921196, -0.02619657062380984, 0.07925228290089174,
                          0.05211561796217922, 0.008218229365659788, 0.06017558641636388,
                          -0.2539698840467033, 0.09171368043090602, -0.08617640783371212,
                          -0.1498425981181765});
        return p;
    }();
    return params;
}

TruncatedNormalLaw multivariate_feature_law() {
    TruncatedNormalLaw law;
    law.mu = Eigen::VectorXd::Constant(kMultivariateDim, 2.0);
    law.sigma = Eigen::MatrixXd::Ones(kMultivariateDim, kMultivariateDim) +
                2.0 * Eigen::MatrixXd::Identity(kMultivariateDim, kMultivariateDim);
    law.lo = Eigen::VectorXd::Zero(kMultivariateDim);
    law.hi = Eigen::VectorXd::Constant(kMultivariateDim, 5.0);
    return law;
}

UniformBox multivariate_box() {
    UniformBox box;
    box.lo = Eigen::VectorXd::Zero(kMultivariateDim);
    box.hi = Eigen::VectorXd::Constant(kMultivariateDim, 5.0);
    return box;
}

DgpOracle multivariate_oracle(const BetaParams& betas) {
    const Eigen::VectorXd b1 = betas.beta[0], b2 = betas.beta[1], b3 = betas.beta[2],
                          b4 = betas.beta[3];
    return DgpOracle{
        [b1, b2, b3](const Eigen::Ref<const Eigen::VectorXd>& x) {
            const double q = b2.dot(x);
            return b1.dot(x) + q * q + std::log(std::abs(b3.dot(x)));
        },
        [b4](const Eigen::Ref<const Eigen::VectorXd>& x) { return 1.0 + std::exp(b4.dot(x)); },
        multivariate_feature_law(),
    };
}

LabeledDataset gen_multivariate(Eigen::Index n, std::uint64_t seed, const BetaParams& betas) {
    if (n < 0) throw InvalidArgument("sample size must be nonnegative");
    const auto law = multivariate_feature_law();

    Eigen::LLT<Eigen::MatrixXd> llt(law.sigma);
    const Eigen::MatrixXd L = llt.matrixL();
    auto engine = make_engine(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Eigen::Index p = kMultivariateDim;

    LabeledDataset data;
    data.features.resize(n, p);
    data.outcomes.resize(n);

    Eigen::VectorXd z(p);
    constexpr long kProbeWindow = 1L << 20;
    long rejected = 0;
    for (Eigen::Index i = 0; i < n;) {
        for (Eigen::Index j = 0; j < p; ++j) z(j) = gauss(engine);
        Eigen::VectorXd x = law.mu + L * z;
        bool ok = (x.array() >= law.lo.array()).all() && (x.array() <= law.hi.array()).all();
        // keep log|b3'x| finite: redraw the row on a near-zero projection
        ok = ok && std::abs(betas.beta[2].dot(x)) >= 1e-12;
        if (ok) {
            data.features.row(i++) = x.transpose();
            rejected = 0;
        } else if (++rejected >= kProbeWindow) {
            throw TruncationError("multivariate feature sampler stalled");
        }
    }
    const auto oracle = multivariate_oracle(betas);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd x = data.features.row(i);
        data.outcomes(i) = oracle.mean_fn(x) + oracle.sd_fn(x) * gauss(engine);
    }
    return data;
}

}  // namespace lkconf
