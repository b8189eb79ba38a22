#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "lkconf/errors.hpp"
#include "lkconf/evaluation.hpp"
#include "lkconf/math_util.hpp"

using namespace lkconf;

namespace {

Eigen::VectorXd vec1(double x) {
    Eigen::VectorXd v(1);
    v << x;
    return v;
}

LabeledDataset make_1d(std::initializer_list<std::pair<double, double>> rows) {
    LabeledDataset d;
    d.features.resize(static_cast<Eigen::Index>(rows.size()), 1);
    d.outcomes.resize(static_cast<Eigen::Index>(rows.size()));
    Eigen::Index i = 0;
    for (const auto& [x, y] : rows) {
        d.features(i, 0) = x;
        d.outcomes(i) = y;
        ++i;
    }
    return d;
}

// inverse standard normal CDF by bisection; test-only oracle
double normal_quantile(double p) {
    double lo = -10.0, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (normal_cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// identity-fit linear model: mu_hat(x) = x on a collinear training set
ScoreModel identity_model() {
    return fit_linear_residual(make_1d({{0, 0}, {1, 1}, {2, 2}}));
}

}  // namespace

TEST_CASE("conditional_miscoverage: hand values") {
    const auto model = identity_model();
    const auto oracle = [] {
        DgpOracle o;
        o.mean_fn = [](const Eigen::Ref<const Eigen::VectorXd>& x) { return x(0); };
        o.sd_fn = [](const Eigen::Ref<const Eigen::VectorXd>&) { return 3.0; };
        o.feature_law = UniformBox{vec1(0.0), vec1(10.0)};
        return o;
    }();

    // infinite threshold covers everything
    CHECK(conditional_miscoverage(oracle, {&model, kInf}, vec1(4.0)) == 0.0);
    // zero threshold with a residual score misses a continuous outcome surely
    CHECK(conditional_miscoverage(oracle, {&model, 0.0}, vec1(4.0)) == 1.0);
    // t = 3 * 1.6449, sd = 3, centered: miss = 2 Phi(-1.6449) ~ 0.100
    const double a = conditional_miscoverage(oracle, {&model, 3.0 * 1.6449}, vec1(4.0));
    CHECK(std::abs(a - 0.100) < 1e-3);
}

TEST_CASE("conditional_miscoverage agrees with empirical draws at fixed x") {
    const auto model = identity_model();
    DgpOracle oracle;
    oracle.mean_fn = [](const Eigen::Ref<const Eigen::VectorXd>& x) { return 0.5 * x(0); };
    oracle.sd_fn = [](const Eigen::Ref<const Eigen::VectorXd>& x) { return 1.0 + 0.1 * x(0); };
    oracle.feature_law = UniformBox{vec1(0.0), vec1(10.0)};

    const Eigen::VectorXd x = vec1(3.0);
    const PredictionRule rule{&model, 1.7};
    const double analytic = conditional_miscoverage(oracle, rule, x);

    std::mt19937_64 engine(77);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int n = 1000000;
    int missed = 0;
    for (int i = 0; i < n; ++i) {
        const double y = oracle.mean_fn(x) + oracle.sd_fn(x) * gauss(engine);
        if (!rule.contains(x, y)) ++missed;
    }
    const double emp = static_cast<double>(missed) / n;
    const double se = std::sqrt(analytic * (1 - analytic) / n);
    CHECK(std::abs(emp - analytic) < 3.0 * se);
}

TEST_CASE("f_weighted_miscoverage: constant weight equals the marginal, constant alpha is exact") {
    const auto model = identity_model();
    DgpOracle oracle;
    // mu_hat == mu and constant sd: alpha_D is the same at every x
    oracle.mean_fn = [](const Eigen::Ref<const Eigen::VectorXd>& x) { return x(0); };
    oracle.sd_fn = [](const Eigen::Ref<const Eigen::VectorXd>&) { return 2.0; };
    oracle.feature_law = UniformBox{vec1(0.0), vec1(10.0)};

    const PredictionRule rule{&model, 3.0};
    const double expected = 2.0 * normal_cdf(-1.5);  // alpha_D(x) for every x

    const auto flat = ball_indicator(vec1(5.0), 1e9);
    const auto exact =
        f_weighted_miscoverage(oracle, rule, flat, Normalization::exact(), 20000, 5);
    CHECK(exact.defined);
    CHECK(exact.value == doctest::Approx(expected).epsilon(1e-12));

    // a non-constant weight cannot move a constant alpha_D either
    const auto kernel = gaussian_kernel(vec1(2.0), 1.0);
    const auto weighted =
        f_weighted_miscoverage(oracle, rule, kernel, Normalization::exact(), 20000, 6);
    CHECK(weighted.value == doctest::Approx(expected).epsilon(1e-12));

    // zero weight mass: flagged undefined
    const auto far = ball_indicator(vec1(500.0), 0.5);
    const auto undef =
        f_weighted_miscoverage(oracle, rule, far, Normalization::exact(), 1000, 7);
    CHECK_FALSE(undef.defined);

    // data-driven mode divides by the supplied gamma instead of the mean
    const auto dd = f_weighted_miscoverage(oracle, rule, flat, Normalization::data_driven(2.0),
                                           20000, 5);
    CHECK(dd.defined);
    CHECK(dd.value == doctest::Approx(expected / 2.0).epsilon(1e-12));
}

TEST_CASE("weighted miscoverage arithmetic on a three-atom hand case") {
    // f = (1, 1/2, 0), alpha_D = (0.1, 0.3, 0.9): exact value
    // (1*0.1 + 0.5*0.3 + 0) / (1 + 0.5 + 0) = 0.25 / 1.5
    EvalBatch batch;
    batch.mu_true = Eigen::VectorXd::Zero(3);
    batch.sd_true = Eigen::VectorXd::Ones(3);
    batch.band_lo.resize(3);
    batch.band_hi.resize(3);
    batch.f_values.resize(3);
    const double alphas[3] = {0.1, 0.3, 0.9};
    const double weights[3] = {1.0, 0.5, 0.0};
    for (int i = 0; i < 3; ++i) {
        const double q = -normal_quantile(alphas[i] / 2.0);  // symmetric band, miss = alpha
        batch.band_lo(i) = -q;
        batch.band_hi(i) = q;
        batch.f_values(i) = weights[i];
    }
    const auto sums = serial::miscoverage_sums(batch, 0.0);
    CHECK(sums.sum_f == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(sums.sum_f_alpha / sums.sum_f == doctest::Approx(0.25 / 1.5).epsilon(1e-9));
}

TEST_CASE("lk_norm: hand values, ordering, empty input") {
    const std::vector<double> a{0.2, 0.2};
    CHECK(lk_norm(a, 2) == doctest::Approx(0.2).epsilon(1e-12));
    const std::vector<double> b{0.0, 0.4};
    CHECK(lk_norm(b, 2) == doctest::Approx(std::sqrt(0.08)).epsilon(1e-12));
    const std::vector<double> c{0.1, 0.3};
    CHECK(lk_norm(c, 1) == doctest::Approx(0.2).epsilon(1e-12));

    CHECK_THROWS_AS(lk_norm(std::vector<double>{}, 2), InvalidArgument);

    // L^p ordering with equality only for constant lists
    std::mt19937_64 engine(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> v;
        const int len = 1 + static_cast<int>(engine() % 20);
        for (int i = 0; i < len; ++i) v.push_back(u(engine));
        const double l1 = lk_norm(v, 1), l2 = lk_norm(v, 2), l4 = lk_norm(v, 4);
        CHECK(l1 <= l2 + 1e-12);
        CHECK(l2 <= l4 + 1e-12);
    }
    const std::vector<double> constant(7, 0.37);
    CHECK(std::abs(lk_norm(constant, 1) - lk_norm(constant, 4)) < 1e-12);
}

TEST_CASE("tail_bound_check: paper values and the trivial regime") {
    const std::vector<double> vals{0.05, 0.15, 0.25, 0.35};
    const auto b1 = tail_bound_check(vals, 0.1, 0.2, 2);
    CHECK(b1.bound == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(b1.empirical_frequency == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_FALSE(b1.trivial);

    const auto b2 = tail_bound_check(vals, 0.1, 0.2, 3);
    CHECK(b2.bound == doctest::Approx(0.125).epsilon(1e-12));

    const auto b3 = tail_bound_check(vals, 0.2, 0.2, 2);
    CHECK(b3.bound == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(b3.trivial);

    const auto b4 = tail_bound_check(vals, 0.3, 0.2, 2);
    CHECK(b4.trivial);
    CHECK(b4.bound > 1.0);
}

TEST_CASE("empirical_f_miscoverage: hand cases") {
    const auto model = identity_model();
    const auto test = make_1d({{1, 1}, {2, 2.4}, {3, 4.5}});

    // threshold 10 covers every row
    CHECK(empirical_f_miscoverage(test, ball_indicator(vec1(0.0), 1e9), 1.0, {&model, 10.0}) ==
          0.0);

    // threshold 0 covers only exact fits; f == gamma == 1 everywhere
    const PredictionRule none{&model, 1e-9};
    CHECK(empirical_f_miscoverage(test, ball_indicator(vec1(0.0), 1e9), 1.0, none) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    // mixed case: rule covers rows 1 and 2 (|residual| <= 0.5), not row 3;
    // kernel weights w3 = f(3), estimate = f(3)/gamma / 3
    const auto f = gaussian_kernel(vec1(3.0), 1.0);
    const double gamma = 0.8;
    const PredictionRule half{&model, 0.5};
    const double expect = f(vec1(3.0)) / gamma / 3.0;
    CHECK(empirical_f_miscoverage(test, f, gamma, half) ==
          doctest::Approx(expect).epsilon(1e-12));

    CHECK_THROWS_AS(empirical_f_miscoverage(test, f, 0.0, half), InvalidArgument);
}

TEST_CASE("empirical_local_miscoverage: neighborhood logic") {
    const auto model = identity_model();
    const auto test = make_1d({{0, 0}, {0.5, 0.5}, {1, 1.2}, {1.5, 9.0}, {8, 8}});

    // empty neighborhood
    CHECK_FALSE(empirical_local_miscoverage(test, vec1(100.0), 1.0, {&model, 1.0}).has_value());

    // everything covered with a huge threshold
    const auto all = empirical_local_miscoverage(test, vec1(0.5), 1.0, {&model, 100.0});
    REQUIRE(all.has_value());
    CHECK(all->value == 0.0);

    // radius 1 around 0.75: rows at 0, 0.5, 1, 1.5; only (1.5, 9.0) uncovered at t=0.5
    const auto some = empirical_local_miscoverage(test, vec1(0.75), 1.0, {&model, 0.5});
    REQUIRE(some.has_value());
    CHECK(some->neighbor_count == 4);
    CHECK(some->value == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("width_at: symmetric residual width, infinite threshold, quantile endpoints") {
    const auto model = identity_model();
    CHECK(width_at({&model, 1.5}, vec1(3.0)) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(std::isinf(width_at({&model, kInf}, vec1(3.0))));

    LabeledDataset train;
    train.features = Eigen::MatrixXd::Zero(10, 1);
    train.outcomes = Eigen::VectorXd::LinSpaced(10, 1, 10);
    const auto knn = fit_knn_quantile(train, 0.2, 10);
    const PredictionRule rule{&knn, 0.7};
    const auto iv = rule.interval_at(vec1(0.0));
    CHECK(width_at(rule, vec1(0.0)) == doctest::Approx(iv.hi - iv.lo).epsilon(1e-12));
    CHECK(width_at(rule, vec1(0.0)) == doctest::Approx((9.0 - 1.0) + 2 * 0.7).epsilon(1e-12));
}
