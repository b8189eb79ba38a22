#include "lkconf/kernels.hpp"

#include <cmath>

#include "lkconf/math_util.hpp"

namespace lkconf {

namespace {

constexpr Eigen::Index kChunk = 4096;

inline double draw_miss(const EvalBatch& b, Eigen::Index j, double t) {
    if (t == kInf) return 0.0;
    return gaussian_miss(b.band_lo(j) - t, b.band_hi(j) + t, b.mu_true(j), b.sd_true(j));
}

inline MiscoverageSums chunk_sums(const EvalBatch& b, double t, Eigen::Index begin,
                                  Eigen::Index end) {
    MiscoverageSums s;
    for (Eigen::Index j = begin; j < end; ++j) {
        const double a = draw_miss(b, j, t);
        const double f = b.f_values(j);
        s.sum_f_alpha += f * a;
        s.sum_f += f;
        s.sum_alpha += a;
    }
    return s;
}

}  // namespace

namespace serial {

void weight_values(const WeightFunction& f, const Eigen::MatrixXd& X, Eigen::VectorXd& out) {
    out.resize(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = f(X.row(i));
}

double gamma_pow(const WeightFunction& f, const Eigen::MatrixXd& train_features, int k) {
    const Eigen::Index m_train = train_features.rows() / k;
    double sum = 0.0;
    for (Eigen::Index l = 0; l < m_train; ++l) {
        double prod = 1.0;
        for (int j = 0; j < k; ++j) prod *= f(train_features.row(l * k + j));
        sum += prod;
    }
    const double b = f.bound();
    return (sum + std::pow(b, k)) / static_cast<double>(m_train + 1);
}

std::vector<double> gamma_batch(const std::vector<WeightFunction>& fs,
                                const Eigen::MatrixXd& train_features, int k) {
    std::vector<double> out(fs.size());
    for (std::size_t i = 0; i < fs.size(); ++i)
        out[i] = std::pow(gamma_pow(fs[i], train_features, k), 1.0 / static_cast<double>(k));
    return out;
}

MiscoverageSums miscoverage_sums(const EvalBatch& batch, double threshold) {
    return chunk_sums(batch, threshold, 0, batch.size());
}

void score_bands(const ScoreModel& model, const Eigen::MatrixXd& X, Eigen::VectorXd& lo,
                 Eigen::VectorXd& hi) {
    lo.resize(X.rows());
    hi.resize(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) model.band(X.row(i), lo(i), hi(i));
}

}  // namespace serial

namespace parallel {

void weight_values(const WeightFunction& f, const Eigen::MatrixXd& X, Eigen::VectorXd& out) {
    const Eigen::Index n = X.rows();
    out.resize(n);
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) out(i) = f(X.row(i));
}

std::vector<double> gamma_batch(const std::vector<WeightFunction>& fs,
                                const Eigen::MatrixXd& train_features, int k) {
    std::vector<double> out(fs.size());
    const auto count = static_cast<Eigen::Index>(fs.size());
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < count; ++i)
        out[static_cast<std::size_t>(i)] = std::pow(
            serial::gamma_pow(fs[static_cast<std::size_t>(i)], train_features, k),
            1.0 / static_cast<double>(k));
    return out;
}

MiscoverageSums miscoverage_sums(const EvalBatch& batch, double threshold) {
    const Eigen::Index n = batch.size();
    const Eigen::Index n_chunks = (n + kChunk - 1) / kChunk;
    std::vector<MiscoverageSums> partial(static_cast<std::size_t>(n_chunks));
#pragma omp parallel for schedule(static)
    for (Eigen::Index c = 0; c < n_chunks; ++c) {
        const Eigen::Index begin = c * kChunk;
        const Eigen::Index end = std::min(begin + kChunk, n);
        partial[static_cast<std::size_t>(c)] = chunk_sums(batch, threshold, begin, end);
    }
    // combine in chunk order: result is independent of the thread count
    MiscoverageSums total;
    for (const auto& s : partial) {
        total.sum_f_alpha += s.sum_f_alpha;
        total.sum_f += s.sum_f;
        total.sum_alpha += s.sum_alpha;
    }
    return total;
}

void score_bands(const ScoreModel& model, const Eigen::MatrixXd& X, Eigen::VectorXd& lo,
                 Eigen::VectorXd& hi) {
    const Eigen::Index n = X.rows();
    lo.resize(n);
    hi.resize(n);
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) model.band(X.row(i), lo(i), hi(i));
}

}  // namespace parallel

}  // namespace lkconf
