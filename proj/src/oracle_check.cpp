#include <cmath>
#include <random>
#include <sstream>

#include "lkconf/experiment.hpp"
#include "lkconf/math_util.hpp"
#include "lkconf/rng.hpp"

namespace lkconf {

namespace {

// Random tiny calibration problem: a handful of rows, mixed Gaussian/ball
// weights, scores with deliberate ties. Small enough that the linear scan is
// instant.
struct TinyInstance {
    LabeledDataset cal;
    Eigen::MatrixXd train;
    Eigen::VectorXd scores;
    double alpha;
};

TinyInstance make_instance(std::mt19937_64& engine) {
    std::uniform_int_distribution<int> n_dist(4, 12);
    std::uniform_int_distribution<int> d_dist(1, 2);
    std::uniform_int_distribution<int> train_dist(4, 12);
    std::uniform_real_distribution<double> coord(0.0, 10.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    TinyInstance inst;
    const int n = n_dist(engine);
    const int d = d_dist(engine);
    inst.cal.features.resize(n, d);
    inst.cal.outcomes = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) inst.cal.features(i, j) = coord(engine);

    const int nt = train_dist(engine);
    inst.train.resize(nt, d);
    for (int i = 0; i < nt; ++i)
        for (int j = 0; j < d; ++j) inst.train(i, j) = coord(engine);

    inst.scores.resize(n);
    const bool tied = unit(engine) < 0.5;
    std::uniform_int_distribution<int> lattice(0, 4);
    std::uniform_real_distribution<double> cont(0.0, 4.0);
    for (int i = 0; i < n; ++i)
        inst.scores(i) = tied ? 0.5 * lattice(engine) : cont(engine);

    inst.alpha = 0.05 + 0.9 * unit(engine);
    return inst;
}

std::vector<WeightFunction> make_functions(std::mt19937_64& engine, int count, int dim) {
    std::uniform_real_distribution<double> coord(0.0, 10.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<WeightFunction> fs;
    fs.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Eigen::VectorXd c(dim);
        for (int j = 0; j < dim; ++j) c(j) = coord(engine);
        if (unit(engine) < 0.5)
            fs.push_back(gaussian_kernel(c, 0.3 + 2.7 * unit(engine)));
        else
            fs.push_back(ball_indicator(c, 0.5 + 3.5 * unit(engine)));
    }
    return fs;
}

bool same_threshold(double a, double b) { return a == b || (std::isinf(a) && std::isinf(b)); }

}  // namespace

OracleCheckResult oracle_check(int count, std::uint64_t seed) {
    OracleCheckResult result;
    for (int i = 0; i < count; ++i) {
        auto engine = make_engine(derive_seed(seed, static_cast<std::uint64_t>(i)));
        const TinyInstance inst = make_instance(engine);
        const int n = static_cast<int>(inst.cal.size());
        const int d = static_cast<int>(inst.cal.dim());
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        auto check = [&](const std::string& name, double got, double want) {
            ++result.total;
            if (!same_threshold(got, want)) {
                ++result.failures;
                std::ostringstream os;
                os << "instance " << i << " " << name << ": got " << got << ", linear scan "
                   << want;
                result.failure_details.push_back(os.str());
            }
        };

        // pair layout shared by the l2 family
        {
            const int m = n / 2;
            auto fs = make_functions(engine, m + 1, d);
            std::vector<WeightFunction> cal_fs(fs.begin(), fs.end() - 1);
            const std::uint64_t pseed = engine();
            const auto pc =
                pair_calibration(inst.cal, cal_fs, fs.back(), 2, inst.train, 2, pseed);

            check("l2", calibrate_l2(pc, inst.scores, inst.alpha).threshold,
                  reference::linear_scan_threshold(pc, inst.scores, inst.alpha, Variant::L2));
            check("l2-alt", calibrate_l2_alt(pc, inst.scores, inst.alpha).threshold,
                  reference::linear_scan_threshold(pc, inst.scores, inst.alpha, Variant::L2Alt));
            const double gmin = pc.extra.gamma * (0.2 + 0.8 * unit(engine));
            check("l2-conservative",
                  calibrate_l2_conservative(pc, inst.scores, inst.alpha, gmin).threshold,
                  reference::linear_scan_threshold(pc, inst.scores, inst.alpha,
                                                   Variant::L2Conservative, gmin));
            check("l2-grouped(r=2)", calibrate_l2_grouped(pc, inst.scores, inst.alpha).threshold,
                  reference::linear_scan_threshold(pc, inst.scores, inst.alpha,
                                                   Variant::L2Grouped));
        }

        // grouped with r in 2..4
        {
            std::uniform_int_distribution<int> r_dist(2, std::min(4, n));
            const int r = r_dist(engine);
            const int m = n / r;
            auto fs = make_functions(engine, m + 1, d);
            std::vector<WeightFunction> cal_fs(fs.begin(), fs.end() - 1);
            const auto pc =
                pair_calibration(inst.cal, cal_fs, fs.back(), r, inst.train, 2, engine());
            check("l2-grouped(r=" + std::to_string(r) + ")",
                  calibrate_l2_grouped(pc, inst.scores, inst.alpha).threshold,
                  reference::linear_scan_threshold(pc, inst.scores, inst.alpha,
                                                   Variant::L2Grouped));
        }

        // order-k rule with k in 2..4
        {
            std::uniform_int_distribution<int> k_dist(2, std::min(4, std::min(n, static_cast<int>(inst.train.rows()))));
            const int k = k_dist(engine);
            const int m = n / k;
            auto fs = make_functions(engine, m + 1, d);
            std::vector<WeightFunction> cal_fs(fs.begin(), fs.end() - 1);
            const auto pc =
                pair_calibration(inst.cal, cal_fs, fs.back(), k, inst.train, k, engine());
            check("lk(k=" + std::to_string(k) + ")",
                  calibrate_lk(pc, inst.scores, inst.alpha).threshold,
                  reference::linear_scan_threshold(pc, inst.scores, inst.alpha, Variant::Lk));
        }

        check("split-conformal", calibrate_split_conformal(inst.scores, inst.alpha).threshold,
              reference::linear_scan_split(inst.scores, inst.alpha));
    }
    return result;
}

}  // namespace lkconf
