#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lkconf/calibration.hpp"
#include "lkconf/dataset.hpp"
#include "lkconf/dgp.hpp"
#include "lkconf/evaluation.hpp"
#include "lkconf/scores.hpp"

namespace lkconf {

enum class Scenario { Setting1, Setting2, Multivariate, Csv };
enum class ScoreKind { LinearResidual, KnnQuantile };
enum class SamplerSource { FeatureLaw, UniformBox, Pool };
enum class OutputFormat { Csv, Json };

std::string to_string(Scenario s);
std::string to_string(ScoreKind s);
std::string to_string(SamplerSource s);
std::string to_string(OutputFormat f);

struct MethodSpec {
    Variant variant = Variant::L2;
    int r = 2;                    // group size for l2-grouped
    int k = 2;                    // order for lk
    int gamma_min_draws = 10000;  // sampler draws for l2-conservative
};

struct SizesSpec {
    Eigen::Index n_train = 500;
    Eigen::Index n_cal = 2000;
    Eigen::Index n_test = 500;
    Eigen::Index pool = 1001;
};

struct CsvSpec {
    std::string path;
    std::vector<Eigen::Index> splits = {676, 2000, 1001, 500};  // train, cal, functions, test
    double local_radius = 1.0;
};

// Experiment knobs; defaults reproduce the 1-D homoscedastic benchmark
// (n_train = 500, n = 2000, Gaussian kernels with h = sqrt(2), alpha = 0.2,
// 500 trials).
struct ExperimentConfig {
    Scenario scenario = Scenario::Setting1;
    ScoreKind score = ScoreKind::LinearResidual;
    int k_neighbors = 50;
    std::vector<MethodSpec> methods = {{Variant::L2}, {Variant::SplitConformal}};
    std::vector<double> alphas = {0.2};
    WeightFunction::Kind kernel = WeightFunction::Kind::GaussianKernel;
    std::vector<double> bandwidths = {1.4142135623730951};
    // nonempty: P_f mixes these components instead of a single kind; the
    // bandwidth loop collapses to one cell reported with bandwidth 0
    std::vector<KernelComponent> kernel_mixture;
    SamplerSource sampler_source = SamplerSource::FeatureLaw;
    bool pool_with_replacement = true;
    SizesSpec sizes;
    int trials = 500;
    Eigen::Index n_mc = 50000;
    std::uint64_t base_seed = 20260810;
    std::vector<double> tail_eps = {0.3, 0.4};
    std::string out_dir = "out";
    OutputFormat format = OutputFormat::Csv;
    int threads = 0;  // 0 = all available cores
    CsvSpec csv;

    void validate() const;  // throws ConfigError naming the offending field
};

void to_json(nlohmann::json& j, const ExperimentConfig& cfg);
void from_json(const nlohmann::json& j, ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

// One simulation trial evaluated at one (variant, alpha, bandwidth) cell.
struct TrialRecord {
    int trial = 0;
    std::uint64_t seed = 0;
    Variant variant = Variant::L2;
    double alpha = 0.0;
    double bandwidth = 0.0;
    double threshold = 0.0;
    double weight_sum = 0.0;
    double ratio_at_threshold = 0.0;
    int group_count = 0;
    double gamma_extra = 0.0;
    double test_x0 = 0.0;           // first coordinate of the trial's test point
    double alpha_d_at_test = 0.0;   // conditional miscoverage at the trial's test point
    double alpha_marginal = 0.0;    // mean miscoverage over the MC draws
    double alpha_bar_f = 0.0;       // exact normalization
    bool alpha_bar_defined = true;
    double alpha_tilde_f = 0.0;     // data-driven (gamma) normalization
    double width_at_test = 0.0;
};

// One test point of a real-data run at one (variant, alpha, bandwidth) cell.
struct RealDataRecord {
    int test_index = 0;
    Variant variant = Variant::L2;
    double alpha = 0.0;
    double bandwidth = 0.0;
    double threshold = 0.0;
    double f_weighted = 0.0;   // kernel-weighted miscoverage estimate at this center
    double gamma_center = 0.0;
    double local = 0.0;        // neighborhood miscoverage estimate (radius from config)
    bool local_defined = false;
    int neighbor_count = 0;
    double width = 0.0;
    bool covered = false;      // whether this test row itself is covered
};

struct TailCell {
    double eps = 0.0;
    double frequency = 0.0;
    double bound = 0.0;
};

// Per-(variant, alpha, bandwidth) summary, recomputable from the records.
struct AggregateRow {
    Variant variant = Variant::L2;
    double alpha = 0.0;
    double bandwidth = 0.0;
    int n = 0;
    int infinite_thresholds = 0;
    int undefined_bar = 0;
    double mean_alpha_d = 0.0;
    double mean_marginal = 0.0;
    double l1_tilde = 0.0, l2_tilde = 0.0, l4_tilde = 0.0;
    double l1_bar = 0.0, l2_bar = 0.0, l4_bar = 0.0;  // over defined values
    double mean_width = 0.0;    // finite widths only
    double median_width = 0.0;  // finite widths only
    int infinite_widths = 0;
    double mean_local = 0.0;    // real-data runs: mean local miscoverage (defined cells)
    int undefined_local = 0;    // real-data runs: empty neighborhoods
    std::vector<TailCell> tails;  // over alpha_tilde (simulation) / f_weighted (real data)
};

struct Report {
    ExperimentConfig config;
    nlohmann::json provenance;
    std::vector<TrialRecord> records;
    std::vector<RealDataRecord> real_records;
    std::vector<AggregateRow> aggregates;
};

std::vector<AggregateRow> compute_simulation_aggregates(const std::vector<TrialRecord>& records,
                                                        const std::vector<double>& tail_eps);
std::vector<AggregateRow> compute_real_data_aggregates(const std::vector<RealDataRecord>& records,
                                                       const std::vector<double>& tail_eps);

// Simulation runner: trains once, then per trial draws a fresh calibration
// set, functions and test point, calibrates every configured method at every
// (alpha, bandwidth), and evaluates miscoverage against the oracle. Trials
// run in an OpenMP pool; trial seeds derive from (base_seed, trial index) so
// execution order cannot change any record.
Report run_simulation(const ExperimentConfig& cfg);

// Real-data runner: splits the CSV, standardizes features against the
// function-construction split, calibrates with kernel centers drawn from
// that split without replacement, and reports per-test-point estimates.
Report run_real_data(const ExperimentConfig& cfg);

struct OracleCheckResult {
    int total = 0;
    int failures = 0;
    std::vector<std::string> failure_details;
};

// Random small instances: every calibration variant must equal the
// brute-force linear scan exactly.
OracleCheckResult oracle_check(int count, std::uint64_t seed);

// --- report I/O -----------------------------------------------------------

// CSV format writes records.csv / aggregates.csv (and real_records.csv for
// real-data runs) with floats at 17 significant digits, plus provenance.json.
// JSON format writes a single report.json. The provenance timestamp is the
// only non-deterministic output field.
std::vector<std::string> emit_report(const Report& report, const std::string& out_dir,
                                     OutputFormat format);

Report load_report_json(const std::string& path);

// Recomputes aggregates from the records and compares; throws on mismatch.
void verify_report_consistency(const Report& report);

inline constexpr const char* kVersion = "0.1.0";

}  // namespace lkconf
