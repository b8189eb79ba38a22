#include <fstream>

#include "lkconf/errors.hpp"
#include "lkconf/experiment.hpp"

namespace lkconf {

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::Setting1: return "setting1";
        case Scenario::Setting2: return "setting2";
        case Scenario::Multivariate: return "multivariate";
        case Scenario::Csv: return "csv";
    }
    return "?";
}

std::string to_string(ScoreKind s) {
    return s == ScoreKind::LinearResidual ? "linear-residual" : "knn-quantile";
}

std::string to_string(SamplerSource s) {
    switch (s) {
        case SamplerSource::FeatureLaw: return "feature-law";
        case SamplerSource::UniformBox: return "uniform-box";
        case SamplerSource::Pool: return "pool";
    }
    return "?";
}

std::string to_string(OutputFormat f) { return f == OutputFormat::Csv ? "csv" : "json"; }

namespace {

Scenario scenario_from_string(const std::string& s) {
    if (s == "setting1") return Scenario::Setting1;
    if (s == "setting2") return Scenario::Setting2;
    if (s == "multivariate") return Scenario::Multivariate;
    if (s == "csv") return Scenario::Csv;
    throw ConfigError("scenario: unknown value '" + s + "'");
}

ScoreKind score_from_string(const std::string& s) {
    if (s == "linear-residual") return ScoreKind::LinearResidual;
    if (s == "knn-quantile") return ScoreKind::KnnQuantile;
    throw ConfigError("score.kind: unknown value '" + s + "'");
}

SamplerSource sampler_from_string(const std::string& s) {
    if (s == "feature-law") return SamplerSource::FeatureLaw;
    if (s == "uniform-box") return SamplerSource::UniformBox;
    if (s == "pool") return SamplerSource::Pool;
    throw ConfigError("sampler.source: unknown value '" + s + "'");
}

OutputFormat format_from_string(const std::string& s) {
    if (s == "csv") return OutputFormat::Csv;
    if (s == "json") return OutputFormat::Json;
    throw ConfigError("output.format: unknown value '" + s + "'");
}

std::string kernel_to_string(WeightFunction::Kind k) {
    return k == WeightFunction::Kind::GaussianKernel ? "gaussian" : "ball";
}

WeightFunction::Kind kernel_from_string(const std::string& s) {
    if (s == "gaussian") return WeightFunction::Kind::GaussianKernel;
    if (s == "ball") return WeightFunction::Kind::BallIndicator;
    throw ConfigError("kernel.kind: unknown value '" + s + "'");
}

}  // namespace

void to_json(nlohmann::json& j, const ExperimentConfig& cfg) {
    j = nlohmann::json{
        {"scenario", to_string(cfg.scenario)},
        {"score", {{"kind", to_string(cfg.score)}, {"k_neighbors", cfg.k_neighbors}}},
        {"alphas", cfg.alphas},
        {"kernel", {{"kind", kernel_to_string(cfg.kernel)}, {"bandwidths", cfg.bandwidths}}},
        {"sampler",
         {{"source", to_string(cfg.sampler_source)},
          {"with_replacement", cfg.pool_with_replacement}}},
        {"sizes",
         {{"n_train", cfg.sizes.n_train},
          {"n_cal", cfg.sizes.n_cal},
          {"n_test", cfg.sizes.n_test},
          {"pool", cfg.sizes.pool}}},
        {"trials", cfg.trials},
        {"n_mc", cfg.n_mc},
        {"base_seed", cfg.base_seed},
        {"tail_eps", cfg.tail_eps},
        {"output", {{"dir", cfg.out_dir}, {"format", to_string(cfg.format)}}},
        {"threads", cfg.threads},
    };
    if (!cfg.kernel_mixture.empty()) {
        j["kernel"]["mixture"] = nlohmann::json::array();
        for (const auto& c : cfg.kernel_mixture)
            j["kernel"]["mixture"].push_back({{"kind", kernel_to_string(c.kind)},
                                              {"width", c.width},
                                              {"weight", c.mix_weight}});
    }
    j["methods"] = nlohmann::json::array();
    for (const auto& ms : cfg.methods) {
        nlohmann::json m{{"variant", to_string(ms.variant)}};
        if (ms.variant == Variant::L2Grouped) m["r"] = ms.r;
        if (ms.variant == Variant::Lk) m["k"] = ms.k;
        if (ms.variant == Variant::L2Conservative) m["gamma_min_draws"] = ms.gamma_min_draws;
        j["methods"].push_back(m);
    }
    if (cfg.scenario == Scenario::Csv)
        j["csv"] = {{"path", cfg.csv.path},
                    {"splits", cfg.csv.splits},
                    {"local_radius", cfg.csv.local_radius}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& cfg) {
    cfg = ExperimentConfig{};
    try {
        if (j.contains("scenario")) cfg.scenario = scenario_from_string(j.at("scenario"));
        if (j.contains("score")) {
            const auto& s = j.at("score");
            if (s.contains("kind")) cfg.score = score_from_string(s.at("kind"));
            if (s.contains("k_neighbors")) cfg.k_neighbors = s.at("k_neighbors");
        }
        if (j.contains("methods")) {
            cfg.methods.clear();
            for (const auto& m : j.at("methods")) {
                MethodSpec ms;
                ms.variant = variant_from_string(m.at("variant"));
                if (m.contains("r")) ms.r = m.at("r");
                if (m.contains("k")) ms.k = m.at("k");
                if (m.contains("gamma_min_draws")) ms.gamma_min_draws = m.at("gamma_min_draws");
                cfg.methods.push_back(ms);
            }
        }
        if (j.contains("alphas")) cfg.alphas = j.at("alphas").get<std::vector<double>>();
        if (j.contains("kernel")) {
            const auto& k = j.at("kernel");
            if (k.contains("kind")) cfg.kernel = kernel_from_string(k.at("kind"));
            if (k.contains("bandwidths"))
                cfg.bandwidths = k.at("bandwidths").get<std::vector<double>>();
            if (k.contains("mixture")) {
                cfg.kernel_mixture.clear();
                for (const auto& c : k.at("mixture")) {
                    KernelComponent comp;
                    comp.kind = kernel_from_string(c.at("kind"));
                    comp.width = c.at("width");
                    if (c.contains("weight")) comp.mix_weight = c.at("weight");
                    cfg.kernel_mixture.push_back(comp);
                }
            }
        }
        if (j.contains("sampler")) {
            const auto& s = j.at("sampler");
            if (s.contains("source")) cfg.sampler_source = sampler_from_string(s.at("source"));
            if (s.contains("with_replacement")) cfg.pool_with_replacement = s.at("with_replacement");
        }
        if (j.contains("sizes")) {
            const auto& s = j.at("sizes");
            if (s.contains("n_train")) cfg.sizes.n_train = s.at("n_train");
            if (s.contains("n_cal")) cfg.sizes.n_cal = s.at("n_cal");
            if (s.contains("n_test")) cfg.sizes.n_test = s.at("n_test");
            if (s.contains("pool")) cfg.sizes.pool = s.at("pool");
        }
        if (j.contains("trials")) cfg.trials = j.at("trials");
        if (j.contains("n_mc")) cfg.n_mc = j.at("n_mc");
        if (j.contains("base_seed")) cfg.base_seed = j.at("base_seed");
        if (j.contains("tail_eps")) cfg.tail_eps = j.at("tail_eps").get<std::vector<double>>();
        if (j.contains("output")) {
            const auto& o = j.at("output");
            if (o.contains("dir")) cfg.out_dir = o.at("dir");
            if (o.contains("format")) cfg.format = format_from_string(o.at("format"));
        }
        if (j.contains("threads")) cfg.threads = j.at("threads");
        if (j.contains("csv")) {
            const auto& c = j.at("csv");
            if (c.contains("path")) cfg.csv.path = c.at("path");
            if (c.contains("splits")) cfg.csv.splits = c.at("splits").get<std::vector<Eigen::Index>>();
            if (c.contains("local_radius")) cfg.csv.local_radius = c.at("local_radius");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig cfg = j.get<ExperimentConfig>();
    cfg.validate();
    return cfg;
}

void ExperimentConfig::validate() const {
    if (sizes.n_train < 4) throw ConfigError("sizes.n_train: must be >= 4");
    if (sizes.n_cal < 4) throw ConfigError("sizes.n_cal: must be >= 4");
    if (sizes.n_test < 1) throw ConfigError("sizes.n_test: must be positive");
    if (trials < 1) throw ConfigError("trials: must be >= 1");
    if (n_mc < 1) throw ConfigError("n_mc: must be >= 1");
    if (alphas.empty()) throw ConfigError("alphas: must be nonempty");
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0)) throw ConfigError("alphas: values must lie in (0,1)");
    if (kernel_mixture.empty()) {
        if (bandwidths.empty()) throw ConfigError("kernel.bandwidths: must be nonempty");
        for (double h : bandwidths)
            if (!(h > 0.0)) throw ConfigError("kernel.bandwidths: values must be positive");
    } else {
        for (const auto& c : kernel_mixture) {
            if (!(c.width > 0.0)) throw ConfigError("kernel.mixture: widths must be positive");
            if (!(c.mix_weight > 0.0)) throw ConfigError("kernel.mixture: weights must be positive");
        }
    }
    if (methods.empty()) throw ConfigError("methods: must be nonempty");
    for (const auto& ms : methods) {
        if (ms.variant == Variant::L2Grouped && ms.r < 2)
            throw ConfigError("methods.r: must be >= 2");
        if (ms.variant == Variant::Lk && ms.k < 2) throw ConfigError("methods.k: must be >= 2");
        if (ms.variant == Variant::L2Conservative && ms.gamma_min_draws < 1)
            throw ConfigError("methods.gamma_min_draws: must be >= 1");
    }
    for (double e : tail_eps)
        if (!(e > 0.0 && e < 1.0)) throw ConfigError("tail_eps: values must lie in (0,1)");
    if (score == ScoreKind::KnnQuantile &&
        (k_neighbors < 1 || k_neighbors > sizes.n_train))
        throw ConfigError("score.k_neighbors: must lie in [1, n_train]");
    if (scenario == Scenario::Csv) {
        if (csv.path.empty()) throw ConfigError("csv.path: required for the csv scenario");
        if (csv.splits.size() != 4)
            throw ConfigError("csv.splits: need [train, calibration, functions, test] sizes");
        for (Eigen::Index s : csv.splits)
            if (s < 1) throw ConfigError("csv.splits: sizes must be positive");
        if (!(csv.local_radius > 0.0)) throw ConfigError("csv.local_radius: must be positive");
    }
    if (threads < 0) throw ConfigError("threads: must be >= 0");
}

}  // namespace lkconf
