#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lkconf/errors.hpp"
#include "lkconf/experiment.hpp"
#include "lkconf/math_util.hpp"

namespace lkconf {

namespace {

// 17 significant digits round-trip doubles exactly; infinities print as "inf".
std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

nlohmann::json json_num(double v) {
    if (std::isinf(v)) return v > 0 ? nlohmann::json("inf") : nlohmann::json("-inf");
    return v;
}

double num_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
        throw IoError("unexpected numeric string '" + s + "' in report");
    }
    return j.get<double>();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << content;
    if (!out) throw IoError("write failed for '" + path + "'");
}

std::string records_csv(const std::vector<TrialRecord>& records) {
    std::string s =
        "trial,seed,variant,alpha,bandwidth,threshold,weight_sum,ratio_at_threshold,"
        "group_count,gamma_extra,test_x0,alpha_d_at_test,alpha_marginal,alpha_bar_f,alpha_bar_defined,"
        "alpha_tilde_f,width_at_test\n";
    for (const auto& r : records) {
        s += std::to_string(r.trial) + ',' + std::to_string(r.seed) + ',' + to_string(r.variant) +
             ',' + fmt(r.alpha) + ',' + fmt(r.bandwidth) + ',' + fmt(r.threshold) + ',' +
             fmt(r.weight_sum) + ',' + fmt(r.ratio_at_threshold) + ',' +
             std::to_string(r.group_count) + ',' + fmt(r.gamma_extra) + ',' + fmt(r.test_x0) +
             ',' + fmt(r.alpha_d_at_test) + ',' + fmt(r.alpha_marginal) + ',' + fmt(r.alpha_bar_f) +
             ',' + (r.alpha_bar_defined ? "1" : "0") + ',' + fmt(r.alpha_tilde_f) + ',' +
             fmt(r.width_at_test) + '\n';
    }
    return s;
}

std::string real_records_csv(const std::vector<RealDataRecord>& records) {
    std::string s =
        "test_index,variant,alpha,bandwidth,threshold,f_weighted,gamma_center,local,"
        "local_defined,neighbor_count,width,covered\n";
    for (const auto& r : records) {
        s += std::to_string(r.test_index) + ',' + to_string(r.variant) + ',' + fmt(r.alpha) + ',' +
             fmt(r.bandwidth) + ',' + fmt(r.threshold) + ',' + fmt(r.f_weighted) + ',' +
             fmt(r.gamma_center) + ',' + fmt(r.local) + ',' + (r.local_defined ? "1" : "0") + ',' +
             std::to_string(r.neighbor_count) + ',' + fmt(r.width) + ',' +
             (r.covered ? "1" : "0") + '\n';
    }
    return s;
}

std::string aggregates_csv(const std::vector<AggregateRow>& rows) {
    std::size_t n_tails = 0;
    for (const auto& row : rows) n_tails = std::max(n_tails, row.tails.size());
    std::string s =
        "variant,alpha,bandwidth,n,infinite_thresholds,undefined_bar,mean_alpha_d,mean_marginal,"
        "l1_tilde,l2_tilde,l4_tilde,l1_bar,l2_bar,l4_bar,mean_width,median_width,infinite_widths,"
        "mean_local,undefined_local";
    for (std::size_t t = 0; t < n_tails; ++t) {
        const std::string i = std::to_string(t);
        s += ",tail_eps_" + i + ",tail_freq_" + i + ",tail_bound_" + i;
    }
    s += '\n';
    for (const auto& r : rows) {
        s += to_string(r.variant) + ',' + fmt(r.alpha) + ',' + fmt(r.bandwidth) + ',' +
             std::to_string(r.n) + ',' + std::to_string(r.infinite_thresholds) + ',' +
             std::to_string(r.undefined_bar) + ',' + fmt(r.mean_alpha_d) + ',' +
             fmt(r.mean_marginal) + ',' + fmt(r.l1_tilde) + ',' + fmt(r.l2_tilde) + ',' +
             fmt(r.l4_tilde) + ',' + fmt(r.l1_bar) + ',' + fmt(r.l2_bar) + ',' + fmt(r.l4_bar) +
             ',' + fmt(r.mean_width) + ',' + fmt(r.median_width) + ',' +
             std::to_string(r.infinite_widths) + ',' + fmt(r.mean_local) + ',' +
             std::to_string(r.undefined_local);
        for (std::size_t t = 0; t < n_tails; ++t) {
            if (t < r.tails.size())
                s += ',' + fmt(r.tails[t].eps) + ',' + fmt(r.tails[t].frequency) + ',' +
                     fmt(r.tails[t].bound);
            else
                s += ",,,";
        }
        s += '\n';
    }
    return s;
}

nlohmann::json record_to_json(const TrialRecord& r) {
    return nlohmann::json{{"trial", r.trial},
                          {"seed", r.seed},
                          {"variant", to_string(r.variant)},
                          {"alpha", json_num(r.alpha)},
                          {"bandwidth", json_num(r.bandwidth)},
                          {"threshold", json_num(r.threshold)},
                          {"weight_sum", json_num(r.weight_sum)},
                          {"ratio_at_threshold", json_num(r.ratio_at_threshold)},
                          {"group_count", r.group_count},
                          {"gamma_extra", json_num(r.gamma_extra)},
                          {"test_x0", json_num(r.test_x0)},
                          {"alpha_d_at_test", json_num(r.alpha_d_at_test)},
                          {"alpha_marginal", json_num(r.alpha_marginal)},
                          {"alpha_bar_f", json_num(r.alpha_bar_f)},
                          {"alpha_bar_defined", r.alpha_bar_defined},
                          {"alpha_tilde_f", json_num(r.alpha_tilde_f)},
                          {"width_at_test", json_num(r.width_at_test)}};
}

TrialRecord record_from_json(const nlohmann::json& j) {
    TrialRecord r;
    r.trial = j.at("trial");
    r.seed = j.at("seed");
    r.variant = variant_from_string(j.at("variant"));
    r.alpha = num_from_json(j.at("alpha"));
    r.bandwidth = num_from_json(j.at("bandwidth"));
    r.threshold = num_from_json(j.at("threshold"));
    r.weight_sum = num_from_json(j.at("weight_sum"));
    r.ratio_at_threshold = num_from_json(j.at("ratio_at_threshold"));
    r.group_count = j.at("group_count");
    r.gamma_extra = num_from_json(j.at("gamma_extra"));
    r.test_x0 = num_from_json(j.at("test_x0"));
    r.alpha_d_at_test = num_from_json(j.at("alpha_d_at_test"));
    r.alpha_marginal = num_from_json(j.at("alpha_marginal"));
    r.alpha_bar_f = num_from_json(j.at("alpha_bar_f"));
    r.alpha_bar_defined = j.at("alpha_bar_defined");
    r.alpha_tilde_f = num_from_json(j.at("alpha_tilde_f"));
    r.width_at_test = num_from_json(j.at("width_at_test"));
    return r;
}

nlohmann::json real_record_to_json(const RealDataRecord& r) {
    return nlohmann::json{{"test_index", r.test_index},
                          {"variant", to_string(r.variant)},
                          {"alpha", json_num(r.alpha)},
                          {"bandwidth", json_num(r.bandwidth)},
                          {"threshold", json_num(r.threshold)},
                          {"f_weighted", json_num(r.f_weighted)},
                          {"gamma_center", json_num(r.gamma_center)},
                          {"local", json_num(r.local)},
                          {"local_defined", r.local_defined},
                          {"neighbor_count", r.neighbor_count},
                          {"width", json_num(r.width)},
                          {"covered", r.covered}};
}

RealDataRecord real_record_from_json(const nlohmann::json& j) {
    RealDataRecord r;
    r.test_index = j.at("test_index");
    r.variant = variant_from_string(j.at("variant"));
    r.alpha = num_from_json(j.at("alpha"));
    r.bandwidth = num_from_json(j.at("bandwidth"));
    r.threshold = num_from_json(j.at("threshold"));
    r.f_weighted = num_from_json(j.at("f_weighted"));
    r.gamma_center = num_from_json(j.at("gamma_center"));
    r.local = num_from_json(j.at("local"));
    r.local_defined = j.at("local_defined");
    r.neighbor_count = j.at("neighbor_count");
    r.width = num_from_json(j.at("width"));
    r.covered = j.at("covered");
    return r;
}

nlohmann::json aggregate_to_json(const AggregateRow& r) {
    nlohmann::json tails = nlohmann::json::array();
    for (const auto& t : r.tails)
        tails.push_back({{"eps", json_num(t.eps)},
                         {"frequency", json_num(t.frequency)},
                         {"bound", json_num(t.bound)}});
    return nlohmann::json{{"variant", to_string(r.variant)},
                          {"alpha", json_num(r.alpha)},
                          {"bandwidth", json_num(r.bandwidth)},
                          {"n", r.n},
                          {"infinite_thresholds", r.infinite_thresholds},
                          {"undefined_bar", r.undefined_bar},
                          {"mean_alpha_d", json_num(r.mean_alpha_d)},
                          {"mean_marginal", json_num(r.mean_marginal)},
                          {"l1_tilde", json_num(r.l1_tilde)},
                          {"l2_tilde", json_num(r.l2_tilde)},
                          {"l4_tilde", json_num(r.l4_tilde)},
                          {"l1_bar", json_num(r.l1_bar)},
                          {"l2_bar", json_num(r.l2_bar)},
                          {"l4_bar", json_num(r.l4_bar)},
                          {"mean_width", json_num(r.mean_width)},
                          {"median_width", json_num(r.median_width)},
                          {"infinite_widths", r.infinite_widths},
                          {"mean_local", json_num(r.mean_local)},
                          {"undefined_local", r.undefined_local},
                          {"tails", tails}};
}

AggregateRow aggregate_from_json(const nlohmann::json& j) {
    AggregateRow r;
    r.variant = variant_from_string(j.at("variant"));
    r.alpha = num_from_json(j.at("alpha"));
    r.bandwidth = num_from_json(j.at("bandwidth"));
    r.n = j.at("n");
    r.infinite_thresholds = j.at("infinite_thresholds");
    r.undefined_bar = j.at("undefined_bar");
    r.mean_alpha_d = num_from_json(j.at("mean_alpha_d"));
    r.mean_marginal = num_from_json(j.at("mean_marginal"));
    r.l1_tilde = num_from_json(j.at("l1_tilde"));
    r.l2_tilde = num_from_json(j.at("l2_tilde"));
    r.l4_tilde = num_from_json(j.at("l4_tilde"));
    r.l1_bar = num_from_json(j.at("l1_bar"));
    r.l2_bar = num_from_json(j.at("l2_bar"));
    r.l4_bar = num_from_json(j.at("l4_bar"));
    r.mean_width = num_from_json(j.at("mean_width"));
    r.median_width = num_from_json(j.at("median_width"));
    r.infinite_widths = j.at("infinite_widths");
    r.mean_local = num_from_json(j.at("mean_local"));
    r.undefined_local = j.at("undefined_local");
    for (const auto& t : j.at("tails"))
        r.tails.push_back({num_from_json(t.at("eps")), num_from_json(t.at("frequency")),
                           num_from_json(t.at("bound"))});
    return r;
}

}  // namespace

std::vector<std::string> emit_report(const Report& report, const std::string& out_dir,
                                     OutputFormat format) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());

    std::vector<std::string> written;
    if (format == OutputFormat::Json) {
        nlohmann::json j;
        j["config"] = report.config;
        j["provenance"] = report.provenance;
        j["records"] = nlohmann::json::array();
        for (const auto& r : report.records) j["records"].push_back(record_to_json(r));
        j["real_records"] = nlohmann::json::array();
        for (const auto& r : report.real_records) j["real_records"].push_back(real_record_to_json(r));
        j["aggregates"] = nlohmann::json::array();
        for (const auto& r : report.aggregates) j["aggregates"].push_back(aggregate_to_json(r));
        const std::string path = out_dir + "/report.json";
        write_file(path, j.dump(2) + "\n");
        written.push_back(path);
        return written;
    }

    if (!report.records.empty() || report.real_records.empty()) {
        const std::string path = out_dir + "/records.csv";
        write_file(path, records_csv(report.records));
        written.push_back(path);
    }
    if (!report.real_records.empty()) {
        const std::string path = out_dir + "/real_records.csv";
        write_file(path, real_records_csv(report.real_records));
        written.push_back(path);
    }
    {
        const std::string path = out_dir + "/aggregates.csv";
        write_file(path, aggregates_csv(report.aggregates));
        written.push_back(path);
    }
    {
        nlohmann::json j;
        j["config"] = report.config;
        j["provenance"] = report.provenance;
        const std::string path = out_dir + "/provenance.json";
        write_file(path, j.dump(2) + "\n");
        written.push_back(path);
    }
    return written;
}

Report load_report_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open report '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("report is not valid JSON: ") + e.what());
    }
    Report report;
    report.config = j.at("config").get<ExperimentConfig>();
    report.provenance = j.at("provenance");
    for (const auto& r : j.at("records")) report.records.push_back(record_from_json(r));
    for (const auto& r : j.at("real_records"))
        report.real_records.push_back(real_record_from_json(r));
    for (const auto& r : j.at("aggregates")) report.aggregates.push_back(aggregate_from_json(r));
    return report;
}

namespace {

bool same(double a, double b) { return a == b || (std::isinf(a) && std::isinf(b) && a * b > 0); }

void compare_rows(const AggregateRow& a, const AggregateRow& b) {
    const bool ok = a.variant == b.variant && same(a.alpha, b.alpha) &&
                    same(a.bandwidth, b.bandwidth) && a.n == b.n &&
                    a.infinite_thresholds == b.infinite_thresholds &&
                    a.undefined_bar == b.undefined_bar && same(a.mean_alpha_d, b.mean_alpha_d) &&
                    same(a.mean_marginal, b.mean_marginal) && same(a.l1_tilde, b.l1_tilde) &&
                    same(a.l2_tilde, b.l2_tilde) && same(a.l4_tilde, b.l4_tilde) &&
                    same(a.l1_bar, b.l1_bar) && same(a.l2_bar, b.l2_bar) &&
                    same(a.l4_bar, b.l4_bar) && same(a.mean_width, b.mean_width) &&
                    same(a.median_width, b.median_width) &&
                    a.infinite_widths == b.infinite_widths && same(a.mean_local, b.mean_local) &&
                    a.undefined_local == b.undefined_local && a.tails.size() == b.tails.size();
    if (!ok)
        throw IoError("aggregate row mismatch for variant " + to_string(a.variant) + ", alpha " +
                      std::to_string(a.alpha));
    for (std::size_t t = 0; t < a.tails.size(); ++t)
        if (!same(a.tails[t].eps, b.tails[t].eps) ||
            !same(a.tails[t].frequency, b.tails[t].frequency) ||
            !same(a.tails[t].bound, b.tails[t].bound))
            throw IoError("tail cell mismatch for variant " + to_string(a.variant));
}

}  // namespace

void verify_report_consistency(const Report& report) {
    const auto recomputed =
        report.real_records.empty()
            ? compute_simulation_aggregates(report.records, report.config.tail_eps)
            : compute_real_data_aggregates(report.real_records, report.config.tail_eps);
    if (recomputed.size() != report.aggregates.size())
        throw IoError("aggregate row count mismatch: " + std::to_string(report.aggregates.size()) +
                      " stored vs " + std::to_string(recomputed.size()) + " recomputed");
    for (std::size_t i = 0; i < recomputed.size(); ++i)
        compare_rows(report.aggregates[i], recomputed[i]);
}

}  // namespace lkconf
