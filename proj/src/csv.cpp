#include "lkconf/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "lkconf/errors.hpp"

namespace lkconf {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

}  // namespace

CsvSchema abalone_schema() {
    CsvSchema schema;
    schema.feature_columns = {"sex",           "length",        "diameter",    "height",
                              "shucked_weight", "viscera_weight", "shell_weight"};
    schema.outcome_column = "rings";
    schema.categorical["sex"] = {{"M", 1.0}, {"F", -1.0}, {"I", 0.0}};
    return schema;
}

LabeledDataset load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw EmptyFileError(path);
    const auto header = split_line(line);

    auto column_index = [&](const std::string& name) -> std::size_t {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (header[j] == name) return j;
        throw MissingColumnError(name);
    };

    std::vector<std::size_t> feat_idx;
    feat_idx.reserve(schema.feature_columns.size());
    for (const auto& name : schema.feature_columns) feat_idx.push_back(column_index(name));
    const std::size_t out_idx = column_index(schema.outcome_column);

    auto parse_cell = [&](const std::string& cell, const std::string& column,
                          long row) -> double {
        if (auto it = schema.categorical.find(column); it != schema.categorical.end()) {
            if (auto code = it->second.find(cell); code != it->second.end()) return code->second;
            throw BadCellError(row, column, cell);
        }
        double value = 0.0;
        const char* first = cell.data();
        const char* last = first + cell.size();
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc{} || ptr != last) throw BadCellError(row, column, cell);
        return value;
    };

    std::vector<std::vector<double>> feature_rows;
    std::vector<double> outcome_rows;
    long row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto cells = split_line(line);
        if (cells.size() != header.size())
            throw CsvError("csv-bad-row",
                           "row " + std::to_string(row) + ": expected " +
                               std::to_string(header.size()) + " cells, got " +
                               std::to_string(cells.size()),
                           row, "");
        std::vector<double> feats;
        feats.reserve(feat_idx.size());
        for (std::size_t j = 0; j < feat_idx.size(); ++j)
            feats.push_back(parse_cell(cells[feat_idx[j]], schema.feature_columns[j], row));
        outcome_rows.push_back(parse_cell(cells[out_idx], schema.outcome_column, row));
        feature_rows.push_back(std::move(feats));
    }
    if (feature_rows.empty()) throw EmptyFileError(path);

    LabeledDataset data;
    const Eigen::Index n = static_cast<Eigen::Index>(feature_rows.size());
    const Eigen::Index p = static_cast<Eigen::Index>(schema.feature_columns.size());
    data.features.resize(n, p);
    data.outcomes.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) data.features(i, j) = feature_rows[i][j];
        data.outcomes(i) = outcome_rows[i];
    }
    return data;
}

}  // namespace lkconf
