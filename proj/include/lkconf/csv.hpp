#pragma once

#include <map>
#include <string>
#include <vector>

#include "lkconf/dataset.hpp"

namespace lkconf {

// Column spec for CSV ingestion. Files are comma-separated UTF-8 with a
// required header row and '.' decimal separator. Categorical columns map
// string labels to numeric codes.
struct CsvSchema {
    std::vector<std::string> feature_columns;
    std::string outcome_column;
    std::map<std::string, std::map<std::string, double>> categorical;
};

// Abalone: seven features with sex coded M=1, F=-1, I=0; outcome = rings.
CsvSchema abalone_schema();

LabeledDataset load_csv(const std::string& path, const CsvSchema& schema);

}  // namespace lkconf
