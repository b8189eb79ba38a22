#pragma once

#include <stdexcept>
#include <string>

namespace lkconf {

// Base class for all library errors. what() is a single line of the form
// "category: detail", suitable for machine parsing by the CLI.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& detail)
        : std::runtime_error(category + ": " + detail), category_(std::move(category)) {}
    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& detail) : Error("invalid-argument", detail) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& detail) : Error("config", detail) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& detail) : Error("io", detail) {}
};

// CSV ingestion errors carry the offending location.
class CsvError : public Error {
public:
    CsvError(std::string category, const std::string& detail, long row, std::string column)
        : Error(std::move(category), detail), row_(row), column_(std::move(column)) {}
    long row() const noexcept { return row_; }                  // 1-based data row, 0 = header
    const std::string& column() const noexcept { return column_; }

private:
    long row_;
    std::string column_;
};

class EmptyFileError : public CsvError {
public:
    explicit EmptyFileError(const std::string& path)
        : CsvError("csv-empty-file", path, 0, "") {}
};

class MissingColumnError : public CsvError {
public:
    explicit MissingColumnError(const std::string& column)
        : CsvError("csv-missing-column", "column '" + column + "' not found in header", 0, column) {}
};

class BadCellError : public CsvError {
public:
    BadCellError(long row, const std::string& column, const std::string& value)
        : CsvError("csv-bad-cell",
                   "row " + std::to_string(row) + ", column '" + column + "': cannot parse '" + value + "'",
                   row, column) {}
};

// Rejection sampler gave up: the truncation box carries almost no mass.
class TruncationError : public Error {
public:
    explicit TruncationError(const std::string& detail) : Error("truncation", detail) {}
};

class RankDeficientError : public Error {
public:
    explicit RankDeficientError(const std::string& detail) : Error("rank-deficient", detail) {}
};

}  // namespace lkconf
