#pragma once

// Comma-separated numeric tables with a header row.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "shapefit/dataset.hpp"

namespace shapefit {

/// Parse failure pointing at a data row (1-based, header excluded) and a
/// column name. row == 0 means the header itself.
class CsvError : public std::runtime_error {
public:
    CsvError(const std::string& what, std::size_t row, std::string column)
        : std::runtime_error(what), row_(row), column_(std::move(column)) {}
    std::size_t row() const noexcept { return row_; }
    const std::string& column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::string column_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;  // one vector per header entry

    std::size_t rows() const noexcept { return columns.empty() ? 0 : columns.front().size(); }
    /// Index of a column by name; throws CsvError when absent.
    std::size_t index_of(const std::string& name) const;
};

/// Every cell must parse as a finite double. Blank lines are skipped; a
/// trailing '\r' is tolerated. Double-quoted header fields are unquoted.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

/// Response column `response` becomes y, every other column a covariate.
/// An empty name picks "y" when present, else the last column.
Dataset to_dataset(const CsvTable& table, const std::string& response = "");

/// Covariates in order followed by the response column.
CsvTable from_dataset(const Dataset& data, const std::string& response = "y");

/// Shortest text that reads back to the same double.
std::string format_double(double v);

void write_csv(std::ostream& out, const CsvTable& table);
void write_csv_file(const std::string& path, const CsvTable& table);

}  // namespace shapefit
