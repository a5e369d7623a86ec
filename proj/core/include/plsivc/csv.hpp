#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "plsivc/model.hpp"

namespace plsivc {

/// Numeric CSV table with a header row, stored column-major.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }

  /// Case-insensitive header lookup.
  std::optional<std::size_t> find(std::string_view name) const;
  /// As find, but throws DataError naming the missing column.
  std::size_t index_of(std::string_view name) const;
  const std::vector<double>& column(std::string_view name) const;
};

/// Comma-separated, '.' decimal point, optional surrounding quotes on
/// fields. Every data field must parse as a double; otherwise DataError with
/// the line and column.
CsvTable parse_csv(std::istream& in, std::string_view source = "<input>");
CsvTable read_csv(const std::filesystem::path& path);

/// Shortest round-trip-safe text: 17 significant digits.
std::string format_double(double v);

void write_csv(std::ostream& out, const CsvTable& table);

/// Column-to-role mapping for a generic fit. A Z entry of "1" stands for a
/// constant column named "(intercept)".
struct ColumnRoles {
  std::string y;
  std::vector<std::string> u;
  std::vector<std::string> x;
  std::vector<std::string> z;
};

Dataset dataset_from_table(const CsvTable& table, const ColumnRoles& roles);

/// Columns y, then U, X and Z in block order under their dataset names.
CsvTable table_from_dataset(const Dataset& data);

}  // namespace plsivc
