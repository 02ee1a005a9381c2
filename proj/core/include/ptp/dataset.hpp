#pragma once

#include <string>
#include <variant>
#include <vector>

#include "ptp/date.hpp"
#include "ptp/schema.hpp"

namespace ptp::data {

// One value slot in a row. monostate marks a missing value (empty field or a
// field that failed to parse for its declared kind).
using Cell = std::variant<std::monostate, std::string, double, CivilDate>;

inline bool is_missing(const Cell& c) { return std::holds_alternative<std::monostate>(c); }
inline const std::string& as_text(const Cell& c) { return std::get<std::string>(c); }
inline double as_number(const Cell& c) { return std::get<double>(c); }
inline CivilDate as_date(const Cell& c) { return std::get<CivilDate>(c); }

std::string cell_to_string(const Cell& c);  // missing -> empty string

struct Dataset {
  FeatureSchema schema;
  std::vector<std::vector<Cell>> rows;  // each row aligned with schema.columns

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_cols() const { return schema.columns.size(); }
  std::size_t col(std::string_view name) const { return schema.index_of(name); }
};

// Reads an RFC-4180 style CSV (quoted fields, embedded separators/newlines,
// CRLF or LF). The header row is matched to the schema by name; extra file
// columns are ignored, absent schema columns are an error. Cells that fail
// to parse for their column kind become missing values.
Dataset load_csv(const std::string& path, const FeatureSchema& schema);
Dataset parse_csv(std::string_view text, const FeatureSchema& schema);

void write_csv(const Dataset& ds, const std::string& path);
std::string csv_to_string(const Dataset& ds);

// shortest representation that parses back to the same double
std::string format_number(double v);

}  // namespace ptp::data
