#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ptp::data {

enum class ColumnKind { categorical, continuous, date, target };

std::string_view to_string(ColumnKind kind);
ColumnKind column_kind_from_string(std::string_view text);  // throws on unknown kind

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::categorical;
  bool operator==(const Column&) const = default;
};

// Declares the shape of a raw dataset: ordered columns plus which target
// value counts as the positive class.
struct FeatureSchema {
  std::vector<Column> columns;
  std::string target_positive_label;

  bool operator==(const FeatureSchema&) const = default;

  // throws std::runtime_error on duplicate/empty names, missing or multiple
  // target columns, or an empty positive label
  void validate() const;

  const Column* find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;  // throws if absent
  std::size_t target_index() const;
  const std::string& target_name() const;
};

FeatureSchema load_schema(const std::string& path);
void save_schema(const FeatureSchema& schema, const std::string& path);

}  // namespace ptp::data
