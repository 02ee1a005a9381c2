#include "ptp/schema.hpp"

#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

namespace ptp::data {

using nlohmann::json;

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::continuous: return "continuous";
    case ColumnKind::date: return "date";
    case ColumnKind::target: return "target";
  }
  return "?";
}

ColumnKind column_kind_from_string(std::string_view text) {
  if (text == "categorical") return ColumnKind::categorical;
  if (text == "continuous") return ColumnKind::continuous;
  if (text == "date") return ColumnKind::date;
  if (text == "target") return ColumnKind::target;
  throw std::runtime_error("schema: unknown column kind '" + std::string(text) + "'");
}

void FeatureSchema::validate() const {
  std::unordered_set<std::string_view> seen;
  std::size_t targets = 0;
  for (const auto& col : columns) {
    if (col.name.empty()) throw std::runtime_error("schema: empty column name");
    if (!seen.insert(col.name).second) {
      throw std::runtime_error("schema: duplicate column name '" + col.name + "'");
    }
    if (col.kind == ColumnKind::target) ++targets;
  }
  if (targets != 1) {
    throw std::runtime_error("schema: expected exactly one target column, found " +
                             std::to_string(targets));
  }
  if (target_positive_label.empty()) {
    throw std::runtime_error("schema: target_positive_label must not be empty");
  }
}

const Column* FeatureSchema::find(std::string_view name) const {
  for (const auto& col : columns) {
    if (col.name == name) return &col;
  }
  return nullptr;
}

std::size_t FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  throw std::runtime_error("schema: no column named '" + std::string(name) + "'");
}

std::size_t FeatureSchema::target_index() const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].kind == ColumnKind::target) return i;
  }
  throw std::runtime_error("schema: no target column");
}

const std::string& FeatureSchema::target_name() const { return columns[target_index()].name; }

FeatureSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("schema: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("schema: " + path + " is not valid JSON: " + e.what());
  }
  FeatureSchema schema;
  if (!j.contains("columns") || !j["columns"].is_array()) {
    throw std::runtime_error("schema: missing 'columns' array in " + path);
  }
  for (const auto& item : j["columns"]) {
    Column col;
    col.name = item.value("name", std::string{});
    col.kind = column_kind_from_string(item.value("kind", std::string{}));
    schema.columns.push_back(std::move(col));
  }
  schema.target_positive_label = j.value("target_positive_label", std::string{});
  schema.validate();
  return schema;
}

void save_schema(const FeatureSchema& schema, const std::string& path) {
  schema.validate();
  json cols = json::array();
  for (const auto& col : schema.columns) {
    cols.push_back({{"name", col.name}, {"kind", std::string(to_string(col.kind))}});
  }
  json j{{"columns", cols}, {"target_positive_label", schema.target_positive_label}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("schema: cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace ptp::data
