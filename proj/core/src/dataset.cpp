#include "ptp/dataset.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ptp::data {

namespace {

// splits raw CSV text into records of fields, honoring quotes
std::vector<std::vector<std::string>> split_records(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool any = false;  // true once the current record has content
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto end_field = [&] {
    fields.push_back(std::move(field));
    field.clear();
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(fields));
    fields.clear();
    any = false;
  };
  while (i < n) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < n && text[i + 1] == '"') {
          field += '"';
          i += 2;
        } else {
          quoted = false;
          ++i;
        }
      } else {
        field += c;
        ++i;
      }
    } else if (c == '"') {
      quoted = true;
      any = true;
      ++i;
    } else if (c == ',') {
      end_field();
      any = true;
      ++i;
    } else if (c == '\r' && i + 1 < n && text[i + 1] == '\n') {
      end_record();
      i += 2;
    } else if (c == '\n') {
      end_record();
      ++i;
    } else {
      field += c;
      any = true;
      ++i;
    }
  }
  if (quoted) throw std::runtime_error("csv: unterminated quoted field");
  if (any || !fields.empty()) end_record();  // final line without newline
  return records;
}

Cell parse_cell(const std::string& raw, ColumnKind kind) {
  if (raw.empty()) return std::monostate{};
  switch (kind) {
    case ColumnKind::categorical:
    case ColumnKind::target:
      return raw;
    case ColumnKind::continuous: {
      double v = 0.0;
      const char* first = raw.data();
      const char* last = raw.data() + raw.size();
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc{} || ptr != last) return std::monostate{};
      return v;
    }
    case ColumnKind::date: {
      if (auto d = parse_date(raw)) return *d;
      return std::monostate{};
    }
  }
  return std::monostate{};
}

bool needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\n\r") != std::string::npos;
}

void write_field(std::string& out, const std::string& s) {
  if (!needs_quoting(s)) {
    out += s;
    return;
  }
  out += '"';
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("csv: cannot format number");
  return std::string(buf, ptr);
}

std::string cell_to_string(const Cell& c) {
  if (is_missing(c)) return {};
  if (std::holds_alternative<std::string>(c)) return std::get<std::string>(c);
  if (std::holds_alternative<double>(c)) return format_number(std::get<double>(c));
  return format_date(std::get<CivilDate>(c));
}

Dataset parse_csv(std::string_view text, const FeatureSchema& schema) {
  schema.validate();
  auto records = split_records(text);
  if (records.empty()) throw std::runtime_error("csv: missing header row");
  const auto& header = records.front();

  // map each schema column to its position in the file
  std::vector<std::size_t> positions;
  positions.reserve(schema.columns.size());
  for (const auto& col : schema.columns) {
    std::size_t pos = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == col.name) {
        pos = i;
        break;
      }
    }
    if (pos == header.size()) {
      throw std::runtime_error("csv: column '" + col.name + "' not found in header");
    }
    positions.push_back(pos);
  }

  Dataset ds;
  ds.schema = schema;
  ds.rows.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size()) {
      throw std::runtime_error("csv: row " + std::to_string(r + 1) + " has " +
                               std::to_string(rec.size()) + " fields, header has " +
                               std::to_string(header.size()));
    }
    std::vector<Cell> row;
    row.reserve(schema.columns.size());
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      row.push_back(parse_cell(rec[positions[c]], schema.columns[c].kind));
    }
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

Dataset load_csv(const std::string& path, const FeatureSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("csv: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), schema);
}

std::string csv_to_string(const Dataset& ds) {
  std::string out;
  for (std::size_t c = 0; c < ds.schema.columns.size(); ++c) {
    if (c) out += ',';
    write_field(out, ds.schema.columns[c].name);
  }
  out += '\n';
  for (const auto& row : ds.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      write_field(out, cell_to_string(row[c]));
    }
    out += '\n';
  }
  return out;
}

void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("csv: cannot write " + path);
  out << csv_to_string(ds);
}

}  // namespace ptp::data
