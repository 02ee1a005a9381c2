#include "ptp/clean.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <stdexcept>

namespace ptp::data {

namespace {

std::string normalize_text(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out = s.substr(b, e - b);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

Dataset normalize_cells(const Dataset& ds) {
  Dataset work = ds;
  for (auto& row : work.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (std::holds_alternative<std::string>(row[c])) {
        row[c] = normalize_text(std::get<std::string>(row[c]));
        if (std::get<std::string>(row[c]).empty()) row[c] = std::monostate{};
      }
    }
  }
  work.schema.target_positive_label = normalize_text(work.schema.target_positive_label);
  return work;
}

Dataset clean(const Dataset& ds, const CleanConfig& config, CleanReport* report) {
  ds.schema.validate();
  CleanReport local;
  CleanReport& rep = report ? *report : local;
  rep = CleanReport{};

  Dataset work = normalize_cells(ds);

  std::vector<bool> col_alive(work.n_cols(), true);
  std::vector<bool> row_alive(work.n_rows(), true);
  const std::size_t target = work.schema.target_index();

  // Every rule is re-evaluated on the surviving rows until a full pass drops
  // nothing; a single pass is not idempotent because removing outlier rows
  // shifts the statistics the rules are based on.
  bool changed = true;
  while (changed) {
    changed = false;
    ++rep.passes;

    if (config.drop_imbalanced_columns) {
      for (std::size_t c = 0; c < work.n_cols(); ++c) {
        if (!col_alive[c] || c == target) continue;
        if (work.schema.columns[c].kind != ColumnKind::categorical) continue;
        std::map<std::string, std::size_t> counts;
        std::size_t total = 0;
        for (std::size_t r = 0; r < work.n_rows(); ++r) {
          if (!row_alive[r] || is_missing(work.rows[r][c])) continue;
          ++counts[as_text(work.rows[r][c])];
          ++total;
        }
        if (total == 0) continue;
        std::size_t top = 0;
        for (const auto& [value, n] : counts) top = std::max(top, n);
        if (static_cast<double>(top) >= config.max_category_share * static_cast<double>(total)) {
          col_alive[c] = false;
          rep.columns_dropped.push_back(work.schema.columns[c].name);
          changed = true;
        }
      }
    }

    for (std::size_t r = 0; r < work.n_rows(); ++r) {
      if (!row_alive[r]) continue;
      for (std::size_t c = 0; c < work.n_cols(); ++c) {
        if (col_alive[c] && is_missing(work.rows[r][c])) {
          row_alive[r] = false;
          ++rep.rows_dropped_missing;
          changed = true;
          break;
        }
      }
    }

    for (std::size_t c = 0; c < work.n_cols(); ++c) {
      if (!col_alive[c] || work.schema.columns[c].kind != ColumnKind::continuous) continue;
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t r = 0; r < work.n_rows(); ++r) {
        if (!row_alive[r]) continue;
        sum += as_number(work.rows[r][c]);
        ++n;
      }
      if (n == 0) continue;
      const double mean = sum / static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t r = 0; r < work.n_rows(); ++r) {
        if (!row_alive[r]) continue;
        const double d = as_number(work.rows[r][c]) - mean;
        ss += d * d;
      }
      const double stddev = std::sqrt(ss / static_cast<double>(n));
      if (stddev == 0.0) continue;  // constant column, nothing is an outlier
      for (std::size_t r = 0; r < work.n_rows(); ++r) {
        if (!row_alive[r]) continue;
        const double z = (as_number(work.rows[r][c]) - mean) / stddev;
        if (std::abs(z) > config.z_max) {
          row_alive[r] = false;
          ++rep.rows_dropped_outlier;
          changed = true;
        }
      }
    }

    for (std::size_t c = 0; c < work.n_cols(); ++c) {
      if (!col_alive[c] || c == target) continue;
      if (work.schema.columns[c].kind != ColumnKind::categorical) continue;
      std::map<std::string, std::size_t> counts;
      for (std::size_t r = 0; r < work.n_rows(); ++r) {
        if (row_alive[r]) ++counts[as_text(work.rows[r][c])];
      }
      for (std::size_t r = 0; r < work.n_rows(); ++r) {
        if (!row_alive[r]) continue;
        if (counts[as_text(work.rows[r][c])] < config.min_category_count) {
          row_alive[r] = false;
          ++rep.rows_dropped_rare_category;
          changed = true;
        }
      }
    }
  }

  Dataset out;
  for (std::size_t c = 0; c < work.n_cols(); ++c) {
    if (col_alive[c]) out.schema.columns.push_back(work.schema.columns[c]);
  }
  out.schema.target_positive_label = work.schema.target_positive_label;
  for (std::size_t r = 0; r < work.n_rows(); ++r) {
    if (!row_alive[r]) continue;
    std::vector<Cell> row;
    row.reserve(out.schema.columns.size());
    for (std::size_t c = 0; c < work.n_cols(); ++c) {
      if (col_alive[c]) row.push_back(work.rows[r][c]);
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace ptp::data
