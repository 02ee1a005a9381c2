#include "ptp/transform.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ptp/random.hpp"

namespace ptp::data {

Dataset expand_date(const Dataset& ds, const std::string& column) {
  const std::size_t src = ds.schema.index_of(column);
  if (ds.schema.columns[src].kind != ColumnKind::date) {
    throw std::runtime_error("expand_date: column '" + column + "' is not a date column");
  }
  static constexpr const char* suffixes[5] = {"_year", "_month", "_week", "_dow", "_dom"};
  Dataset out;
  out.schema.target_positive_label = ds.schema.target_positive_label;
  for (std::size_t c = 0; c < ds.schema.columns.size(); ++c) {
    if (c != src) {
      out.schema.columns.push_back(ds.schema.columns[c]);
      continue;
    }
    for (const char* suffix : suffixes) {
      Column derived{column + suffix, ColumnKind::categorical};
      if (ds.schema.find(derived.name)) {
        throw std::runtime_error("expand_date: column '" + derived.name + "' already exists");
      }
      out.schema.columns.push_back(std::move(derived));
    }
  }
  out.rows.reserve(ds.rows.size());
  for (const auto& row : ds.rows) {
    std::vector<Cell> expanded;
    expanded.reserve(row.size() + 4);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c != src) {
        expanded.push_back(row[c]);
        continue;
      }
      if (is_missing(row[c])) {
        for (int k = 0; k < 5; ++k) expanded.emplace_back(std::monostate{});
        continue;
      }
      const CivilDate d = as_date(row[c]);
      expanded.emplace_back(std::to_string(d.year));
      expanded.emplace_back(std::to_string(d.month));
      expanded.emplace_back(std::to_string(iso_week(d)));
      expanded.emplace_back(std::to_string(day_of_week(d)));
      expanded.emplace_back(std::to_string(d.day));
    }
    out.rows.push_back(std::move(expanded));
  }
  return out;
}

std::pair<std::size_t, std::size_t> split_sizes(std::size_t n, double fraction) {
  if (fraction < 0.0 || fraction > 1.0) {
    throw std::invalid_argument("split: fraction must be within [0, 1]");
  }
  const auto test = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n) - 1e-9));  // guard fp noise on exact multiples
  return {n - test, test};
}

std::pair<Dataset, Dataset> time_split(const Dataset& ds, const std::string& order_column,
                                       double fraction) {
  const std::size_t col = ds.schema.index_of(order_column);
  if (ds.schema.columns[col].kind != ColumnKind::date) {
    throw std::runtime_error("time_split: order column '" + order_column + "' is not a date");
  }
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    if (is_missing(ds.rows[r][col])) {
      throw std::runtime_error("time_split: missing date in row " + std::to_string(r) +
                               "; clean the data first");
    }
  }
  std::vector<std::size_t> order(ds.n_rows());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return as_date(ds.rows[a][col]) < as_date(ds.rows[b][col]);
  });
  const auto [n_train, n_test] = split_sizes(ds.n_rows(), fraction);
  Dataset train, test;
  train.schema = ds.schema;
  test.schema = ds.schema;
  train.rows.reserve(n_train);
  test.rows.reserve(n_test);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? train : test).rows.push_back(ds.rows[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

Dataset oversample(const Dataset& ds, std::uint64_t seed) {
  const std::size_t target = ds.schema.target_index();
  std::string positive = ds.schema.target_positive_label;
  std::vector<std::size_t> pos, neg;
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    const Cell& cell = ds.rows[r][target];
    if (is_missing(cell)) {
      throw std::runtime_error("oversample: missing target in row " + std::to_string(r));
    }
    (as_text(cell) == positive ? pos : neg).push_back(r);
  }
  const auto& minority = pos.size() < neg.size() ? pos : neg;
  const std::size_t majority_count = std::max(pos.size(), neg.size());
  Dataset out = ds;
  if (minority.empty() || minority.size() == majority_count) return out;
  Rng rng(mix_seed(seed, 0x0eedULL));
  for (std::size_t need = majority_count - minority.size(); need > 0; --need) {
    out.rows.push_back(ds.rows[minority[rng.index(minority.size())]]);
  }
  return out;
}

}  // namespace ptp::data
