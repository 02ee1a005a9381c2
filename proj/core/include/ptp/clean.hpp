#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ptp/dataset.hpp"

namespace ptp::data {

struct CleanConfig {
  double z_max = 4.0;                  // drop rows with |z| above this on any continuous column
  std::size_t min_category_count = 5;  // drop rows holding a category seen fewer times
  double max_category_share = 0.99;    // drop categorical columns dominated by one value
  bool drop_imbalanced_columns = true;
};

struct CleanReport {
  std::size_t rows_dropped_missing = 0;
  std::size_t rows_dropped_outlier = 0;
  std::size_t rows_dropped_rare_category = 0;
  std::vector<std::string> columns_dropped;
  std::size_t passes = 0;
};

// Trims and ASCII-lowercases every text cell and the positive label; cells
// left empty become missing. Applied by clean() before any drop rule and by
// inference-time preparation, so stored category dictionaries always match.
Dataset normalize_cells(const Dataset& ds);

// Normalizes text cells (trim + ASCII lowercase), then repeatedly applies the
// drop rules until nothing changes: rows with missing cells, rows with a
// |z-score| outlier in a continuous column (population std; a constant column
// drops nothing), rows holding a rare category, and categorical columns where
// one value's share reaches max_category_share (the target is never dropped).
// Iterating to the fixpoint makes the operation idempotent.
Dataset clean(const Dataset& ds, const CleanConfig& config, CleanReport* report = nullptr);

}  // namespace ptp::data
