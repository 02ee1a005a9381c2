#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "ptp/dataset.hpp"

namespace ptp::data {

// Replaces a date column with five categorical columns derived from it,
// named <col>_year, <col>_month, <col>_week (ISO week 1..53), <col>_dow
// (Monday = 0) and <col>_dom, in that order at the original position.
// A missing date yields five missing cells.
Dataset expand_date(const Dataset& ds, const std::string& column);

// (train_rows, test_rows) for a chronological split: test takes the last
// ceil(fraction * n) rows
std::pair<std::size_t, std::size_t> split_sizes(std::size_t n, double fraction);

// Stable-sorts rows by the given date column (ties keep input order) and cuts
// off the most recent ceil(fraction * n) rows as the test set, so the test
// period always follows the training period. Rows with a missing date in the
// order column are an error; run clean() first.
std::pair<Dataset, Dataset> time_split(const Dataset& ds, const std::string& order_column,
                                       double fraction);

// Appends seeded duplicates of random minority-class rows until both classes
// have equal counts. Balanced input comes back unchanged.
Dataset oversample(const Dataset& ds, std::uint64_t seed);

}  // namespace ptp::data
