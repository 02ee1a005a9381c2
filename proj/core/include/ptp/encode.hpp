#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ptp/dataset.hpp"

namespace ptp::data {

struct CategoricalEncoding {
  // sorted distinct training values; value i maps to index i + 1, index 0 is
  // reserved for categories never seen in training
  std::vector<std::string> categories;

  int index_of(std::string_view value) const;
  std::size_t cardinality() const { return categories.size() + 1; }  // includes unknown
};

struct ContinuousEncoding {
  double mean = 0.0;
  double stddev = 1.0;  // population std of the training column
  bool constant = false;
  std::vector<double> bin_edges;  // bins + 1 ascending edges over the training range

  double standardize(double raw) const { return constant ? 0.0 : (raw - mean) / stddev; }
  int bin_of(double raw) const;  // equal-width bin index, clamped to [0, bins-1]
};

struct EncodedColumn {
  std::string name;
  ColumnKind kind = ColumnKind::categorical;  // categorical or continuous only
  CategoricalEncoding cat;
  ContinuousEncoding cont;
};

// Everything fitted on the training split that inference needs to reproduce:
// per-column dictionaries, standardization stats and bin edges, plus the
// target binarization. Model artifacts embed a copy.
struct Encoder {
  std::vector<EncodedColumn> columns;  // feature columns in schema order
  std::string target_name;
  std::string positive_label;
  std::size_t bins = 10;
  std::vector<std::string> warnings;  // e.g. constant columns

  std::size_t n_categorical() const;
  std::size_t n_continuous() const;
  const EncodedColumn* find(std::string_view name) const;
  // fingerprint of names, kinds, dictionaries and stats; artifacts store it
  // so corruption or hand-edits are caught on load
  std::uint64_t fingerprint() const;
};

// Fits dictionaries and statistics on the training split only. Date columns
// must have been expanded beforehand (error otherwise).
Encoder build_encoder(const Dataset& train, std::size_t bins = 10);

// Row-major encoded feature blocks. Rows with a missing feature cell are
// skipped; source_rows maps each encoded row back to its dataset row. Labels
// are 0/1, or -1 when the target cell is missing (prediction-time data).
struct EncodedDataset {
  Encoder encoder;
  std::size_t n_rows = 0;
  std::vector<int> cat;      // n_rows x n_categorical dictionary indices
  std::vector<double> cont;  // n_rows x n_continuous standardized values
  std::vector<int> bin;      // n_rows x n_continuous bin indices
  std::vector<int> labels;   // n_rows
  std::vector<std::size_t> source_rows;

  int cat_at(std::size_t row, std::size_t j) const { return cat[row * n_cat_ + j]; }
  double cont_at(std::size_t row, std::size_t j) const { return cont[row * n_cont_ + j]; }
  int bin_at(std::size_t row, std::size_t j) const { return bin[row * n_cont_ + j]; }
  bool fully_labeled() const;
  std::size_t positive_count() const;

  // set by apply_encoder; kept as members so the hot accessors stay branchless
  std::size_t n_cat_ = 0;
  std::size_t n_cont_ = 0;
};

EncodedDataset apply_encoder(const Encoder& encoder, const Dataset& ds);

// fits on train, applies to both; schemas must match
std::pair<EncodedDataset, EncodedDataset> encode(const Dataset& train, const Dataset& test,
                                                 std::size_t bins = 10);

// Flat feature-vector view of an EncodedDataset: one slot per continuous
// column (standardized) or per category (one-hot, slot 0 = unknown). The
// binned flavor replaces each continuous value with a one-hot over its bins,
// which is what the count-based classifier consumes. Rows are only ever
// materialized on demand; the sparse helpers avoid building them at all.
struct OneHotLayout {
  bool binned = false;
  std::size_t width = 0;
  std::vector<std::size_t> offsets;  // aligned with encoder.columns
  std::vector<std::string> names;    // width entries

  static OneHotLayout standardized(const Encoder& encoder);
  static OneHotLayout binned_counts(const Encoder& encoder);

  void fill_row(const EncodedDataset& ds, std::size_t row, double* out) const;  // zeroes first
  double dot(const EncodedDataset& ds, std::size_t row, const double* weights) const;
  // acc += a * x_row
  void axpy(const EncodedDataset& ds, std::size_t row, double a, double* acc) const;
};

}  // namespace ptp::data
