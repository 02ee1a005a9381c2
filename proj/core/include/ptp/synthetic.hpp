#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ptp/dataset.hpp"

namespace ptp::data {

// Billing-style synthetic corpus: household demographics, area medians, bill
// dates and a paid-on-time target driven by a known logistic score. One
// continuous column carries most of the signal so feature-importance output
// has a known right answer.
struct SyntheticConfig {
  std::size_t n_rows = 1000;
  double positive_rate = 0.5837;
  // shifts several low-signal features and the send-method mix for the most
  // recent quarter of the timeline, so a chronological test split lands far
  // from the training distribution
  bool drift = false;
  // rank the scores and label the top fraction positive instead of sampling
  // labels; gives a dataset a good model can fit almost perfectly
  bool separable = false;
  std::uint64_t seed = 1;
};

struct SyntheticInfo {
  std::vector<std::pair<std::string, double>> coefficients;  // per standardized continuous column
  double intercept = 0.0;
  std::string planted_feature;  // continuous column with the dominant weight
  bool drift = false;
  CivilDate drift_start{};  // first drifted day, meaningful when drift is set
  bool separable = false;
  double positive_rate = 0.0;
  std::uint64_t seed = 0;
};

FeatureSchema synthetic_schema();
Dataset generate_synthetic(const SyntheticConfig& config, SyntheticInfo* info = nullptr);

// csv plus a schema.json that carries the generation metadata in an extra
// block (ignored by load_schema)
void save_synthetic(const Dataset& ds, const SyntheticInfo& info, const std::string& csv_path,
                    const std::string& schema_path);
std::optional<SyntheticInfo> load_synthetic_info(const std::string& schema_path);

}  // namespace ptp::data
