#include "ptp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "ptp/random.hpp"

namespace ptp::data {

namespace {

using nlohmann::json;

struct CategoricalSpec {
  const char* name;
  std::vector<std::string> values;
  std::vector<double> base_weights;
  std::vector<double> effects;  // additive score contribution per value
};

struct ContinuousSpec {
  const char* name;
  double mean, stddev;
  double lo, hi;
  int decimals;
  double weight;       // score weight on (x - mean) / stddev
  double drift_sigma;  // mean shift, in stddevs, applied to drifted rows
};

// The drifted columns carry (almost) no label signal on purpose: the label
// distribution stays calibrated while the inputs move far from the training
// range, which is exactly the regime where predictive uncertainty should
// widen.
const std::vector<CategoricalSpec>& categorical_specs() {
  static const std::vector<CategoricalSpec> specs = {
      {"age_range",
       {"18-29", "30-44", "45-59", "60-74", "75+"},
       {0.18, 0.27, 0.25, 0.19, 0.11},
       {-0.30, -0.10, 0.10, 0.25, 0.35}},
      {"income_group",
       {"low", "lower middle", "middle", "upper middle", "high"},
       {0.20, 0.24, 0.26, 0.19, 0.11},
       {-0.35, -0.15, 0.0, 0.20, 0.35}},
      {"remoteness",
       {"major city", "inner regional", "outer regional", "remote", "very remote"},
       {0.55, 0.21, 0.14, 0.07, 0.03},
       {0.10, 0.0, -0.10, -0.25, -0.35}},
      {"send_method", {"email", "post", "sms"}, {0.45, 0.35, 0.20}, {0.35, -0.05, -0.45}},
  };
  return specs;
}

const std::vector<double>& drift_send_method_weights() {
  static const std::vector<double> w = {0.70, 0.10, 0.20};
  return w;
}

const std::vector<ContinuousSpec>& continuous_specs() {
  static const std::vector<ContinuousSpec> specs = {
      {"bill_duration", 91.0, 7.0, 30.0, 180.0, 0, -0.45, 0.0},
      {"account_age", 7.0, 4.0, 0.0, 40.0, 2, 0.55, 0.0},
      {"area_median_weekly_income", 680.0, 160.0, 200.0, 2500.0, 0, 2.3, 0.0},
      {"area_median_household_income", 1438.0, 290.0, 300.0, 4000.0, 0, 0.25, 0.0},
      {"area_median_weekly_rent", 355.0, 85.0, 50.0, 1500.0, 0, 0.0, 4.0},
      {"area_median_weekly_mortgage", 430.0, 105.0, 50.0, 2000.0, 0, 0.0, 4.0},
      {"area_median_household_size", 2.6, 0.45, 1.0, 6.0, 2, 0.10, 2.5},
      {"area_median_persons_per_bedroom", 1.1, 0.18, 0.5, 3.0, 2, 0.0, 0.0},
  };
  return specs;
}

constexpr CivilDate kBaseFrom{2018, 1, 1};
constexpr CivilDate kBaseTo{2019, 6, 30};
constexpr CivilDate kDriftFrom{2019, 7, 1};
constexpr CivilDate kDriftTo{2019, 12, 31};

// rounds to `decimals` places and clamps; keeps values that round-trip
// exactly through their shortest decimal form
double quantize(double v, int decimals, double lo, double hi) {
  const double scale = std::pow(10.0, decimals);
  const double q = std::round(v * scale) / scale;
  return std::min(hi, std::max(lo, q));
}

std::size_t pick_weighted(Rng& rng, const std::vector<double>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return i;
  }
  return weights.size() - 1;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// intercept b such that mean sigmoid(b + s_i) equals the requested rate
double solve_intercept(const std::vector<double>& scores, double rate) {
  auto mean_rate = [&](double b) {
    double acc = 0.0;
    for (double s : scores) acc += sigmoid(b + s);
    return acc / static_cast<double>(scores.size());
  };
  double lo = -30.0, hi = 30.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_rate(mid) < rate ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

FeatureSchema synthetic_schema() {
  FeatureSchema schema;
  for (const auto& spec : categorical_specs()) {
    schema.columns.push_back({spec.name, ColumnKind::categorical});
  }
  schema.columns.push_back({"issue_date", ColumnKind::date});
  schema.columns.push_back({"due_date", ColumnKind::date});
  for (const auto& spec : continuous_specs()) {
    schema.columns.push_back({spec.name, ColumnKind::continuous});
  }
  schema.columns.push_back({"paid_on_time", ColumnKind::target});
  schema.target_positive_label = "yes";
  schema.validate();
  return schema;
}

Dataset generate_synthetic(const SyntheticConfig& config, SyntheticInfo* info) {
  if (config.n_rows == 0) throw std::invalid_argument("synthetic: n_rows must be positive");
  if (config.positive_rate <= 0.0 || config.positive_rate >= 1.0) {
    throw std::invalid_argument("synthetic: positive_rate must lie in (0, 1)");
  }

  Dataset ds;
  ds.schema = synthetic_schema();
  ds.rows.reserve(config.n_rows);

  const std::size_t n_drift =
      config.drift ? static_cast<std::size_t>(std::llround(0.25 * static_cast<double>(config.n_rows)))
                   : 0;
  const std::size_t n_base = config.n_rows - n_drift;

  Rng feature_rng(mix_seed(config.seed, 1));
  Rng label_rng(mix_seed(config.seed, 2));

  const std::int64_t base_lo = serial_day(kBaseFrom);
  const std::int64_t base_span = serial_day(kBaseTo) - base_lo + 1;
  const std::int64_t drift_lo = serial_day(kDriftFrom);
  const std::int64_t drift_span = serial_day(kDriftTo) - drift_lo + 1;

  std::vector<double> scores(config.n_rows, 0.0);
  for (std::size_t r = 0; r < config.n_rows; ++r) {
    const bool drifted = r >= n_base;
    std::vector<Cell> row;
    row.reserve(ds.schema.columns.size());
    double score = 0.0;

    for (const auto& spec : categorical_specs()) {
      const bool shifted = drifted && std::string_view(spec.name) == "send_method";
      const auto& weights = shifted ? drift_send_method_weights() : spec.base_weights;
      const std::size_t pick = pick_weighted(feature_rng, weights);
      row.emplace_back(spec.values[pick]);
      score += spec.effects[pick];
    }

    const std::int64_t day = drifted
                                 ? drift_lo + static_cast<std::int64_t>(
                                                  feature_rng.index(static_cast<std::size_t>(drift_span)))
                                 : base_lo + static_cast<std::int64_t>(
                                                 feature_rng.index(static_cast<std::size_t>(base_span)));
    const CivilDate issue = from_serial_day(day);

    double duration = 0.0;
    std::vector<double> cont_values;
    cont_values.reserve(continuous_specs().size());
    for (const auto& spec : continuous_specs()) {
      double v = feature_rng.normal(spec.mean, spec.stddev);
      if (drifted && spec.drift_sigma != 0.0) v += spec.drift_sigma * spec.stddev;
      v = quantize(v, spec.decimals, spec.lo, spec.hi);
      cont_values.push_back(v);
      score += spec.weight * (v - spec.mean) / spec.stddev;
      if (std::string_view(spec.name) == "bill_duration") duration = v;
    }

    row.emplace_back(issue);
    row.emplace_back(add_days(issue, static_cast<std::int64_t>(duration)));
    for (double v : cont_values) row.emplace_back(v);
    row.emplace_back(std::string{});  // target placeholder
    ds.rows.push_back(std::move(row));
    scores[r] = score;
  }

  const std::size_t target_col = ds.schema.target_index();
  double intercept = 0.0;
  if (config.separable) {
    const auto k = static_cast<std::size_t>(
        std::llround(config.positive_rate * static_cast<double>(config.n_rows)));
    std::vector<std::size_t> order(config.n_rows);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    for (std::size_t i = 0; i < order.size(); ++i) {
      ds.rows[order[i]][target_col] = std::string(i < k ? "yes" : "no");
    }
  } else {
    intercept = solve_intercept(scores, config.positive_rate);
    for (std::size_t r = 0; r < config.n_rows; ++r) {
      const bool paid = label_rng.uniform() < sigmoid(intercept + scores[r]);
      ds.rows[r][target_col] = std::string(paid ? "yes" : "no");
    }
  }

  if (info) {
    info->coefficients.clear();
    double best = 0.0;
    for (const auto& spec : continuous_specs()) {
      info->coefficients.emplace_back(spec.name, spec.weight);
      if (std::abs(spec.weight) > best) {
        best = std::abs(spec.weight);
        info->planted_feature = spec.name;
      }
    }
    info->intercept = intercept;
    info->drift = config.drift;
    info->drift_start = kDriftFrom;
    info->separable = config.separable;
    info->positive_rate = config.positive_rate;
    info->seed = config.seed;
  }
  return ds;
}

void save_synthetic(const Dataset& ds, const SyntheticInfo& info, const std::string& csv_path,
                    const std::string& schema_path) {
  write_csv(ds, csv_path);
  json cols = json::array();
  for (const auto& col : ds.schema.columns) {
    cols.push_back({{"name", col.name}, {"kind", std::string(to_string(col.kind))}});
  }
  json meta{{"seed", info.seed},
            {"positive_rate", info.positive_rate},
            {"drift", info.drift},
            {"separable", info.separable},
            {"intercept", info.intercept},
            {"planted_feature", info.planted_feature}};
  if (info.drift) meta["drift_start"] = format_date(info.drift_start);
  json coeffs = json::object();
  for (const auto& [name, w] : info.coefficients) coeffs[name] = w;
  meta["coefficients"] = coeffs;
  json j{{"columns", cols},
         {"target_positive_label", ds.schema.target_positive_label},
         {"synthetic", meta}};
  std::ofstream out(schema_path);
  if (!out) throw std::runtime_error("synthetic: cannot write " + schema_path);
  out << j.dump(2) << '\n';
}

std::optional<SyntheticInfo> load_synthetic_info(const std::string& schema_path) {
  std::ifstream in(schema_path);
  if (!in) throw std::runtime_error("synthetic: cannot open " + schema_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception&) {
    return std::nullopt;
  }
  if (!j.contains("synthetic")) return std::nullopt;
  const json& meta = j["synthetic"];
  SyntheticInfo info;
  info.seed = meta.value("seed", std::uint64_t{0});
  info.positive_rate = meta.value("positive_rate", 0.0);
  info.drift = meta.value("drift", false);
  info.separable = meta.value("separable", false);
  info.intercept = meta.value("intercept", 0.0);
  info.planted_feature = meta.value("planted_feature", std::string{});
  if (meta.contains("drift_start")) {
    if (auto d = parse_date(meta["drift_start"].get<std::string>())) info.drift_start = *d;
  }
  if (meta.contains("coefficients")) {
    for (const auto& [name, w] : meta["coefficients"].items()) {
      info.coefficients.emplace_back(name, w.get<double>());
    }
  }
  return info;
}

}  // namespace ptp::data
