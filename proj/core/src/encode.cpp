#include "ptp/encode.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>
#include <stdexcept>

namespace ptp::data {

namespace {

// FNV-1a, 64-bit
struct Hasher {
  std::uint64_t h = 1469598103934665603ULL;
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  }
  void text(std::string_view s) {
    bytes(s.data(), s.size());
    const char zero = '\0';
    bytes(&zero, 1);
  }
  void number(double v) { bytes(&v, sizeof v); }
  void integer(std::uint64_t v) { bytes(&v, sizeof v); }
};

}  // namespace

int CategoricalEncoding::index_of(std::string_view value) const {
  const auto it = std::lower_bound(categories.begin(), categories.end(), value);
  if (it == categories.end() || *it != value) return 0;
  return static_cast<int>(it - categories.begin()) + 1;
}

int ContinuousEncoding::bin_of(double raw) const {
  const std::size_t bins = bin_edges.size() - 1;
  const double lo = bin_edges.front(), hi = bin_edges.back();
  if (hi <= lo) return 0;
  const double t = (raw - lo) / (hi - lo) * static_cast<double>(bins);
  const auto b = static_cast<long>(std::floor(t));
  if (b < 0) return 0;
  if (b >= static_cast<long>(bins)) return static_cast<int>(bins) - 1;
  return static_cast<int>(b);
}

std::size_t Encoder::n_categorical() const {
  std::size_t n = 0;
  for (const auto& c : columns) n += c.kind == ColumnKind::categorical ? 1 : 0;
  return n;
}

std::size_t Encoder::n_continuous() const {
  std::size_t n = 0;
  for (const auto& c : columns) n += c.kind == ColumnKind::continuous ? 1 : 0;
  return n;
}

const EncodedColumn* Encoder::find(std::string_view name) const {
  for (const auto& c : columns) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::uint64_t Encoder::fingerprint() const {
  Hasher h;
  for (const auto& col : columns) {
    h.text(col.name);
    h.text(to_string(col.kind));
    if (col.kind == ColumnKind::categorical) {
      for (const auto& v : col.cat.categories) h.text(v);
    } else {
      h.number(col.cont.mean);
      h.number(col.cont.stddev);
      h.integer(col.cont.constant ? 1 : 0);
      for (double e : col.cont.bin_edges) h.number(e);
    }
  }
  h.text(target_name);
  h.text(positive_label);
  h.integer(bins);
  return h.h;
}

Encoder build_encoder(const Dataset& train, std::size_t bins) {
  train.schema.validate();
  if (bins < 1) throw std::invalid_argument("encoder: bins must be >= 1");
  Encoder enc;
  enc.bins = bins;
  enc.target_name = train.schema.target_name();
  enc.positive_label = train.schema.target_positive_label;
  const std::size_t target = train.schema.target_index();

  for (std::size_t c = 0; c < train.schema.columns.size(); ++c) {
    if (c == target) continue;
    const Column& col = train.schema.columns[c];
    if (col.kind == ColumnKind::date) {
      throw std::runtime_error("encoder: date column '" + col.name +
                               "' must be expanded before encoding");
    }
    EncodedColumn out;
    out.name = col.name;
    out.kind = col.kind;
    if (col.kind == ColumnKind::categorical) {
      std::set<std::string> distinct;
      for (const auto& row : train.rows) {
        if (!is_missing(row[c])) distinct.insert(as_text(row[c]));
      }
      out.cat.categories.assign(distinct.begin(), distinct.end());
    } else {
      double sum = 0.0, lo = 0.0, hi = 0.0;
      std::size_t n = 0;
      for (const auto& row : train.rows) {
        if (is_missing(row[c])) continue;
        const double v = as_number(row[c]);
        if (n == 0) {
          lo = hi = v;
        } else {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        sum += v;
        ++n;
      }
      if (n == 0) {
        out.cont.constant = true;
        out.cont.mean = 0.0;
        out.cont.stddev = 0.0;
        out.cont.bin_edges.assign(bins + 1, 0.0);
        enc.warnings.push_back("column '" + col.name + "' has no values; encoding it as zeros");
      } else {
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (const auto& row : train.rows) {
          if (is_missing(row[c])) continue;
          const double d = as_number(row[c]) - mean;
          ss += d * d;
        }
        const double stddev = std::sqrt(ss / static_cast<double>(n));
        out.cont.mean = mean;
        out.cont.stddev = stddev;
        out.cont.constant = stddev == 0.0;
        if (out.cont.constant) {
          enc.warnings.push_back("column '" + col.name + "' is constant; encoding it as zeros");
        }
        out.cont.bin_edges.resize(bins + 1);
        for (std::size_t b = 0; b <= bins; ++b) {
          out.cont.bin_edges[b] =
              lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
        }
      }
    }
    enc.columns.push_back(std::move(out));
  }
  return enc;
}

bool EncodedDataset::fully_labeled() const {
  return std::all_of(labels.begin(), labels.end(), [](int y) { return y >= 0; });
}

std::size_t EncodedDataset::positive_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

EncodedDataset apply_encoder(const Encoder& encoder, const Dataset& ds) {
  // resolve each encoder column in the incoming schema up front
  std::vector<std::size_t> positions;
  positions.reserve(encoder.columns.size());
  for (const auto& col : encoder.columns) {
    const Column* found = ds.schema.find(col.name);
    if (!found) {
      throw std::runtime_error("encoder: column '" + col.name + "' is missing from the data");
    }
    if (found->kind != col.kind) {
      throw std::runtime_error("encoder: column '" + col.name + "' has kind " +
                               std::string(to_string(found->kind)) + ", expected " +
                               std::string(to_string(col.kind)));
    }
    positions.push_back(ds.schema.index_of(col.name));
  }
  const Column* target_col = ds.schema.find(encoder.target_name);
  std::size_t target_pos = target_col ? ds.schema.index_of(encoder.target_name) : 0;

  EncodedDataset out;
  out.encoder = encoder;
  out.n_cat_ = encoder.n_categorical();
  out.n_cont_ = encoder.n_continuous();
  out.cat.reserve(ds.n_rows() * out.n_cat_);
  out.cont.reserve(ds.n_rows() * out.n_cont_);
  out.bin.reserve(ds.n_rows() * out.n_cont_);

  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    const auto& row = ds.rows[r];
    bool usable = true;
    for (std::size_t j = 0; j < encoder.columns.size() && usable; ++j) {
      usable = !is_missing(row[positions[j]]);
    }
    if (!usable) continue;
    for (std::size_t j = 0; j < encoder.columns.size(); ++j) {
      const EncodedColumn& col = encoder.columns[j];
      const Cell& cell = row[positions[j]];
      if (col.kind == ColumnKind::categorical) {
        out.cat.push_back(col.cat.index_of(as_text(cell)));
      } else {
        const double v = as_number(cell);
        out.cont.push_back(col.cont.standardize(v));
        out.bin.push_back(col.cont.bin_of(v));
      }
    }
    int label = -1;
    if (target_col && !is_missing(row[target_pos])) {
      label = as_text(row[target_pos]) == encoder.positive_label ? 1 : 0;
    }
    out.labels.push_back(label);
    out.source_rows.push_back(r);
    ++out.n_rows;
  }
  return out;
}

std::pair<EncodedDataset, EncodedDataset> encode(const Dataset& train, const Dataset& test,
                                                 std::size_t bins) {
  if (!(train.schema == test.schema)) {
    throw std::runtime_error("encode: train and test schemas differ");
  }
  Encoder enc = build_encoder(train, bins);
  return {apply_encoder(enc, train), apply_encoder(enc, test)};
}

OneHotLayout OneHotLayout::standardized(const Encoder& encoder) {
  OneHotLayout layout;
  layout.binned = false;
  for (const auto& col : encoder.columns) {
    layout.offsets.push_back(layout.width);
    if (col.kind == ColumnKind::categorical) {
      layout.names.push_back(col.name + "=<unknown>");
      for (const auto& v : col.cat.categories) layout.names.push_back(col.name + "=" + v);
      layout.width += col.cat.cardinality();
    } else {
      layout.names.push_back(col.name);
      layout.width += 1;
    }
  }
  return layout;
}

OneHotLayout OneHotLayout::binned_counts(const Encoder& encoder) {
  OneHotLayout layout;
  layout.binned = true;
  for (const auto& col : encoder.columns) {
    layout.offsets.push_back(layout.width);
    if (col.kind == ColumnKind::categorical) {
      layout.names.push_back(col.name + "=<unknown>");
      for (const auto& v : col.cat.categories) layout.names.push_back(col.name + "=" + v);
      layout.width += col.cat.cardinality();
    } else {
      for (std::size_t b = 0; b < encoder.bins; ++b) {
        layout.names.push_back(col.name + "#" + std::to_string(b));
      }
      layout.width += encoder.bins;
    }
  }
  return layout;
}

void OneHotLayout::fill_row(const EncodedDataset& ds, std::size_t row, double* out) const {
  std::memset(out, 0, width * sizeof(double));
  std::size_t jc = 0, jq = 0;
  for (std::size_t j = 0; j < ds.encoder.columns.size(); ++j) {
    const auto& col = ds.encoder.columns[j];
    if (col.kind == ColumnKind::categorical) {
      out[offsets[j] + static_cast<std::size_t>(ds.cat_at(row, jc))] = 1.0;
      ++jc;
    } else if (binned) {
      out[offsets[j] + static_cast<std::size_t>(ds.bin_at(row, jq))] = 1.0;
      ++jq;
    } else {
      out[offsets[j]] = ds.cont_at(row, jq);
      ++jq;
    }
  }
}

double OneHotLayout::dot(const EncodedDataset& ds, std::size_t row, const double* weights) const {
  double acc = 0.0;
  std::size_t jc = 0, jq = 0;
  for (std::size_t j = 0; j < ds.encoder.columns.size(); ++j) {
    const auto& col = ds.encoder.columns[j];
    if (col.kind == ColumnKind::categorical) {
      acc += weights[offsets[j] + static_cast<std::size_t>(ds.cat_at(row, jc))];
      ++jc;
    } else if (binned) {
      acc += weights[offsets[j] + static_cast<std::size_t>(ds.bin_at(row, jq))];
      ++jq;
    } else {
      acc += weights[offsets[j]] * ds.cont_at(row, jq);
      ++jq;
    }
  }
  return acc;
}

void OneHotLayout::axpy(const EncodedDataset& ds, std::size_t row, double a, double* acc) const {
  std::size_t jc = 0, jq = 0;
  for (std::size_t j = 0; j < ds.encoder.columns.size(); ++j) {
    const auto& col = ds.encoder.columns[j];
    if (col.kind == ColumnKind::categorical) {
      acc[offsets[j] + static_cast<std::size_t>(ds.cat_at(row, jc))] += a;
      ++jc;
    } else if (binned) {
      acc[offsets[j] + static_cast<std::size_t>(ds.bin_at(row, jq))] += a;
      ++jq;
    } else {
      acc[offsets[j]] += a * ds.cont_at(row, jq);
      ++jq;
    }
  }
}

}  // namespace ptp::data
