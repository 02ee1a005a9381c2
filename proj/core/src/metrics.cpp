#include "ptp/metrics.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "ptp/dataset.hpp"

namespace ptp::metrics {

namespace {

using nlohmann::json;

std::optional<double> ratio(std::int64_t num, std::int64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::optional<double> harmonic(std::optional<double> p, std::optional<double> r) {
  if (!p || !r) return std::nullopt;
  if (*p + *r == 0.0) return std::nullopt;
  return 2.0 * *p * *r / (*p + *r);
}

std::string opt_to_csv(const std::optional<double>& v) {
  return v ? data::format_number(*v) : std::string{};
}

json opt_to_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

ConfusionResult confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw std::invalid_argument("confusion: label and prediction counts differ");
  }
  ConfusionResult out;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if (t != 0 && t != 1) throw std::invalid_argument("confusion: labels must be 0 or 1");
    if (p == kUndecided) {
      ++out.abstained;
      continue;
    }
    if (p != 0 && p != 1) {
      throw std::invalid_argument("confusion: predictions must be 0, 1 or undecided");
    }
    if (p == 1) {
      ++(t == 1 ? out.matrix.tp : out.matrix.fp);
    } else {
      ++(t == 0 ? out.matrix.tn : out.matrix.fn);
    }
  }
  return out;
}

BasicMetrics basic_metrics(const ConfusionMatrix& m) {
  BasicMetrics out;
  out.accuracy = ratio(m.tp + m.tn, m.total());
  out.precision = ratio(m.tp, m.tp + m.fp);
  out.recall = ratio(m.tp, m.tp + m.fn);
  out.f1 = harmonic(out.precision, out.recall);
  return out;
}

std::optional<double> cohen_kappa(const ConfusionMatrix& m) {
  const std::int64_t n = m.total();
  if (n == 0) return std::nullopt;
  const double dn = static_cast<double>(n);
  const double observed = static_cast<double>(m.tp + m.tn) / dn;
  // chance agreement from the marginal prediction/label rates
  const double expected = (static_cast<double>(m.tp + m.fp) * static_cast<double>(m.tp + m.fn) +
                           static_cast<double>(m.tn + m.fn) * static_cast<double>(m.tn + m.fp)) /
                          (dn * dn);
  if (expected == 1.0) return std::nullopt;
  return (observed - expected) / (1.0 - expected);
}

double roc_auc(std::span<const int> y_true, std::span<const double> scores) {
  if (y_true.size() != scores.size()) {
    throw std::invalid_argument("roc_auc: label and score counts differ");
  }
  std::int64_t pos = 0, neg = 0;
  for (int t : y_true) {
    if (t != 0 && t != 1) throw std::invalid_argument("roc_auc: labels must be 0 or 1");
    ++(t == 1 ? pos : neg);
  }
  if (pos == 0 || neg == 0) {
    throw std::invalid_argument("roc_auc: needs both classes present");
  }
  std::vector<std::size_t> order(y_true.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  // twice the unnormalized area, accumulated exactly in integers
  std::int64_t area2 = 0;
  std::int64_t tp_before = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::int64_t group_pos = 0, group_neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      ++(y_true[order[j]] == 1 ? group_pos : group_neg);
      ++j;
    }
    area2 += group_neg * (2 * tp_before + group_pos);
    tp_before += group_pos;
    i = j;
  }
  return static_cast<double>(area2) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

ClasswiseReport classwise_report(const ConfusionMatrix& m) {
  ClasswiseReport rep;
  rep.negative.label = "0";
  rep.negative.precision = ratio(m.tn, m.tn + m.fn);
  rep.negative.recall = ratio(m.tn, m.tn + m.fp);
  rep.negative.f1 = harmonic(rep.negative.precision, rep.negative.recall);
  rep.negative.support = m.tn + m.fp;

  rep.positive.label = "1";
  rep.positive.precision = ratio(m.tp, m.tp + m.fp);
  rep.positive.recall = ratio(m.tp, m.tp + m.fn);
  rep.positive.f1 = harmonic(rep.positive.precision, rep.positive.recall);
  rep.positive.support = m.tp + m.fn;

  auto average = [&](std::optional<double> a, std::optional<double> b, bool weighted) {
    if (!a || !b) return std::optional<double>{};
    if (!weighted) return std::optional<double>{0.5 * (*a + *b)};
    const double s0 = static_cast<double>(rep.negative.support);
    const double s1 = static_cast<double>(rep.positive.support);
    if (s0 + s1 == 0.0) return std::optional<double>{};
    return std::optional<double>{(*a * s0 + *b * s1) / (s0 + s1)};
  };

  rep.macro.label = "macro avg";
  rep.macro.precision = average(rep.negative.precision, rep.positive.precision, false);
  rep.macro.recall = average(rep.negative.recall, rep.positive.recall, false);
  rep.macro.f1 = average(rep.negative.f1, rep.positive.f1, false);
  rep.macro.support = rep.negative.support + rep.positive.support;

  rep.weighted.label = "weighted avg";
  rep.weighted.precision = average(rep.negative.precision, rep.positive.precision, true);
  rep.weighted.recall = average(rep.negative.recall, rep.positive.recall, true);
  rep.weighted.f1 = average(rep.negative.f1, rep.positive.f1, true);
  rep.weighted.support = rep.macro.support;
  return rep;
}

double Evaluation::abstention_rate() const {
  const std::int64_t n = matrix.total() + abstained;
  return n == 0 ? 0.0 : static_cast<double>(abstained) / static_cast<double>(n);
}

Evaluation evaluate(std::span<const int> y_true, std::span<const int> y_pred,
                    std::span<const double> scores) {
  Evaluation ev;
  const ConfusionResult cr = confusion(y_true, y_pred);
  ev.matrix = cr.matrix;
  ev.abstained = cr.abstained;
  ev.basic = basic_metrics(ev.matrix);
  ev.kappa = cohen_kappa(ev.matrix);
  ev.classwise = classwise_report(ev.matrix);
  if (!scores.empty()) {
    bool has_pos = false, has_neg = false;
    for (int t : y_true) (t == 1 ? has_pos : has_neg) = true;
    if (has_pos && has_neg) ev.auc = roc_auc(y_true, scores);
  }
  return ev;
}

void write_metrics_json(const Evaluation& ev, const std::string& model, const std::string& path) {
  json rows = json::array();
  for (const ClassRow* row :
       {&ev.classwise.negative, &ev.classwise.positive, &ev.classwise.macro, &ev.classwise.weighted}) {
    rows.push_back({{"class", row->label},
                    {"precision", opt_to_json(row->precision)},
                    {"recall", opt_to_json(row->recall)},
                    {"f1", opt_to_json(row->f1)},
                    {"support", row->support}});
  }
  json j{{"model", model},
         {"confusion",
          {{"tp", ev.matrix.tp}, {"tn", ev.matrix.tn}, {"fp", ev.matrix.fp}, {"fn", ev.matrix.fn}}},
         {"evaluated", ev.matrix.total()},
         {"abstained", ev.abstained},
         {"abstention_rate", ev.abstention_rate()},
         {"accuracy", opt_to_json(ev.basic.accuracy)},
         {"precision", opt_to_json(ev.basic.precision)},
         {"recall", opt_to_json(ev.basic.recall)},
         {"f1", opt_to_json(ev.basic.f1)},
         {"kappa", opt_to_json(ev.kappa)},
         {"auc", opt_to_json(ev.auc)},
         {"classwise", rows}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("metrics: cannot write " + path);
  out << j.dump(2) << '\n';
}

void append_metrics_table(const Evaluation& ev, const std::string& model, const std::string& path) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("metrics: cannot write " + path);
  if (fresh) out << "model,accuracy,precision,recall,f1,kappa,auc,evaluated,abstained\n";
  out << model << ',' << opt_to_csv(ev.basic.accuracy) << ',' << opt_to_csv(ev.basic.precision)
      << ',' << opt_to_csv(ev.basic.recall) << ',' << opt_to_csv(ev.basic.f1) << ','
      << opt_to_csv(ev.kappa) << ',' << opt_to_csv(ev.auc) << ',' << ev.matrix.total() << ','
      << ev.abstained << '\n';
}

void write_classwise_csv(const Evaluation& ev, const std::string& model, const std::string& path) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("metrics: cannot write " + path);
  if (fresh) out << "model,class,precision,recall,f1,support\n";
  for (const ClassRow* row :
       {&ev.classwise.negative, &ev.classwise.positive, &ev.classwise.macro, &ev.classwise.weighted}) {
    out << model << ',' << row->label << ',' << opt_to_csv(row->precision) << ','
        << opt_to_csv(row->recall) << ',' << opt_to_csv(row->f1) << ',' << row->support << '\n';
  }
}

}  // namespace ptp::metrics
