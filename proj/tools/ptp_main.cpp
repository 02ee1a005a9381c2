// Command line front end: generate synthetic billing data, then train,
// evaluate, score and inspect the seven model families on it.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ptp/bnn.hpp"
#include "ptp/dataset.hpp"
#include "ptp/metrics.hpp"
#include "ptp/model_store.hpp"
#include "ptp/pipeline.hpp"
#include "ptp/synthetic.hpp"

namespace fs = std::filesystem;
using namespace ptp;

namespace {

// Removes files created by a failed command so a crash never leaves a
// half-written artifact behind.
class OutputGuard {
 public:
  void track(const fs::path& p) { paths_.push_back(p); }
  void release() { paths_.clear(); }
  ~OutputGuard() {
    for (const auto& p : paths_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

 private:
  std::vector<fs::path> paths_;
};

struct PrepareOpts {
  std::string order_column;
  double test_fraction = 0.2;
  bool no_oversample = false;
  std::size_t bins = 10;
  double z_max = 4.0;
  std::size_t min_category_count = 5;
};

void add_prepare_flags(CLI::App* cmd, PrepareOpts& o) {
  cmd->add_option("--order-column", o.order_column,
                  "date column ordering the time split (default: first date column)");
  cmd->add_option("--test-fraction", o.test_fraction, "chronological tail held out for testing")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_flag("--no-oversample", o.no_oversample, "skip minority oversampling of the train split");
  cmd->add_option("--bins", o.bins, "equal-width bins for continuous features");
  cmd->add_option("--z-max", o.z_max, "drop rows with a larger |z| in any continuous column");
  cmd->add_option("--min-category-count", o.min_category_count,
                  "drop rows holding a category seen fewer times");
}

pipeline::PrepareConfig make_prepare_config(const PrepareOpts& o, std::uint64_t seed) {
  pipeline::PrepareConfig config;
  config.order_column = o.order_column;
  config.test_fraction = o.test_fraction;
  config.oversample_train = !o.no_oversample;
  config.bins = o.bins;
  config.seed = seed;
  config.clean.z_max = o.z_max;
  config.clean.min_category_count = o.min_category_count;
  return config;
}

data::Dataset load_inputs(const std::string& data_path, const std::string& schema_path) {
  return data::load_csv(data_path, data::load_schema(schema_path));
}

std::string outcome_text(int outcome) {
  if (outcome == metrics::kUndecided) return "undecided";
  return std::to_string(outcome);
}

int run_generate(const std::string& out_dir, const data::SyntheticConfig& config) {
  fs::create_directories(out_dir);
  data::SyntheticInfo info;
  const data::Dataset ds = data::generate_synthetic(config, &info);
  const fs::path csv = fs::path(out_dir) / "data.csv";
  const fs::path schema = fs::path(out_dir) / "schema.json";
  OutputGuard guard;
  guard.track(csv);
  guard.track(schema);
  data::save_synthetic(ds, info, csv.string(), schema.string());
  guard.release();
  std::cout << "wrote " << ds.n_rows() << " rows to " << csv.string() << '\n';
  return 0;
}

int run_train(const std::string& data_path, const std::string& schema_path,
              const std::string& out_dir, const pipeline::TrainSpec& spec,
              const PrepareOpts& prep) {
  const data::Dataset raw = load_inputs(data_path, schema_path);
  const pipeline::Prepared prepared = pipeline::prepare(raw, make_prepare_config(prep, spec.seed));
  std::cout << "prepared " << prepared.train.n_rows << " train / " << prepared.test.n_rows
            << " test rows (split on " << prepared.order_column << ")\n";

  const model_store::Artifact artifact = pipeline::train_model(spec, prepared.train);

  fs::create_directories(out_dir);
  const fs::path model_path =
      fs::path(out_dir) / ("model." + std::string(pipeline::to_string(spec.kind)) + ".json");
  OutputGuard guard;
  guard.track(model_path);
  model_store::save_model(artifact, model_path.string());
  guard.release();
  std::cout << "wrote " << model_path.string() << '\n';
  return 0;
}

int run_evaluate(const std::string& data_path, const std::string& schema_path,
                 const std::string& model_path, const std::string& out_dir, std::uint64_t seed,
                 const PrepareOpts& prep, const pipeline::PredictConfig& predict) {
  const model_store::Artifact artifact = model_store::load_model(model_path);
  const data::Dataset raw = load_inputs(data_path, schema_path);
  const pipeline::Prepared prepared = pipeline::prepare(raw, make_prepare_config(prep, seed));

  const pipeline::Predictions preds =
      pipeline::predict_with_model(artifact, prepared.test, predict);
  const metrics::Evaluation ev = pipeline::evaluate_predictions(prepared.test, preds);

  fs::create_directories(out_dir);
  metrics::write_metrics_json(ev, artifact.kind, (fs::path(out_dir) / "metrics.json").string());
  metrics::append_metrics_table(ev, artifact.kind,
                                (fs::path(out_dir) / "metrics_table.csv").string());
  metrics::write_classwise_csv(ev, artifact.kind, (fs::path(out_dir) / "classwise.csv").string());

  std::cout << artifact.kind << ": accuracy "
            << (ev.basic.accuracy ? data::format_number(*ev.basic.accuracy) : "n/a") << " on "
            << ev.matrix.total() << " rows";
  if (ev.abstained > 0) std::cout << " (" << ev.abstained << " undecided)";
  std::cout << '\n';
  return 0;
}

int run_predict(const std::string& data_path, const std::string& schema_path,
                const std::string& model_path, const std::string& out_dir,
                const pipeline::PredictConfig& predict, std::size_t histogram_bins) {
  const model_store::Artifact artifact = model_store::load_model(model_path);
  const data::Dataset raw = load_inputs(data_path, schema_path);
  const data::EncodedDataset ds = pipeline::prepare_for_model(artifact.encoder, raw);
  if (ds.n_rows < raw.n_rows()) {
    std::cerr << "note: skipped " << raw.n_rows() - ds.n_rows << " rows with missing values\n";
  }

  fs::create_directories(out_dir);
  const fs::path pred_path = fs::path(out_dir) / "predictions.csv";
  OutputGuard guard;
  guard.track(pred_path);
  std::ofstream pred_out(pred_path);
  if (!pred_out) throw std::runtime_error("cannot write " + pred_path.string());
  pred_out << "row,outcome,probability,spread\n";

  if (const auto* model = std::get_if<bnn::Model>(&artifact.model)) {
    // one posterior pass feeds both the predictions and the histograms
    const std::size_t samples =
        predict.sample_count > 0 ? predict.sample_count : model->config.sample_count;
    const auto posteriors = bnn::posterior_predictive(*model, ds, samples, predict.seed);

    const fs::path hist_path = fs::path(out_dir) / "histograms.csv";
    guard.track(hist_path);
    std::ofstream hist_out(hist_path);
    if (!hist_out) throw std::runtime_error("cannot write " + hist_path.string());
    hist_out << "row,class,bin_lo,bin_hi,count\n";

    std::size_t undecided = 0;
    for (std::size_t r = 0; r < posteriors.size(); ++r) {
      const bnn::Decision d = bnn::decide(posteriors[r], predict.threshold);
      const int outcome = d.outcome == bnn::Outcome::undecided ? metrics::kUndecided
                                                               : static_cast<int>(d.outcome);
      if (outcome == metrics::kUndecided) ++undecided;
      pred_out << ds.source_rows[r] << ',' << outcome_text(outcome) << ','
               << data::format_number(posteriors[r].median[1]) << ','
               << data::format_number(d.spread) << '\n';
      for (int cls = 0; cls < 2; ++cls) {
        for (const auto& bin : bnn::log_probability_histogram(posteriors[r], cls, histogram_bins)) {
          hist_out << ds.source_rows[r] << ',' << cls << ',' << data::format_number(bin.lo) << ','
                   << data::format_number(bin.hi) << ',' << bin.count << '\n';
        }
      }
    }
    guard.release();
    std::cout << "wrote " << posteriors.size() << " predictions (" << undecided
              << " undecided) and " << hist_path.string() << '\n';
    return 0;
  }

  const pipeline::Predictions preds = pipeline::predict_with_model(artifact, ds, predict);
  for (std::size_t r = 0; r < preds.outcomes.size(); ++r) {
    pred_out << ds.source_rows[r] << ',' << outcome_text(preds.outcomes[r]) << ','
             << data::format_number(preds.scores[r]) << ','
             << data::format_number(preds.spread[r]) << '\n';
  }
  guard.release();
  std::cout << "wrote " << preds.outcomes.size() << " predictions to " << pred_path.string()
            << '\n';
  return 0;
}

int run_report(const std::string& model_path, const std::string& out_dir) {
  const model_store::Artifact artifact = model_store::load_model(model_path);

  std::vector<double> scores;
  const std::vector<trees::FeatureInfo>* features = nullptr;
  if (const auto* m = std::get_if<model_store::DecisionTreeModel>(&artifact.model)) {
    scores = trees::importance(*m->root, m->features.size());
    features = &m->features;
  } else if (const auto* m = std::get_if<trees::Forest>(&artifact.model)) {
    scores = trees::importance(*m);
    features = &m->features;
  } else if (const auto* m = std::get_if<trees::Gbm>(&artifact.model)) {
    scores = trees::importance(*m);
    features = &m->features;
  } else {
    throw std::runtime_error("feature importance needs a dt, rf or xgb model, got " +
                             artifact.kind);
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  fs::create_directories(out_dir);
  const fs::path path = fs::path(out_dir) / "importance.csv";
  OutputGuard guard;
  guard.track(path);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "feature,importance\n";
  for (std::size_t i : order) {
    out << (*features)[i].name << ',' << data::format_number(scores[i]) << '\n';
  }
  guard.release();
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"propensity-to-pay modelling toolkit"};
  app.require_subcommand(1);
  app.set_config("--config");

  std::string data_path, schema_path, model_path, out_dir = ".";
  std::uint64_t seed = 1;
  PrepareOpts prep;
  pipeline::PredictConfig predict;
  std::size_t histogram_bins = 10;

  auto* generate = app.add_subcommand("generate", "write a synthetic billing dataset");
  data::SyntheticConfig syn;
  generate->add_option("--out", out_dir, "output directory")->required();
  generate->add_option("--rows", syn.n_rows, "rows to generate")->check(CLI::PositiveNumber);
  generate->add_option("--rate", syn.positive_rate, "target share of positive labels");
  generate->add_flag("--drift", syn.drift, "shift the most recent quarter of the data");
  generate->add_flag("--separable", syn.separable,
                     "deterministic labels from the score ranking instead of sampling");
  generate->add_option("--seed", syn.seed, "generator seed");

  auto* train = app.add_subcommand("train", "prepare the data and fit one model");
  pipeline::TrainSpec spec;
  std::string kind_text = "bnn";
  train->add_option("--model", kind_text, "bnn, dnn, dt, rf, xgb, lr or mnb")->required();
  train->add_option("--data", data_path, "training csv")->required();
  train->add_option("--schema", schema_path, "schema json")->required();
  train->add_option("--out", out_dir, "output directory");
  train->add_option("--seed", seed, "seed for the split, oversampling and training");
  add_prepare_flags(train, prep);

  std::size_t epochs = 0, batch_size = 0, hidden_width = 0, n_trees = 0, n_stages = 0;
  std::size_t max_depth = 0, max_iter = 0, sample_count = 0;
  std::vector<std::size_t> hidden_layers;
  double learning_rate = 0, kl_weight = 0, prior_sigma = 0, lr_c = 0, alpha = 0;
  std::string criterion_text;
  train->add_option("--epochs", epochs, "bnn/dnn training epochs");
  train->add_option("--batch-size", batch_size, "bnn/dnn minibatch size");
  train->add_option("--learning-rate", learning_rate, "bnn/dnn sgd or xgb shrinkage rate");
  train->add_option("--hidden", hidden_width, "bnn hidden layer width");
  train->add_option("--hidden-layers", hidden_layers, "dnn hidden layer widths");
  train->add_option("--samples", sample_count, "bnn posterior draws stored with the model");
  train->add_option("--kl-weight", kl_weight, "bnn complexity weight (0 = 1/batches)");
  train->add_option("--prior-sigma", prior_sigma, "bnn prior stddev");
  train->add_option("--trees", n_trees, "rf ensemble size");
  train->add_option("--stages", n_stages, "xgb boosting stages");
  train->add_option("--depth", max_depth, "dt/rf/xgb maximum tree depth");
  train->add_option("--criterion", criterion_text, "dt/rf split criterion: gini or entropy");
  train->add_option("--c", lr_c, "lr inverse regularization strength");
  train->add_option("--iterations", max_iter, "lr iteration cap");
  train->add_option("--alpha", alpha, "mnb smoothing");

  auto* evaluate = app.add_subcommand("evaluate", "score a model on the held-out test split");
  evaluate->add_option("--model", model_path, "model json written by train")->required();
  evaluate->add_option("--data", data_path, "training csv")->required();
  evaluate->add_option("--schema", schema_path, "schema json")->required();
  evaluate->add_option("--out", out_dir, "output directory");
  evaluate->add_option("--seed", seed, "must match the seed used for train");
  evaluate->add_option("--threshold", predict.threshold, "bnn decision threshold");
  evaluate->add_option("--samples", predict.sample_count, "bnn posterior draws (0 = stored)");
  add_prepare_flags(evaluate, prep);

  auto* predict_cmd = app.add_subcommand("predict", "score new rows with a trained model");
  predict_cmd->add_option("--model", model_path, "model json written by train")->required();
  predict_cmd->add_option("--data", data_path, "csv of rows to score")->required();
  predict_cmd->add_option("--schema", schema_path, "schema json")->required();
  predict_cmd->add_option("--out", out_dir, "output directory");
  predict_cmd->add_option("--threshold", predict.threshold, "bnn decision threshold");
  predict_cmd->add_option("--samples", predict.sample_count, "bnn posterior draws (0 = stored)");
  predict_cmd->add_option("--seed", predict.seed, "bnn posterior noise seed");
  predict_cmd->add_option("--histogram-bins", histogram_bins, "bins for the bnn log-probability histograms")
      ->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand("report", "write feature importance for a tree model");
  report->add_option("--model", model_path, "model json written by train")->required();
  report->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);

    if (*generate) return run_generate(out_dir, syn);

    if (*train) {
      spec.kind = pipeline::model_kind_from_string(kind_text);
      spec.seed = seed;
      if (train->count("--epochs")) spec.bnn.epochs = spec.dnn.epochs = epochs;
      if (train->count("--batch-size")) spec.bnn.batch_size = spec.dnn.batch_size = batch_size;
      if (train->count("--learning-rate")) {
        spec.bnn.learning_rate = spec.dnn.learning_rate = learning_rate;
        spec.xgb.learning_rate = learning_rate;
      }
      if (train->count("--hidden")) spec.bnn.hidden = hidden_width;
      if (train->count("--hidden-layers")) spec.dnn.hidden = hidden_layers;
      if (train->count("--samples")) spec.bnn.sample_count = sample_count;
      if (train->count("--kl-weight")) spec.bnn.kl_weight = kl_weight;
      if (train->count("--prior-sigma")) spec.bnn.prior_sigma = prior_sigma;
      if (train->count("--trees")) spec.rf.n_trees = n_trees;
      if (train->count("--stages")) spec.xgb.n_stages = n_stages;
      if (train->count("--depth")) {
        spec.dt.max_depth = spec.rf.tree.max_depth = spec.xgb.max_depth = max_depth;
      }
      if (train->count("--criterion")) {
        spec.dt.criterion = spec.rf.tree.criterion = trees::criterion_from_string(criterion_text);
      }
      if (train->count("--c")) spec.lr.c = lr_c;
      if (train->count("--iterations")) spec.lr.max_iter = max_iter;
      if (train->count("--alpha")) spec.mnb.alpha = alpha;
      return run_train(data_path, schema_path, out_dir, spec, prep);
    }

    if (*evaluate) {
      predict.seed = seed;
      return run_evaluate(data_path, schema_path, model_path, out_dir, seed, prep, predict);
    }
    if (*predict_cmd) {
      return run_predict(data_path, schema_path, model_path, out_dir, predict, histogram_bins);
    }
    if (*report) return run_report(model_path, out_dir);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "ptp: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
