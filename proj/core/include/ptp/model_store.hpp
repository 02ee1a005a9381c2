#pragma once

#include <memory>
#include <string>
#include <variant>

#include "ptp/baselines.hpp"
#include "ptp/bnn.hpp"
#include "ptp/dnn.hpp"
#include "ptp/trees.hpp"

namespace ptp::model_store {

struct DecisionTreeModel {
  trees::TreeConfig config;
  std::vector<trees::FeatureInfo> features;
  std::unique_ptr<trees::TreeNode> root;
};

struct LogisticArtifact {
  baselines::LogisticConfig config;
  baselines::LogisticModel model;
};

struct NaiveBayesArtifact {
  baselines::NaiveBayesConfig config;
  baselines::NaiveBayesModel model;
};

using AnyModel = std::variant<bnn::Model, dnn::Model, DecisionTreeModel, trees::Forest,
                              trees::Gbm, LogisticArtifact, NaiveBayesArtifact>;

// One trained model plus the fitted encoder it expects its inputs to pass
// through. Serialized as versioned JSON; the encoder fingerprint is stored
// alongside and re-checked on load so corrupted or hand-edited artifacts are
// rejected instead of silently mis-predicting.
struct Artifact {
  std::string kind;  // bnn | dnn | dt | rf | xgb | lr | mnb
  data::Encoder encoder;
  AnyModel model;
};

void save_model(const Artifact& artifact, const std::string& path);
Artifact load_model(const std::string& path);

}  // namespace ptp::model_store
