#include "ptp/model_store.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace ptp::model_store {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "ptp-model";
constexpr int kVersion = 1;

json tensor_to_json(const diff::Tensor& t) {
  return json{{"shape", t.shape()}, {"data", t.data()}};
}

diff::Tensor tensor_from_json(const json& j) {
  const auto shape = j.at("shape").get<std::vector<std::size_t>>();
  auto data = j.at("data").get<std::vector<double>>();
  if (shape.empty()) {
    if (data.size() != 1) throw std::runtime_error("model: scalar tensor needs one value");
    return diff::Tensor::scalar(data[0]);
  }
  if (shape.size() == 1) {
    if (data.size() != shape[0]) throw std::runtime_error("model: tensor size mismatch");
    return diff::Tensor::vector(std::move(data));
  }
  if (shape.size() != 2) throw std::runtime_error("model: unsupported tensor rank");
  return diff::Tensor::matrix(shape[0], shape[1], std::move(data));
}

json encoder_to_json(const data::Encoder& enc) {
  json cols = json::array();
  for (const auto& col : enc.columns) {
    json c{{"name", col.name}, {"kind", std::string(data::to_string(col.kind))}};
    if (col.kind == data::ColumnKind::categorical) {
      c["categories"] = col.cat.categories;
    } else {
      c["mean"] = col.cont.mean;
      c["stddev"] = col.cont.stddev;
      c["constant"] = col.cont.constant;
      c["bin_edges"] = col.cont.bin_edges;
    }
    cols.push_back(std::move(c));
  }
  return json{{"columns", cols},
              {"target", enc.target_name},
              {"positive_label", enc.positive_label},
              {"bins", enc.bins},
              {"fingerprint", enc.fingerprint()}};
}

data::Encoder encoder_from_json(const json& j) {
  data::Encoder enc;
  for (const auto& c : j.at("columns")) {
    data::EncodedColumn col;
    col.name = c.at("name").get<std::string>();
    col.kind = data::column_kind_from_string(c.at("kind").get<std::string>());
    if (col.kind == data::ColumnKind::categorical) {
      col.cat.categories = c.at("categories").get<std::vector<std::string>>();
    } else {
      col.cont.mean = c.at("mean").get<double>();
      col.cont.stddev = c.at("stddev").get<double>();
      col.cont.constant = c.at("constant").get<bool>();
      col.cont.bin_edges = c.at("bin_edges").get<std::vector<double>>();
    }
    enc.columns.push_back(std::move(col));
  }
  enc.target_name = j.at("target").get<std::string>();
  enc.positive_label = j.at("positive_label").get<std::string>();
  enc.bins = j.at("bins").get<std::size_t>();
  if (enc.fingerprint() != j.at("fingerprint").get<std::uint64_t>()) {
    throw std::runtime_error("model: encoder fingerprint mismatch, artifact is corrupted");
  }
  return enc;
}

json split_to_json(const trees::Split& s) {
  return json{{"feature", s.feature},       {"categorical", s.categorical},
              {"threshold", s.threshold},   {"left_levels", s.left_levels},
              {"right_levels", s.right_levels}, {"unknown_left", s.unknown_left}};
}

trees::Split split_from_json(const json& j) {
  trees::Split s;
  s.feature = j.at("feature").get<std::size_t>();
  s.categorical = j.at("categorical").get<bool>();
  s.threshold = j.at("threshold").get<double>();
  s.left_levels = j.at("left_levels").get<std::vector<int>>();
  s.right_levels = j.at("right_levels").get<std::vector<int>>();
  s.unknown_left = j.at("unknown_left").get<bool>();
  return s;
}

json tree_node_to_json(const trees::TreeNode& n) {
  json j{{"count", n.count},
         {"counts", n.class_counts},
         {"predicted", n.predicted},
         {"p1", n.p_positive}};
  if (!n.leaf) {
    j["split"] = split_to_json(n.split);
    j["gain"] = n.gain;
    j["left"] = tree_node_to_json(*n.left);
    j["right"] = tree_node_to_json(*n.right);
  }
  return j;
}

std::unique_ptr<trees::TreeNode> tree_node_from_json(const json& j) {
  auto n = std::make_unique<trees::TreeNode>();
  n->count = j.at("count").get<std::int64_t>();
  n->class_counts = j.at("counts").get<std::array<std::int64_t, 2>>();
  n->predicted = j.at("predicted").get<int>();
  n->p_positive = j.at("p1").get<double>();
  if (j.contains("split")) {
    n->leaf = false;
    n->split = split_from_json(j.at("split"));
    n->gain = j.at("gain").get<double>();
    n->left = tree_node_from_json(j.at("left"));
    n->right = tree_node_from_json(j.at("right"));
  }
  return n;
}

json reg_node_to_json(const trees::RegressionNode& n) {
  json j{{"count", n.count}, {"value", n.value}};
  if (!n.leaf) {
    j["split"] = split_to_json(n.split);
    j["gain"] = n.gain;
    j["left"] = reg_node_to_json(*n.left);
    j["right"] = reg_node_to_json(*n.right);
  }
  return j;
}

std::unique_ptr<trees::RegressionNode> reg_node_from_json(const json& j) {
  auto n = std::make_unique<trees::RegressionNode>();
  n->count = j.at("count").get<std::int64_t>();
  n->value = j.at("value").get<double>();
  if (j.contains("split")) {
    n->leaf = false;
    n->split = split_from_json(j.at("split"));
    n->gain = j.at("gain").get<double>();
    n->left = reg_node_from_json(j.at("left"));
    n->right = reg_node_from_json(j.at("right"));
  }
  return n;
}

json features_to_json(const std::vector<trees::FeatureInfo>& features) {
  json out = json::array();
  for (const auto& f : features) {
    out.push_back({{"name", f.name}, {"categorical", f.categorical}, {"cardinality", f.cardinality}});
  }
  return out;
}

std::vector<trees::FeatureInfo> features_from_json(const json& j) {
  std::vector<trees::FeatureInfo> out;
  for (const auto& f : j) {
    out.push_back({f.at("name").get<std::string>(), f.at("categorical").get<bool>(),
                   f.at("cardinality").get<std::size_t>()});
  }
  return out;
}

json tree_config_to_json(const trees::TreeConfig& c) {
  return json{{"criterion", std::string(trees::to_string(c.criterion))},
              {"max_depth", c.max_depth},
              {"min_samples_leaf", c.min_samples_leaf},
              {"min_samples_split", c.min_samples_split}};
}

trees::TreeConfig tree_config_from_json(const json& j) {
  trees::TreeConfig c;
  c.criterion = trees::criterion_from_string(j.at("criterion").get<std::string>());
  c.max_depth = j.at("max_depth").get<std::size_t>();
  c.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
  c.min_samples_split = j.at("min_samples_split").get<std::size_t>();
  return c;
}

json params_to_json(const AnyModel& model) {
  if (const auto* m = std::get_if<bnn::Model>(&model)) {
    json layers = json::array();
    for (const auto& layer : m->layers) {
      layers.push_back({{"w_mu", tensor_to_json(layer.w.mu->value)},
                        {"w_rho", tensor_to_json(layer.w.rho->value)},
                        {"b_mu", tensor_to_json(layer.b.mu->value)},
                        {"b_rho", tensor_to_json(layer.b.rho->value)}});
    }
    return json{{"hidden", m->config.hidden},
                {"sample_count", m->config.sample_count},
                {"threshold", m->config.threshold},
                {"prior_sigma", m->config.prior_sigma},
                {"epochs", m->config.epochs},
                {"batch_size", m->config.batch_size},
                {"learning_rate", m->config.learning_rate},
                {"kl_weight", m->config.kl_weight},
                {"seed", m->config.seed},
                {"input_width", m->input_width},
                {"layers", layers}};
  }
  if (const auto* m = std::get_if<dnn::Model>(&model)) {
    json tables = json::array();
    for (const auto& t : m->tables) tables.push_back(tensor_to_json(t->value));
    json weights = json::array(), biases = json::array();
    for (const auto& w : m->weights) weights.push_back(tensor_to_json(w->value));
    for (const auto& b : m->biases) biases.push_back(tensor_to_json(b->value));
    return json{{"hidden", m->config.hidden},
                {"epochs", m->config.epochs},
                {"batch_size", m->config.batch_size},
                {"learning_rate", m->config.learning_rate},
                {"seed", m->config.seed},
                {"tables", tables},
                {"weights", weights},
                {"biases", biases}};
  }
  if (const auto* m = std::get_if<DecisionTreeModel>(&model)) {
    return json{{"config", tree_config_to_json(m->config)},
                {"features", features_to_json(m->features)},
                {"root", tree_node_to_json(*m->root)}};
  }
  if (const auto* m = std::get_if<trees::Forest>(&model)) {
    json forest_trees = json::array();
    for (const auto& t : m->trees) forest_trees.push_back(tree_node_to_json(*t));
    return json{{"config", tree_config_to_json(m->config.tree)},
                {"n_trees", m->config.n_trees},
                {"bootstrap", m->config.bootstrap},
                {"seed", m->config.seed},
                {"features", features_to_json(m->features)},
                {"trees", forest_trees}};
  }
  if (const auto* m = std::get_if<trees::Gbm>(&model)) {
    json stages = json::array();
    for (const auto& s : m->stages) stages.push_back(reg_node_to_json(*s));
    return json{{"n_stages", m->config.n_stages},
                {"learning_rate", m->config.learning_rate},
                {"max_depth", m->config.max_depth},
                {"min_samples_leaf", m->config.min_samples_leaf},
                {"min_samples_split", m->config.min_samples_split},
                {"loss", std::string(trees::to_string(m->config.loss))},
                {"f0", m->f0},
                {"features", features_to_json(m->features)},
                {"stages", stages}};
  }
  if (const auto* m = std::get_if<LogisticArtifact>(&model)) {
    return json{{"c", m->config.c},
                {"max_iter", m->config.max_iter},
                {"tol", m->config.tol},
                {"weights", m->model.weights},
                {"intercept", m->model.intercept},
                {"iterations", m->model.iterations},
                {"converged", m->model.converged}};
  }
  const auto& m = std::get<NaiveBayesArtifact>(model);
  return json{{"alpha", m.config.alpha},
              {"fit_prior", m.config.fit_prior},
              {"width", m.model.width},
              {"log_prior", m.model.log_prior},
              {"log_likelihood", m.model.log_likelihood}};
}

AnyModel params_from_json(const std::string& kind, const json& j, const data::Encoder& encoder) {
  if (kind == "bnn") {
    bnn::Model m;
    m.encoder = encoder;
    m.config.hidden = j.at("hidden").get<std::size_t>();
    m.config.sample_count = j.at("sample_count").get<std::size_t>();
    m.config.threshold = j.at("threshold").get<double>();
    m.config.prior_sigma = j.at("prior_sigma").get<double>();
    m.config.epochs = j.at("epochs").get<std::size_t>();
    m.config.batch_size = j.at("batch_size").get<std::size_t>();
    m.config.learning_rate = j.at("learning_rate").get<double>();
    m.config.kl_weight = j.at("kl_weight").get<double>();
    m.config.seed = j.at("seed").get<std::uint64_t>();
    m.input_width = j.at("input_width").get<std::size_t>();
    for (const auto& layer : j.at("layers")) {
      bnn::Layer l;
      l.w.mu = diff::leaf(tensor_from_json(layer.at("w_mu")), true);
      l.w.rho = diff::leaf(tensor_from_json(layer.at("w_rho")), true);
      l.b.mu = diff::leaf(tensor_from_json(layer.at("b_mu")), true);
      l.b.rho = diff::leaf(tensor_from_json(layer.at("b_rho")), true);
      m.layers.push_back(std::move(l));
    }
    if (m.layers.size() != 2) throw std::runtime_error("model: bnn artifact needs two layers");
    return m;
  }
  if (kind == "dnn") {
    dnn::Model m;
    m.encoder = encoder;
    m.config.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    m.config.epochs = j.at("epochs").get<std::size_t>();
    m.config.batch_size = j.at("batch_size").get<std::size_t>();
    m.config.learning_rate = j.at("learning_rate").get<double>();
    m.config.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& t : j.at("tables")) m.tables.push_back(diff::leaf(tensor_from_json(t), true));
    for (const auto& w : j.at("weights")) {
      m.weights.push_back(diff::leaf(tensor_from_json(w), true));
    }
    for (const auto& b : j.at("biases")) m.biases.push_back(diff::leaf(tensor_from_json(b), true));
    if (m.weights.size() != m.biases.size() || m.weights.empty()) {
      throw std::runtime_error("model: dnn artifact layer mismatch");
    }
    return m;
  }
  if (kind == "dt") {
    DecisionTreeModel m;
    m.config = tree_config_from_json(j.at("config"));
    m.features = features_from_json(j.at("features"));
    m.root = tree_node_from_json(j.at("root"));
    return m;
  }
  if (kind == "rf") {
    trees::Forest m;
    m.config.tree = tree_config_from_json(j.at("config"));
    m.config.n_trees = j.at("n_trees").get<std::size_t>();
    m.config.bootstrap = j.at("bootstrap").get<bool>();
    m.config.seed = j.at("seed").get<std::uint64_t>();
    m.features = features_from_json(j.at("features"));
    for (const auto& t : j.at("trees")) m.trees.push_back(tree_node_from_json(t));
    return m;
  }
  if (kind == "xgb") {
    trees::Gbm m;
    m.config.n_stages = j.at("n_stages").get<std::size_t>();
    m.config.learning_rate = j.at("learning_rate").get<double>();
    m.config.max_depth = j.at("max_depth").get<std::size_t>();
    m.config.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
    m.config.min_samples_split = j.at("min_samples_split").get<std::size_t>();
    m.config.loss = trees::gbm_loss_from_string(j.at("loss").get<std::string>());
    m.f0 = j.at("f0").get<double>();
    m.features = features_from_json(j.at("features"));
    for (const auto& s : j.at("stages")) m.stages.push_back(reg_node_from_json(s));
    return m;
  }
  if (kind == "lr") {
    LogisticArtifact m;
    m.config.c = j.at("c").get<double>();
    m.config.max_iter = j.at("max_iter").get<std::size_t>();
    m.config.tol = j.at("tol").get<double>();
    m.model.weights = j.at("weights").get<std::vector<double>>();
    m.model.intercept = j.at("intercept").get<double>();
    m.model.iterations = j.at("iterations").get<std::size_t>();
    m.model.converged = j.at("converged").get<bool>();
    return m;
  }
  if (kind == "mnb") {
    NaiveBayesArtifact m;
    m.config.alpha = j.at("alpha").get<double>();
    m.config.fit_prior = j.at("fit_prior").get<bool>();
    m.model.alpha = m.config.alpha;
    m.model.width = j.at("width").get<std::size_t>();
    m.model.log_prior = j.at("log_prior").get<std::array<double, 2>>();
    m.model.log_likelihood = j.at("log_likelihood").get<std::vector<double>>();
    return m;
  }
  throw std::runtime_error("model: unknown model kind '" + kind + "'");
}

}  // namespace

void save_model(const Artifact& artifact, const std::string& path) {
  json j{{"format", kFormat},
         {"version", kVersion},
         {"model", artifact.kind},
         {"encoder", encoder_to_json(artifact.encoder)},
         {"params", params_to_json(artifact.model)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("model: cannot write " + path);
  out << j.dump() << '\n';
}

Artifact load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("model: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("model: " + path + " is not valid JSON: " + e.what());
  }
  if (j.value("format", std::string{}) != kFormat) {
    throw std::runtime_error("model: " + path + " is not a model artifact");
  }
  if (j.value("version", -1) != kVersion) {
    throw std::runtime_error("model: unsupported artifact version in " + path);
  }
  Artifact artifact;
  artifact.kind = j.at("model").get<std::string>();
  artifact.encoder = encoder_from_json(j.at("encoder"));
  artifact.model = params_from_json(artifact.kind, j.at("params"), artifact.encoder);
  return artifact;
}

}  // namespace ptp::model_store
