#include "learners_detail.hpp"

namespace parkipipe {

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows, Eigen::Index cols_hint) {
  const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index c = r > 0 ? static_cast<Eigen::Index>(rows[0].size()) : cols_hint;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
    }
  }
  return m;
}

}  // namespace

nlohmann::json classifier_to_json(const Classifier& clf) {
  nlohmann::json doc;
  doc["model_schema"] = kModelSchemaVersion;
  doc["kind"] = to_string(clf.kind);
  doc["feature_names"] = clf.feature_names;
  doc["converged"] = clf.converged;
  doc["seed"] = clf.seed;
  doc["standardization"] = {{"mean", vector_to_json(clf.scaler.mean)},
                            {"std", vector_to_json(clf.scaler.std)}};

  if (clf.kind == LearnerKind::Svm) {
    const auto& m = std::get<SvmModel>(clf.model);
    doc["hyperparameters"] = {{"kernel", m.config.kernel == KernelKind::Rbf ? "rbf" : "linear"},
                              {"c", m.config.c},
                              {"gamma", m.config.gamma},
                              {"tolerance", m.config.tolerance},
                              {"max_iter", m.config.max_iter}};
    doc["parameters"] = {{"gamma_used", m.gamma_used},
                         {"support_vectors", matrix_to_json(m.support_vectors)},
                         {"dual_coef", vector_to_json(m.dual_coef)},
                         {"bias", m.bias},
                         {"platt_a", m.platt_a},
                         {"platt_b", m.platt_b}};
  } else if (clf.kind == LearnerKind::Gbdt) {
    const auto& m = std::get<GbdtModel>(clf.model);
    doc["hyperparameters"] = {{"n_trees", m.config.n_trees},
                              {"max_depth", m.config.max_depth},
                              {"learning_rate", m.config.learning_rate},
                              {"min_leaf", m.config.min_leaf}};
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : m.trees) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const GbdtNode& nd : tree) {
        nodes.push_back({{"feature", nd.feature},
                         {"threshold", nd.threshold},
                         {"left", nd.left},
                         {"right", nd.right},
                         {"value", nd.value}});
      }
      trees.push_back(std::move(nodes));
    }
    doc["parameters"] = {{"base_score", m.base_score}, {"trees", std::move(trees)}};
  } else {
    const auto& m = std::get<LogRegModel>(clf.model);
    doc["hyperparameters"] = {{"l2_lambda", m.config.l2_lambda},
                              {"max_iter", m.config.max_iter},
                              {"tolerance", m.config.tolerance}};
    doc["parameters"] = {{"intercept", m.intercept}, {"weights", vector_to_json(m.weights)}};
  }
  return doc;
}

Classifier classifier_from_json(const nlohmann::json& doc) {
  if (!doc.contains("model_schema") || doc["model_schema"].get<int>() != kModelSchemaVersion) {
    fail("SchemaError", "classifier document has unsupported model_schema");
  }
  Classifier clf;
  clf.kind = learner_kind_from_string(doc.at("kind").get<std::string>());
  clf.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
  clf.converged = doc.at("converged").get<bool>();
  clf.seed = doc.at("seed").get<std::uint64_t>();
  clf.scaler.mean = vector_from_json(doc.at("standardization").at("mean"));
  clf.scaler.std = vector_from_json(doc.at("standardization").at("std"));

  const nlohmann::json& hp = doc.at("hyperparameters");
  const nlohmann::json& pm = doc.at("parameters");
  const Eigen::Index width = static_cast<Eigen::Index>(clf.feature_names.size());

  if (clf.kind == LearnerKind::Svm) {
    SvmModel m;
    m.config.kernel =
        hp.at("kernel").get<std::string>() == "rbf" ? KernelKind::Rbf : KernelKind::Linear;
    m.config.c = hp.at("c").get<double>();
    m.config.gamma = hp.at("gamma").get<double>();
    m.config.tolerance = hp.at("tolerance").get<double>();
    m.config.max_iter = hp.at("max_iter").get<long>();
    m.gamma_used = pm.at("gamma_used").get<double>();
    m.support_vectors = matrix_from_json(pm.at("support_vectors"), width);
    m.dual_coef = vector_from_json(pm.at("dual_coef"));
    m.bias = pm.at("bias").get<double>();
    m.platt_a = pm.at("platt_a").get<double>();
    m.platt_b = pm.at("platt_b").get<double>();
    clf.model = std::move(m);
  } else if (clf.kind == LearnerKind::Gbdt) {
    GbdtModel m;
    m.config.n_trees = hp.at("n_trees").get<int>();
    m.config.max_depth = hp.at("max_depth").get<int>();
    m.config.learning_rate = hp.at("learning_rate").get<double>();
    m.config.min_leaf = hp.at("min_leaf").get<int>();
    m.base_score = pm.at("base_score").get<double>();
    for (const nlohmann::json& tree_doc : pm.at("trees")) {
      std::vector<GbdtNode> tree;
      for (const nlohmann::json& nd_doc : tree_doc) {
        GbdtNode nd;
        nd.feature = nd_doc.at("feature").get<int>();
        nd.threshold = nd_doc.at("threshold").get<double>();
        nd.left = nd_doc.at("left").get<int>();
        nd.right = nd_doc.at("right").get<int>();
        nd.value = nd_doc.at("value").get<double>();
        tree.push_back(nd);
      }
      m.trees.push_back(std::move(tree));
    }
    clf.model = std::move(m);
  } else {
    LogRegModel m;
    m.config.l2_lambda = hp.at("l2_lambda").get<double>();
    m.config.max_iter = hp.at("max_iter").get<int>();
    m.config.tolerance = hp.at("tolerance").get<double>();
    m.intercept = pm.at("intercept").get<double>();
    m.weights = vector_from_json(pm.at("weights"));
    clf.model = std::move(m);
  }
  return clf;
}

}  // namespace parkipipe
