#include <algorithm>
#include <map>

#include "learners_detail.hpp"

namespace parkipipe {

namespace detail {

void check_training_inputs(const Eigen::Ref<const Eigen::MatrixXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& y,
                           const Eigen::Ref<const Eigen::VectorXd>& sample_weights) {
  if (x.rows() == 0 || x.cols() == 0) fail("InvalidParams", "fit: empty design matrix");
  if (y.size() != x.rows()) fail("InvalidParams", "fit: label count does not match rows");
  if (sample_weights.size() != x.rows()) fail("InvalidParams", "fit: weight count mismatch");
  if (!x.allFinite() || !y.allFinite() || !sample_weights.allFinite()) {
    fail("InvalidParams", "fit: non-finite values in training data");
  }
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) fail("InvalidParams", "fit: labels must be 0 or 1");
    if (sample_weights[i] <= 0.0) fail("InvalidParams", "fit: weights must be positive");
  }
}

std::vector<std::string> resolve_feature_names(std::vector<std::string> names, Eigen::Index width) {
  if (names.empty()) {
    for (Eigen::Index j = 0; j < width; ++j) names.push_back("f" + std::to_string(j));
  }
  if (static_cast<Eigen::Index>(names.size()) != width) {
    fail("FeatureMismatch", "fit: feature name count does not match matrix width");
  }
  return names;
}

}  // namespace detail

std::string to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::Svm: return "svm";
    case LearnerKind::Gbdt: return "gbdt";
    case LearnerKind::LogReg: return "logreg";
  }
  fail("InvalidParams", "unknown learner kind");
}

LearnerKind learner_kind_from_string(const std::string& s) {
  if (s == "svm") return LearnerKind::Svm;
  if (s == "gbdt") return LearnerKind::Gbdt;
  if (s == "logreg") return LearnerKind::LogReg;
  fail("SchemaError", "unknown learner kind '" + s + "'");
}

ClassWeights class_weights(const Eigen::Ref<const Eigen::VectorXd>& labels) {
  double n_pos = 0.0, n_neg = 0.0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1.0) {
      n_pos += 1.0;
    } else if (labels[i] == 0.0) {
      n_neg += 1.0;
    } else {
      fail("InvalidParams", "class_weights: labels must be 0 or 1");
    }
  }
  if (n_pos == 0.0 || n_neg == 0.0) {
    fail("SingleClass", "class_weights: both classes must be present");
  }
  const double n = n_pos + n_neg;
  return ClassWeights{n / (2.0 * n_pos), n / (2.0 * n_neg)};
}

Eigen::VectorXd balanced_sample_weights(const Eigen::Ref<const Eigen::VectorXd>& labels,
                                        ClassWeighting weighting) {
  if (weighting == ClassWeighting::None) return Eigen::VectorXd::Ones(labels.size());
  const ClassWeights w = class_weights(labels);
  Eigen::VectorXd out(labels.size());
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    out[i] = labels[i] == 1.0 ? w.w_pos : w.w_neg;
  }
  return out;
}

void Standardizer::fit(const Eigen::Ref<const Eigen::MatrixXd>& x) {
  const double n = static_cast<double>(x.rows());
  mean = x.colwise().mean();
  std.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - mean[j]).square().sum() / n;
    const double s = std::sqrt(var);
    std[j] = s > 0.0 ? s : 1.0;
  }
}

Eigen::MatrixXd Standardizer::apply(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  if (x.cols() != mean.size()) fail("FeatureMismatch", "standardizer width mismatch");
  return (x.rowwise() - mean.transpose()).array().rowwise() / std.transpose().array();
}

Classifier fit_learner(LearnerKind kind, const Eigen::Ref<const Eigen::MatrixXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& y,
                       const Eigen::Ref<const Eigen::VectorXd>& sample_weights,
                       const TrainConfig& config, std::vector<std::string> feature_names) {
  switch (kind) {
    case LearnerKind::Svm: return fit_svm(x, y, sample_weights, config, std::move(feature_names));
    case LearnerKind::Gbdt: return fit_gbdt(x, y, sample_weights, config, std::move(feature_names));
    case LearnerKind::LogReg:
      return fit_logreg(x, y, sample_weights, config, std::move(feature_names));
  }
  fail("InvalidParams", "unknown learner kind");
}

Eigen::VectorXd predict_proba(const Classifier& clf, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  if (x.cols() != static_cast<Eigen::Index>(clf.feature_names.size())) {
    fail("FeatureMismatch", "predict: expected " + std::to_string(clf.feature_names.size()) +
                                " features, got " + std::to_string(x.cols()));
  }
  if (!x.allFinite()) fail("InvalidParams", "predict: non-finite values");

  Eigen::VectorXd out(x.rows());
  if (clf.kind == LearnerKind::Svm) {
    const auto& model = std::get<SvmModel>(clf.model);
    const Eigen::MatrixXd xs = clf.scaler.apply(x);
    const Eigen::VectorXd margins = detail::svm_margins(model, xs);
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      out[i] = detail::sigmoid(-(model.platt_a * margins[i] + model.platt_b));
    }
  } else if (clf.kind == LearnerKind::Gbdt) {
    const auto& model = std::get<GbdtModel>(clf.model);
    const Eigen::MatrixXd xs = clf.scaler.apply(x);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      out[i] = detail::sigmoid(detail::gbdt_score_one(model, xs.row(i)));
    }
  } else {
    const auto& model = std::get<LogRegModel>(clf.model);
    const Eigen::MatrixXd xs = clf.scaler.apply(x);
    const Eigen::VectorXd z =
        (xs * model.weights).array() + model.intercept;
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = detail::sigmoid(z[i]);
  }
  return out;
}

Eigen::VectorXd predict_proba(const Classifier& clf, const FeatureMatrix& features) {
  std::map<std::string, Eigen::Index> column_of;
  for (std::size_t j = 0; j < features.names.size(); ++j) {
    column_of[features.names[j]] = static_cast<Eigen::Index>(j);
  }
  Eigen::MatrixXd aligned(features.values.rows(),
                          static_cast<Eigen::Index>(clf.feature_names.size()));
  for (std::size_t j = 0; j < clf.feature_names.size(); ++j) {
    auto it = column_of.find(clf.feature_names[j]);
    if (it == column_of.end()) {
      fail("FeatureMismatch", "predict: input lacks feature '" + clf.feature_names[j] + "'");
    }
    aligned.col(static_cast<Eigen::Index>(j)) = features.values.col(it->second);
  }
  return predict_proba(clf, aligned);
}

Eigen::VectorXd decision_margin(const Classifier& clf, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  if (clf.kind != LearnerKind::Svm) fail("FeatureMismatch", "decision_margin: not an SVM model");
  const auto& model = std::get<SvmModel>(clf.model);
  return detail::svm_margins(model, clf.scaler.apply(x));
}

}  // namespace parkipipe
