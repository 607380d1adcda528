#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "parkipipe/features.hpp"

namespace parkipipe {

enum class LearnerKind { Svm, Gbdt, LogReg };
enum class KernelKind { Linear, Rbf };
enum class ClassWeighting { Balanced, None };

std::string to_string(LearnerKind k);
LearnerKind learner_kind_from_string(const std::string& s);

struct SvmConfig {
  KernelKind kernel = KernelKind::Rbf;
  double c = 1.0;
  double gamma = 0.0;  // <= 0 selects 1 / (n_features * var(X_standardized))
  double tolerance = 1e-3;
  long max_iter = 200000;  // SMO pair updates
};

struct GbdtConfig {
  int n_trees = 200;
  int max_depth = 3;
  double learning_rate = 0.1;
  int min_leaf = 1;
};

struct LogRegConfig {
  double l2_lambda = 1.0;  // applied to weights, never the intercept
  int max_iter = 500;
  double tolerance = 1e-6;  // on the gradient infinity norm
};

struct TrainConfig {
  ClassWeighting class_weighting = ClassWeighting::Balanced;
  std::uint64_t seed = 0;
  SvmConfig svm;
  GbdtConfig gbdt;
  LogRegConfig logreg;
};

struct ClassWeights {
  double w_pos = 1.0;
  double w_neg = 1.0;
};

/// w_c = N / (2 N_c), so both weighted class masses equal N/2.
/// Throws SingleClass when a class is absent.
ClassWeights class_weights(const Eigen::Ref<const Eigen::VectorXd>& labels);

/// Per-sample weights from class_weights; all ones for ClassWeighting::None.
Eigen::VectorXd balanced_sample_weights(const Eigen::Ref<const Eigen::VectorXd>& labels,
                                        ClassWeighting weighting = ClassWeighting::Balanced);

/// z-score parameters learned on training data only. Zero-variance features
/// keep std 1 so they pass through centered.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;

  void fit(const Eigen::Ref<const Eigen::MatrixXd>& x);
  Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
};

struct SvmModel {
  SvmConfig config;
  double gamma_used = 0.0;
  Eigen::MatrixXd support_vectors;  // standardized rows
  Eigen::VectorXd dual_coef;        // alpha_i * y_i, y in {-1, +1}
  double bias = 0.0;
  double platt_a = 0.0;  // p = 1 / (1 + exp(a * margin + b))
  double platt_b = 0.0;
};

struct GbdtNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf score before the learning-rate factor
};

struct GbdtModel {
  GbdtConfig config;
  double base_score = 0.0;  // initial log-odds
  std::vector<std::vector<GbdtNode>> trees;
};

struct LogRegModel {
  LogRegConfig config;
  double intercept = 0.0;
  Eigen::VectorXd weights;
};

/// A fitted classifier: learner state plus the feature-name contract and the
/// standardization learned from its training data.
struct Classifier {
  LearnerKind kind = LearnerKind::LogReg;
  std::vector<std::string> feature_names;
  Standardizer scaler;
  bool converged = true;
  std::uint64_t seed = 0;
  std::variant<SvmModel, GbdtModel, LogRegModel> model;
  std::vector<double> training_loss;  // per-stage/iteration diagnostics, not serialized
};

// X is raw (unstandardized); y in {0, 1}; sample_weights strictly positive.
Classifier fit_svm(const Eigen::Ref<const Eigen::MatrixXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y,
                   const Eigen::Ref<const Eigen::VectorXd>& sample_weights,
                   const TrainConfig& config, std::vector<std::string> feature_names = {});

Classifier fit_gbdt(const Eigen::Ref<const Eigen::MatrixXd>& x,
                    const Eigen::Ref<const Eigen::VectorXd>& y,
                    const Eigen::Ref<const Eigen::VectorXd>& sample_weights,
                    const TrainConfig& config, std::vector<std::string> feature_names = {});

Classifier fit_logreg(const Eigen::Ref<const Eigen::MatrixXd>& x,
                      const Eigen::Ref<const Eigen::VectorXd>& y,
                      const Eigen::Ref<const Eigen::VectorXd>& sample_weights,
                      const TrainConfig& config, std::vector<std::string> feature_names = {});

Classifier fit_learner(LearnerKind kind, const Eigen::Ref<const Eigen::MatrixXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& y,
                       const Eigen::Ref<const Eigen::VectorXd>& sample_weights,
                       const TrainConfig& config, std::vector<std::string> feature_names = {});

/// Probabilities for rows whose columns already follow clf.feature_names.
Eigen::VectorXd predict_proba(const Classifier& clf, const Eigen::Ref<const Eigen::MatrixXd>& x);

/// Name-aligned prediction: matrix columns are permuted to the classifier's
/// feature order. Throws FeatureMismatch when names do not correspond.
Eigen::VectorXd predict_proba(const Classifier& clf, const FeatureMatrix& features);

/// SVM decision margin (bias included); FeatureMismatch for non-SVM models.
Eigen::VectorXd decision_margin(const Classifier& clf, const Eigen::Ref<const Eigen::MatrixXd>& x);

// Loss surface of the weighted L2 logistic objective, exposed so tests can
// check the analytic gradient against finite differences. beta packs
// [intercept, weights...]; x is the already-standardized design matrix.
double logreg_loss(const Eigen::Ref<const Eigen::VectorXd>& beta,
                   const Eigen::Ref<const Eigen::MatrixXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y,
                   const Eigen::Ref<const Eigen::VectorXd>& sample_weights, double l2_lambda);
Eigen::VectorXd logreg_gradient(const Eigen::Ref<const Eigen::VectorXd>& beta,
                                const Eigen::Ref<const Eigen::MatrixXd>& x,
                                const Eigen::Ref<const Eigen::VectorXd>& y,
                                const Eigen::Ref<const Eigen::VectorXd>& sample_weights,
                                double l2_lambda);

nlohmann::json classifier_to_json(const Classifier& clf);
Classifier classifier_from_json(const nlohmann::json& doc);

}  // namespace parkipipe
