#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "parkipipe/learners.hpp"

namespace parkipipe::detail {

inline double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
inline double log1p_exp(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

void check_training_inputs(const Eigen::Ref<const Eigen::MatrixXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& y,
                           const Eigen::Ref<const Eigen::VectorXd>& sample_weights);

std::vector<std::string> resolve_feature_names(std::vector<std::string> names, Eigen::Index width);

Eigen::VectorXd svm_margins(const SvmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& xs);

/// Platt sigmoid fit on decision margins (Newton with backtracking, smoothed
/// targets (N+1)/(N+2) and 1/(N+2)). Returns {a, b}.
std::pair<double, double> fit_platt(const Eigen::VectorXd& margins, const Eigen::VectorXd& y);

double gbdt_score_one(const GbdtModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& row);

}  // namespace parkipipe::detail
