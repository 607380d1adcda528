#include "learners_detail.hpp"

namespace parkipipe {

double logreg_loss(const Eigen::Ref<const Eigen::VectorXd>& beta,
                   const Eigen::Ref<const Eigen::MatrixXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y,
                   const Eigen::Ref<const Eigen::VectorXd>& sample_weights, double l2_lambda) {
  const Eigen::Index n = x.rows();
  const Eigen::VectorXd w = beta.tail(beta.size() - 1);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = beta[0] + x.row(i).dot(w);
    loss += sample_weights[i] * (detail::log1p_exp(z) - y[i] * z);
  }
  loss += 0.5 * l2_lambda * w.squaredNorm();
  return loss;
}

Eigen::VectorXd logreg_gradient(const Eigen::Ref<const Eigen::VectorXd>& beta,
                                const Eigen::Ref<const Eigen::MatrixXd>& x,
                                const Eigen::Ref<const Eigen::VectorXd>& y,
                                const Eigen::Ref<const Eigen::VectorXd>& sample_weights,
                                double l2_lambda) {
  const Eigen::VectorXd w = beta.tail(beta.size() - 1);
  Eigen::VectorXd z = (x * w).array() + beta[0];
  Eigen::VectorXd err(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    err[i] = sample_weights[i] * (detail::sigmoid(z[i]) - y[i]);
  }
  Eigen::VectorXd grad(beta.size());
  grad[0] = err.sum();
  grad.tail(w.size()) = x.transpose() * err + l2_lambda * w;
  return grad;
}

Classifier fit_logreg(const Eigen::Ref<const Eigen::MatrixXd>& x,
                      const Eigen::Ref<const Eigen::VectorXd>& y,
                      const Eigen::Ref<const Eigen::VectorXd>& sample_weights,
                      const TrainConfig& config, std::vector<std::string> feature_names) {
  detail::check_training_inputs(x, y, sample_weights);
  class_weights(y);
  const LogRegConfig& cfg = config.logreg;
  if (cfg.l2_lambda < 0.0 || cfg.tolerance <= 0.0 || cfg.max_iter < 1) {
    fail("InvalidParams", "fit_logreg: bad config");
  }

  Classifier clf;
  clf.kind = LearnerKind::LogReg;
  clf.seed = config.seed;
  clf.feature_names = detail::resolve_feature_names(std::move(feature_names), x.cols());
  clf.scaler.fit(x);
  const Eigen::MatrixXd xs = clf.scaler.apply(x);

  // Weights start at zero, the unpenalized intercept at the weighted
  // log-odds, where its partial gradient vanishes.
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(xs.cols() + 1);
  const double base_rate =
      std::clamp(sample_weights.dot(y) / sample_weights.sum(), 1e-12, 1.0 - 1e-12);
  beta[0] = std::log(base_rate / (1.0 - base_rate));
  double loss = logreg_loss(beta, xs, y, sample_weights, cfg.l2_lambda);
  clf.training_loss.push_back(loss);

  // Batch gradient descent with Armijo backtracking. The accepted step is
  // carried over (doubled) as the next initial step.
  double step = 1.0;
  bool converged = false;
  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    const Eigen::VectorXd grad = logreg_gradient(beta, xs, y, sample_weights, cfg.l2_lambda);
    if (grad.lpNorm<Eigen::Infinity>() <= cfg.tolerance) {
      converged = true;
      break;
    }
    const double grad_sq = grad.squaredNorm();
    double t = std::min(step * 2.0, 1e6);
    bool accepted = false;
    for (int halving = 0; halving < 80; ++halving) {
      const Eigen::VectorXd candidate = beta - t * grad;
      const double new_loss = logreg_loss(candidate, xs, y, sample_weights, cfg.l2_lambda);
      if (new_loss <= loss - 1e-4 * t * grad_sq) {
        beta = candidate;
        loss = new_loss;
        step = t;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // step underflow; gradient tolerance not reached
    clf.training_loss.push_back(loss);
  }
  clf.converged = converged;

  LogRegModel model;
  model.config = cfg;
  model.intercept = beta[0];
  model.weights = beta.tail(xs.cols());
  clf.model = std::move(model);
  return clf;
}

}  // namespace parkipipe
