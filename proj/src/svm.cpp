#include <algorithm>
#include <limits>

#include "learners_detail.hpp"

namespace parkipipe {

namespace {

// Kernel matrix on standardized rows.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              KernelKind kernel, double gamma) {
  Eigen::MatrixXd k = a * b.transpose();
  if (kernel == KernelKind::Linear) return k;
  const Eigen::VectorXd na = a.rowwise().squaredNorm();
  const Eigen::VectorXd nb = b.rowwise().squaredNorm();
  for (Eigen::Index i = 0; i < k.rows(); ++i) {
    for (Eigen::Index j = 0; j < k.cols(); ++j) {
      k(i, j) = std::exp(-gamma * std::max(0.0, na[i] + nb[j] - 2.0 * k(i, j)));
    }
  }
  return k;
}

constexpr double kTau = 1e-12;

}  // namespace

namespace detail {

Eigen::VectorXd svm_margins(const SvmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& xs) {
  const Eigen::MatrixXd k =
      kernel_matrix(xs, model.support_vectors, model.config.kernel, model.gamma_used);
  return (k * model.dual_coef).array() + model.bias;
}

std::pair<double, double> fit_platt(const Eigen::VectorXd& margins, const Eigen::VectorXd& y) {
  const Eigen::Index n = margins.size();
  double prior1 = 0.0, prior0 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) (y[i] == 1.0 ? prior1 : prior0) += 1.0;

  const double hi_target = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo_target = 1.0 / (prior0 + 2.0);
  Eigen::VectorXd t(n);
  for (Eigen::Index i = 0; i < n; ++i) t[i] = y[i] == 1.0 ? hi_target : lo_target;

  // Newton with backtracking on F(a, b) = -sum t_i log p_i + (1-t_i) log(1-p_i),
  // p_i = 1 / (1 + exp(a f_i + b)).
  double a = 0.0;
  double b = std::log((prior0 + 1.0) / (prior1 + 1.0));
  const double min_step = 1e-10;
  const double sigma = 1e-12;

  auto objective = [&](double pa, double pb) {
    double val = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double z = pa * margins[i] + pb;
      // t*log(1+exp(z)) + (1-t)*(z + log(1+exp(-z))) rewritten stably:
      if (z >= 0.0) {
        val += t[i] * z + log1p_exp(-z);
      } else {
        val += (t[i] - 1.0) * z + log1p_exp(z);
      }
    }
    return val;
  };

  double fval = objective(a, b);
  for (int iter = 0; iter < 100; ++iter) {
    double h11 = sigma, h22 = sigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double z = a * margins[i] + b;
      const double p = sigmoid(-z);
      const double q = 1.0 - p;
      const double d1 = t[i] - p;
      const double d2 = p * q;
      g1 += margins[i] * d1;
      g2 += d1;
      h11 += margins[i] * margins[i] * d2;
      h22 += d2;
      h21 += margins[i] * d2;
    }
    if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;

    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;

    double step = 1.0;
    bool accepted = false;
    while (step >= min_step) {
      const double new_f = objective(a + step * da, b + step * db);
      if (new_f < fval + 1e-4 * step * gd) {
        a += step * da;
        b += step * db;
        fval = new_f;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  return {a, b};
}

}  // namespace detail

Classifier fit_svm(const Eigen::Ref<const Eigen::MatrixXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y,
                   const Eigen::Ref<const Eigen::VectorXd>& sample_weights,
                   const TrainConfig& config, std::vector<std::string> feature_names) {
  detail::check_training_inputs(x, y, sample_weights);
  class_weights(y);  // enforces both classes present

  Classifier clf;
  clf.kind = LearnerKind::Svm;
  clf.seed = config.seed;
  clf.feature_names = detail::resolve_feature_names(std::move(feature_names), x.cols());
  clf.scaler.fit(x);
  const Eigen::MatrixXd xs = clf.scaler.apply(x);
  const Eigen::Index n = xs.rows();

  SvmModel model;
  model.config = config.svm;
  double gamma = config.svm.gamma;
  if (gamma <= 0.0) {
    const double total_var = (xs.rowwise() - xs.colwise().mean()).squaredNorm() /
                             static_cast<double>(xs.size());
    gamma = 1.0 / (static_cast<double>(xs.cols()) * std::max(total_var, 1e-12));
  }
  model.gamma_used = gamma;

  // Signed labels and per-sample box constraints C_i = C * w_i.
  Eigen::VectorXd ys(n);
  Eigen::VectorXd cap(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ys[i] = y[i] == 1.0 ? 1.0 : -1.0;
    cap[i] = config.svm.c * sample_weights[i];
  }

  const Eigen::MatrixXd k = kernel_matrix(xs, xs, config.svm.kernel, gamma);

  // SMO on the dual: minimize 1/2 a^T Q a - e^T a, Q_ij = y_i y_j K_ij,
  // subject to 0 <= a_i <= C_i and y^T a = 0. Pair selection is the maximal
  // violating pair; scanning order makes ties deterministic.
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);
  const double eps = config.svm.tolerance;

  long iter = 0;
  bool converged = false;
  while (iter < config.svm.max_iter) {
    int i_up = -1, i_low = -1;
    double g_max = -std::numeric_limits<double>::infinity();
    double g_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      const double v = -ys[t] * grad[t];
      const bool in_up = (ys[t] > 0.0 && alpha[t] < cap[t]) || (ys[t] < 0.0 && alpha[t] > 0.0);
      const bool in_low = (ys[t] > 0.0 && alpha[t] > 0.0) || (ys[t] < 0.0 && alpha[t] < cap[t]);
      if (in_up && v > g_max) {
        g_max = v;
        i_up = static_cast<int>(t);
      }
      if (in_low && v < g_min) {
        g_min = v;
        i_low = static_cast<int>(t);
      }
    }
    if (i_up < 0 || i_low < 0 || g_max - g_min < eps) {
      converged = true;
      break;
    }

    const Eigen::Index i = i_up, j = i_low;
    const double yi = ys[i], yj = ys[j];
    const double old_ai = alpha[i], old_aj = alpha[j];

    if (yi != yj) {
      const double quad = std::max(k(i, i) + k(j, j) - 2.0 * k(i, j), kTau);
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0 && alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = diff;
      } else if (diff <= 0.0 && alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > cap[i] - cap[j] && alpha[i] > cap[i]) {
        alpha[i] = cap[i];
        alpha[j] = cap[i] - diff;
      } else if (diff <= cap[i] - cap[j] && alpha[j] > cap[j]) {
        alpha[j] = cap[j];
        alpha[i] = cap[j] + diff;
      }
    } else {
      const double quad = std::max(k(i, i) + k(j, j) - 2.0 * k(i, j), kTau);
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > cap[i] && alpha[i] > cap[i]) {
        alpha[i] = cap[i];
        alpha[j] = sum - cap[i];
      } else if (sum <= cap[i] && alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > cap[j] && alpha[j] > cap[j]) {
        alpha[j] = cap[j];
        alpha[i] = sum - cap[j];
      } else if (sum <= cap[j] && alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }

    const double dai = alpha[i] - old_ai;
    const double daj = alpha[j] - old_aj;
    if (dai == 0.0 && daj == 0.0) {
      converged = true;  // numerically stuck at the boundary
      break;
    }
    for (Eigen::Index t = 0; t < n; ++t) {
      grad[t] += ys[t] * (yi * k(t, i) * dai + yj * k(t, j) * daj);
    }
    ++iter;
  }
  clf.converged = converged;

  // Bias from free support vectors, midpoint of the violating range otherwise.
  double rho_sum = 0.0;
  int rho_n = 0;
  double up = -std::numeric_limits<double>::infinity();
  double low = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < n; ++t) {
    const double v = -ys[t] * grad[t];
    const bool in_up = (ys[t] > 0.0 && alpha[t] < cap[t]) || (ys[t] < 0.0 && alpha[t] > 0.0);
    const bool in_low = (ys[t] > 0.0 && alpha[t] > 0.0) || (ys[t] < 0.0 && alpha[t] < cap[t]);
    if (alpha[t] > 0.0 && alpha[t] < cap[t]) {
      rho_sum += v;
      ++rho_n;
    }
    if (in_up) up = std::max(up, v);
    if (in_low) low = std::min(low, v);
  }
  const double bias = rho_n > 0 ? rho_sum / rho_n : (up + low) / 2.0;
  model.bias = bias;

  // Keep only support vectors.
  std::vector<Eigen::Index> sv;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) sv.push_back(t);
  }
  model.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), xs.cols());
  model.dual_coef.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t s = 0; s < sv.size(); ++s) {
    model.support_vectors.row(static_cast<Eigen::Index>(s)) = xs.row(sv[s]);
    model.dual_coef[static_cast<Eigen::Index>(s)] = alpha[sv[s]] * ys[sv[s]];
  }

  const Eigen::VectorXd margins = detail::svm_margins(model, xs);
  const auto [pa, pb] = detail::fit_platt(margins, y);
  model.platt_a = pa;
  model.platt_b = pb;

  clf.model = std::move(model);
  return clf;
}

}  // namespace parkipipe
