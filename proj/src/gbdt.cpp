#include <algorithm>
#include <numeric>

#include "learners_detail.hpp"

namespace parkipipe {

namespace {

constexpr double kHessianFloor = 1e-6;
constexpr double kMaxLeafValue = 10.0;

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

struct NodeStats {
  double sum = 0.0;     // weighted residual sum
  double weight = 0.0;  // total sample weight
  int count = 0;
};

}  // namespace

namespace detail {

double gbdt_score_one(const GbdtModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  double score = model.base_score;
  for (const std::vector<GbdtNode>& tree : model.trees) {
    int node = 0;
    while (tree[static_cast<std::size_t>(node)].feature >= 0) {
      const GbdtNode& nd = tree[static_cast<std::size_t>(node)];
      node = row[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    score += model.config.learning_rate * tree[static_cast<std::size_t>(node)].value;
  }
  return score;
}

}  // namespace detail

Classifier fit_gbdt(const Eigen::Ref<const Eigen::MatrixXd>& x,
                    const Eigen::Ref<const Eigen::VectorXd>& y,
                    const Eigen::Ref<const Eigen::VectorXd>& sample_weights,
                    const TrainConfig& config, std::vector<std::string> feature_names) {
  detail::check_training_inputs(x, y, sample_weights);
  class_weights(y);
  const GbdtConfig& cfg = config.gbdt;
  if (cfg.n_trees < 1 || cfg.max_depth < 1 || cfg.min_leaf < 1) {
    fail("InvalidParams", "fit_gbdt: n_trees, max_depth and min_leaf must be >= 1");
  }
  if (!(cfg.learning_rate > 0.0 && cfg.learning_rate <= 1.0)) {
    fail("InvalidParams", "fit_gbdt: learning_rate must be in (0, 1]");
  }

  Classifier clf;
  clf.kind = LearnerKind::Gbdt;
  clf.seed = config.seed;
  clf.feature_names = detail::resolve_feature_names(std::move(feature_names), x.cols());
  clf.scaler.fit(x);
  const Eigen::MatrixXd xs = clf.scaler.apply(x);
  const Eigen::Index n = xs.rows();
  const Eigen::Index d = xs.cols();

  GbdtModel model;
  model.config = cfg;

  const double w_total = sample_weights.sum();
  const double p_base = std::clamp(sample_weights.dot(y) / w_total, 1e-12, 1.0 - 1e-12);
  model.base_score = std::log(p_base / (1.0 - p_base));

  // Global presort per feature, value ties broken by row index so split
  // scans are deterministic.
  std::vector<std::vector<int>> order(static_cast<std::size_t>(d));
  for (Eigen::Index f = 0; f < d; ++f) {
    auto& ord = order[static_cast<std::size_t>(f)];
    ord.resize(static_cast<std::size_t>(n));
    std::iota(ord.begin(), ord.end(), 0);
    std::stable_sort(ord.begin(), ord.end(),
                     [&](int a, int b) { return xs(a, f) < xs(b, f); });
  }

  Eigen::VectorXd score = Eigen::VectorXd::Constant(n, model.base_score);
  Eigen::VectorXd prob(n), residual(n), hessian(n);

  auto training_loss = [&]() {
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double z = score[i];
      loss += sample_weights[i] * (detail::log1p_exp(z) - y[i] * z);
    }
    return loss;
  };

  std::vector<int> node_of(static_cast<std::size_t>(n));
  clf.training_loss.push_back(training_loss());

  for (int tree_idx = 0; tree_idx < cfg.n_trees; ++tree_idx) {
    for (Eigen::Index i = 0; i < n; ++i) {
      prob[i] = detail::sigmoid(score[i]);
      residual[i] = y[i] - prob[i];
      hessian[i] = prob[i] * (1.0 - prob[i]);
    }

    std::vector<GbdtNode> tree(1);
    std::fill(node_of.begin(), node_of.end(), 0);
    std::vector<int> open_nodes = {0};

    for (int depth = 0; depth < cfg.max_depth && !open_nodes.empty(); ++depth) {
      // Aggregate per open node, then scan every feature once in sorted
      // order, maintaining running left-side sums per node.
      std::vector<NodeStats> totals(tree.size());
      for (Eigen::Index i = 0; i < n; ++i) {
        NodeStats& s = totals[static_cast<std::size_t>(node_of[static_cast<std::size_t>(i)])];
        s.sum += sample_weights[i] * residual[i];
        s.weight += sample_weights[i];
        s.count += 1;
      }

      std::vector<SplitChoice> best(tree.size());
      std::vector<NodeStats> left(tree.size());
      std::vector<double> prev_value(tree.size());
      std::vector<int> is_open(tree.size(), 0);
      for (int nd : open_nodes) is_open[static_cast<std::size_t>(nd)] = 1;

      for (Eigen::Index f = 0; f < d; ++f) {
        for (int nd : open_nodes) {
          left[static_cast<std::size_t>(nd)] = NodeStats{};
        }
        for (int row : order[static_cast<std::size_t>(f)]) {
          const int nd = node_of[static_cast<std::size_t>(row)];
          if (!is_open[static_cast<std::size_t>(nd)]) continue;
          NodeStats& l = left[static_cast<std::size_t>(nd)];
          const NodeStats& tot = totals[static_cast<std::size_t>(nd)];
          const double value = xs(row, f);
          if (l.count > 0 && value > prev_value[static_cast<std::size_t>(nd)] &&
              l.count >= cfg.min_leaf && tot.count - l.count >= cfg.min_leaf) {
            const double right_sum = tot.sum - l.sum;
            const double right_weight = tot.weight - l.weight;
            const double gain = l.sum * l.sum / l.weight + right_sum * right_sum / right_weight -
                                tot.sum * tot.sum / tot.weight;
            SplitChoice& b = best[static_cast<std::size_t>(nd)];
            if (gain > 1e-12 && (!b.found || gain > b.gain)) {
              b.found = true;
              b.feature = static_cast<int>(f);
              b.threshold = 0.5 * (prev_value[static_cast<std::size_t>(nd)] + value);
              b.gain = gain;
            }
          }
          l.sum += sample_weights[row] * residual[row];
          l.weight += sample_weights[row];
          l.count += 1;
          prev_value[static_cast<std::size_t>(nd)] = value;
        }
      }

      std::vector<int> next_open;
      for (int nd : open_nodes) {
        const SplitChoice& b = best[static_cast<std::size_t>(nd)];
        if (!b.found) continue;
        GbdtNode& parent = tree[static_cast<std::size_t>(nd)];
        parent.feature = b.feature;
        parent.threshold = b.threshold;
        parent.left = static_cast<int>(tree.size());
        parent.right = static_cast<int>(tree.size() + 1);
        tree.emplace_back();
        tree.emplace_back();
        next_open.push_back(parent.left);
        next_open.push_back(parent.right);
      }
      if (next_open.empty()) break;

      for (Eigen::Index i = 0; i < n; ++i) {
        const GbdtNode& nd = tree[static_cast<std::size_t>(node_of[static_cast<std::size_t>(i)])];
        if (nd.feature >= 0) {
          node_of[static_cast<std::size_t>(i)] =
              xs(i, nd.feature) <= nd.threshold ? nd.left : nd.right;
        }
      }
      open_nodes = std::move(next_open);
    }

    // Newton leaf values on the logistic loss.
    std::vector<double> leaf_num(tree.size(), 0.0);
    std::vector<double> leaf_den(tree.size(), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int nd = node_of[static_cast<std::size_t>(i)];
      leaf_num[static_cast<std::size_t>(nd)] += sample_weights[i] * residual[i];
      leaf_den[static_cast<std::size_t>(nd)] += sample_weights[i] * hessian[i];
    }
    for (std::size_t nd = 0; nd < tree.size(); ++nd) {
      if (tree[nd].feature < 0) {
        const double value = leaf_num[nd] / (leaf_den[nd] + kHessianFloor);
        tree[nd].value = std::clamp(value, -kMaxLeafValue, kMaxLeafValue);
      }
    }

    for (Eigen::Index i = 0; i < n; ++i) {
      score[i] += cfg.learning_rate * tree[static_cast<std::size_t>(node_of[static_cast<std::size_t>(i)])].value;
    }
    model.trees.push_back(std::move(tree));
    clf.training_loss.push_back(training_loss());
  }

  clf.model = std::move(model);
  return clf;
}

}  // namespace parkipipe
