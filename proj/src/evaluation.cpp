#include "parkipipe/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace parkipipe {

double balanced_accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
  if (y_true.size() != y_pred.size()) {
    fail("InvalidParams", "balanced_accuracy: length mismatch");
  }
  if (y_true.empty()) fail("InvalidParams", "balanced_accuracy: empty input");
  long pos_total = 0, neg_total = 0, pos_hit = 0, neg_hit = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == 1) {
      ++pos_total;
      if (y_pred[i] == 1) ++pos_hit;
    } else if (y_true[i] == 0) {
      ++neg_total;
      if (y_pred[i] == 0) ++neg_hit;
    } else {
      fail("InvalidParams", "balanced_accuracy: labels must be 0 or 1");
    }
  }
  if (pos_total == 0 || neg_total == 0) {
    fail("SingleClassTruth", "balanced_accuracy: y_true holds a single class");
  }
  const double recall_pos = static_cast<double>(pos_hit) / static_cast<double>(pos_total);
  const double recall_neg = static_cast<double>(neg_hit) / static_cast<double>(neg_total);
  return 0.5 * (recall_pos + recall_neg);
}

std::set<std::string> FoldPlan::fold_ids(int repeat, int fold) const {
  std::set<std::string> out;
  for (const auto& [id, f] : assignments.at(static_cast<std::size_t>(repeat))) {
    if (f == fold) out.insert(id);
  }
  return out;
}

std::vector<std::string> FoldPlan::subject_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, f] : assignments.at(0)) out.push_back(id);
  return out;  // std::map iterates sorted
}

FoldPlan make_fold_plan(const std::vector<int>& labels, const std::vector<std::string>& ids,
                        int repeats, int folds, std::uint64_t seed) {
  if (labels.size() != ids.size()) fail("InvalidParams", "make_fold_plan: length mismatch");
  if (repeats < 1 || folds < 2) fail("InvalidParams", "make_fold_plan: need repeats >= 1, folds >= 2");

  // Sort by id first so the plan ignores input order.
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });

  std::vector<std::string> class_members[2];
  for (std::size_t idx : order) {
    if (labels[idx] != 0 && labels[idx] != 1) {
      fail("InvalidParams", "make_fold_plan: labels must be 0 or 1");
    }
    class_members[labels[idx]].push_back(ids[idx]);
  }
  for (int c = 0; c < 2; ++c) {
    if (class_members[c].size() < static_cast<std::size_t>(folds)) {
      fail("TooFewSamplesPerClass", "make_fold_plan: class " + std::to_string(c) + " has " +
                                        std::to_string(class_members[c].size()) +
                                        " subjects, need >= " + std::to_string(folds));
    }
  }

  FoldPlan plan;
  plan.repeats = repeats;
  plan.folds = folds;
  plan.seed = seed;
  for (int r = 0; r < repeats; ++r) {
    std::map<std::string, int> assignment;
    for (int c = 0; c < 2; ++c) {
      std::vector<std::string> members = class_members[c];
      auto rng = seeded_stream(seed, "fold_plan", static_cast<std::uint64_t>(r) * 2 +
                                                      static_cast<std::uint64_t>(c));
      shuffle_in_place(members, rng);
      for (std::size_t i = 0; i < members.size(); ++i) {
        assignment[members[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
      }
    }
    plan.assignments.push_back(std::move(assignment));
  }
  return plan;
}

EvalReport cross_validate(const Cohort& cohort, Task task, const std::string& pipeline_name,
                          const PipelineFitter& fitter, const FoldPlan& plan,
                          TrainingCapture* capture, int threads) {
  EvalReport report;
  report.pipeline = pipeline_name;
  report.task = task;
  report.seed = plan.seed;

  struct Cell {
    FoldScore score;
  };
  const std::size_t n_cells =
      static_cast<std::size_t>(plan.repeats) * static_cast<std::size_t>(plan.folds);
  std::vector<Cell> cells(n_cells);

  // Capture is inherently sequential; parallel execution is only taken when
  // no instrumentation is attached.
  const int effective_threads = capture ? 1 : threads;

  parallel_for(n_cells, effective_threads, [&](std::size_t cell) {
    const int repeat = static_cast<int>(cell) / plan.folds;
    const int fold = static_cast<int>(cell) % plan.folds;
    const std::set<std::string> test_ids = plan.fold_ids(repeat, fold);

    if (capture) {
      capture->scope = "repeat" + std::to_string(repeat) + ".fold" + std::to_string(fold) + ".";
    }
    const FittedPipeline fitted = fitter(cohort, test_ids, task, capture);

    std::vector<int> y_true, y_pred;
    for (const std::string& id : test_ids) {  // std::set iterates sorted
      const SubjectRecord* subject = find_subject(cohort, id);
      if (subject == nullptr) fail("InvalidParams", "cross_validate: unknown subject '" + id + "'");
      const double p = fitted.predict_proba(id);
      y_true.push_back(static_cast<int>(task_label(task, subject->disease)));
      y_pred.push_back(p >= 0.5 ? 1 : 0);
    }

    FoldScore score;
    score.repeat = repeat;
    score.fold = fold;
    score.balanced_accuracy = balanced_accuracy(y_true, y_pred);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      if (y_true[i] == 1) {
        (y_pred[i] == 1 ? score.tp : score.fn) += 1;
      } else {
        (y_pred[i] == 0 ? score.tn : score.fp) += 1;
      }
    }
    cells[cell].score = score;
  });
  if (capture) capture->scope.clear();

  double sum = 0.0;
  for (const Cell& c : cells) {
    report.folds.push_back(c.score);
    sum += c.score.balanced_accuracy;
  }
  report.mean = sum / static_cast<double>(n_cells);
  double var = 0.0;
  for (const Cell& c : cells) {
    const double d = c.score.balanced_accuracy - report.mean;
    var += d * d;
  }
  report.stddev = std::sqrt(var / static_cast<double>(n_cells));
  return report;
}

PipelineFitter make_stack_fitter(const StackSpec& spec, const FeatureStore& store) {
  return [spec, &store](const Cohort& cohort, const std::set<std::string>& test_ids, Task task,
                        TrainingCapture* capture) {
    auto model = std::make_shared<StackedModel>(
        fit_stack(cohort, task, spec, store, test_ids, capture));
    const FeatureStore* store_ptr = &store;
    FittedPipeline fitted;
    fitted.predict_proba = [model, store_ptr](const std::string& id) {
      return predict_stack(*model, *store_ptr, id).probability;
    };
    return fitted;
  };
}

PipelineFitter make_single_modality_fitter(Modality modality, LearnerKind kind,
                                           const TrainConfig& config, const FeatureStore& store,
                                           bool use_aux) {
  return [modality, kind, config, &store, use_aux](const Cohort& cohort,
                                                   const std::set<std::string>& test_ids,
                                                   Task task, TrainingCapture* capture) {
    const FeatureMatrix& fm = store.matrix(modality);

    std::vector<std::string> train_ids;
    for (const SubjectRecord& s : cohort.subjects) {
      if (!task_includes(task, s.disease)) continue;
      if (test_ids.count(s.id) > 0) continue;
      const ModalitySet mask = modality_mask(s);
      const bool eligible = use_aux ? mask.contains(modality) : mask.all();
      if (eligible) train_ids.push_back(s.id);
    }
    std::sort(train_ids.begin(), train_ids.end());

    Eigen::MatrixXd x(static_cast<Eigen::Index>(train_ids.size()), fm.values.cols());
    Eigen::VectorXd y(static_cast<Eigen::Index>(train_ids.size()));
    for (std::size_t i = 0; i < train_ids.size(); ++i) {
      const Eigen::Index row = fm.row_of(train_ids[i]);
      if (row < 0) fail("MissingModality", "no features for '" + train_ids[i] + "'");
      x.row(static_cast<Eigen::Index>(i)) = fm.values.row(row);
      y[static_cast<Eigen::Index>(i)] =
          task_label(task, find_subject(cohort, train_ids[i])->disease);
    }
    const Eigen::VectorXd weights = balanced_sample_weights(y, config.class_weighting);
    auto clf = std::make_shared<Classifier>(fit_learner(kind, x, y, weights, config, fm.names));
    if (capture) capture->add("single_" + to_string(modality), train_ids);

    const FeatureStore* store_ptr = &store;
    FittedPipeline fitted;
    fitted.predict_proba = [clf, store_ptr, modality](const std::string& id) {
      const FeatureMatrix& m = store_ptr->matrix(modality);
      const Eigen::Index row = m.row_of(id);
      if (row < 0) fail("MissingModality", "no features for '" + id + "'");
      return predict_proba(*clf, m.values.row(row))[0];
    };
    return fitted;
  };
}

nlohmann::json fold_plan_to_json(const FoldPlan& plan) {
  nlohmann::json repeats = nlohmann::json::array();
  for (const auto& assignment : plan.assignments) {
    nlohmann::json obj;
    for (const auto& [id, fold] : assignment) obj[id] = fold;
    repeats.push_back(std::move(obj));
  }
  return nlohmann::json{
      {"repeats", plan.repeats}, {"folds", plan.folds}, {"seed", plan.seed},
      {"assignments", std::move(repeats)}};
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json folds = nlohmann::json::array();
  nlohmann::json scores = nlohmann::json::array();
  for (const FoldScore& f : report.folds) {
    folds.push_back({{"repeat", f.repeat},
                     {"fold", f.fold},
                     {"balanced_accuracy", f.balanced_accuracy},
                     {"tp", f.tp},
                     {"fp", f.fp},
                     {"tn", f.tn},
                     {"fn", f.fn}});
    scores.push_back(f.balanced_accuracy);
  }
  return nlohmann::json{{"pipeline", report.pipeline},
                        {"task", to_string(report.task)},
                        {"seed", report.seed},
                        {"fold_scores", std::move(scores)},
                        {"folds", std::move(folds)},
                        {"mean", report.mean},
                        {"std", report.stddev},
                        {"config_fingerprint", report.config_fingerprint}};
}

std::string render_report_table(const std::vector<EvalReport>& rows, Task task) {
  const std::string task_header = task == Task::PdVsHc ? "PD vs. HC" : "PD vs. DD";
  std::size_t name_width = std::string("Task").size();
  for (const EvalReport& r : rows) name_width = std::max(name_width, r.pipeline.size());

  std::ostringstream os;
  os << "Task";
  os << std::string(name_width - 4 + 2, ' ') << task_header << "\n";
  os << std::string(name_width + 2 + task_header.size() + 8, '-') << "\n";
  for (const EvalReport& r : rows) {
    os << r.pipeline << std::string(name_width - r.pipeline.size() + 2, ' ')
       << format_fixed(r.mean, 3) << " (" << format_fixed(r.stddev, 3) << ")\n";
  }
  return os.str();
}

}  // namespace parkipipe
