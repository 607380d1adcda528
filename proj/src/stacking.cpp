#include "parkipipe/stacking.hpp"

#include <algorithm>

#include "parkipipe/evaluation.hpp"

namespace parkipipe {

namespace {

const std::array<std::string, 4> kMetaFeatureNames = {"p_quest", "p_mov", "p_voice", "p_tap"};

struct PoolView {
  std::vector<std::string> ids;  // sorted
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

PoolView gather_pool(const FeatureStore& store, Modality modality,
                     const std::vector<const SubjectRecord*>& subjects, Task task) {
  PoolView pool;
  const FeatureMatrix& fm = store.matrix(modality);
  pool.x.resize(static_cast<Eigen::Index>(subjects.size()), fm.values.cols());
  pool.y.resize(static_cast<Eigen::Index>(subjects.size()));
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const Eigen::Index row = fm.row_of(subjects[i]->id);
    if (row < 0) {
      fail("MissingModality", "feature store lacks " + to_string(modality) + " row for '" +
                                  subjects[i]->id + "'");
    }
    pool.x.row(static_cast<Eigen::Index>(i)) = fm.values.row(row);
    pool.y[static_cast<Eigen::Index>(i)] = task_label(task, subjects[i]->disease);
    pool.ids.push_back(subjects[i]->id);
  }
  return pool;
}

Classifier fit_pool(LearnerKind kind, const PoolView& pool, const TrainConfig& config,
                    const std::vector<std::string>& feature_names) {
  const Eigen::VectorXd weights = balanced_sample_weights(pool.y, config.class_weighting);
  return fit_learner(kind, pool.x, pool.y, weights, config, feature_names);
}

std::vector<const SubjectRecord*> sorted_task_subjects(const Cohort& cohort, Task task,
                                                       const std::set<std::string>& exclude_ids,
                                                       Modality required) {
  std::vector<const SubjectRecord*> out;
  for (const SubjectRecord& s : cohort.subjects) {
    if (!task_includes(task, s.disease)) continue;
    if (exclude_ids.count(s.id) > 0) continue;
    if (!modality_mask(s).contains(required)) continue;
    out.push_back(&s);
  }
  std::sort(out.begin(), out.end(),
            [](const SubjectRecord* a, const SubjectRecord* b) { return a->id < b->id; });
  return out;
}

}  // namespace

std::string to_string(Task task) {
  return task == Task::PdVsHc ? "pd-vs-hc" : "pd-vs-dd";
}

Task task_from_string(const std::string& s) {
  if (s == "pd-vs-hc") return Task::PdVsHc;
  if (s == "pd-vs-dd") return Task::PdVsDd;
  fail("InvalidParams", "unknown task '" + s + "' (expected pd-vs-hc or pd-vs-dd)");
}

DiseaseClass negative_class(Task task) {
  return task == Task::PdVsHc ? DiseaseClass::HC : DiseaseClass::DD;
}

bool task_includes(Task task, DiseaseClass c) {
  return c == DiseaseClass::PD || c == negative_class(task);
}

double task_label(Task task, DiseaseClass c) {
  if (c == DiseaseClass::PD) return 1.0;
  if (c == negative_class(task)) return 0.0;
  fail("InvalidParams", "disease class " + to_string(c) + " is not part of task " + to_string(task));
}

StackedModel fit_stack(const Cohort& cohort, Task task, const StackSpec& spec,
                       const FeatureStore& store, const std::set<std::string>& exclude_ids,
                       TrainingCapture* capture) {
  if (spec.inner_folds < 2) fail("InvalidParams", "fit_stack: inner_folds must be >= 2");

  // Complete-modality subset: the only subjects the meta-model can learn from.
  const std::vector<const SubjectRecord*> complete =
      sorted_task_subjects(cohort, task, exclude_ids, Modality::ClusterSubset);
  int n_pos = 0, n_neg = 0;
  for (const SubjectRecord* s : complete) {
    (s->disease == DiseaseClass::PD ? n_pos : n_neg) += 1;
  }
  if (n_pos < 2 * spec.inner_folds || n_neg < 2 * spec.inner_folds) {
    fail("InsufficientCompleteSamples",
         "fit_stack: complete-modality subset holds " + std::to_string(n_pos) + " PD / " +
             std::to_string(n_neg) + " " + to_string(negative_class(task)) + ", need at least " +
             std::to_string(2 * spec.inner_folds) + " each");
  }

  StackedModel model;
  model.task = task;
  model.spec = spec;

  // (1) Final base classifiers on the full per-modality pools.
  std::array<PoolView, 4> pools;
  for (std::size_t m = 0; m < kStackModalities.size(); ++m) {
    const Modality modality = kStackModalities[m];
    const auto subjects = sorted_task_subjects(cohort, task, exclude_ids, modality);
    pools[m] = gather_pool(store, modality, subjects, task);
    model.base[m] =
        fit_pool(spec.assignment[m], pools[m], spec.train, store.matrix(modality).names);
    if (capture) capture->add("base_" + to_string(modality) + "_final", pools[m].ids);
  }

  // (2) Out-of-fold meta features over the complete subset.
  std::vector<std::string> complete_ids;
  std::vector<int> complete_labels;
  for (const SubjectRecord* s : complete) {
    complete_ids.push_back(s->id);
    complete_labels.push_back(s->disease == DiseaseClass::PD ? 1 : 0);
  }
  const FoldPlan inner_plan = make_fold_plan(complete_labels, complete_ids, 1, spec.inner_folds,
                                             mix_seed(spec.seed, "stack_inner"));

  Eigen::MatrixXd meta_x(static_cast<Eigen::Index>(complete.size()), 4);
  Eigen::VectorXd meta_y(static_cast<Eigen::Index>(complete.size()));
  for (std::size_t i = 0; i < complete.size(); ++i) {
    meta_y[static_cast<Eigen::Index>(i)] = task_label(task, complete[i]->disease);
  }

  for (int fold = 0; fold < spec.inner_folds; ++fold) {
    std::set<std::string> fold_ids;
    for (std::size_t i = 0; i < complete.size(); ++i) {
      if (inner_plan.assignments[0].at(complete_ids[i]) == fold) fold_ids.insert(complete_ids[i]);
    }
    for (std::size_t m = 0; m < kStackModalities.size(); ++m) {
      const Modality modality = kStackModalities[m];
      // Temporary base: same pool minus this fold's subjects.
      PoolView train_pool;
      const PoolView& full = pools[m];
      std::vector<Eigen::Index> keep;
      for (std::size_t i = 0; i < full.ids.size(); ++i) {
        if (fold_ids.count(full.ids[i]) == 0) keep.push_back(static_cast<Eigen::Index>(i));
      }
      train_pool.x.resize(static_cast<Eigen::Index>(keep.size()), full.x.cols());
      train_pool.y.resize(static_cast<Eigen::Index>(keep.size()));
      for (std::size_t i = 0; i < keep.size(); ++i) {
        train_pool.x.row(static_cast<Eigen::Index>(i)) = full.x.row(keep[i]);
        train_pool.y[static_cast<Eigen::Index>(i)] = full.y[keep[i]];
        train_pool.ids.push_back(full.ids[keep[i]]);
      }
      const Classifier temp = fit_pool(spec.assignment[m], train_pool, spec.train,
                                       store.matrix(modality).names);
      if (capture) {
        capture->add("base_" + to_string(modality) + "_inner_fold" + std::to_string(fold),
                     train_pool.ids);
      }

      const FeatureMatrix& fm = store.matrix(modality);
      for (std::size_t i = 0; i < complete.size(); ++i) {
        if (fold_ids.count(complete_ids[i]) == 0) continue;
        const Eigen::Index row = fm.row_of(complete_ids[i]);
        const Eigen::VectorXd p = predict_proba(temp, fm.values.row(row));
        meta_x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) = p[0];
      }
    }
  }

  // (3) Meta logistic regression on the probability matrix.
  const Eigen::VectorXd meta_weights =
      balanced_sample_weights(meta_y, spec.train.class_weighting);
  model.meta = fit_logreg(meta_x, meta_y, meta_weights, spec.train,
                          {kMetaFeatureNames.begin(), kMetaFeatureNames.end()});
  if (capture) capture->add("meta", complete_ids);
  return model;
}

StackedModel fit_stack(const Cohort& cohort, Task task, const StackSpec& spec,
                       const FeatureConfig& config, int threads) {
  const FeatureStore store = build_feature_store(cohort, config, threads);
  return fit_stack(cohort, task, spec, store);
}

namespace {

StackPrediction finish_prediction(const StackedModel& model,
                                  const std::array<double, 4>& base_probs) {
  Eigen::MatrixXd meta_row(1, 4);
  for (int m = 0; m < 4; ++m) meta_row(0, m) = base_probs[static_cast<std::size_t>(m)];
  const Eigen::VectorXd p = predict_proba(model.meta, meta_row);

  StackPrediction out;
  out.base_probabilities = base_probs;
  out.probability = p[0];
  out.label = p[0] >= 0.5 ? 1 : 0;
  return out;
}

}  // namespace

StackPrediction predict_stack(const StackedModel& model, const SubjectRecord& subject,
                              const FeatureConfig& config) {
  if (!modality_mask(subject).all()) {
    fail("MissingModality", "predict_stack: subject '" + subject.id +
                                "' lacks one or more modalities");
  }
  std::array<double, 4> base_probs{};
  for (std::size_t m = 0; m < kStackModalities.size(); ++m) {
    FeatureVector fv;
    switch (kStackModalities[m]) {
      case Modality::Quest: fv = extract_questionnaire(*subject.questionnaire); break;
      case Modality::Mov: fv = extract_movement(subject.movement, config); break;
      case Modality::Voice: fv = extract_voice(subject.voice, config); break;
      case Modality::Tap: fv = extract_tap(*subject.taps, config); break;
      default: break;
    }
    FeatureMatrix fm;
    fm.modality = fv.modality;
    fm.names = fv.names;
    fm.subject_ids = {subject.id};
    fm.values = fv.values.transpose();
    base_probs[m] = predict_proba(model.base[m], fm)[0];
  }
  return finish_prediction(model, base_probs);
}

StackPrediction predict_stack(const StackedModel& model, const FeatureStore& store,
                              const std::string& subject_id) {
  std::array<double, 4> base_probs{};
  for (std::size_t m = 0; m < kStackModalities.size(); ++m) {
    const FeatureMatrix& fm = store.matrix(kStackModalities[m]);
    const Eigen::Index row = fm.row_of(subject_id);
    if (row < 0) {
      fail("MissingModality", "predict_stack: no " + to_string(kStackModalities[m]) +
                                  " features for '" + subject_id + "'");
    }
    base_probs[m] = predict_proba(model.base[m], fm.values.row(row))[0];
  }
  return finish_prediction(model, base_probs);
}

// --- serialization ----------------------------------------------------------

nlohmann::json train_config_to_json(const TrainConfig& config) {
  return nlohmann::json{
      {"class_weighting", config.class_weighting == ClassWeighting::Balanced ? "balanced" : "none"},
      {"seed", config.seed},
      {"svm",
       {{"kernel", config.svm.kernel == KernelKind::Rbf ? "rbf" : "linear"},
        {"c", config.svm.c},
        {"gamma", config.svm.gamma},
        {"tolerance", config.svm.tolerance},
        {"max_iter", config.svm.max_iter}}},
      {"gbdt",
       {{"n_trees", config.gbdt.n_trees},
        {"max_depth", config.gbdt.max_depth},
        {"learning_rate", config.gbdt.learning_rate},
        {"min_leaf", config.gbdt.min_leaf}}},
      {"logreg",
       {{"l2_lambda", config.logreg.l2_lambda},
        {"max_iter", config.logreg.max_iter},
        {"tolerance", config.logreg.tolerance}}}};
}

TrainConfig train_config_from_json(const nlohmann::json& doc) {
  TrainConfig config;
  config.class_weighting = doc.at("class_weighting").get<std::string>() == "balanced"
                               ? ClassWeighting::Balanced
                               : ClassWeighting::None;
  config.seed = doc.at("seed").get<std::uint64_t>();
  const auto& svm = doc.at("svm");
  config.svm.kernel = svm.at("kernel").get<std::string>() == "rbf" ? KernelKind::Rbf
                                                                   : KernelKind::Linear;
  config.svm.c = svm.at("c").get<double>();
  config.svm.gamma = svm.at("gamma").get<double>();
  config.svm.tolerance = svm.at("tolerance").get<double>();
  config.svm.max_iter = svm.at("max_iter").get<long>();
  const auto& gbdt = doc.at("gbdt");
  config.gbdt.n_trees = gbdt.at("n_trees").get<int>();
  config.gbdt.max_depth = gbdt.at("max_depth").get<int>();
  config.gbdt.learning_rate = gbdt.at("learning_rate").get<double>();
  config.gbdt.min_leaf = gbdt.at("min_leaf").get<int>();
  const auto& logreg = doc.at("logreg");
  config.logreg.l2_lambda = logreg.at("l2_lambda").get<double>();
  config.logreg.max_iter = logreg.at("max_iter").get<int>();
  config.logreg.tolerance = logreg.at("tolerance").get<double>();
  return config;
}

nlohmann::json stack_spec_to_json(const StackSpec& spec) {
  nlohmann::json assignment;
  for (std::size_t m = 0; m < kStackModalities.size(); ++m) {
    assignment[to_string(kStackModalities[m])] = to_string(spec.assignment[m]);
  }
  return nlohmann::json{{"assignment", assignment},
                        {"train", train_config_to_json(spec.train)},
                        {"inner_folds", spec.inner_folds},
                        {"seed", spec.seed}};
}

StackSpec stack_spec_from_json(const nlohmann::json& doc) {
  StackSpec spec;
  for (std::size_t m = 0; m < kStackModalities.size(); ++m) {
    spec.assignment[m] =
        learner_kind_from_string(doc.at("assignment").at(to_string(kStackModalities[m])).get<std::string>());
  }
  spec.train = train_config_from_json(doc.at("train"));
  spec.inner_folds = doc.at("inner_folds").get<int>();
  spec.seed = doc.at("seed").get<std::uint64_t>();
  return spec;
}

nlohmann::json stack_to_json(const StackedModel& model) {
  nlohmann::json base;
  for (std::size_t m = 0; m < kStackModalities.size(); ++m) {
    base[to_string(kStackModalities[m])] = classifier_to_json(model.base[m]);
  }
  return nlohmann::json{{"stack_schema", kStackSchemaVersion},
                        {"task", to_string(model.task)},
                        {"spec", stack_spec_to_json(model.spec)},
                        {"base", std::move(base)},
                        {"meta", classifier_to_json(model.meta)}};
}

StackedModel stack_from_json(const nlohmann::json& doc) {
  if (!doc.contains("stack_schema") || doc["stack_schema"].get<int>() != kStackSchemaVersion) {
    fail("SchemaError", "stack document has unsupported stack_schema");
  }
  StackedModel model;
  model.task = task_from_string(doc.at("task").get<std::string>());
  model.spec = stack_spec_from_json(doc.at("spec"));
  for (std::size_t m = 0; m < kStackModalities.size(); ++m) {
    model.base[m] = classifier_from_json(doc.at("base").at(to_string(kStackModalities[m])));
  }
  model.meta = classifier_from_json(doc.at("meta"));
  return model;
}

}  // namespace parkipipe
