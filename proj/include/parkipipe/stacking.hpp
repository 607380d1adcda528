#pragma once

#include <array>
#include <set>
#include <string>

#include "parkipipe/learners.hpp"

namespace parkipipe {

enum class Task { PdVsHc, PdVsDd };

std::string to_string(Task task);
Task task_from_string(const std::string& s);

/// PD is always the positive class (label 1).
DiseaseClass negative_class(Task task);
bool task_includes(Task task, DiseaseClass c);
double task_label(Task task, DiseaseClass c);

inline constexpr std::array<Modality, 4> kStackModalities = {Modality::Quest, Modality::Mov,
                                                             Modality::Voice, Modality::Tap};

struct StackSpec {
  // Per-modality learner, indexed like kStackModalities.
  std::array<LearnerKind, 4> assignment = {LearnerKind::Gbdt, LearnerKind::Svm, LearnerKind::Svm,
                                           LearnerKind::Gbdt};
  TrainConfig train;
  int inner_folds = 5;
  std::uint64_t seed = 0;
};

struct StackedModel {
  Task task = Task::PdVsHc;
  StackSpec spec;
  std::array<Classifier, 4> base;  // modality order fixed by kStackModalities
  Classifier meta;                 // logistic regression over 4 base probabilities
};

/// Instrumentation: every fit records which subjects its training set held,
/// so tests can assert that no evaluated subject ever trained its own model.
struct TrainingCapture {
  struct Entry {
    std::string component;
    std::vector<std::string> training_ids;
  };
  std::string scope;  // prefix stamped on new entries (set by cross_validate)
  std::vector<Entry> entries;

  void add(const std::string& component, std::vector<std::string> ids) {
    entries.push_back(Entry{scope + component, std::move(ids)});
  }
};

/// Adapted stacking fit:
///   (1) each base classifier trains on every task-class subject that has its
///       modality (tier-1 subjects included), never on excluded ids;
///   (2) meta features are out-of-fold probabilities from a stratified inner
///       K-fold over the complete-modality subset, each fold scored by
///       temporary bases whose pools exclude that fold;
///   (3) the meta logistic regression fits those probabilities with balanced
///       class weights.
/// Throws InsufficientCompleteSamples when the complete subset is smaller
/// than 2 * inner_folds per class.
StackedModel fit_stack(const Cohort& cohort, Task task, const StackSpec& spec,
                       const FeatureStore& store,
                       const std::set<std::string>& exclude_ids = {},
                       TrainingCapture* capture = nullptr);

/// Convenience overload that builds the feature store itself.
StackedModel fit_stack(const Cohort& cohort, Task task, const StackSpec& spec,
                       const FeatureConfig& config = {}, int threads = 1);

struct StackPrediction {
  int label = 0;  // 1 = PD
  double probability = 0.0;
  std::array<double, 4> base_probabilities{};
};

/// Throws MissingModality unless the subject carries all four modalities.
StackPrediction predict_stack(const StackedModel& model, const SubjectRecord& subject,
                              const FeatureConfig& config = {});

/// Prediction through precomputed feature rows (used by cross-validation).
StackPrediction predict_stack(const StackedModel& model, const FeatureStore& store,
                              const std::string& subject_id);

nlohmann::json train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& doc);
nlohmann::json stack_spec_to_json(const StackSpec& spec);
StackSpec stack_spec_from_json(const nlohmann::json& doc);
nlohmann::json stack_to_json(const StackedModel& model);
StackedModel stack_from_json(const nlohmann::json& doc);

}  // namespace parkipipe
