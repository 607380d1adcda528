#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "parkipipe/stacking.hpp"

namespace parkipipe {

/// (recall of class 1 + recall of class 0) / 2.
/// Throws SingleClassTruth when y_true holds a single class.
double balanced_accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred);

struct FoldPlan {
  int repeats = 3;
  int folds = 5;
  std::uint64_t seed = 0;
  std::vector<std::map<std::string, int>> assignments;  // per repeat: id -> fold

  std::set<std::string> fold_ids(int repeat, int fold) const;
  std::vector<std::string> subject_ids() const;  // sorted
};

/// Stratified assignment: subjects are sorted by id, shuffled within class by
/// a stream keyed (seed, repeat), and dealt round-robin into folds, so every
/// fold's class counts deviate from an even split by at most one subject.
/// Throws TooFewSamplesPerClass when a class has fewer members than folds.
FoldPlan make_fold_plan(const std::vector<int>& labels, const std::vector<std::string>& ids,
                        int repeats = 3, int folds = 5, std::uint64_t seed = 0);

struct FoldScore {
  int repeat = 0;
  int fold = 0;
  double balanced_accuracy = 0.0;
  int tp = 0, fp = 0, tn = 0, fn = 0;
};

struct EvalReport {
  std::string pipeline;
  Task task = Task::PdVsHc;
  std::uint64_t seed = 0;
  std::vector<FoldScore> folds;  // fixed (repeat, fold) order
  double mean = 0.0;
  double stddev = 0.0;  // population convention over the fold scores
  std::string config_fingerprint;
};

/// A pipeline fitted for one fold; maps subject id to a PD probability.
struct FittedPipeline {
  std::function<double(const std::string& subject_id)> predict_proba;
};

/// Trains a pipeline from the cohort with `test_ids` removed from every
/// training pool. The capture pointer, when set, must record training ids.
using PipelineFitter =
    std::function<FittedPipeline(const Cohort& cohort, const std::set<std::string>& test_ids,
                                 Task task, TrainingCapture* capture)>;

/// Repeated stratified cross-validation over the plan's subjects (the
/// complete-modality subset of the task). Each fold retrains the pipeline
/// from scratch; tier-1 auxiliary subjects stay available to fitters but the
/// fold's test subjects are excluded from every pool.
EvalReport cross_validate(const Cohort& cohort, Task task, const std::string& pipeline_name,
                          const PipelineFitter& fitter, const FoldPlan& plan,
                          TrainingCapture* capture = nullptr, int threads = 1);

/// Stack pipeline over a prebuilt feature store.
PipelineFitter make_stack_fitter(const StackSpec& spec, const FeatureStore& store);

/// Single-modality pipeline. With use_aux, training adds every task-class
/// subject possessing the modality; otherwise only complete-modality
/// subjects (minus the test fold) are used.
PipelineFitter make_single_modality_fitter(Modality modality, LearnerKind kind,
                                           const TrainConfig& config, const FeatureStore& store,
                                           bool use_aux = false);

nlohmann::json fold_plan_to_json(const FoldPlan& plan);
nlohmann::json report_to_json(const EvalReport& report);

/// Text table in the layout of the paper-style summary: one row per
/// pipeline, cells "mean (STD)" with 3 decimals.
std::string render_report_table(const std::vector<EvalReport>& rows, Task task);

}  // namespace parkipipe
