#include <doctest.h>

#include <algorithm>

#include "parkipipe/evaluation.hpp"
#include "test_support.hpp"

using namespace parkipipe;
using namespace test_support;

TEST_SUITE_BEGIN("evaluation");

TEST_CASE("balanced accuracy from the defining formula") {
  CHECK(balanced_accuracy({1, 1, 0, 0}, {1, 1, 0, 0}) == 1.0);
  CHECK(balanced_accuracy({1, 1, 0, 0}, {1, 1, 1, 1}) == 0.5);

  // recalls 0.8 (8/10 positives) and 0.6 (6/10 negatives) -> 0.7
  std::vector<int> y_true, y_pred;
  for (int i = 0; i < 10; ++i) {
    y_true.push_back(1);
    y_pred.push_back(i < 8 ? 1 : 0);
  }
  for (int i = 0; i < 10; ++i) {
    y_true.push_back(0);
    y_pred.push_back(i < 6 ? 0 : 1);
  }
  CHECK(balanced_accuracy(y_true, y_pred) == doctest::Approx(0.7).epsilon(1e-15));

  // label-symbol swap applied to both vectors leaves the score unchanged
  std::vector<int> t2 = y_true, p2 = y_pred;
  for (int& v : t2) v = 1 - v;
  for (int& v : p2) v = 1 - v;
  CHECK(balanced_accuracy(t2, p2) == balanced_accuracy(y_true, y_pred));

  CHECK_THROWS_AS(balanced_accuracy({1, 1}, {1, 0}), Error);
  CHECK_THROWS_AS(balanced_accuracy({1, 0}, {1}), Error);
}

namespace {

std::vector<std::string> make_ids(int n, const std::string& prefix) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%03d", i);
    ids.push_back(prefix + buf);
  }
  return ids;
}

}  // namespace

TEST_CASE("fold plan deals classes evenly") {
  std::vector<int> labels(20, 0);
  std::fill(labels.begin() + 10, labels.end(), 1);
  const FoldPlan plan = make_fold_plan(labels, make_ids(20, "s"), 3, 5, 7);
  REQUIRE(plan.assignments.size() == 3);
  for (int r = 0; r < 3; ++r) {
    for (int f = 0; f < 5; ++f) {
      int pos = 0, neg = 0;
      for (const std::string& id : plan.fold_ids(r, f)) {
        (std::stoi(id.substr(1)) >= 10 ? pos : neg) += 1;
      }
      CHECK(pos == 2);
      CHECK(neg == 2);
    }
  }
}

TEST_CASE("fold plan is seed-deterministic and input-order independent") {
  std::vector<int> labels;
  std::vector<std::string> ids;
  for (int i = 0; i < 30; ++i) {
    labels.push_back(i % 3 == 0 ? 1 : 0);
    ids.push_back("subj" + std::to_string(i));
  }
  const FoldPlan a = make_fold_plan(labels, ids, 2, 5, 99);
  const FoldPlan b = make_fold_plan(labels, ids, 2, 5, 99);
  CHECK(a.assignments == b.assignments);

  std::vector<std::size_t> perm(ids.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = (i * 7 + 3) % perm.size();
  std::vector<int> labels_p;
  std::vector<std::string> ids_p;
  for (std::size_t i : perm) {
    labels_p.push_back(labels[i]);
    ids_p.push_back(ids[i]);
  }
  const FoldPlan c = make_fold_plan(labels_p, ids_p, 2, 5, 99);
  CHECK(a.assignments == c.assignments);

  const FoldPlan d = make_fold_plan(labels, ids, 2, 5, 100);
  CHECK(a.assignments != d.assignments);
}

TEST_CASE("the 21/23 composition gives 4-5 subjects of each class per fold") {
  std::vector<int> labels(44, 1);
  std::fill(labels.begin() + 21, labels.end(), 0);
  const FoldPlan plan = make_fold_plan(labels, make_ids(44, "p"), 3, 5, 1);
  for (int r = 0; r < 3; ++r) {
    for (int f = 0; f < 5; ++f) {
      int pd = 0, hc = 0;
      for (const std::string& id : plan.fold_ids(r, f)) {
        (std::stoi(id.substr(1)) < 21 ? pd : hc) += 1;
      }
      CHECK(pd >= 4);
      CHECK(pd <= 5);
      CHECK(hc >= 4);
      CHECK(hc <= 5);
    }
  }
}

TEST_CASE("stratification rejects classes smaller than the fold count") {
  std::vector<int> labels = {1, 1, 1, 0, 0, 0, 0, 0};
  try {
    make_fold_plan(labels, make_ids(8, "x"), 1, 5, 0);
    FAIL("expected TooFewSamplesPerClass");
  } catch (const Error& e) {
    CHECK(e.code() == "TooFewSamplesPerClass");
  }
}

namespace {

struct CvFixture {
  Cohort cohort;
  FoldPlan plan;
  CvFixture() {
    for (int i = 0; i < 12; ++i) {
      cohort.subjects.push_back(
          make_full_subject("pd" + std::to_string(i), DiseaseClass::PD));
    }
    for (int i = 0; i < 13; ++i) {
      cohort.subjects.push_back(
          make_full_subject("hc" + std::to_string(i), DiseaseClass::HC));
    }
    std::vector<int> labels;
    std::vector<std::string> ids;
    for (const SubjectRecord& s : cohort.subjects) {
      labels.push_back(s.disease == DiseaseClass::PD ? 1 : 0);
      ids.push_back(s.id);
    }
    plan = make_fold_plan(labels, ids, 3, 5, 5);
  }
};

PipelineFitter constant_pd_pipeline() {
  return [](const Cohort&, const std::set<std::string>&, Task, TrainingCapture*) {
    FittedPipeline fitted;
    fitted.predict_proba = [](const std::string&) { return 1.0; };
    return fitted;
  };
}

}  // namespace

TEST_CASE("constant classifier scores exactly one half with zero spread") {
  const CvFixture f;
  const EvalReport report =
      cross_validate(f.cohort, Task::PdVsHc, "constant", constant_pd_pipeline(), f.plan);
  REQUIRE(report.folds.size() == 15);
  for (const FoldScore& s : report.folds) CHECK(s.balanced_accuracy == 0.5);
  CHECK(report.mean == 0.5);
  CHECK(report.stddev == 0.0);
}

TEST_CASE("label oracle scores one with zero spread") {
  const CvFixture f;
  const Cohort* cohort_ptr = &f.cohort;
  PipelineFitter oracle = [cohort_ptr](const Cohort&, const std::set<std::string>&, Task,
                                       TrainingCapture*) {
    FittedPipeline fitted;
    fitted.predict_proba = [cohort_ptr](const std::string& id) {
      return find_subject(*cohort_ptr, id)->disease == DiseaseClass::PD ? 1.0 : 0.0;
    };
    return fitted;
  };
  const EvalReport report = cross_validate(f.cohort, Task::PdVsHc, "oracle", oracle, f.plan);
  CHECK(report.mean == 1.0);
  CHECK(report.stddev == 0.0);
}

TEST_CASE("aggregate mean equals the arithmetic fold mean") {
  const CvFixture f;
  auto rng = std::make_shared<std::mt19937_64>(seeded_stream(17, "noisy"));
  PipelineFitter noisy = [rng](const Cohort&, const std::set<std::string>&, Task,
                               TrainingCapture*) {
    FittedPipeline fitted;
    auto rng_copy = rng;
    fitted.predict_proba = [rng_copy](const std::string&) { return random_unit(*rng_copy); };
    return fitted;
  };
  const EvalReport report = cross_validate(f.cohort, Task::PdVsHc, "noisy", noisy, f.plan);
  double sum = 0.0;
  for (const FoldScore& s : report.folds) sum += s.balanced_accuracy;
  CHECK(std::abs(report.mean - sum / 15.0) <= 1e-12);
  double var = 0.0;
  for (const FoldScore& s : report.folds) {
    var += (s.balanced_accuracy - report.mean) * (s.balanced_accuracy - report.mean);
  }
  CHECK(report.stddev == doctest::Approx(std::sqrt(var / 15.0)).epsilon(1e-12));
}

TEST_CASE("confusion counts add up per fold") {
  const CvFixture f;
  const EvalReport report =
      cross_validate(f.cohort, Task::PdVsHc, "constant", constant_pd_pipeline(), f.plan);
  for (const FoldScore& s : report.folds) {
    CHECK(s.tp + s.fp + s.tn + s.fn ==
          static_cast<int>(f.plan.fold_ids(s.repeat, s.fold).size()));
    CHECK(s.fn == 0);
    CHECK(s.tn == 0);
  }
}

TEST_CASE("test-fold subjects never appear in any training pool") {
  const Cohort cohort = generate(light_small_spec(21));
  const FeatureStore store = build_feature_store(cohort);

  std::vector<int> labels;
  std::vector<std::string> ids;
  for (const SubjectRecord& s : cohort.subjects) {
    if (!task_includes(Task::PdVsHc, s.disease) || !modality_mask(s).all()) continue;
    labels.push_back(s.disease == DiseaseClass::PD ? 1 : 0);
    ids.push_back(s.id);
  }
  const FoldPlan plan = make_fold_plan(labels, ids, 1, 5, 3);

  StackSpec spec;
  spec.seed = 3;
  spec.train.gbdt.n_trees = 20;
  TrainingCapture capture;
  cross_validate(cohort, Task::PdVsHc, "stack", make_stack_fitter(spec, store), plan, &capture);

  REQUIRE(!capture.entries.empty());
  int checked = 0;
  for (const auto& entry : capture.entries) {
    // scope format: repeatR.foldF.component
    const std::size_t fold_pos = entry.component.find(".fold");
    REQUIRE(fold_pos != std::string::npos);
    const int fold = std::stoi(entry.component.substr(fold_pos + 5));
    for (const std::string& test_id : plan.fold_ids(0, fold)) {
      CHECK(std::find(entry.training_ids.begin(), entry.training_ids.end(), test_id) ==
            entry.training_ids.end());
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("single-modality fitter trains on the complete subset unless aux is allowed") {
  const Cohort cohort = generate(light_small_spec(22));
  const FeatureStore store = build_feature_store(cohort);

  TrainConfig config;
  config.gbdt.n_trees = 10;
  TrainingCapture capture;
  const PipelineFitter subset_only =
      make_single_modality_fitter(Modality::Quest, LearnerKind::Gbdt, config, store, false);
  subset_only(cohort, {}, Task::PdVsHc, &capture);
  // complete subset: 14 PD + 13 HC = 27
  CHECK(capture.entries.back().training_ids.size() == 27);

  const PipelineFitter with_aux =
      make_single_modality_fitter(Modality::Quest, LearnerKind::Gbdt, config, store, true);
  with_aux(cohort, {}, Task::PdVsHc, &capture);
  // every PD/HC subject with a questionnaire: 44 PD + 25 HC = 69
  CHECK(capture.entries.back().training_ids.size() == 69);
}

TEST_CASE("report tables format mean and spread to three decimals") {
  EvalReport row;
  row.pipeline = "Quest.";
  row.mean = 0.8434;
  row.stddev = 0.0981;
  const std::string table = render_report_table({row}, Task::PdVsHc);
  CHECK(table.find("PD vs. HC") != std::string::npos);
  CHECK(table.find("0.843 (0.098)") != std::string::npos);
}

TEST_SUITE_END();
