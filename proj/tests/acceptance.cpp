// Acceptance suite: one check per criterion, one PASS/FAIL line each.
// Exit code is the number of failed criteria.

#include <chrono>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "parkipipe/clustering.hpp"
#include "parkipipe/cohort_io.hpp"
#include "parkipipe/evaluation.hpp"
#include "parkipipe/synthcohort.hpp"
#include "test_support.hpp"

using namespace parkipipe;
namespace fs = std::filesystem;

namespace {

const double kPi = std::acos(-1.0);

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::VectorXd sine(double freq, double rate, double duration) {
  const Eigen::Index n = static_cast<Eigen::Index>(std::lround(rate * duration));
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out[i] = std::sin(2.0 * kPi * freq * static_cast<double>(i) / rate);
  }
  return out;
}

// Independent oracle: full-length DFT periodogram, O(n^2).
int dft_peak_band(const Eigen::VectorXd& signal, double rate) {
  const Eigen::Index n = signal.size();
  const double mean = signal.mean();
  Spectrum spec;
  spec.resolution = rate / static_cast<double>(n);
  const Eigen::Index bins = n / 2 + 1;
  spec.freqs.resize(bins);
  spec.psd.resize(bins);
  for (Eigen::Index k = 0; k < bins; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (Eigen::Index t = 0; t < n; ++t) {
      const double ang =
          -2.0 * kPi * static_cast<double>(k) * static_cast<double>(t) / static_cast<double>(n);
      acc += (signal[t] - mean) * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    double p = std::norm(acc) / (rate * static_cast<double>(n));
    if (k != 0 && k != n / 2) p *= 2.0;
    spec.freqs[k] = static_cast<double>(k) * spec.resolution;
    spec.psd[k] = p;
  }
  const Eigen::VectorXd bands = band_powers(spec);
  Eigen::Index argmax = 0;
  bands.maxCoeff(&argmax);
  return static_cast<int>(argmax);
}

int welch_peak_band(const Eigen::VectorXd& signal, double rate) {
  const Eigen::VectorXd bands = band_powers(welch_psd(signal, rate));
  Eigen::Index argmax = 0;
  bands.maxCoeff(&argmax);
  return static_cast<int>(argmax);
}

struct EvalRows {
  double quest, mov, voice, tap, combined;
  double best_single() const { return std::max(std::max(quest, mov), std::max(voice, tap)); }
};

EvalRows run_all_rows(const Cohort& cohort, const FeatureStore& store, Task task,
                      std::uint64_t seed) {
  std::vector<int> labels;
  std::vector<std::string> ids;
  for (const SubjectRecord& s : cohort.subjects) {
    if (!task_includes(task, s.disease) || !modality_mask(s).all()) continue;
    labels.push_back(s.disease == DiseaseClass::PD ? 1 : 0);
    ids.push_back(s.id);
  }
  const FoldPlan plan = make_fold_plan(labels, ids, 3, 5, mix_seed(seed, "folds"));

  StackSpec spec;
  spec.seed = mix_seed(seed, "stack");
  spec.train.seed = mix_seed(seed, "learners");

  EvalRows rows{};
  double* slots[4] = {&rows.quest, &rows.mov, &rows.voice, &rows.tap};
  for (std::size_t m = 0; m < kStackModalities.size(); ++m) {
    const PipelineFitter fitter = make_single_modality_fitter(
        kStackModalities[m], spec.assignment[m], spec.train, store, false);
    *slots[m] = cross_validate(cohort, task, to_string(kStackModalities[m]), fitter, plan).mean;
  }
  rows.combined =
      cross_validate(cohort, task, "combined", make_stack_fitter(spec, store), plan).mean;
  return rows;
}

bool report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d: %s — %s\n", ok ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  return ok;
}

// --- criteria ----------------------------------------------------------------

bool criterion_1_dsp_oracles() {
  bool ok = true;
  std::ostringstream detail;

  const auto t0 = std::chrono::steady_clock::now();
  for (double f : {3.0, 5.0, 7.0, 11.0}) {
    const Eigen::VectorXd x = sine(f, 50.0, 20.0);
    const int welch_band = welch_peak_band(x, 50.0);
    const int oracle_band = dft_peak_band(x, 50.0);
    ok = ok && welch_band == oracle_band && welch_band == static_cast<int>(f) - kBandFirstHz;
  }
  const double welch_time = seconds_since(t0) / 4.0;

  double max_rel = 0.0;
  double jitter_time = 0.0;
  for (double target : {0.005, 0.01, 0.02, 0.05}) {
    std::vector<double> probe;
    test_support::modulated_sawtooth(140.0, 0.1, 2.5, 48000.0, 2.0, &probe);
    const double depth = 0.1 * target / local_jitter(probe);
    std::vector<double> true_periods;
    const Eigen::VectorXd voice =
        test_support::modulated_sawtooth(140.0, depth, 2.5, 48000.0, 2.0, &true_periods);
    const double oracle = local_jitter(true_periods);

    const auto t1 = std::chrono::steady_clock::now();
    const double measured = local_jitter(pitch_track(voice, 48000.0));
    jitter_time = std::max(jitter_time, seconds_since(t1));
    max_rel = std::max(max_rel, std::abs(measured - oracle) / oracle);
  }
  ok = ok && max_rel <= 0.05 && welch_time < 1.0 && jitter_time < 1.0;

  detail << "band agreement at 3/5/7/11 Hz; max jitter error " << format_fixed(100.0 * max_rel, 2)
         << "%; per-signal runtime " << format_fixed(std::max(welch_time, jitter_time), 3) << " s";
  return report(1, "dsp oracles", ok, detail.str());
}

bool criterion_2_learners() {
  bool ok = true;
  std::ostringstream detail;

  // gradient vs central finite differences
  auto rng = seeded_stream(1, "acceptance_fd");
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5 + static_cast<int>(random_below(rng, 46));
    const int d = 1 + static_cast<int>(random_below(rng, 10));
    Eigen::MatrixXd x(n, d);
    Eigen::VectorXd y(n), w(n), beta(d + 1);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) x(i, j) = random_gauss(rng);
      y[i] = random_unit(rng) < 0.5 ? 0.0 : 1.0;
      w[i] = 0.5 + random_unit(rng);
    }
    for (int j = 0; j <= d; ++j) beta[j] = random_gauss(rng);
    const double lambda = random_unit(rng);
    const Eigen::VectorXd grad = logreg_gradient(beta, x, y, w, lambda);
    for (int j = 0; j <= d; ++j) {
      Eigen::VectorXd hi = beta, lo = beta;
      hi[j] += 1e-5;
      lo[j] -= 1e-5;
      const double numeric =
          (logreg_loss(hi, x, y, w, lambda) - logreg_loss(lo, x, y, w, lambda)) / 2e-5;
      worst = std::max(worst, std::abs(numeric - grad[j]));
    }
  }
  ok = ok && worst <= 1e-6;

  // separable training accuracy
  Eigen::MatrixXd x(40, 2);
  Eigen::VectorXd y(40), w = Eigen::VectorXd::Ones(40);
  for (int i = 0; i < 40; ++i) {
    const double side = i < 20 ? -1.0 : 1.0;
    double off = random_gauss(rng);
    while (std::abs(off) > 1.6) off = random_gauss(rng);
    x(i, 0) = 2.0 * side + off;
    x(i, 1) = random_gauss(rng);
    y[i] = side > 0 ? 1.0 : 0.0;
  }
  TrainConfig config;
  config.seed = 9;
  auto accuracy = [&](const Classifier& clf) {
    const Eigen::VectorXd p = predict_proba(clf, x);
    int hits = 0;
    for (int i = 0; i < 40; ++i) hits += (p[i] >= 0.5 ? 1.0 : 0.0) == y[i] ? 1 : 0;
    return hits / 40.0;
  };
  const Classifier svm = fit_svm(x, y, w, config);
  const Classifier gbdt = fit_gbdt(x, y, w, config);
  const double acc_svm = accuracy(svm);
  const double acc_gbdt = accuracy(gbdt);
  ok = ok && acc_svm >= 0.99 && acc_gbdt >= 0.99;

  // bit determinism of all three fits
  bool deterministic = true;
  deterministic = deterministic && classifier_to_json(fit_svm(x, y, w, config)).dump() ==
                                       classifier_to_json(svm).dump();
  deterministic = deterministic && classifier_to_json(fit_gbdt(x, y, w, config)).dump() ==
                                       classifier_to_json(gbdt).dump();
  deterministic = deterministic && classifier_to_json(fit_logreg(x, y, w, config)).dump() ==
                                       classifier_to_json(fit_logreg(x, y, w, config)).dump();
  ok = ok && deterministic;

  detail << "max gradient error " << format_double(worst) << "; svm acc "
         << format_fixed(acc_svm, 3) << ", gbdt acc " << format_fixed(acc_gbdt, 3)
         << "; refits bit-identical: " << (deterministic ? "yes" : "no");
  return report(2, "learner correctness", ok, detail.str());
}

bool criterion_3_class_weights() {
  auto rng = seeded_stream(2, "acceptance_weights");
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 4 + static_cast<int>(random_below(rng, 500));
    Eigen::VectorXd y(n);
    int pos = 0;
    for (int i = 0; i < n; ++i) {
      y[i] = random_unit(rng) < 0.35 ? 1.0 : 0.0;
      pos += y[i] == 1.0 ? 1 : 0;
    }
    if (pos == 0) {
      y[0] = 1.0;
      pos = 1;
    }
    if (pos == n) {
      y[0] = 0.0;
      pos = n - 1;
    }
    const ClassWeights w = class_weights(y);
    const double a = w.w_pos * pos, b = w.w_neg * (n - pos);
    worst = std::max(worst, std::abs(a - b) / std::max(a, b));
  }
  Eigen::VectorXd tier(369);
  tier << Eigen::VectorXd::Ones(279), Eigen::VectorXd::Zero(90);
  const ClassWeights w = class_weights(tier);
  const double mass_gap = std::abs(w.w_pos * 279.0 - w.w_neg * 90.0);
  const bool ok = worst <= 1e-12 && mass_gap <= 1e-12 * 184.5;

  std::ostringstream detail;
  detail << "worst relative mass gap " << format_double(worst) << " over 50 vectors; 279/90 gap "
         << format_double(mass_gap);
  return report(3, "class weighting", ok, detail.str());
}

bool criterion_4_cv_machinery() {
  bool ok = true;
  std::ostringstream detail;

  // stratified counts for 21 PD / 23 HC
  std::vector<int> labels(44, 1);
  std::fill(labels.begin() + 21, labels.end(), 0);
  std::vector<std::string> ids;
  for (int i = 0; i < 44; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "s%03d", i);
    ids.push_back(buf);
  }
  const FoldPlan plan = make_fold_plan(labels, ids, 3, 5, 4);
  for (int r = 0; r < 3 && ok; ++r) {
    for (int f = 0; f < 5 && ok; ++f) {
      int pd = 0, hc = 0;
      for (const std::string& id : plan.fold_ids(r, f)) {
        (std::stoi(id.substr(1)) < 21 ? pd : hc) += 1;
      }
      ok = ok && pd >= 4 && pd <= 5 && hc >= 4 && hc <= 5;
    }
  }
  const bool folds_ok = ok;

  // constant classifier scores exactly 0.5 with zero spread
  Cohort cohort;
  for (int i = 0; i < 11; ++i) {
    cohort.subjects.push_back(
        test_support::make_full_subject("pd" + std::to_string(i), DiseaseClass::PD));
    cohort.subjects.push_back(
        test_support::make_full_subject("hc" + std::to_string(i), DiseaseClass::HC));
  }
  std::vector<int> clab;
  std::vector<std::string> cids;
  for (const SubjectRecord& s : cohort.subjects) {
    clab.push_back(s.disease == DiseaseClass::PD ? 1 : 0);
    cids.push_back(s.id);
  }
  const FoldPlan cplan = make_fold_plan(clab, cids, 3, 5, 5);
  PipelineFitter constant = [](const Cohort&, const std::set<std::string>&, Task,
                               TrainingCapture*) {
    FittedPipeline fitted;
    fitted.predict_proba = [](const std::string&) { return 1.0; };
    return fitted;
  };
  const EvalReport rep = cross_validate(cohort, Task::PdVsHc, "constant", constant, cplan);
  const bool constant_ok = rep.mean == 0.5 && rep.stddev == 0.0;
  ok = ok && constant_ok;

  // instrumented test-fold isolation on a light synthetic cohort
  const Cohort synth = generate(test_support::light_small_spec(41));
  const FeatureStore store = build_feature_store(synth);
  std::vector<int> slab;
  std::vector<std::string> sids;
  for (const SubjectRecord& s : synth.subjects) {
    if (!task_includes(Task::PdVsHc, s.disease) || !modality_mask(s).all()) continue;
    slab.push_back(s.disease == DiseaseClass::PD ? 1 : 0);
    sids.push_back(s.id);
  }
  const FoldPlan splan = make_fold_plan(slab, sids, 1, 5, 6);
  StackSpec spec;
  spec.seed = 6;
  spec.train.gbdt.n_trees = 20;
  TrainingCapture capture;
  cross_validate(synth, Task::PdVsHc, "stack", make_stack_fitter(spec, store), splan, &capture);
  bool isolated = !capture.entries.empty();
  long checks = 0;
  for (const auto& entry : capture.entries) {
    const std::size_t pos = entry.component.find(".fold");
    const int fold = std::stoi(entry.component.substr(pos + 5));
    for (const std::string& test_id : splan.fold_ids(0, fold)) {
      for (const std::string& train_id : entry.training_ids) {
        if (train_id == test_id) isolated = false;
      }
      ++checks;
    }
  }
  ok = ok && isolated;

  detail << "fold counts 4-5 per class: " << (folds_ok ? "yes" : "no")
         << "; constant pipeline mean " << format_fixed(rep.mean, 3) << " std "
         << format_fixed(rep.stddev, 3) << "; isolation checks " << checks << " ("
         << (isolated ? "clean" : "LEAK") << ")";
  return report(4, "cv machinery", ok, detail.str());
}

bool criterion_5_multimodal_beats_single() {
  int wins_hc = 0, wins_dd = 0;
  double eval_time = 0.0;
  std::ostringstream lines;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    CohortSpec spec = default_cohort_spec();
    spec.seed = seed;
    const Cohort cohort = generate(spec);
    const FeatureStore store = build_feature_store(cohort);

    const auto t0 = std::chrono::steady_clock::now();
    const EvalRows hc = run_all_rows(cohort, store, Task::PdVsHc, seed);
    eval_time = std::max(eval_time, seconds_since(t0));
    const EvalRows dd = run_all_rows(cohort, store, Task::PdVsDd, seed);
    if (hc.combined > hc.best_single()) ++wins_hc;
    if (dd.combined > dd.best_single()) ++wins_dd;
    lines << "  seed " << seed << ": pd-vs-hc combined " << format_fixed(hc.combined, 3)
          << " vs best single " << format_fixed(hc.best_single(), 3) << "; pd-vs-dd combined "
          << format_fixed(dd.combined, 3) << " vs " << format_fixed(dd.best_single(), 3) << "\n";
  }
  const bool ok = wins_hc >= 8 && wins_dd >= 7 && eval_time < 300.0;
  std::ostringstream detail;
  detail << "combined wins " << wins_hc << "/10 (pd-vs-hc), " << wins_dd
         << "/10 (pd-vs-dd); slowest evaluate " << format_fixed(eval_time, 1) << " s\n"
         << lines.str();
  std::string d = detail.str();
  if (!d.empty() && d.back() == '\n') d.pop_back();
  return report(5, "multi-modal beats single-modal", ok, d);
}

bool criterion_6_multimodal_refines_clusters() {
  int k_wins = 0, ari_wins = 0;
  double ari_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    CohortSpec spec = phenotype_cluster_spec(5);
    spec.seed = seed;
    const Cohort cohort = generate(spec);
    const ModalComparison cmp = compare_modal_runs(cohort);

    std::vector<int> planted;
    for (const std::string& id : cmp.subject_ids) {
      planted.push_back(static_cast<int>(*find_subject(cohort, id)->motor_type));
    }
    const double ari = adjusted_rand_index(cmp.multi.cut.labels, planted);
    ari_sum += ari;
    if (cmp.single.cut.k == 2 && cmp.multi.cut.k == 4) ++k_wins;
    if (ari >= 0.8) ++ari_wins;
  }
  const bool ok = k_wins >= 8 && ari_wins >= 8;
  std::ostringstream detail;
  detail << "k_single=2 and k_multi=4 in " << k_wins << "/10 seeds; ARI >= 0.8 in " << ari_wins
         << "/10 (mean " << format_fixed(ari_sum / 10.0, 3) << ")";
  return report(6, "multi-modal refines PD clusters", ok, detail.str());
}

bool criterion_7_clustering_oracle() {
  bool monotone = true;
  int recovered = 0;
  double min_ari = 1.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int k = 2 + static_cast<int>(seed % 3);
    auto rng = seeded_stream(seed, "acceptance_blobs");
    const int per = 30 / k;
    Eigen::MatrixXd x(per * k, 5);
    std::vector<int> truth;
    for (int c = 0; c < k; ++c) {
      for (int i = 0; i < per; ++i) {
        for (int d = 0; d < 5; ++d) {
          x(c * per + i, d) = (d == c % 5 ? 6.0 * (c + 1) : 0.0) + random_gauss(rng);
        }
        truth.push_back(c);
      }
    }
    const Dendrogram dend = agglomerate(x, Linkage::Ward, true);
    for (std::size_t j = 1; j < dend.merges.size(); ++j) {
      if (dend.merges[j].height < dend.merges[j - 1].height) monotone = false;
    }
    const ClusterAssignment cut = cut_by_largest_gap(dend);
    if (cut.k == k) ++recovered;
    min_ari = std::min(min_ari, adjusted_rand_index(cut.labels, truth));
  }
  const bool ok = monotone && recovered == 20 && min_ari >= 0.9;
  std::ostringstream detail;
  detail << "k recovered " << recovered << "/20, min ARI " << format_fixed(min_ari, 3)
         << ", heights monotone: " << (monotone ? "yes" : "no");
  return report(7, "clustering oracle", ok, detail.str());
}

bool criterion_8_round_trips() {
  bool ok = true;

  // model round-trips over a light synthetic cohort
  const Cohort cohort = generate(test_support::light_small_spec(81));
  const FeatureStore store = build_feature_store(cohort);
  StackSpec spec;
  spec.seed = 8;
  spec.train.gbdt.n_trees = 30;
  const StackedModel model = fit_stack(cohort, Task::PdVsHc, spec, store);
  const StackedModel reloaded = stack_from_json(nlohmann::json::parse(stack_to_json(model).dump()));
  int compared = 0;
  for (const SubjectRecord& s : cohort.subjects) {
    if (!modality_mask(s).all() || !task_includes(Task::PdVsHc, s.disease)) continue;
    const StackPrediction a = predict_stack(model, store, s.id);
    const StackPrediction b = predict_stack(reloaded, store, s.id);
    ok = ok && a.probability == b.probability && a.base_probabilities == b.base_probabilities;
    ++compared;
  }
  const bool model_ok = ok;

  // cohort directories regenerate byte-identically (full-length records)
  CohortSpec small = default_cohort_spec();
  small.counts.clear();
  small.counts[DiseaseClass::PD] = TierCounts{3, 3};
  small.counts[DiseaseClass::HC] = TierCounts{2, 3};
  small.seed = 12345;
  const fs::path base = fs::temp_directory_path() / "parkipipe_acceptance_roundtrip";
  fs::remove_all(base);
  save_cohort(generate(small), base / "a");
  save_cohort(generate(small), base / "b");
  bool identical = true;
  std::size_t file_count = 0;
  for (const auto& entry : fs::recursive_directory_iterator(base / "a")) {
    if (!entry.is_regular_file()) continue;
    ++file_count;
    const fs::path rel = fs::relative(entry.path(), base / "a");
    std::ifstream fa(entry.path(), std::ios::binary), fb(base / "b" / rel, std::ios::binary);
    std::ostringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    if (sa.str() != sb.str() || sa.str().empty()) identical = false;
  }
  fs::remove_all(base);
  ok = ok && identical && file_count > 10;

  std::ostringstream detail;
  detail << compared << " stack predictions bit-identical after reload: "
         << (model_ok ? "yes" : "no") << "; " << file_count
         << " regenerated cohort files byte-identical: " << (identical ? "yes" : "no");
  return report(8, "round-trips", ok, detail.str());
}

bool criterion_9_null_control() {
  double sum = 0.0;
  std::ostringstream seeds;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    CohortSpec spec = zero_effect_spec();
    spec.seed = 1000 + seed;
    const Cohort cohort = generate(spec);
    const FeatureStore store = build_feature_store(cohort);

    std::vector<int> labels;
    std::vector<std::string> ids;
    for (const SubjectRecord& s : cohort.subjects) {
      if (!task_includes(Task::PdVsHc, s.disease) || !modality_mask(s).all()) continue;
      labels.push_back(s.disease == DiseaseClass::PD ? 1 : 0);
      ids.push_back(s.id);
    }
    const FoldPlan plan = make_fold_plan(labels, ids, 3, 5, mix_seed(seed, "null_folds"));
    StackSpec sspec;
    sspec.seed = mix_seed(seed, "null_stack");
    const double mean =
        cross_validate(cohort, Task::PdVsHc, "combined", make_stack_fitter(sspec, store), plan)
            .mean;
    sum += mean;
    seeds << " " << format_fixed(mean, 3);
  }
  const double grand_mean = sum / 10.0;
  const bool ok = grand_mean >= 0.4 && grand_mean <= 0.6;
  std::ostringstream detail;
  detail << "zero-effect stacked balanced accuracy mean " << format_fixed(grand_mean, 3)
         << " over 10 seeds (per-seed:" << seeds.str() << ")";
  return report(9, "null-signal control", ok, detail.str());
}

}  // namespace

int main() {
  std::printf("parkipipe acceptance suite\n");
  int failures = 0;
  failures += criterion_1_dsp_oracles() ? 0 : 1;
  failures += criterion_2_learners() ? 0 : 1;
  failures += criterion_3_class_weights() ? 0 : 1;
  failures += criterion_4_cv_machinery() ? 0 : 1;
  failures += criterion_5_multimodal_beats_single() ? 0 : 1;
  failures += criterion_6_multimodal_refines_clusters() ? 0 : 1;
  failures += criterion_7_clustering_oracle() ? 0 : 1;
  failures += criterion_8_round_trips() ? 0 : 1;
  failures += criterion_9_null_control() ? 0 : 1;
  std::printf("%d of 9 criteria passed\n", 9 - failures);
  return failures;
}
