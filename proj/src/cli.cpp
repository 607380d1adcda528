#include "parkipipe/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "parkipipe/clustering.hpp"
#include "parkipipe/cohort_io.hpp"
#include "parkipipe/evaluation.hpp"
#include "parkipipe/synthcohort.hpp"

namespace parkipipe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) fail("IoError", "cannot open '" + path.string() + "' for writing");
  os << text;
  if (!os) fail("IoError", "failed writing '" + path.string() + "'");
}

void write_json_file(const fs::path& path, const json& doc) {
  write_file(path, doc.dump(2) + "\n");
}

json read_json_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) fail("IoError", "cannot open '" + path.string() + "'");
  json doc;
  try {
    is >> doc;
  } catch (const json::exception& e) {
    fail("SchemaError", "invalid JSON in '" + path.string() + "': " + e.what());
  }
  return doc;
}

struct CommonOptions {
  std::string out;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = PARKIPIPE_THREADS or hardware

  int resolved_threads() const { return threads > 0 ? threads : default_thread_count(); }
};

void write_run_config(const CommonOptions& common, const std::string& command, json options) {
  options["command"] = command;
  options["schema_version"] = kReportSchemaVersion;
  options["seed"] = common.seed;
  options["threads"] = common.resolved_threads();
  write_json_file(fs::path(common.out) / "run_config.json", options);
}

std::array<LearnerKind, 4> parse_assignment(const std::string& text) {
  std::array<LearnerKind, 4> assignment = StackSpec{}.assignment;
  if (text.empty()) return assignment;
  std::istringstream is(text);
  std::string pair;
  while (std::getline(is, pair, ',')) {
    const std::size_t eq = pair.find('=');
    if (eq == std::string::npos) {
      fail("InvalidParams", "bad --assign entry '" + pair + "' (expected modality=learner)");
    }
    const std::string modality = pair.substr(0, eq);
    const LearnerKind kind = learner_kind_from_string(pair.substr(eq + 1));
    bool matched = false;
    for (std::size_t m = 0; m < kStackModalities.size(); ++m) {
      if (to_string(kStackModalities[m]) == modality) {
        assignment[m] = kind;
        matched = true;
      }
    }
    if (!matched) fail("InvalidParams", "unknown modality '" + modality + "' in --assign");
  }
  return assignment;
}

FeatureConfig make_feature_config(const std::string& cluster_mov_reduction, bool tap_rate) {
  FeatureConfig config;
  if (cluster_mov_reduction == "global") {
    config.cluster_mov = ClusterMovReduction::Global;
  } else if (cluster_mov_reduction != "channel") {
    fail("InvalidParams", "--cluster-mov-reduction must be channel or global");
  }
  config.tap_speed_as_rate = tap_rate;
  return config;
}

// --- synth -------------------------------------------------------------------

int cmd_synth(const CommonOptions& common, const std::string& spec_path,
              const std::string& preset, bool seed_given, bool print_spec) {
  CohortSpec spec;
  if (!spec_path.empty()) {
    spec = cohort_spec_from_json(read_json_file(spec_path));
  } else if (preset == "default") {
    spec = default_cohort_spec();
  } else if (preset == "zero-effect") {
    spec = zero_effect_spec();
  } else if (preset == "phenotype") {
    spec = phenotype_cluster_spec();
  } else {
    fail("InvalidParams", "unknown preset '" + preset + "'");
  }
  if (seed_given || spec_path.empty()) spec.seed = common.seed;

  if (print_spec) {
    std::cout << cohort_spec_to_json(spec).dump(2) << "\n";
    return 0;
  }
  if (common.out.empty()) fail("InvalidParams", "synth requires --out (or --print-spec)");

  const Cohort cohort = generate(spec);
  save_cohort(cohort, common.out);
  write_json_file(fs::path(common.out) / "cohort_spec.json", cohort_spec_to_json(spec));

  std::cout << "wrote cohort with " << cohort.subjects.size() << " subjects to " << common.out
            << "\n";
  return 0;
}

// --- extract -----------------------------------------------------------------

int cmd_extract(const CommonOptions& common, const std::string& cohort_dir,
                const FeatureConfig& config) {
  const Cohort cohort = load_cohort(cohort_dir);
  const FeatureStore store = build_feature_store(cohort, config, common.resolved_threads());
  fs::create_directories(common.out);

  json summary;
  for (const auto& [modality, assembled] : store.by_modality) {
    const std::string name = to_string(modality);
    write_feature_csv(assembled.matrix, fs::path(common.out) / ("features_" + name + ".csv"));
    summary[name] = {{"rows", assembled.matrix.subject_ids.size()},
                     {"columns", assembled.matrix.names.size()},
                     {"skipped", assembled.skipped},
                     {"warnings", assembled.warnings}};
  }
  write_json_file(fs::path(common.out) / "extract_summary.json", summary);
  write_run_config(common, "extract", {{"cohort", cohort_dir}});
  std::cout << "wrote feature matrices for " << cohort.subjects.size() << " subjects to "
            << common.out << "\n";
  return 0;
}

// --- train ---------------------------------------------------------------------

StackSpec make_stack_spec(std::uint64_t seed, const std::string& assign, int inner_folds) {
  StackSpec spec;
  spec.assignment = parse_assignment(assign);
  spec.inner_folds = inner_folds;
  spec.seed = mix_seed(seed, "stack");
  spec.train.seed = mix_seed(seed, "learners");
  return spec;
}

int cmd_train(const CommonOptions& common, const std::string& cohort_dir, const std::string& task_name,
              const std::string& assign, int inner_folds, const FeatureConfig& config) {
  const Cohort cohort = load_cohort(cohort_dir);
  const Task task = task_from_string(task_name);
  const StackSpec spec = make_stack_spec(common.seed, assign, inner_folds);

  const FeatureStore store = build_feature_store(cohort, config, common.resolved_threads());
  const StackedModel model = fit_stack(cohort, task, spec, store);

  write_json_file(fs::path(common.out) / "model.json", stack_to_json(model));
  write_run_config(common, "train",
                   {{"cohort", cohort_dir},
                    {"task", task_name},
                    {"stack_spec", stack_spec_to_json(spec)}});
  std::cout << "wrote stacked model for " << task_name << " to " << common.out << "\n";
  return 0;
}

// --- evaluate ------------------------------------------------------------------

int cmd_evaluate(const CommonOptions& common, const std::string& cohort_dir,
                 const std::string& task_name, const std::string& assign, int inner_folds,
                 int repeats, int folds, bool single_use_aux, const FeatureConfig& config) {
  const Cohort cohort = load_cohort(cohort_dir);
  const Task task = task_from_string(task_name);
  const StackSpec spec = make_stack_spec(common.seed, assign, inner_folds);
  const int threads = common.resolved_threads();

  const FeatureStore store = build_feature_store(cohort, config, threads);

  // Outer CV over the complete-modality subset of the task.
  std::vector<int> labels;
  std::vector<std::string> ids;
  for (const SubjectRecord& s : cohort.subjects) {
    if (!task_includes(task, s.disease)) continue;
    if (!modality_mask(s).all()) continue;
    labels.push_back(s.disease == DiseaseClass::PD ? 1 : 0);
    ids.push_back(s.id);
  }
  const FoldPlan plan = make_fold_plan(labels, ids, repeats, folds, mix_seed(common.seed, "folds"));

  const json resolved_config = {{"task", task_name},
                                {"stack_spec", stack_spec_to_json(spec)},
                                {"repeats", repeats},
                                {"folds", folds},
                                {"single_use_aux", single_use_aux}};
  const std::string fingerprint = fnv1a_hex(resolved_config.dump());

  std::vector<EvalReport> rows;
  for (std::size_t m = 0; m < kStackModalities.size(); ++m) {
    const Modality modality = kStackModalities[m];
    const PipelineFitter fitter = make_single_modality_fitter(
        modality, spec.assignment[m], spec.train, store, single_use_aux);
    rows.push_back(cross_validate(cohort, task, to_string(modality), fitter, plan, nullptr, threads));
  }
  rows.push_back(cross_validate(cohort, task, "combined", make_stack_fitter(spec, store), plan,
                                nullptr, threads));
  for (EvalReport& r : rows) r.config_fingerprint = fingerprint;

  json report;
  report["schema_version"] = kReportSchemaVersion;
  report["task"] = task_name;
  report["seed"] = common.seed;
  report["config"] = resolved_config;
  report["config_fingerprint"] = fingerprint;
  report["n_subjects"] = ids.size();
  report["fold_plan"] = fold_plan_to_json(plan);
  json row_docs = json::array();
  for (const EvalReport& r : rows) row_docs.push_back(report_to_json(r));
  report["rows"] = std::move(row_docs);
  write_json_file(fs::path(common.out) / "report.json", report);

  // Text table with the paper-style row labels.
  std::vector<EvalReport> display = rows;
  display[0].pipeline = "Quest.";
  display[1].pipeline = "Mov.";
  display[2].pipeline = "Voice";
  display[3].pipeline = "Finger Tapping";
  display[4].pipeline = "Quest. + Mov. + Voice + Finger Tapping";
  const std::string table = render_report_table(display, task);
  write_file(fs::path(common.out) / "report.txt", table);

  write_run_config(common, "evaluate", resolved_config);
  std::cout << table;
  return 0;
}

// --- cluster -------------------------------------------------------------------

void write_modal_run(const fs::path& dir, const ModalRun& run,
                     const std::vector<std::string>& subject_ids, const std::string& prefix) {
  write_json_file(dir / "dendrogram.json", dendrogram_to_json(run.dendrogram, &run.cut));
  write_file(dir / "dendrogram.txt", render_dendrogram_text(run.dendrogram, subject_ids, &run.cut));
  write_file(dir / "dendrogram.svg", render_dendrogram_svg(run.dendrogram, subject_ids, &run.cut));

  json assignment;
  for (std::size_t i = 0; i < subject_ids.size(); ++i) {
    assignment[subject_ids[i]] = run.cut.labels[i];
  }
  write_json_file(dir / "assignment.json",
                  json{{"k", run.cut.k},
                       {"labels", std::move(assignment)},
                       {"gap_low", run.cut.gap_low},
                       {"gap_high", run.cut.gap_high},
                       {"gap_ratio", run.cut.gap_ratio},
                       {"low_separation", run.low_separation},
                       {"features", run.feature_names}});

  json composition = json::array();
  for (const CompositionRow& row : run.composition.rows) {
    composition.push_back({{"cluster", prefix + std::to_string(row.cluster)},
                           {"size", row.size},
                           {"t_type", row.percent[0]},
                           {"ar_type", row.percent[1]},
                           {"art_type", row.percent[2]},
                           {"unknown", row.percent[3]}});
  }
  write_json_file(dir / "composition.json", composition);
  write_file(dir / "composition.txt", render_composition_table(run.composition, prefix));
}

int cmd_cluster(const CommonOptions& common, const std::string& cohort_dir,
                const std::string& linkage_name, bool no_standardize,
                const FeatureConfig& config) {
  const Cohort cohort = load_cohort(cohort_dir);
  const Linkage linkage = linkage_from_string(linkage_name);
  const ModalComparison cmp =
      compare_modal_runs(cohort, config, linkage, !no_standardize, common.resolved_threads());

  const fs::path out(common.out);
  write_modal_run(out / "single_modal", cmp.single, cmp.subject_ids, "S");
  write_modal_run(out / "multi_modal", cmp.multi, cmp.subject_ids, "M");

  json crosstab = json::array();
  for (Eigen::Index i = 0; i < cmp.crosstab.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < cmp.crosstab.cols(); ++j) row.push_back(cmp.crosstab(i, j));
    crosstab.push_back(std::move(row));
  }
  write_json_file(out / "comparison.json",
                  json{{"n_subjects", cmp.subject_ids.size()},
                       {"k_single", cmp.single.cut.k},
                       {"k_multi", cmp.multi.cut.k},
                       {"single_low_separation", cmp.single.low_separation},
                       {"multi_low_separation", cmp.multi.low_separation},
                       {"crosstab_single_by_multi", std::move(crosstab)},
                       {"assignment_ari",
                        adjusted_rand_index(cmp.single.cut.labels, cmp.multi.cut.labels)}});

  write_run_config(common, "cluster",
                   {{"cohort", cohort_dir},
                    {"linkage", linkage_name},
                    {"standardize", !no_standardize}});
  std::cout << "single-modal k = " << cmp.single.cut.k << ", multi-modal k = " << cmp.multi.cut.k
            << "; outputs in " << common.out << "\n";
  return 0;
}

// --- predict -------------------------------------------------------------------

int cmd_predict(const CommonOptions& common, const std::string& model_path,
                const std::string& subject_dir, const std::string& cohort_dir,
                const std::string& subject_id, const FeatureConfig& config) {
  const StackedModel model = stack_from_json(read_json_file(model_path));

  SubjectRecord subject;
  if (!subject_dir.empty()) {
    subject = load_subject_dir(subject_dir);
  } else if (!cohort_dir.empty() && !subject_id.empty()) {
    const Cohort cohort = load_cohort(cohort_dir);
    const SubjectRecord* found = find_subject(cohort, subject_id);
    if (found == nullptr) fail("UnknownSubject", "no subject '" + subject_id + "' in cohort");
    subject = *found;
  } else {
    fail("InvalidParams", "predict needs --subject DIR or --cohort DIR with --id ID");
  }

  const StackPrediction prediction = predict_stack(model, subject, config);
  json base;
  for (std::size_t m = 0; m < kStackModalities.size(); ++m) {
    base[to_string(kStackModalities[m])] = prediction.base_probabilities[m];
  }
  const std::string label_name =
      prediction.label == 1 ? "PD" : to_string(negative_class(model.task));
  write_json_file(fs::path(common.out) / "prediction.json",
                  json{{"subject", subject.id},
                       {"task", to_string(model.task)},
                       {"label", prediction.label},
                       {"label_name", label_name},
                       {"probability", prediction.probability},
                       {"base_probabilities", std::move(base)}});
  write_run_config(common, "predict", {{"model", model_path}});
  std::cout << subject.id << ": " << label_name << " (p = " << format_fixed(prediction.probability, 4)
            << ")\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Multi-modal movement-disorder analysis pipeline"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string cohort_dir, task_name, spec_path, preset = "default";
  std::string assign, linkage_name = "ward", cluster_mov_reduction = "channel";
  std::string model_path, subject_dir, subject_id;
  int inner_folds = 5, repeats = 3, folds = 5;
  bool print_spec = false, single_use_aux = false, no_standardize = false, tap_rate = false;

  auto add_common = [&](CLI::App* cmd, bool out_required = true) {
    auto* out_opt = cmd->add_option("--out", common.out, "Output directory");
    if (out_required) out_opt->required();
    cmd->add_option("--seed", common.seed, "Master seed expanded into labeled substreams");
    cmd->add_option("--threads", common.threads,
                    "Worker cap (overrides PARKIPIPE_THREADS; default hardware)");
  };

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic cohort directory");
  synth->add_option("--spec", spec_path, "Cohort spec JSON file (default: built-in preset)");
  synth->add_option("--preset", preset, "Built-in spec: default, zero-effect or phenotype");
  synth->add_flag("--print-spec", print_spec, "Print the resolved spec instead of generating");
  add_common(synth, false);

  CLI::App* extract = app.add_subcommand("extract", "Write per-modality feature CSVs");
  extract->add_option("--cohort", cohort_dir, "Cohort directory")->required();
  add_common(extract);

  CLI::App* train = app.add_subcommand("train", "Fit the stacked classifier");
  train->add_option("--cohort", cohort_dir, "Cohort directory")->required();
  train->add_option("--task", task_name, "pd-vs-hc or pd-vs-dd")->required();
  train->add_option("--assign", assign, "Learner overrides, e.g. quest=gbdt,mov=svm");
  train->add_option("--inner-folds", inner_folds, "Inner folds for meta features");
  add_common(train);

  CLI::App* evaluate = app.add_subcommand("evaluate", "Cross-validated evaluation report");
  evaluate->add_option("--cohort", cohort_dir, "Cohort directory")->required();
  evaluate->add_option("--task", task_name, "pd-vs-hc or pd-vs-dd")->required();
  evaluate->add_option("--assign", assign, "Learner overrides, e.g. quest=gbdt,mov=svm");
  evaluate->add_option("--inner-folds", inner_folds, "Inner folds for meta features");
  evaluate->add_option("--repeats", repeats, "Cross-validation repeats");
  evaluate->add_option("--folds", folds, "Cross-validation folds");
  evaluate->add_flag("--single-use-aux", single_use_aux,
                     "Let single-modality rows train on tier-1 auxiliary subjects too");
  add_common(evaluate);

  CLI::App* cluster = app.add_subcommand("cluster", "Single- vs multi-modal PD clustering");
  cluster->add_option("--cohort", cohort_dir, "Cohort directory")->required();
  cluster->add_option("--linkage", linkage_name, "ward, complete or average");
  cluster->add_flag("--no-standardize", no_standardize, "Cluster on raw feature scales");
  add_common(cluster);

  CLI::App* predict = app.add_subcommand("predict", "Classify one subject with a trained model");
  predict->add_option("--model", model_path, "model.json from train")->required();
  predict->add_option("--subject", subject_dir, "Standalone subject directory (subject.json)");
  predict->add_option("--cohort", cohort_dir, "Cohort directory holding the subject");
  predict->add_option("--id", subject_id, "Subject id inside --cohort");
  add_common(predict);

  for (CLI::App* cmd : {extract, cluster, predict}) {
    cmd->add_option("--cluster-mov-reduction", cluster_mov_reduction,
                    "Cluster-subset movement reduction: channel or global");
    cmd->add_flag("--tap-rate", tap_rate, "Report tap rate instead of spatial speed");
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const FeatureConfig feature_config = make_feature_config(cluster_mov_reduction, tap_rate);
    if (synth->parsed()) {
      return cmd_synth(common, spec_path, preset, synth->count("--seed") > 0, print_spec);
    }
    if (extract->parsed()) return cmd_extract(common, cohort_dir, feature_config);
    if (train->parsed()) {
      return cmd_train(common, cohort_dir, task_name, assign, inner_folds, feature_config);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(common, cohort_dir, task_name, assign, inner_folds, repeats, folds,
                          single_use_aux, feature_config);
    }
    if (cluster->parsed()) {
      return cmd_cluster(common, cohort_dir, linkage_name, no_standardize, feature_config);
    }
    if (predict->parsed()) {
      return cmd_predict(common, model_path, subject_dir, cohort_dir, subject_id, feature_config);
    }
    std::cerr << "no subcommand selected\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (!common.out.empty()) {
      try {
        write_json_file(fs::path(common.out) / "error.json",
                        json{{"error", {{"code", e.code()}, {"message", e.what()}}}});
      } catch (...) {
      }
    }
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (!common.out.empty()) {
      try {
        write_json_file(fs::path(common.out) / "error.json",
                        json{{"error", {{"code", "InternalError"}, {"message", e.what()}}}});
      } catch (...) {
      }
    }
    return 1;
  }
}

}  // namespace parkipipe
