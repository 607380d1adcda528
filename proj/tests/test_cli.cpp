#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "parkipipe/cli.hpp"
#include "parkipipe/cohort_io.hpp"
#include "test_support.hpp"

using namespace parkipipe;
using namespace test_support;
namespace fs = std::filesystem;
using nlohmann::json;

TEST_SUITE_BEGIN("cli");

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

struct Workspace {
  fs::path root;
  Workspace() : root(fs::temp_directory_path() / "parkipipe_cli_test") {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Workspace() { fs::remove_all(root); }
  std::string operator/(const std::string& name) const { return (root / name).string(); }
};

// One shared end-to-end workspace; building it once keeps the suite fast.
const Workspace& chain() {
  static Workspace ws;
  static bool built = false;
  if (!built) {
    built = true;
    CohortSpec spec = light_small_spec(31);
    std::ofstream((ws.root / "spec.json").string()) << cohort_spec_to_json(spec).dump(2);

    REQUIRE(run_cli({"synth", "--spec", ws / "spec.json", "--out", ws / "cohort"}) == 0);
    REQUIRE(run_cli({"extract", "--cohort", ws / "cohort", "--out", ws / "features"}) == 0);
    REQUIRE(run_cli({"train", "--cohort", ws / "cohort", "--task", "pd-vs-hc", "--seed", "5",
                     "--out", ws / "model"}) == 0);
    REQUIRE(run_cli({"evaluate", "--cohort", ws / "cohort", "--task", "pd-vs-hc", "--seed", "5",
                     "--out", ws / "eval"}) == 0);
    REQUIRE(run_cli({"cluster", "--cohort", ws / "cohort", "--out", ws / "clusters"}) == 0);
    REQUIRE(run_cli({"predict", "--model", ws / "model" + std::string("/model.json"), "--cohort",
                     ws / "cohort", "--id", "pd2_000", "--out", ws / "pred"}) == 0);
  }
  return ws;
}

}  // namespace

TEST_CASE("synth writes a loadable cohort with spec provenance") {
  const Workspace& ws = chain();
  const Cohort cohort = load_cohort(ws.root / "cohort");
  CHECK(cohort.subjects.size() == 97);
  CHECK(cohort.manifest.seed == 31);
  CHECK(fs::exists(ws.root / "cohort" / "cohort_spec.json"));

  // synth refuses to overwrite an existing cohort
  CHECK(run_cli({"synth", "--spec", ws / "spec.json", "--out", ws / "cohort"}) == 1);
}

TEST_CASE("extract writes one csv per feature set plus a summary") {
  const Workspace& ws = chain();
  for (const std::string name : {"quest", "mov", "voice", "tap", "cluster_subset"}) {
    CHECK(fs::exists(ws.root / "features" / ("features_" + name + ".csv")));
  }
  const json summary = read_json(ws.root / "features" / "extract_summary.json");
  CHECK(summary["quest"]["rows"] == 97);
  CHECK(summary["voice"]["rows"] == 40);       // tier-2 only
  CHECK(summary["voice"]["skipped"].size() == 57);
  CHECK(summary["mov"]["columns"] == 264);

  const std::string header = slurp(ws.root / "features" / "features_tap.csv");
  CHECK(header.rfind("subject_id,tap_count_1,", 0) == 0);
}

TEST_CASE("train emits a loadable stacked model with provenance") {
  const Workspace& ws = chain();
  const json doc = read_json(ws.root / "model" / "model.json");
  CHECK(doc["stack_schema"] == 1);
  CHECK(doc["task"] == "pd-vs-hc");
  CHECK(doc["base"].size() == 4);
  CHECK(doc["meta"]["kind"] == "logreg");
  const json run = read_json(ws.root / "model" / "run_config.json");
  CHECK(run["command"] == "train");
  CHECK(run["seed"] == 5);
}

TEST_CASE("evaluate reports fifteen scores per pipeline row") {
  const Workspace& ws = chain();
  const json report = read_json(ws.root / "eval" / "report.json");
  REQUIRE(report["rows"].size() == 5);
  std::vector<std::string> names;
  for (const json& row : report["rows"]) {
    names.push_back(row["pipeline"].get<std::string>());
    CHECK(row["fold_scores"].size() == 15);
    CHECK(row["mean"].get<double>() >= 0.0);
    CHECK(row["mean"].get<double>() <= 1.0);
  }
  CHECK(names == std::vector<std::string>{"quest", "mov", "voice", "tap", "combined"});
  CHECK(report["fold_plan"]["assignments"].size() == 3);

  const std::string table = slurp(ws.root / "eval" / "report.txt");
  CHECK(table.find("Quest. + Mov. + Voice + Finger Tapping") != std::string::npos);
}

TEST_CASE("evaluate is byte-deterministic for a fixed seed") {
  const Workspace& ws = chain();
  REQUIRE(run_cli({"evaluate", "--cohort", ws / "cohort", "--task", "pd-vs-hc", "--seed", "5",
                   "--out", ws / "eval_again"}) == 0);
  CHECK(slurp(ws.root / "eval" / "report.json") == slurp(ws.root / "eval_again" / "report.json"));
  CHECK(slurp(ws.root / "eval" / "report.txt") == slurp(ws.root / "eval_again" / "report.txt"));
}

TEST_CASE("cluster emits both modal runs and the comparison") {
  const Workspace& ws = chain();
  for (const std::string sub : {"single_modal", "multi_modal"}) {
    for (const std::string f :
         {"dendrogram.json", "dendrogram.txt", "dendrogram.svg", "assignment.json",
          "composition.json", "composition.txt"}) {
      CHECK(fs::exists(ws.root / "clusters" / sub / f));
    }
  }
  const json cmp = read_json(ws.root / "clusters" / "comparison.json");
  CHECK(cmp["n_subjects"] == 14);  // tier-2 PD subjects
  CHECK(cmp["k_single"].get<int>() >= 2);
  CHECK(cmp["k_multi"].get<int>() >= 2);
}

TEST_CASE("predict emits label, probability and the base probabilities") {
  const Workspace& ws = chain();
  const json pred = read_json(ws.root / "pred" / "prediction.json");
  CHECK(pred["subject"] == "pd2_000");
  CHECK(pred["task"] == "pd-vs-hc");
  CHECK(pred["base_probabilities"].size() == 4);
  const double p = pred["probability"].get<double>();
  CHECK(p >= 0.0);
  CHECK(p <= 1.0);
  CHECK(pred["label"] == (p >= 0.5 ? 1 : 0));
}

TEST_CASE("predict works from a standalone subject directory") {
  const Workspace& ws = chain();
  const Cohort cohort = load_cohort(ws.root / "cohort");
  const SubjectRecord* subject = find_subject(cohort, "hc2_000");
  REQUIRE(subject != nullptr);
  save_subject_dir(*subject, ws.root / "standalone");
  REQUIRE(run_cli({"predict", "--model", ws / "model" + std::string("/model.json"), "--subject",
                   ws / "standalone", "--out", ws / "pred2"}) == 0);
  const json pred = read_json(ws.root / "pred2" / "prediction.json");
  CHECK(pred["subject"] == "hc2_000");
}

TEST_CASE("commands never mutate the input cohort directory") {
  const Workspace& ws = chain();
  // compare a sensitive file and the directory inventory before/after a run
  const std::string manifest_before = slurp(ws.root / "cohort" / "cohort.json");
  std::size_t files_before = 0;
  for (const auto& e : fs::recursive_directory_iterator(ws.root / "cohort")) {
    if (e.is_regular_file()) ++files_before;
  }
  REQUIRE(run_cli({"cluster", "--cohort", ws / "cohort", "--out", ws / "clusters2"}) == 0);
  std::size_t files_after = 0;
  for (const auto& e : fs::recursive_directory_iterator(ws.root / "cohort")) {
    if (e.is_regular_file()) ++files_after;
  }
  CHECK(files_before == files_after);
  CHECK(slurp(ws.root / "cohort" / "cohort.json") == manifest_before);
}

TEST_CASE("domain errors map to exit 1 with a machine-readable error file") {
  const Workspace& ws = chain();
  const int code = run_cli({"evaluate", "--cohort", ws / "no_such_cohort", "--task", "pd-vs-hc",
                            "--out", ws / "err_out"});
  CHECK(code == 1);
  const json err = read_json(ws.root / "err_out" / "error.json");
  CHECK(err["error"]["code"] == "IoError");
  CHECK(err["error"]["message"].get<std::string>().find("cohort.json") != std::string::npos);
}

TEST_CASE("usage errors map to exit 2") {
  CHECK(run_cli({"no-such-command"}) == 2);
  CHECK(run_cli({"evaluate", "--task", "pd-vs-hc"}) == 2);  // missing required options
  CHECK(run_cli({}) == 2);
}

TEST_CASE("bad task names are domain errors") {
  const Workspace& ws = chain();
  const int code = run_cli({"evaluate", "--cohort", ws / "cohort", "--task", "pd-vs-xx",
                            "--out", ws / "err_task"});
  CHECK(code == 1);
  CHECK(read_json(ws.root / "err_task" / "error.json")["error"]["code"] == "InvalidParams");
}

TEST_CASE("print-spec dumps the resolved preset without writing") {
  CHECK(run_cli({"synth", "--preset", "phenotype", "--print-spec"}) == 0);
}

TEST_CASE("cohort loader rejects malformed directories") {
  Workspace ws2;
  fs::create_directories(ws2.root / "bad");
  std::ofstream((ws2.root / "bad" / "cohort.json").string())
      << R"({"schema_version": 99, "subjects": []})";
  try {
    load_cohort(ws2.root / "bad");
    FAIL("expected SchemaError");
  } catch (const Error& e) {
    CHECK(e.code() == "SchemaError");
  }

  // motor type on a non-PD subject is rejected at load time
  fs::create_directories(ws2.root / "bad2" / "s1");
  std::ofstream((ws2.root / "bad2" / "cohort.json").string()) << R"({
    "schema_version": 1,
    "subjects": [{"id": "s1", "disease": "HC", "motor_type": "T"}]
  })";
  std::ofstream((ws2.root / "bad2" / "s1" / "questionnaire.json").string())
      << "[true,false,true,false,true,false,true,false,true,false,"
         "true,false,true,false,true,false,true,false,true,false,"
         "true,false,true,false,true,false,true,false,true,false]";
  try {
    load_cohort(ws2.root / "bad2");
    FAIL("expected InvalidRecord");
  } catch (const Error& e) {
    CHECK(e.code() == "InvalidRecord");
  }
}

TEST_SUITE_END();
