#include "parkipipe/cohort_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

#include "parkipipe/common.hpp"

namespace parkipipe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

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

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail("IoError", "cannot open '" + path.string() + "' for writing");
  os << text;
  if (!os) fail("IoError", "failed writing '" + path.string() + "'");
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  return fields;
}

double parse_double(const std::string& s, const fs::path& path) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail("SchemaError", "bad numeric field '" + s + "' in '" + path.string() + "'");
  }
}

// Rows of numeric fields after a verified header.
std::vector<std::vector<double>> read_csv(const fs::path& path, const std::string& header) {
  std::ifstream is(path);
  if (!is) fail("IoError", "cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(is, line)) fail("SchemaError", "empty CSV '" + path.string() + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) {
    fail("SchemaError", "expected header '" + header + "' in '" + path.string() + "'");
  }
  const std::size_t width = split_csv_line(header).size();
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != width) {
      fail("SchemaError", "ragged CSV row in '" + path.string() + "'");
    }
    std::vector<double> row;
    row.reserve(width);
    for (const std::string& f : fields) row.push_back(parse_double(f, path));
    rows.push_back(std::move(row));
  }
  return rows;
}

struct SubjectMeta {
  std::string id;
  DiseaseClass disease = DiseaseClass::HC;
  std::optional<PdMotorType> motor_type;
  std::optional<double> movement_rate;
  std::optional<double> voice_rate;
  std::optional<double> tap_duration;
};

SubjectMeta meta_from_json(const json& entry) {
  SubjectMeta meta;
  meta.id = entry.at("id").get<std::string>();
  meta.disease = disease_from_string(entry.at("disease").get<std::string>());
  if (entry.contains("motor_type")) {
    meta.motor_type = motor_type_from_string(entry["motor_type"].get<std::string>());
    if (meta.disease != DiseaseClass::PD) {
      fail("InvalidRecord", "subject '" + meta.id + "' carries a motor type but is not PD");
    }
  }
  if (entry.contains("movement_sample_rate_hz")) {
    meta.movement_rate = entry["movement_sample_rate_hz"].get<double>();
  }
  if (entry.contains("voice_sample_rate_hz")) {
    meta.voice_rate = entry["voice_sample_rate_hz"].get<double>();
  }
  if (entry.contains("tap_duration_s")) meta.tap_duration = entry["tap_duration_s"].get<double>();
  return meta;
}

json meta_to_json(const SubjectRecord& s) {
  json entry;
  entry["id"] = s.id;
  entry["disease"] = to_string(s.disease);
  if (s.motor_type) entry["motor_type"] = to_string(*s.motor_type);
  if (!s.movement.empty()) {
    const double rate = s.movement.front().sample_rate_hz;
    for (const MovementRecord& r : s.movement) {
      if (r.sample_rate_hz != rate) {
        fail("InvalidRecord",
             "subject '" + s.id + "': movement records disagree on sample rate");
      }
    }
    entry["movement_sample_rate_hz"] = rate;
  }
  if (!s.voice.empty()) {
    const double rate = s.voice.front().sample_rate_hz;
    for (const VoiceRecord& r : s.voice) {
      if (r.sample_rate_hz != rate) {
        fail("InvalidRecord", "subject '" + s.id + "': voice records disagree on sample rate");
      }
    }
    entry["voice_sample_rate_hz"] = rate;
  }
  if (s.taps) entry["tap_duration_s"] = s.taps->duration_s;
  return entry;
}

SubjectRecord load_subject_files(const fs::path& dir, const SubjectMeta& meta) {
  SubjectRecord subject;
  subject.id = meta.id;
  subject.disease = meta.disease;
  subject.motor_type = meta.motor_type;

  const fs::path quest_path = dir / "questionnaire.json";
  if (fs::exists(quest_path)) {
    const json answers = read_json_file(quest_path);
    if (!answers.is_array() || answers.size() != static_cast<std::size_t>(kQuestionnaireItems)) {
      fail("SchemaError", "'" + quest_path.string() + "' must hold exactly 30 booleans");
    }
    QuestionnaireRecord q;
    for (std::size_t i = 0; i < static_cast<std::size_t>(kQuestionnaireItems); ++i) {
      if (!answers[i].is_boolean()) {
        fail("SchemaError", "'" + quest_path.string() + "' must hold exactly 30 booleans");
      }
      q.answers[i] = answers[i].get<bool>();
    }
    subject.questionnaire = q;
  }

  const fs::path mov_dir = dir / "movement";
  if (fs::exists(mov_dir)) {
    if (!meta.movement_rate) {
      fail("SchemaError", "subject '" + meta.id + "' has movement data but no manifest rate");
    }
    for (MovementTask task : kMovementTasks) {
      for (Wrist wrist : kWrists) {
        const fs::path path = mov_dir / (to_string(task) + "_" + to_string(wrist) + ".csv");
        if (!fs::exists(path)) continue;
        const auto rows = read_csv(path, "t,ax,ay,az,gx,gy,gz");
        MovementRecord r;
        r.task = task;
        r.wrist = wrist;
        r.sample_rate_hz = *meta.movement_rate;
        r.accel.resize(3, static_cast<Eigen::Index>(rows.size()));
        r.gyro.resize(3, static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
          for (int a = 0; a < 3; ++a) {
            r.accel(a, static_cast<Eigen::Index>(i)) = rows[i][static_cast<std::size_t>(1 + a)];
            r.gyro(a, static_cast<Eigen::Index>(i)) = rows[i][static_cast<std::size_t>(4 + a)];
          }
        }
        subject.movement.push_back(std::move(r));
      }
    }
  }

  const fs::path voice_dir = dir / "voice";
  if (fs::exists(voice_dir)) {
    if (!meta.voice_rate) {
      fail("SchemaError", "subject '" + meta.id + "' has voice data but no manifest rate");
    }
    for (VoiceTask task : kVoiceTasks) {
      const fs::path path = voice_dir / (to_string(task) + ".csv");
      if (!fs::exists(path)) continue;
      const auto rows = read_csv(path, "sample");
      VoiceRecord r;
      r.task_id = task;
      r.sample_rate_hz = *meta.voice_rate;
      r.samples.resize(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        r.samples[static_cast<Eigen::Index>(i)] = rows[i][0];
      }
      subject.voice.push_back(std::move(r));
    }
  }

  const fs::path taps_path = dir / "taps.csv";
  if (fs::exists(taps_path)) {
    if (!meta.tap_duration) {
      fail("SchemaError", "subject '" + meta.id + "' has taps but no manifest duration");
    }
    const auto rows = read_csv(taps_path, "t,x,y");
    TapRecord r;
    r.duration_s = *meta.tap_duration;
    for (const auto& row : rows) r.events.push_back(TapEvent{row[0], row[1], row[2]});
    subject.taps = r;
  }

  validate_subject(subject);
  return subject;
}

void save_subject_files(const SubjectRecord& s, const fs::path& dir) {
  fs::create_directories(dir);
  if (s.questionnaire) {
    json answers = json::array();
    for (bool a : s.questionnaire->answers) answers.push_back(a);
    write_text_file(dir / "questionnaire.json", answers.dump() + "\n");
  }
  if (!s.movement.empty()) {
    fs::create_directories(dir / "movement");
    for (const MovementRecord& r : s.movement) {
      std::ostringstream os;
      os << "t,ax,ay,az,gx,gy,gz\n";
      for (Eigen::Index i = 0; i < r.accel.cols(); ++i) {
        os << format_double(static_cast<double>(i) / r.sample_rate_hz);
        for (int a = 0; a < 3; ++a) os << "," << format_double(r.accel(a, i));
        for (int a = 0; a < 3; ++a) os << "," << format_double(r.gyro(a, i));
        os << "\n";
      }
      write_text_file(dir / "movement" / (to_string(r.task) + "_" + to_string(r.wrist) + ".csv"),
                      os.str());
    }
  }
  if (!s.voice.empty()) {
    fs::create_directories(dir / "voice");
    for (const VoiceRecord& r : s.voice) {
      std::ostringstream os;
      os << "sample\n";
      for (Eigen::Index i = 0; i < r.samples.size(); ++i) {
        os << format_double(r.samples[i]) << "\n";
      }
      write_text_file(dir / "voice" / (to_string(r.task_id) + ".csv"), os.str());
    }
  }
  if (s.taps) {
    std::ostringstream os;
    os << "t,x,y\n";
    for (const TapEvent& e : s.taps->events) {
      os << format_double(e.t) << "," << format_double(e.x) << "," << format_double(e.y) << "\n";
    }
    write_text_file(dir / "taps.csv", os.str());
  }
}

}  // namespace

Cohort load_cohort(const fs::path& dir) {
  const json manifest = read_json_file(dir / "cohort.json");
  if (!manifest.contains("schema_version") ||
      manifest["schema_version"].get<int>() != kCohortSchemaVersion) {
    fail("SchemaError", "cohort manifest has unsupported schema_version");
  }
  Cohort cohort;
  cohort.manifest.schema_version = kCohortSchemaVersion;
  if (manifest.contains("seed")) {
    cohort.manifest.seed = manifest["seed"].get<std::uint64_t>();
  }
  for (const json& entry : manifest.at("subjects")) {
    const SubjectMeta meta = meta_from_json(entry);
    cohort.subjects.push_back(load_subject_files(dir / meta.id, meta));
  }
  validate_cohort(cohort);
  return cohort;
}

void save_cohort(const Cohort& cohort, const fs::path& dir) {
  validate_cohort(cohort);
  if (fs::exists(dir / "cohort.json")) {
    fail("IoError", "'" + dir.string() + "' already contains a cohort");
  }
  fs::create_directories(dir);

  json manifest;
  manifest["schema_version"] = kCohortSchemaVersion;
  if (cohort.manifest.seed) manifest["seed"] = *cohort.manifest.seed;
  json subjects = json::array();
  for (const SubjectRecord& s : cohort.subjects) subjects.push_back(meta_to_json(s));
  manifest["subjects"] = std::move(subjects);
  write_text_file(dir / "cohort.json", manifest.dump(2) + "\n");

  for (const SubjectRecord& s : cohort.subjects) save_subject_files(s, dir / s.id);
}

SubjectRecord load_subject_dir(const fs::path& dir) {
  const json entry = read_json_file(dir / "subject.json");
  return load_subject_files(dir, meta_from_json(entry));
}

void save_subject_dir(const SubjectRecord& subject, const fs::path& dir) {
  fs::create_directories(dir);
  write_text_file(dir / "subject.json", meta_to_json(subject).dump(2) + "\n");
  save_subject_files(subject, dir);
}

}  // namespace parkipipe
