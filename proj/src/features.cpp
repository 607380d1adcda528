#include "parkipipe/features.hpp"

#include <fstream>

namespace parkipipe {

namespace {

struct MovementChannel {
  MovementTask task;
  Wrist wrist;
  int sensor;  // 0 accel, 1 gyro
  int axis;    // 0..2
};

const char* sensor_name(int sensor) { return sensor == 0 ? "accel" : "gyro"; }

const char* axis_name(int axis) {
  static const char* names[3] = {"x", "y", "z"};
  return names[axis];
}

std::vector<MovementChannel> movement_channels() {
  std::vector<MovementChannel> chans;
  for (MovementTask task : kMovementTasks) {
    for (Wrist wrist : kWrists) {
      for (int sensor = 0; sensor < 2; ++sensor) {
        for (int axis = 0; axis < 3; ++axis) {
          chans.push_back({task, wrist, sensor, axis});
        }
      }
    }
  }
  return chans;
}

Eigen::VectorXd channel_band_powers(const MovementRecord& record, int sensor, int axis,
                                    const FeatureConfig& config) {
  const Eigen::Matrix3Xd& data = sensor == 0 ? record.accel : record.gyro;
  Eigen::VectorXd signal = data.row(axis).transpose();
  if (record.sample_rate_hz != config.movement_resample_hz) {
    signal = resample_linear(signal, record.sample_rate_hz, config.movement_resample_hz);
  }
  const Spectrum spec = welch_psd(signal, config.movement_resample_hz, config.welch);
  return band_powers(spec);
}

}  // namespace

Eigen::Index FeatureMatrix::row_of(const std::string& subject_id) const {
  for (std::size_t i = 0; i < subject_ids.size(); ++i) {
    if (subject_ids[i] == subject_id) return static_cast<Eigen::Index>(i);
  }
  return -1;
}

FeatureVector extract_questionnaire(const QuestionnaireRecord& record) {
  FeatureVector fv;
  fv.modality = Modality::Quest;
  fv.names = feature_names(Modality::Quest);
  fv.values.resize(kQuestFeatureCount);
  for (int i = 0; i < kQuestFeatureCount; ++i) {
    fv.values[i] = record.answers[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  }
  return fv;
}

FeatureVector extract_movement(const std::vector<MovementRecord>& records,
                               const FeatureConfig& config) {
  FeatureVector fv;
  fv.modality = Modality::Mov;
  fv.names = feature_names(Modality::Mov);
  fv.values.resize(kMovFeatureCount);

  int idx = 0;
  for (const MovementChannel& ch : movement_channels()) {
    const MovementRecord* record = nullptr;
    for (const MovementRecord& r : records) {
      if (r.task == ch.task && r.wrist == ch.wrist) {
        record = &r;
        break;
      }
    }
    if (record == nullptr) {
      fail("MissingMovementRecord", "extract_movement: no record for " + to_string(ch.task) + "/" +
                                        to_string(ch.wrist));
    }
    const Eigen::VectorXd bands = channel_band_powers(*record, ch.sensor, ch.axis, config);
    fv.values.segment(idx, kBandCount) = bands;
    idx += kBandCount;
  }
  return fv;
}

FeatureVector extract_voice(const std::vector<VoiceRecord>& records, const FeatureConfig& config) {
  if (records.empty()) fail("InvalidParams", "extract_voice: no voice records");
  FeatureVector fv;
  fv.modality = Modality::Voice;
  fv.names = feature_names(Modality::Voice);
  fv.values = Eigen::VectorXd::Zero(kVoiceFeatureCount);

  int present = 0;
  int failed = 0;
  std::string last_error;
  for (int slot = 0; slot < kVoiceFeatureCount; ++slot) {
    const VoiceTask task = kVoiceTasks[static_cast<std::size_t>(slot)];
    const VoiceRecord* record = nullptr;
    for (const VoiceRecord& r : records) {
      if (r.task_id == task) {
        record = &r;
        break;
      }
    }
    if (record == nullptr) {
      fv.warnings.push_back("voice task " + to_string(task) + " missing; jitter set to 0");
      continue;
    }
    ++present;
    try {
      const PitchTrack track = pitch_track(record->samples, record->sample_rate_hz, config.pitch);
      fv.values[slot] = local_jitter(track);
    } catch (const Error& e) {
      ++failed;
      last_error = e.what();
      fv.warnings.push_back("voice task " + to_string(task) + " failed (" + e.code() +
                            "); jitter set to 0");
    }
  }
  if (present == 0) fail("InvalidParams", "extract_voice: no record matches any voice task slot");
  if (failed == present) {
    fail("NoVoicedFrames", "extract_voice: every present record failed; last error: " + last_error);
  }
  return fv;
}

FeatureVector extract_tap(const TapRecord& record, const FeatureConfig& config) {
  FeatureVector fv;
  fv.modality = Modality::Tap;
  fv.names = feature_names(Modality::Tap);
  fv.values.resize(kTapFeatureCount);
  const TapSegmentStats stats = tap_segment_stats(record, 3);
  const double seg_len = record.duration_s / 3.0;
  for (int k = 0; k < 3; ++k) {
    fv.values[k] = static_cast<double>(stats.counts[static_cast<std::size_t>(k)]);
    fv.values[3 + k] = config.tap_speed_as_rate
                           ? static_cast<double>(stats.counts[static_cast<std::size_t>(k)]) / seg_len
                           : stats.avg_speeds[static_cast<std::size_t>(k)];
  }
  return fv;
}

FeatureVector build_cluster_features(const SubjectRecord& subject, const FeatureConfig& config) {
  const ModalitySet mask = modality_mask(subject);
  if (!mask.all()) {
    fail("MissingModality", "build_cluster_features: subject '" + subject.id +
                                "' lacks a complete set of modalities");
  }

  FeatureVector fv;
  fv.modality = Modality::ClusterSubset;
  fv.names = feature_names(Modality::ClusterSubset, config);

  const FeatureVector quest = extract_questionnaire(*subject.questionnaire);
  const double quest_sum = quest.values.sum();

  std::vector<double> mov_sums;
  for (Wrist wrist : kWrists) {
    const MovementRecord* record = find_movement(subject, MovementTask::Relaxed, wrist);
    for (int sensor = 0; sensor < 2; ++sensor) {
      for (int axis = 0; axis < 3; ++axis) {
        mov_sums.push_back(channel_band_powers(*record, sensor, axis, config).sum());
      }
    }
  }
  if (config.cluster_mov == ClusterMovReduction::Global) {
    double total = 0.0;
    for (double v : mov_sums) total += v;
    mov_sums.assign(1, total);
  }

  FeatureVector voice = extract_voice(subject.voice, config);
  const FeatureVector tap = extract_tap(*subject.taps, config);

  fv.values.resize(static_cast<Eigen::Index>(1 + mov_sums.size()) + kVoiceFeatureCount +
                   kTapFeatureCount);
  Eigen::Index idx = 0;
  fv.values[idx++] = quest_sum;
  for (double v : mov_sums) fv.values[idx++] = v;
  fv.values.segment(idx, kVoiceFeatureCount) = voice.values;
  idx += kVoiceFeatureCount;
  fv.values.segment(idx, kTapFeatureCount) = tap.values;
  fv.warnings = std::move(voice.warnings);
  return fv;
}

std::vector<std::string> feature_names(Modality modality, const FeatureConfig& config) {
  std::vector<std::string> names;
  switch (modality) {
    case Modality::Quest:
      for (int i = 0; i < kQuestFeatureCount; ++i) {
        names.push_back("nms_" + std::string(i < 10 ? "0" : "") + std::to_string(i));
      }
      break;
    case Modality::Mov:
      for (const MovementChannel& ch : movement_channels()) {
        for (int f = kBandFirstHz; f <= kBandLastHz; ++f) {
          names.push_back("mov_" + to_string(ch.task) + "_" + to_string(ch.wrist) + "_" +
                          sensor_name(ch.sensor) + "_" + axis_name(ch.axis) + "_" +
                          std::to_string(f) + "hz");
        }
      }
      break;
    case Modality::Voice:
      for (VoiceTask t : kVoiceTasks) names.push_back("voice_jitter_" + to_string(t));
      break;
    case Modality::Tap:
      for (int k = 1; k <= 3; ++k) names.push_back("tap_count_" + std::to_string(k));
      for (int k = 1; k <= 3; ++k) names.push_back("tap_speed_" + std::to_string(k));
      break;
    case Modality::ClusterSubset: {
      names.push_back("quest_sum");
      if (config.cluster_mov == ClusterMovReduction::Global) {
        names.push_back("mov_relaxed_sum");
      } else {
        for (Wrist wrist : kWrists) {
          for (int sensor = 0; sensor < 2; ++sensor) {
            for (int axis = 0; axis < 3; ++axis) {
              names.push_back("mov_relaxed_" + to_string(wrist) + "_" + sensor_name(sensor) + "_" +
                              axis_name(axis) + "_sum");
            }
          }
        }
      }
      for (const std::string& n : feature_names(Modality::Voice)) names.push_back(n);
      for (const std::string& n : feature_names(Modality::Tap)) names.push_back(n);
      break;
    }
  }
  return names;
}

AssembleResult assemble(const Cohort& cohort, Modality modality, const FeatureConfig& config,
                        int threads) {
  AssembleResult out;
  out.matrix.modality = modality;
  out.matrix.names = feature_names(modality, config);

  std::vector<const SubjectRecord*> eligible;
  for (const SubjectRecord& s : cohort.subjects) {
    if (modality_mask(s).contains(modality)) {
      eligible.push_back(&s);
    } else {
      out.skipped.push_back(s.id);
    }
  }

  const Eigen::Index width = static_cast<Eigen::Index>(out.matrix.names.size());
  out.matrix.values.resize(static_cast<Eigen::Index>(eligible.size()), width);
  out.matrix.subject_ids.resize(eligible.size());
  std::vector<std::vector<std::string>> warnings(eligible.size());

  parallel_for(eligible.size(), threads, [&](std::size_t i) {
    const SubjectRecord& s = *eligible[i];
    FeatureVector fv;
    switch (modality) {
      case Modality::Quest: fv = extract_questionnaire(*s.questionnaire); break;
      case Modality::Mov: fv = extract_movement(s.movement, config); break;
      case Modality::Voice: fv = extract_voice(s.voice, config); break;
      case Modality::Tap: fv = extract_tap(*s.taps, config); break;
      case Modality::ClusterSubset: fv = build_cluster_features(s, config); break;
    }
    out.matrix.values.row(static_cast<Eigen::Index>(i)) = fv.values.transpose();
    out.matrix.subject_ids[i] = s.id;
    for (const std::string& w : fv.warnings) warnings[i].push_back(s.id + ": " + w);
  });

  for (const auto& ws : warnings) {
    out.warnings.insert(out.warnings.end(), ws.begin(), ws.end());
  }
  return out;
}

const FeatureMatrix& FeatureStore::matrix(Modality m) const {
  auto it = by_modality.find(m);
  if (it == by_modality.end()) fail("InvalidParams", "feature store lacks modality " + to_string(m));
  return it->second.matrix;
}

Eigen::Index FeatureStore::row_of(Modality m, const std::string& subject_id) const {
  return matrix(m).row_of(subject_id);
}

FeatureStore build_feature_store(const Cohort& cohort, const FeatureConfig& config, int threads) {
  FeatureStore store;
  store.config = config;
  for (Modality m : {Modality::Quest, Modality::Mov, Modality::Voice, Modality::Tap,
                     Modality::ClusterSubset}) {
    store.by_modality.emplace(m, assemble(cohort, m, config, threads));
  }
  return store;
}

void write_feature_csv(const FeatureMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) fail("IoError", "cannot open '" + path.string() + "' for writing");
  os << "subject_id";
  for (const std::string& n : matrix.names) os << "," << n;
  os << "\n";
  for (std::size_t i = 0; i < matrix.subject_ids.size(); ++i) {
    os << matrix.subject_ids[i];
    for (Eigen::Index j = 0; j < matrix.values.cols(); ++j) {
      os << "," << format_double(matrix.values(static_cast<Eigen::Index>(i), j));
    }
    os << "\n";
  }
  if (!os) fail("IoError", "failed writing '" + path.string() + "'");
}

}  // namespace parkipipe
