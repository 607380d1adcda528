#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "parkipipe/datamodel.hpp"
#include "parkipipe/dsp.hpp"

namespace parkipipe {

inline constexpr int kQuestFeatureCount = 30;
inline constexpr int kMovFeatureCount = 264;  // 2 tasks x 2 wrists x 2 sensors x 3 axes x 11 bands
inline constexpr int kVoiceFeatureCount = 7;
inline constexpr int kTapFeatureCount = 6;
inline constexpr int kClusterFeatureCount = 26;  // 1 + 12 + 7 + 6

enum class ClusterMovReduction { PerChannel, Global };

struct FeatureConfig {
  double movement_resample_hz = 50.0;
  WelchParams welch;
  PitchParams pitch;
  ClusterMovReduction cluster_mov = ClusterMovReduction::PerChannel;
  bool tap_speed_as_rate = false;  // taps/s instead of px/s in the speed slots
};

struct FeatureVector {
  Modality modality = Modality::Quest;
  std::vector<std::string> names;
  Eigen::VectorXd values;
  std::vector<std::string> warnings;
};

struct FeatureMatrix {
  Modality modality = Modality::Quest;
  std::vector<std::string> subject_ids;
  std::vector<std::string> names;
  Eigen::MatrixXd values;  // rows follow subject_ids

  Eigen::Index row_of(const std::string& subject_id) const;  // -1 if absent
};

/// value i = 1.0 iff answer i is yes; names nms_00..nms_29.
FeatureVector extract_questionnaire(const QuestionnaireRecord& record);

/// Band powers per (task, wrist, sensor, axis) channel; exactly one record
/// per (task, wrist) required. Signals are resampled to the reference rate
/// before Welch. Throws MissingMovementRecord, propagates dsp errors.
FeatureVector extract_movement(const std::vector<MovementRecord>& records,
                               const FeatureConfig& config = {});

/// One local jitter per voice task slot; absent tasks become 0 with a
/// warning. Throws only if every present record fails.
FeatureVector extract_voice(const std::vector<VoiceRecord>& records,
                            const FeatureConfig& config = {});

/// [count_1..3, speed_1..3] from tap_segment_stats.
FeatureVector extract_tap(const TapRecord& record, const FeatureConfig& config = {});

/// Reduced subset used for clustering: questionnaire yes-count, per-channel
/// (or global) total 2-12 Hz power of the Relaxed task, voice jitters, tap
/// stats. Throws MissingModality unless all four modalities are present.
FeatureVector build_cluster_features(const SubjectRecord& subject,
                                     const FeatureConfig& config = {});

std::vector<std::string> feature_names(Modality modality, const FeatureConfig& config = {});

struct AssembleResult {
  FeatureMatrix matrix;
  std::vector<std::string> skipped;  // subject ids lacking the modality
  std::vector<std::string> warnings;
};

/// Applies the modality extractor to every eligible subject, rows in cohort
/// order. Ineligible subjects are skipped and reported, never an error.
AssembleResult assemble(const Cohort& cohort, Modality modality, const FeatureConfig& config = {},
                        int threads = 1);

/// Feature matrices for all four modalities plus the cluster subset, with
/// row lookup by subject id. Built once per cohort and shared read-only.
struct FeatureStore {
  FeatureConfig config;
  std::map<Modality, AssembleResult> by_modality;

  const FeatureMatrix& matrix(Modality m) const;
  Eigen::Index row_of(Modality m, const std::string& subject_id) const;
};

FeatureStore build_feature_store(const Cohort& cohort, const FeatureConfig& config = {},
                                 int threads = 1);

/// CSV with a subject_id column followed by the named feature columns.
void write_feature_csv(const FeatureMatrix& matrix, const std::filesystem::path& path);

}  // namespace parkipipe
