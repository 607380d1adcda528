#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "parkipipe/common.hpp"

namespace parkipipe {

enum class DiseaseClass { PD, DD, HC };
enum class PdMotorType { TType, ARType, ARTType, Unknown };
enum class MovementTask { Relaxed, LiftAndHold };
enum class Wrist { Left, Right };
enum class VoiceTask { VowelA, VowelI, VowelO, SyllablePah, SyllableTah, SyllableKah, Sentence };
enum class Modality { Quest, Mov, Voice, Tap, ClusterSubset };

inline constexpr int kQuestionnaireItems = 30;
inline constexpr int kVoiceTaskCount = 7;
inline constexpr std::array<MovementTask, 2> kMovementTasks = {MovementTask::Relaxed,
                                                               MovementTask::LiftAndHold};
inline constexpr std::array<Wrist, 2> kWrists = {Wrist::Left, Wrist::Right};
inline constexpr std::array<VoiceTask, kVoiceTaskCount> kVoiceTasks = {
    VoiceTask::VowelA,      VoiceTask::VowelI,      VoiceTask::VowelO,  VoiceTask::SyllablePah,
    VoiceTask::SyllableTah, VoiceTask::SyllableKah, VoiceTask::Sentence};
inline constexpr std::array<PdMotorType, 4> kMotorTypes = {
    PdMotorType::TType, PdMotorType::ARType, PdMotorType::ARTType, PdMotorType::Unknown};

std::string to_string(DiseaseClass c);
std::string to_string(PdMotorType t);
std::string to_string(MovementTask t);
std::string to_string(Wrist w);
std::string to_string(VoiceTask t);
std::string to_string(Modality m);

DiseaseClass disease_from_string(const std::string& s);
PdMotorType motor_type_from_string(const std::string& s);
MovementTask movement_task_from_string(const std::string& s);
Wrist wrist_from_string(const std::string& s);
VoiceTask voice_task_from_string(const std::string& s);

struct QuestionnaireRecord {
  std::array<bool, kQuestionnaireItems> answers{};
};

struct MovementRecord {
  MovementTask task = MovementTask::Relaxed;
  Wrist wrist = Wrist::Left;
  double sample_rate_hz = 0.0;
  Eigen::Matrix3Xd accel;  // rows x,y,z in m/s^2
  Eigen::Matrix3Xd gyro;   // rows x,y,z in rad/s, synchronous with accel
};

struct VoiceRecord {
  VoiceTask task_id = VoiceTask::VowelA;
  double sample_rate_hz = 0.0;
  Eigen::VectorXd samples;  // in [-1, 1]
};

struct TapEvent {
  double t = 0.0;  // seconds from record start
  double x = 0.0;  // px
  double y = 0.0;  // px
};

struct TapRecord {
  std::vector<TapEvent> events;
  double duration_s = 15.0;
};

struct SubjectRecord {
  std::string id;
  DiseaseClass disease = DiseaseClass::HC;
  std::optional<PdMotorType> motor_type;  // PD subjects only
  std::optional<QuestionnaireRecord> questionnaire;
  std::vector<MovementRecord> movement;  // at most one per (task, wrist)
  std::vector<VoiceRecord> voice;
  std::optional<TapRecord> taps;
};

struct CohortManifest {
  int schema_version = kCohortSchemaVersion;
  std::optional<std::uint64_t> seed;  // set for synthetic cohorts
};

struct Cohort {
  CohortManifest manifest;
  std::vector<SubjectRecord> subjects;  // ids unique
};

/// The four raw modalities a subject may carry. ClusterSubset is a derived
/// feature set and never part of a mask.
struct ModalitySet {
  bool quest = false;
  bool mov = false;
  bool voice = false;
  bool tap = false;

  bool contains(Modality m) const;
  bool includes(const ModalitySet& required) const {
    return (!required.quest || quest) && (!required.mov || mov) && (!required.voice || voice) &&
           (!required.tap || tap);
  }
  bool all() const { return quest && mov && voice && tap; }
  bool operator==(const ModalitySet&) const = default;

  static ModalitySet all_four() { return ModalitySet{true, true, true, true}; }
  static ModalitySet none() { return ModalitySet{}; }
};

// Per-record invariant checks. These return false instead of throwing so a
// subject with one corrupt record can still expose its other modalities.
bool movement_record_valid(const MovementRecord& r);
bool voice_record_valid(const VoiceRecord& r);
bool tap_record_valid(const TapRecord& r);

/// Throws InvalidRecord on taxonomy violations: empty/duplicate movement
/// slots, a motor type on a non-PD subject, or no modality data at all.
void validate_subject(const SubjectRecord& subject);

/// Throws InvalidRecord if any subject fails validate_subject or ids repeat.
void validate_cohort(const Cohort& cohort);

/// Exactly the modalities with present, invariant-satisfying data. Mov
/// requires all four (task, wrist) records; Voice requires at least one valid
/// record in each group (vowel, syllable, sentence).
ModalitySet modality_mask(const SubjectRecord& subject);

/// Subjects whose mask covers `required` and whose disease is in `classes`,
/// original order preserved. Idempotent; an empty result is not an error.
Cohort filter_cohort(const Cohort& cohort, const ModalitySet& required,
                     const std::set<DiseaseClass>& classes);

const SubjectRecord* find_subject(const Cohort& cohort, const std::string& id);

const MovementRecord* find_movement(const SubjectRecord& subject, MovementTask task, Wrist wrist);
const VoiceRecord* find_voice(const SubjectRecord& subject, VoiceTask task);

}  // namespace parkipipe
