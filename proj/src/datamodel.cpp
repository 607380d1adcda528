#include "parkipipe/datamodel.hpp"

#include <algorithm>
#include <set>

namespace parkipipe {

std::string to_string(DiseaseClass c) {
  switch (c) {
    case DiseaseClass::PD: return "PD";
    case DiseaseClass::DD: return "DD";
    case DiseaseClass::HC: return "HC";
  }
  fail("InvalidRecord", "unknown disease class");
}

std::string to_string(PdMotorType t) {
  switch (t) {
    case PdMotorType::TType: return "T";
    case PdMotorType::ARType: return "AR";
    case PdMotorType::ARTType: return "ART";
    case PdMotorType::Unknown: return "Unknown";
  }
  fail("InvalidRecord", "unknown motor type");
}

std::string to_string(MovementTask t) {
  switch (t) {
    case MovementTask::Relaxed: return "relaxed";
    case MovementTask::LiftAndHold: return "lift_and_hold";
  }
  fail("InvalidRecord", "unknown movement task");
}

std::string to_string(Wrist w) {
  switch (w) {
    case Wrist::Left: return "left";
    case Wrist::Right: return "right";
  }
  fail("InvalidRecord", "unknown wrist");
}

std::string to_string(VoiceTask t) {
  switch (t) {
    case VoiceTask::VowelA: return "vowel_a";
    case VoiceTask::VowelI: return "vowel_i";
    case VoiceTask::VowelO: return "vowel_o";
    case VoiceTask::SyllablePah: return "syllable_pah";
    case VoiceTask::SyllableTah: return "syllable_tah";
    case VoiceTask::SyllableKah: return "syllable_kah";
    case VoiceTask::Sentence: return "sentence";
  }
  fail("InvalidRecord", "unknown voice task");
}

std::string to_string(Modality m) {
  switch (m) {
    case Modality::Quest: return "quest";
    case Modality::Mov: return "mov";
    case Modality::Voice: return "voice";
    case Modality::Tap: return "tap";
    case Modality::ClusterSubset: return "cluster_subset";
  }
  fail("InvalidRecord", "unknown modality");
}

DiseaseClass disease_from_string(const std::string& s) {
  if (s == "PD") return DiseaseClass::PD;
  if (s == "DD") return DiseaseClass::DD;
  if (s == "HC") return DiseaseClass::HC;
  fail("SchemaError", "unknown disease class '" + s + "'");
}

PdMotorType motor_type_from_string(const std::string& s) {
  if (s == "T") return PdMotorType::TType;
  if (s == "AR") return PdMotorType::ARType;
  if (s == "ART") return PdMotorType::ARTType;
  if (s == "Unknown") return PdMotorType::Unknown;
  fail("SchemaError", "unknown motor type '" + s + "'");
}

MovementTask movement_task_from_string(const std::string& s) {
  if (s == "relaxed") return MovementTask::Relaxed;
  if (s == "lift_and_hold") return MovementTask::LiftAndHold;
  fail("SchemaError", "unknown movement task '" + s + "'");
}

Wrist wrist_from_string(const std::string& s) {
  if (s == "left") return Wrist::Left;
  if (s == "right") return Wrist::Right;
  fail("SchemaError", "unknown wrist '" + s + "'");
}

VoiceTask voice_task_from_string(const std::string& s) {
  for (VoiceTask t : kVoiceTasks) {
    if (to_string(t) == s) return t;
  }
  fail("SchemaError", "unknown voice task '" + s + "'");
}

bool ModalitySet::contains(Modality m) const {
  switch (m) {
    case Modality::Quest: return quest;
    case Modality::Mov: return mov;
    case Modality::Voice: return voice;
    case Modality::Tap: return tap;
    case Modality::ClusterSubset: return all();
  }
  return false;
}

bool movement_record_valid(const MovementRecord& r) {
  if (r.sample_rate_hz <= 0.0) return false;
  const Eigen::Index n = r.accel.cols();
  if (n != r.gyro.cols()) return false;
  if (static_cast<double>(n) < r.sample_rate_hz * 5.0) return false;
  if (!r.accel.allFinite() || !r.gyro.allFinite()) return false;
  return true;
}

bool voice_record_valid(const VoiceRecord& r) {
  if (r.sample_rate_hz < 8000.0) return false;
  const double duration = static_cast<double>(r.samples.size()) / r.sample_rate_hz;
  if (duration < 0.5) return false;
  if (!r.samples.allFinite()) return false;
  if (r.samples.size() > 0 && (r.samples.maxCoeff() > 1.0 || r.samples.minCoeff() < -1.0)) {
    return false;
  }
  return true;
}

bool tap_record_valid(const TapRecord& r) {
  if (r.duration_s <= 0.0) return false;
  double prev = -1.0;
  for (const TapEvent& e : r.events) {
    if (!(e.t >= 0.0 && e.t < r.duration_s)) return false;
    if (e.t <= prev) return false;
    prev = e.t;
  }
  return true;
}

void validate_subject(const SubjectRecord& subject) {
  if (subject.id.empty()) fail("InvalidRecord", "subject id is empty");
  if (subject.motor_type && subject.disease != DiseaseClass::PD) {
    fail("InvalidRecord", "subject '" + subject.id + "' carries a motor type but is not PD");
  }
  std::set<std::pair<int, int>> seen;
  for (const MovementRecord& r : subject.movement) {
    auto key = std::make_pair(static_cast<int>(r.task), static_cast<int>(r.wrist));
    if (!seen.insert(key).second) {
      fail("InvalidRecord", "subject '" + subject.id + "' has duplicate movement record for " +
                                to_string(r.task) + "/" + to_string(r.wrist));
    }
  }
  const bool any = subject.questionnaire.has_value() || !subject.movement.empty() ||
                   !subject.voice.empty() || subject.taps.has_value();
  if (!any) fail("InvalidRecord", "subject '" + subject.id + "' has no modality data");
}

void validate_cohort(const Cohort& cohort) {
  std::set<std::string> ids;
  for (const SubjectRecord& s : cohort.subjects) {
    validate_subject(s);
    if (!ids.insert(s.id).second) fail("InvalidRecord", "duplicate subject id '" + s.id + "'");
  }
}

ModalitySet modality_mask(const SubjectRecord& subject) {
  ModalitySet mask;
  mask.quest = subject.questionnaire.has_value();

  int movement_slots = 0;
  bool movement_ok = true;
  for (MovementTask task : kMovementTasks) {
    for (Wrist wrist : kWrists) {
      const MovementRecord* r = find_movement(subject, task, wrist);
      if (r == nullptr) continue;
      ++movement_slots;
      movement_ok = movement_ok && movement_record_valid(*r);
    }
  }
  mask.mov = movement_slots == 4 && movement_ok;

  bool vowel = false, syllable = false, sentence = false;
  for (const VoiceRecord& r : subject.voice) {
    if (!voice_record_valid(r)) continue;
    switch (r.task_id) {
      case VoiceTask::VowelA:
      case VoiceTask::VowelI:
      case VoiceTask::VowelO: vowel = true; break;
      case VoiceTask::SyllablePah:
      case VoiceTask::SyllableTah:
      case VoiceTask::SyllableKah: syllable = true; break;
      case VoiceTask::Sentence: sentence = true; break;
    }
  }
  mask.voice = vowel && syllable && sentence;

  mask.tap = subject.taps.has_value() && tap_record_valid(*subject.taps);
  return mask;
}

Cohort filter_cohort(const Cohort& cohort, const ModalitySet& required,
                     const std::set<DiseaseClass>& classes) {
  Cohort out;
  out.manifest = cohort.manifest;
  for (const SubjectRecord& s : cohort.subjects) {
    if (classes.count(s.disease) == 0) continue;
    if (!modality_mask(s).includes(required)) continue;
    out.subjects.push_back(s);
  }
  return out;
}

const SubjectRecord* find_subject(const Cohort& cohort, const std::string& id) {
  for (const SubjectRecord& s : cohort.subjects) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

const MovementRecord* find_movement(const SubjectRecord& subject, MovementTask task, Wrist wrist) {
  for (const MovementRecord& r : subject.movement) {
    if (r.task == task && r.wrist == wrist) return &r;
  }
  return nullptr;
}

const VoiceRecord* find_voice(const SubjectRecord& subject, VoiceTask task) {
  for (const VoiceRecord& r : subject.voice) {
    if (r.task_id == task) return &r;
  }
  return nullptr;
}

}  // namespace parkipipe
