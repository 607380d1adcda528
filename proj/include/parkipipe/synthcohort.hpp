#pragma once

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "parkipipe/datamodel.hpp"

namespace parkipipe {

/// Class/subtype signature: the planted biomarker levels one group exhibits.
struct SignatureParams {
  double nms_prob = 0.2;          // per-item yes probability
  double jitter_level = 0.01;     // target voice local jitter
  double tap_interval_s = 0.32;   // base inter-tap interval
  double tap_decay = 0.05;        // fractional slowdown across the record
  double tremor_amp = 0.0;        // accel tremor amplitude, m/s^2
  double tremor_freq_lo_hz = 4.0;
  double tremor_freq_hi_hz = 6.0;
  double relaxed_factor = 1.0;    // tremor multiplier in the Relaxed task
  double lift_factor = 0.4;       // tremor multiplier in Lift and Hold
};

struct NoiseParams {
  double movement_noise = 0.06;     // accel noise std, m/s^2
  double gyro_scale = 0.5;          // gyro amplitude relative to accel
  double voice_noise = 0.015;       // additive voice sample noise std
  double amp_spread = 0.35;         // subject-level log-scale tremor amp spread
  double jitter_spread = 0.25;      // subject-level log-scale jitter spread
  double tap_interval_spread = 0.10;  // subject-level log-scale interval spread
  double tap_interval_noise = 0.12;   // per-tap interval noise
  double nms_spread = 0.06;         // subject-level NMS probability wobble
};

struct TierCounts {
  int tier1 = 0;  // questionnaire + movement only
  int tier2 = 0;  // all four modalities
};

struct CohortSpec {
  std::map<DiseaseClass, TierCounts> counts;
  std::array<double, 4> pd_subtype_mix = {0.30, 0.30, 0.30, 0.10};  // T, AR, ART, Unknown
  std::map<std::string, SignatureParams> signatures;  // HC, DD, PD_T, PD_AR, PD_ART, PD_Unknown
  NoiseParams noise;
  double movement_rate_hz = 50.0;
  double movement_duration_s = 12.0;
  double voice_rate_hz = 16000.0;
  double voice_duration_s = 1.2;
  double tap_duration_s = 15.0;
  std::uint64_t seed = 0;

  const SignatureParams& signature_for(DiseaseClass c, std::optional<PdMotorType> subtype) const;
};

/// Planted per-subject attributes, recoverable without regenerating signals.
struct GroundTruth {
  DiseaseClass disease = DiseaseClass::HC;
  std::optional<PdMotorType> subtype;
  int tier = 1;
  double tremor_freq_hz = 0.0;
  double tremor_amp = 0.0;      // subject-level, after spread
  double jitter_level = 0.0;    // subject-level, after spread
  double tap_interval_s = 0.0;  // subject-level, after spread
  double nms_prob = 0.0;
};

/// Table-1-shaped cohort (279/133/90 tier-1 and 21/27/23 all-modality) with
/// effect sizes tuned for moderate single-modality accuracy.
CohortSpec default_cohort_spec();

/// Identical signatures for every group: a null cohort carrying no signal.
CohortSpec zero_effect_spec();

/// All-modality PD-only cohort with two movement phenotypes ({T, ART} tremor
/// vs {AR, Unknown} none) that split four ways once voice, tapping and
/// questionnaire are added.
CohortSpec phenotype_cluster_spec(int per_subtype = 5);

/// Deterministic in spec.seed; per-subject substreams keyed by roster index.
Cohort generate(const CohortSpec& spec);

/// Throws UnknownSubject for ids outside the spec's roster.
GroundTruth ground_truth(const CohortSpec& spec, const std::string& subject_id);

nlohmann::json cohort_spec_to_json(const CohortSpec& spec);
CohortSpec cohort_spec_from_json(const nlohmann::json& doc);

}  // namespace parkipipe
