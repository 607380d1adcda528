#include "parkipipe/synthcohort.hpp"

#include <algorithm>
#include <cmath>

#include "parkipipe/common.hpp"

namespace parkipipe {

namespace {

const double kPi = std::acos(-1.0);

// Base f0 per voice task; the exact values only need to keep the modulated
// pitch inside the tracker's default 60-400 Hz search range.
double base_f0(VoiceTask task) {
  switch (task) {
    case VoiceTask::VowelA: return 140.0;
    case VoiceTask::VowelI: return 180.0;
    case VoiceTask::VowelO: return 120.0;
    case VoiceTask::SyllablePah: return 150.0;
    case VoiceTask::SyllableTah: return 160.0;
    case VoiceTask::SyllableKah: return 130.0;
    case VoiceTask::Sentence: return 145.0;
  }
  return 140.0;
}

constexpr double kJitterModFreqHz = 3.0;
constexpr double kTrackerHopS = 0.01;

// Slow sinusoidal period modulation of depth m yields a frame-sampled local
// jitter of (4/pi) * m * sin(pi * f_mod * hop); invert to hit a target level.
double modulation_depth_for_jitter(double jitter) {
  return jitter * kPi / (4.0 * std::sin(kPi * kJitterModFreqHz * kTrackerHopS));
}

struct PlannedSubject {
  std::string id;
  std::size_t index = 0;
  GroundTruth truth;
};

std::string subtype_key(PdMotorType t) {
  switch (t) {
    case PdMotorType::TType: return "PD_T";
    case PdMotorType::ARType: return "PD_AR";
    case PdMotorType::ARTType: return "PD_ART";
    case PdMotorType::Unknown: return "PD_Unknown";
  }
  return "PD_Unknown";
}

std::vector<PdMotorType> subtype_counts(int n, const std::array<double, 4>& mix) {
  double total = mix[0] + mix[1] + mix[2] + mix[3];
  if (total <= 0.0) fail("InvalidSpec", "pd_subtype_mix must have positive mass");

  // Largest-remainder apportionment so planted compositions are exact.
  std::array<int, 4> counts{};
  std::array<double, 4> remainder{};
  int assigned = 0;
  for (std::size_t t = 0; t < 4; ++t) {
    const double share = static_cast<double>(n) * mix[t] / total;
    counts[t] = static_cast<int>(std::floor(share));
    remainder[t] = share - counts[t];
    assigned += counts[t];
  }
  while (assigned < n) {
    std::size_t best = 0;
    for (std::size_t t = 1; t < 4; ++t) {
      if (remainder[t] > remainder[best]) best = t;
    }
    counts[best] += 1;
    remainder[best] = -1.0;
    assigned += 1;
  }

  std::vector<PdMotorType> out;
  for (std::size_t t = 0; t < 4; ++t) {
    for (int i = 0; i < counts[t]; ++i) out.push_back(kMotorTypes[t]);
  }
  return out;
}

std::vector<PlannedSubject> plan_cohort(const CohortSpec& spec) {
  std::vector<PlannedSubject> roster;
  const std::array<DiseaseClass, 3> class_order = {DiseaseClass::PD, DiseaseClass::DD,
                                                   DiseaseClass::HC};
  for (DiseaseClass cls : class_order) {
    const auto it = spec.counts.find(cls);
    if (it == spec.counts.end()) continue;
    if (it->second.tier1 < 0 || it->second.tier2 < 0) {
      fail("InvalidSpec", "negative subject count");
    }
    for (int tier = 1; tier <= 2; ++tier) {
      const int n = tier == 1 ? it->second.tier1 : it->second.tier2;
      std::vector<PdMotorType> subtypes;
      if (cls == DiseaseClass::PD) subtypes = subtype_counts(n, spec.pd_subtype_mix);
      for (int i = 0; i < n; ++i) {
        PlannedSubject planned;
        std::string cls_tag = to_string(cls);
        std::transform(cls_tag.begin(), cls_tag.end(), cls_tag.begin(),
                       [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%03d", i);
        planned.id = cls_tag + std::to_string(tier) + "_" + buf;
        planned.truth.disease = cls;
        planned.truth.tier = tier;
        if (cls == DiseaseClass::PD) planned.truth.subtype = subtypes[static_cast<std::size_t>(i)];
        roster.push_back(std::move(planned));
      }
    }
  }

  for (std::size_t i = 0; i < roster.size(); ++i) {
    PlannedSubject& p = roster[i];
    p.index = i;
    const SignatureParams& sig = spec.signature_for(p.truth.disease, p.truth.subtype);
    auto rng = seeded_stream(spec.seed, "subject_params", i);
    p.truth.tremor_freq_hz = sig.tremor_freq_lo_hz +
                             random_unit(rng) * (sig.tremor_freq_hi_hz - sig.tremor_freq_lo_hz);
    p.truth.tremor_amp = sig.tremor_amp * std::exp(spec.noise.amp_spread * random_gauss(rng));
    p.truth.jitter_level = sig.jitter_level * std::exp(spec.noise.jitter_spread * random_gauss(rng));
    p.truth.tap_interval_s =
        sig.tap_interval_s * std::exp(spec.noise.tap_interval_spread * random_gauss(rng));
    p.truth.nms_prob =
        std::clamp(sig.nms_prob + spec.noise.nms_spread * random_gauss(rng), 0.01, 0.99);
  }
  return roster;
}

QuestionnaireRecord synth_questionnaire(const PlannedSubject& p, std::mt19937_64& rng) {
  QuestionnaireRecord q;
  for (int i = 0; i < kQuestionnaireItems; ++i) {
    q.answers[static_cast<std::size_t>(i)] = random_unit(rng) < p.truth.nms_prob;
  }
  return q;
}

MovementRecord synth_movement(const CohortSpec& spec, const PlannedSubject& p,
                              const SignatureParams& sig, MovementTask task, Wrist wrist,
                              std::mt19937_64& rng) {
  MovementRecord r;
  r.task = task;
  r.wrist = wrist;
  r.sample_rate_hz = spec.movement_rate_hz;
  const Eigen::Index n =
      static_cast<Eigen::Index>(std::lround(spec.movement_duration_s * spec.movement_rate_hz));
  r.accel.resize(3, n);
  r.gyro.resize(3, n);

  const double task_factor =
      task == MovementTask::Relaxed ? sig.relaxed_factor : sig.lift_factor;
  const double amp = p.truth.tremor_amp * task_factor;
  const double freq = p.truth.tremor_freq_hz;

  // Axis weights stay near-uniform so per-channel band sums land in a tight
  // range across subjects of one phenotype.
  std::array<double, 3> weight{};
  double weight_norm = 0.0;
  for (int a = 0; a < 3; ++a) {
    weight[static_cast<std::size_t>(a)] = 0.6 + 0.4 * random_unit(rng);
    weight_norm += weight[static_cast<std::size_t>(a)] * weight[static_cast<std::size_t>(a)];
  }
  weight_norm = std::sqrt(weight_norm / 3.0);

  for (int sensor = 0; sensor < 2; ++sensor) {
    const double sensor_amp = amp * (sensor == 0 ? 1.0 : spec.noise.gyro_scale);
    const double noise = spec.noise.movement_noise * (sensor == 0 ? 1.0 : spec.noise.gyro_scale);
    for (int a = 0; a < 3; ++a) {
      const double phase = 2.0 * kPi * random_unit(rng);
      const double axis_amp = sensor_amp * weight[static_cast<std::size_t>(a)] / weight_norm;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / spec.movement_rate_hz;
        const double value =
            axis_amp * std::sin(2.0 * kPi * freq * t + phase) + noise * random_gauss(rng);
        (sensor == 0 ? r.accel : r.gyro)(a, i) = value;
      }
    }
  }
  return r;
}

VoiceRecord synth_voice(const CohortSpec& spec, const PlannedSubject& p, VoiceTask task,
                        std::mt19937_64& rng) {
  VoiceRecord r;
  r.task_id = task;
  r.sample_rate_hz = spec.voice_rate_hz;
  const Eigen::Index n =
      static_cast<Eigen::Index>(std::lround(spec.voice_duration_s * spec.voice_rate_hz));
  r.samples.resize(n);

  const double t0 = 1.0 / base_f0(task);
  const double depth = std::min(0.45, modulation_depth_for_jitter(p.truth.jitter_level));
  const double mod_phase = 2.0 * kPi * random_unit(rng);

  // Period-modulated sawtooth source plus a small noise floor.
  double phase = random_unit(rng);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / spec.voice_rate_hz;
    const double period = t0 * (1.0 + depth * std::sin(2.0 * kPi * kJitterModFreqHz * t + mod_phase));
    phase += 1.0 / (period * spec.voice_rate_hz);
    phase -= std::floor(phase);
    const double value = 0.45 * (2.0 * phase - 1.0) + spec.noise.voice_noise * random_gauss(rng);
    r.samples[i] = std::clamp(value, -1.0, 1.0);
  }
  return r;
}

TapRecord synth_taps(const CohortSpec& spec, const PlannedSubject& p, const SignatureParams& sig,
                     std::mt19937_64& rng) {
  TapRecord r;
  r.duration_s = spec.tap_duration_s;

  const std::array<std::pair<double, double>, 3> anchors = {
      std::make_pair(120.0, 320.0), std::make_pair(240.0, 320.0), std::make_pair(180.0, 440.0)};

  double t = 0.05 + 0.05 * random_unit(rng);
  std::size_t finger = 0;
  while (t < r.duration_s) {
    const auto& anchor = anchors[finger];
    TapEvent e;
    e.t = t;
    e.x = anchor.first + 5.0 * random_gauss(rng);
    e.y = anchor.second + 5.0 * random_gauss(rng);
    r.events.push_back(e);
    finger = (finger + 1) % anchors.size();

    const double progress = t / r.duration_s;
    double interval = p.truth.tap_interval_s * (1.0 + sig.tap_decay * progress) *
                      std::exp(spec.noise.tap_interval_noise * random_gauss(rng));
    interval = std::max(interval, 0.04);
    t += interval;
  }
  return r;
}

}  // namespace

const SignatureParams& CohortSpec::signature_for(DiseaseClass c,
                                                 std::optional<PdMotorType> subtype) const {
  std::string key;
  if (c == DiseaseClass::PD) {
    key = subtype_key(subtype.value_or(PdMotorType::Unknown));
  } else {
    key = to_string(c);
  }
  const auto it = signatures.find(key);
  if (it == signatures.end()) fail("InvalidSpec", "missing signature '" + key + "'");
  return it->second;
}

Cohort generate(const CohortSpec& spec) {
  if (spec.movement_rate_hz <= 0.0 || spec.voice_rate_hz < 8000.0 || spec.tap_duration_s <= 0.0 ||
      spec.movement_duration_s < 5.0 || spec.voice_duration_s < 0.5) {
    fail("InvalidSpec", "generate: implausible rates or durations");
  }
  const std::vector<PlannedSubject> roster = plan_cohort(spec);

  Cohort cohort;
  cohort.manifest.seed = spec.seed;
  for (const PlannedSubject& p : roster) {
    const SignatureParams& sig = spec.signature_for(p.truth.disease, p.truth.subtype);
    auto rng = seeded_stream(spec.seed, "subject_signal", p.index);

    SubjectRecord s;
    s.id = p.id;
    s.disease = p.truth.disease;
    s.motor_type = p.truth.subtype;
    s.questionnaire = synth_questionnaire(p, rng);
    for (MovementTask task : kMovementTasks) {
      for (Wrist wrist : kWrists) {
        s.movement.push_back(synth_movement(spec, p, sig, task, wrist, rng));
      }
    }
    if (p.truth.tier == 2) {
      for (VoiceTask task : kVoiceTasks) {
        s.voice.push_back(synth_voice(spec, p, task, rng));
      }
      s.taps = synth_taps(spec, p, sig, rng);
    }
    cohort.subjects.push_back(std::move(s));
  }
  validate_cohort(cohort);
  return cohort;
}

GroundTruth ground_truth(const CohortSpec& spec, const std::string& subject_id) {
  for (const PlannedSubject& p : plan_cohort(spec)) {
    if (p.id == subject_id) return p.truth;
  }
  fail("UnknownSubject", "no subject '" + subject_id + "' in this cohort spec");
}

CohortSpec default_cohort_spec() {
  CohortSpec spec;
  spec.counts[DiseaseClass::PD] = TierCounts{279, 21};
  spec.counts[DiseaseClass::DD] = TierCounts{133, 27};
  spec.counts[DiseaseClass::HC] = TierCounts{90, 23};

  spec.noise.amp_spread = 0.45;
  spec.noise.jitter_spread = 0.45;
  spec.noise.tap_interval_spread = 0.22;

  SignatureParams hc;
  hc.nms_prob = 0.15;
  hc.jitter_level = 0.012;
  hc.tap_interval_s = 0.30;
  hc.tap_decay = 0.05;
  hc.tremor_amp = 0.09;  // physiological noise-floor tremor
  hc.tremor_freq_lo_hz = 5.0;
  hc.tremor_freq_hi_hz = 11.0;
  hc.relaxed_factor = 1.0;
  hc.lift_factor = 1.0;
  spec.signatures["HC"] = hc;

  SignatureParams dd;
  dd.nms_prob = 0.38;
  dd.jitter_level = 0.020;
  dd.tap_interval_s = 0.36;
  dd.tap_decay = 0.12;
  dd.tremor_amp = 0.40;
  dd.tremor_freq_lo_hz = 5.0;
  dd.tremor_freq_hi_hz = 8.0;
  dd.relaxed_factor = 0.35;  // action-tremor-like: stronger in Lift and Hold
  dd.lift_factor = 1.0;
  spec.signatures["DD"] = dd;

  SignatureParams pd_t;
  pd_t.nms_prob = 0.36;
  pd_t.jitter_level = 0.016;
  pd_t.tap_interval_s = 0.34;
  pd_t.tap_decay = 0.10;
  pd_t.tremor_amp = 0.45;
  pd_t.tremor_freq_lo_hz = 4.0;
  pd_t.tremor_freq_hi_hz = 6.0;
  pd_t.relaxed_factor = 1.0;  // rest tremor: stronger in Relaxed
  pd_t.lift_factor = 0.4;
  spec.signatures["PD_T"] = pd_t;

  SignatureParams pd_ar;
  pd_ar.nms_prob = 0.50;
  pd_ar.jitter_level = 0.026;
  pd_ar.tap_interval_s = 0.46;
  pd_ar.tap_decay = 0.25;
  pd_ar.tremor_amp = 0.10;
  pd_ar.tremor_freq_lo_hz = 4.0;
  pd_ar.tremor_freq_hi_hz = 6.0;
  pd_ar.relaxed_factor = 1.0;
  pd_ar.lift_factor = 0.6;
  spec.signatures["PD_AR"] = pd_ar;

  SignatureParams pd_art;
  pd_art.nms_prob = 0.45;
  pd_art.jitter_level = 0.030;
  pd_art.tap_interval_s = 0.40;
  pd_art.tap_decay = 0.18;
  pd_art.tremor_amp = 0.40;
  pd_art.tremor_freq_lo_hz = 4.0;
  pd_art.tremor_freq_hi_hz = 6.0;
  pd_art.relaxed_factor = 1.0;
  pd_art.lift_factor = 0.5;
  spec.signatures["PD_ART"] = pd_art;

  SignatureParams pd_unknown;
  pd_unknown.nms_prob = 0.30;
  pd_unknown.jitter_level = 0.014;
  pd_unknown.tap_interval_s = 0.32;
  pd_unknown.tap_decay = 0.08;
  pd_unknown.tremor_amp = 0.14;
  pd_unknown.tremor_freq_lo_hz = 4.0;
  pd_unknown.tremor_freq_hi_hz = 6.0;
  pd_unknown.relaxed_factor = 1.0;
  pd_unknown.lift_factor = 0.6;
  spec.signatures["PD_Unknown"] = pd_unknown;
  return spec;
}

CohortSpec zero_effect_spec() {
  CohortSpec spec = default_cohort_spec();
  SignatureParams neutral;
  neutral.nms_prob = 0.30;
  neutral.jitter_level = 0.015;
  neutral.tap_interval_s = 0.35;
  neutral.tap_decay = 0.08;
  neutral.tremor_amp = 0.15;
  neutral.tremor_freq_lo_hz = 4.0;
  neutral.tremor_freq_hi_hz = 8.0;
  neutral.relaxed_factor = 1.0;
  neutral.lift_factor = 1.0;
  for (auto& [key, sig] : spec.signatures) sig = neutral;
  return spec;
}

CohortSpec phenotype_cluster_spec(int per_subtype) {
  if (per_subtype < 1) fail("InvalidSpec", "phenotype_cluster_spec: per_subtype must be >= 1");
  CohortSpec spec = default_cohort_spec();
  spec.counts.clear();
  spec.counts[DiseaseClass::PD] = TierCounts{0, 4 * per_subtype};
  spec.pd_subtype_mix = {0.25, 0.25, 0.25, 0.25};

  // Tighter subject-level spread: the phenotypes should form compact blobs.
  spec.noise.amp_spread = 0.12;
  spec.noise.jitter_spread = 0.10;
  spec.noise.tap_interval_spread = 0.05;

  // Movement split {T, ART} vs {AR, Unknown}; the other modalities separate
  // the pairs. Offsets are sized so the four centroids are roughly
  // equidistant after z-scoring.
  spec.signatures["PD_T"].tremor_amp = 0.55;
  spec.signatures["PD_T"].jitter_level = 0.008;
  spec.signatures["PD_T"].tap_interval_s = 0.34;
  spec.signatures["PD_T"].tap_decay = 0.08;
  spec.signatures["PD_T"].nms_prob = 0.35;

  spec.signatures["PD_ART"].tremor_amp = 0.55;
  spec.signatures["PD_ART"].jitter_level = 0.040;
  spec.signatures["PD_ART"].tap_interval_s = 0.40;
  spec.signatures["PD_ART"].tap_decay = 0.15;
  spec.signatures["PD_ART"].nms_prob = 0.50;

  spec.signatures["PD_AR"].tremor_amp = 0.06;
  spec.signatures["PD_AR"].jitter_level = 0.030;
  spec.signatures["PD_AR"].tap_interval_s = 0.55;
  spec.signatures["PD_AR"].tap_decay = 0.35;
  spec.signatures["PD_AR"].nms_prob = 0.55;

  spec.signatures["PD_Unknown"].tremor_amp = 0.06;
  spec.signatures["PD_Unknown"].jitter_level = 0.010;
  spec.signatures["PD_Unknown"].tap_interval_s = 0.31;
  spec.signatures["PD_Unknown"].tap_decay = 0.04;
  spec.signatures["PD_Unknown"].nms_prob = 0.25;
  return spec;
}

// --- JSON ------------------------------------------------------------------

namespace {

nlohmann::json signature_to_json(const SignatureParams& sig) {
  return nlohmann::json{{"nms_prob", sig.nms_prob},
                        {"jitter_level", sig.jitter_level},
                        {"tap_interval_s", sig.tap_interval_s},
                        {"tap_decay", sig.tap_decay},
                        {"tremor_amp", sig.tremor_amp},
                        {"tremor_freq_lo_hz", sig.tremor_freq_lo_hz},
                        {"tremor_freq_hi_hz", sig.tremor_freq_hi_hz},
                        {"relaxed_factor", sig.relaxed_factor},
                        {"lift_factor", sig.lift_factor}};
}

SignatureParams signature_from_json(const nlohmann::json& doc) {
  SignatureParams sig;
  sig.nms_prob = doc.at("nms_prob").get<double>();
  sig.jitter_level = doc.at("jitter_level").get<double>();
  sig.tap_interval_s = doc.at("tap_interval_s").get<double>();
  sig.tap_decay = doc.at("tap_decay").get<double>();
  sig.tremor_amp = doc.at("tremor_amp").get<double>();
  sig.tremor_freq_lo_hz = doc.at("tremor_freq_lo_hz").get<double>();
  sig.tremor_freq_hi_hz = doc.at("tremor_freq_hi_hz").get<double>();
  sig.relaxed_factor = doc.at("relaxed_factor").get<double>();
  sig.lift_factor = doc.at("lift_factor").get<double>();
  return sig;
}

}  // namespace

nlohmann::json cohort_spec_to_json(const CohortSpec& spec) {
  nlohmann::json counts;
  for (const auto& [cls, tiers] : spec.counts) {
    counts[to_string(cls)] = {{"tier1", tiers.tier1}, {"tier2", tiers.tier2}};
  }
  nlohmann::json signatures;
  for (const auto& [key, sig] : spec.signatures) signatures[key] = signature_to_json(sig);
  return nlohmann::json{
      {"counts", std::move(counts)},
      {"pd_subtype_mix", spec.pd_subtype_mix},
      {"signatures", std::move(signatures)},
      {"noise",
       {{"movement_noise", spec.noise.movement_noise},
        {"gyro_scale", spec.noise.gyro_scale},
        {"voice_noise", spec.noise.voice_noise},
        {"amp_spread", spec.noise.amp_spread},
        {"jitter_spread", spec.noise.jitter_spread},
        {"tap_interval_spread", spec.noise.tap_interval_spread},
        {"tap_interval_noise", spec.noise.tap_interval_noise},
        {"nms_spread", spec.noise.nms_spread}}},
      {"movement_rate_hz", spec.movement_rate_hz},
      {"movement_duration_s", spec.movement_duration_s},
      {"voice_rate_hz", spec.voice_rate_hz},
      {"voice_duration_s", spec.voice_duration_s},
      {"tap_duration_s", spec.tap_duration_s},
      {"seed", spec.seed}};
}

CohortSpec cohort_spec_from_json(const nlohmann::json& doc) {
  CohortSpec spec;
  spec.signatures.clear();
  for (const auto& [key, value] : doc.at("counts").items()) {
    spec.counts[disease_from_string(key)] =
        TierCounts{value.at("tier1").get<int>(), value.at("tier2").get<int>()};
  }
  spec.pd_subtype_mix = doc.at("pd_subtype_mix").get<std::array<double, 4>>();
  for (const auto& [key, value] : doc.at("signatures").items()) {
    spec.signatures[key] = signature_from_json(value);
  }
  const auto& noise = doc.at("noise");
  spec.noise.movement_noise = noise.at("movement_noise").get<double>();
  spec.noise.gyro_scale = noise.at("gyro_scale").get<double>();
  spec.noise.voice_noise = noise.at("voice_noise").get<double>();
  spec.noise.amp_spread = noise.at("amp_spread").get<double>();
  spec.noise.jitter_spread = noise.at("jitter_spread").get<double>();
  spec.noise.tap_interval_spread = noise.at("tap_interval_spread").get<double>();
  spec.noise.tap_interval_noise = noise.at("tap_interval_noise").get<double>();
  spec.noise.nms_spread = noise.at("nms_spread").get<double>();
  spec.movement_rate_hz = doc.at("movement_rate_hz").get<double>();
  spec.movement_duration_s = doc.at("movement_duration_s").get<double>();
  spec.voice_rate_hz = doc.at("voice_rate_hz").get<double>();
  spec.voice_duration_s = doc.at("voice_duration_s").get<double>();
  spec.tap_duration_s = doc.at("tap_duration_s").get<double>();
  spec.seed = doc.at("seed").get<std::uint64_t>();
  return spec;
}

}  // namespace parkipipe
