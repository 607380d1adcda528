#pragma once

#include <Eigen/Dense>
#include <vector>

#include "parkipipe/datamodel.hpp"

namespace parkipipe {

enum class WindowKind { Hann, Hamming, Rect };
enum class DetrendKind { None, Mean };

struct WelchParams {
  int segment_len = 128;  // samples; >= 16
  double overlap = 0.5;   // fraction in [0, 1)
  WindowKind window = WindowKind::Hann;
  DetrendKind detrend = DetrendKind::Mean;
};

/// One-sided power spectral density on a uniform frequency grid starting at 0.
struct Spectrum {
  Eigen::VectorXd freqs;  // Hz, strictly increasing from 0
  Eigen::VectorXd psd;    // unit^2/Hz, >= 0
  double resolution = 0.0;
};

/// Averaged modified periodogram over overlapping windowed segments.
/// sum(psd) * resolution equals the mean squared value of the detrended,
/// windowed process up to windowing bias. Throws SignalTooShort if fewer than
/// segment_len samples, InvalidParams on bad parameters or NaN input.
Spectrum welch_psd(const Eigen::Ref<const Eigen::VectorXd>& signal, double sample_rate_hz,
                   const WelchParams& params = {});

inline constexpr int kBandFirstHz = 2;
inline constexpr int kBandLastHz = 12;
inline constexpr int kBandCount = kBandLastHz - kBandFirstHz + 1;

/// Integrated power per 1 Hz band centered on 2..12 Hz, rectangle rule over
/// [center - 0.5, center + 0.5). Throws ResolutionTooCoarse above 0.5 Hz.
Eigen::VectorXd band_powers(const Spectrum& spec);

struct PitchParams {
  double min_f0_hz = 60.0;
  double max_f0_hz = 400.0;
  double frame_len_s = 0.04;
  double hop_s = 0.01;
  double voicing_threshold = 0.45;
};

struct PitchTrack {
  std::vector<double> periods;  // seconds, voiced frames only
  double frame_hop_s = 0.0;
};

/// Normalized autocorrelation per frame over lags [1/max_f0, 1/min_f0];
/// frames below the voicing threshold are dropped, the winning lag is refined
/// by parabolic interpolation. Throws NoVoicedFrames for < 3 voiced frames.
PitchTrack pitch_track(const Eigen::Ref<const Eigen::VectorXd>& voice, double sample_rate_hz,
                       const PitchParams& params = {});

/// mean(|T_i - T_{i-1}|) / mean(T_i); throws TooFewPeriods below 3 periods.
double local_jitter(const PitchTrack& track);
double local_jitter(const std::vector<double>& periods);

struct TapSegmentStats {
  std::vector<int> counts;
  std::vector<double> avg_speeds;  // px/s, 0 when a segment has < 2 events
};

/// Per-segment touch count and mean euclidean speed between consecutive
/// touches; an empty record yields all zeros.
TapSegmentStats tap_segment_stats(const TapRecord& taps, int n_segments = 3);

/// Linear interpolation onto a uniform grid at to_hz; identity if rates match.
Eigen::VectorXd resample_linear(const Eigen::Ref<const Eigen::VectorXd>& signal, double from_hz,
                                double to_hz);

}  // namespace parkipipe
