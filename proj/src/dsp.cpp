#include "parkipipe/dsp.hpp"

#include <cmath>
#include <complex>
#include <numeric>

namespace parkipipe {

namespace {

const double kPi = std::acos(-1.0);

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Iterative radix-2 Cooley-Tukey; buf.size() must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& buf) {
  const std::size_t n = buf.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(buf[i], buf[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = buf[i + k];
        const std::complex<double> v = buf[i + k + len / 2] * w;
        buf[i + k] = u + v;
        buf[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

Eigen::VectorXd make_window(WindowKind kind, int n) {
  Eigen::VectorXd w(n);
  switch (kind) {
    case WindowKind::Rect: w.setOnes(); break;
    case WindowKind::Hann:
      for (int i = 0; i < n; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / (n - 1));
      }
      break;
    case WindowKind::Hamming:
      for (int i = 0; i < n; ++i) {
        w[i] = 0.54 - 0.46 * std::cos(2.0 * kPi * i / (n - 1));
      }
      break;
  }
  return w;
}

}  // namespace

Spectrum welch_psd(const Eigen::Ref<const Eigen::VectorXd>& signal, double sample_rate_hz,
                   const WelchParams& params) {
  if (sample_rate_hz <= 0.0) fail("InvalidParams", "welch_psd: sample rate must be positive");
  if (params.segment_len < 16) fail("InvalidParams", "welch_psd: segment_len must be >= 16");
  if (!(params.overlap >= 0.0 && params.overlap < 1.0)) {
    fail("InvalidParams", "welch_psd: overlap must be in [0, 1)");
  }
  if (!signal.allFinite()) fail("InvalidParams", "welch_psd: signal contains NaN or Inf");
  const Eigen::Index n = signal.size();
  const int seg = params.segment_len;
  if (n < seg) {
    fail("SignalTooShort", "welch_psd: need at least " + std::to_string(seg) + " samples, got " +
                               std::to_string(n));
  }

  const int hop = std::max(1, static_cast<int>(std::floor(seg * (1.0 - params.overlap))));
  const std::size_t nfft = next_power_of_two(static_cast<std::size_t>(seg));
  const std::size_t nbins = nfft / 2 + 1;
  const Eigen::VectorXd window = make_window(params.window, seg);
  const double window_energy = window.squaredNorm();

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nbins));
  std::vector<std::complex<double>> buf(nfft);
  int n_segments = 0;
  for (Eigen::Index start = 0; start + seg <= n; start += hop) {
    const auto chunk = signal.segment(start, seg);
    const double mean = params.detrend == DetrendKind::Mean ? chunk.mean() : 0.0;
    for (int i = 0; i < seg; ++i) {
      buf[static_cast<std::size_t>(i)] = std::complex<double>((chunk[i] - mean) * window[i], 0.0);
    }
    std::fill(buf.begin() + seg, buf.end(), std::complex<double>(0.0, 0.0));
    fft_inplace(buf);
    const double scale = 1.0 / (sample_rate_hz * window_energy);
    for (std::size_t k = 0; k < nbins; ++k) {
      double p = std::norm(buf[k]) * scale;
      if (k != 0 && k != nfft / 2) p *= 2.0;  // one-sided
      acc[static_cast<Eigen::Index>(k)] += p;
    }
    ++n_segments;
  }
  acc /= static_cast<double>(n_segments);

  Spectrum out;
  out.resolution = sample_rate_hz / static_cast<double>(nfft);
  out.freqs = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(nbins), 0.0,
                                         out.resolution * static_cast<double>(nbins - 1));
  out.psd = acc.cwiseMax(0.0);
  return out;
}

Eigen::VectorXd band_powers(const Spectrum& spec) {
  if (spec.resolution <= 0.0 || spec.freqs.size() != spec.psd.size() || spec.freqs.size() == 0) {
    fail("InvalidParams", "band_powers: malformed spectrum");
  }
  if (spec.resolution > 0.5) {
    fail("ResolutionTooCoarse", "band_powers: resolution " + format_double(spec.resolution) +
                                    " Hz exceeds 0.5 Hz");
  }
  // The psd is piecewise constant over bins of width `resolution`; integrate
  // the overlap of each bin's support with the band so boundary bins
  // contribute fractionally and every band covers exactly 1 Hz.
  Eigen::VectorXd bands = Eigen::VectorXd::Zero(kBandCount);
  for (Eigen::Index i = 0; i < spec.freqs.size(); ++i) {
    const double bin_lo = spec.freqs[i] - 0.5 * spec.resolution;
    const double bin_hi = spec.freqs[i] + 0.5 * spec.resolution;
    for (int b = 0; b < kBandCount; ++b) {
      const double center = kBandFirstHz + b;
      const double overlap =
          std::min(bin_hi, center + 0.5) - std::max(bin_lo, center - 0.5);
      if (overlap > 0.0) bands[b] += spec.psd[i] * overlap;
    }
  }
  return bands;
}

PitchTrack pitch_track(const Eigen::Ref<const Eigen::VectorXd>& voice, double sample_rate_hz,
                       const PitchParams& params) {
  if (sample_rate_hz <= 0.0) fail("InvalidParams", "pitch_track: sample rate must be positive");
  if (!(params.min_f0_hz > 0.0 && params.max_f0_hz > params.min_f0_hz)) {
    fail("InvalidParams", "pitch_track: need 0 < min_f0 < max_f0");
  }
  if (!(params.frame_len_s > 0.0 && params.hop_s > 0.0)) {
    fail("InvalidParams", "pitch_track: frame_len and hop must be positive");
  }
  if (!voice.allFinite()) fail("InvalidParams", "pitch_track: signal contains NaN or Inf");
  const double duration = static_cast<double>(voice.size()) / sample_rate_hz;
  if (duration < 2.0 * params.frame_len_s) {
    fail("InvalidParams", "pitch_track: signal shorter than two frames");
  }

  const int frame = static_cast<int>(std::lround(params.frame_len_s * sample_rate_hz));
  const int hop = std::max(1, static_cast<int>(std::lround(params.hop_s * sample_rate_hz)));
  const double min_period = 1.0 / params.max_f0_hz;
  const double max_period = 1.0 / params.min_f0_hz;
  int lag_min = static_cast<int>(std::ceil(min_period * sample_rate_hz));
  int lag_max = static_cast<int>(std::floor(max_period * sample_rate_hz));
  lag_min = std::max(lag_min, 1);
  lag_max = std::min(lag_max, frame - 2);
  if (lag_max <= lag_min + 1) {
    fail("InvalidParams", "pitch_track: f0 search range empty at this sample rate");
  }

  PitchTrack track;
  track.frame_hop_s = static_cast<double>(hop) / sample_rate_hz;
  std::vector<double> corr(static_cast<std::size_t>(lag_max) + 2, 0.0);

  for (Eigen::Index start = 0; start + frame <= voice.size(); start += hop) {
    Eigen::VectorXd x = voice.segment(start, frame);
    x.array() -= x.mean();

    // Normalized cross-correlation r(tau) over the in-frame overlap; compute
    // one lag past lag_max so the parabola has a right neighbor.
    const int hi = std::min(lag_max + 1, frame - 1);
    for (int tau = lag_min - 1; tau <= hi; ++tau) {
      if (tau < 1) continue;
      const int m = frame - tau;
      const double num = x.head(m).dot(x.tail(m));
      const double e1 = x.head(m).squaredNorm();
      const double e2 = x.tail(m).squaredNorm();
      const double denom = std::sqrt(e1 * e2);
      corr[static_cast<std::size_t>(tau)] = denom > 0.0 ? num / denom : 0.0;
    }

    int global_best = lag_min;
    for (int tau = lag_min; tau <= lag_max; ++tau) {
      if (corr[static_cast<std::size_t>(tau)] > corr[static_cast<std::size_t>(global_best)]) {
        global_best = tau;
      }
    }
    if (corr[static_cast<std::size_t>(global_best)] < params.voicing_threshold) continue;

    // A periodic source correlates almost equally at every multiple of its
    // period; take the smallest-lag local maximum near the global one so
    // frames cannot flip octaves.
    int best = global_best;
    const double floor = std::max(params.voicing_threshold,
                                  0.93 * corr[static_cast<std::size_t>(global_best)]);
    for (int tau = lag_min; tau < global_best; ++tau) {
      const double r = corr[static_cast<std::size_t>(tau)];
      if (r >= floor && r >= corr[static_cast<std::size_t>(tau - 1)] &&
          r >= corr[static_cast<std::size_t>(tau + 1)]) {
        best = tau;
        break;
      }
    }

    double refined = static_cast<double>(best);
    if (best >= 1 && best + 1 <= hi) {
      const double ym = corr[static_cast<std::size_t>(best - 1)];
      const double y0 = corr[static_cast<std::size_t>(best)];
      const double yp = corr[static_cast<std::size_t>(best + 1)];
      const double denom = ym - 2.0 * y0 + yp;
      if (std::abs(denom) > 1e-30) {
        double delta = 0.5 * (ym - yp) / denom;
        delta = std::clamp(delta, -0.5, 0.5);
        refined += delta;
      }
    }
    double period = refined / sample_rate_hz;
    period = std::clamp(period, min_period, max_period);
    track.periods.push_back(period);
  }

  if (track.periods.size() < 3) {
    fail("NoVoicedFrames", "pitch_track: fewer than 3 voiced frames");
  }
  return track;
}

double local_jitter(const std::vector<double>& periods) {
  if (periods.size() < 3) fail("TooFewPeriods", "local_jitter: need at least 3 periods");
  double abs_diff = 0.0;
  for (std::size_t i = 1; i < periods.size(); ++i) {
    abs_diff += std::abs(periods[i] - periods[i - 1]);
  }
  abs_diff /= static_cast<double>(periods.size() - 1);
  const double mean_period =
      std::accumulate(periods.begin(), periods.end(), 0.0) / static_cast<double>(periods.size());
  if (mean_period <= 0.0) fail("TooFewPeriods", "local_jitter: non-positive mean period");
  return abs_diff / mean_period;
}

double local_jitter(const PitchTrack& track) { return local_jitter(track.periods); }

TapSegmentStats tap_segment_stats(const TapRecord& taps, int n_segments) {
  if (n_segments < 1) fail("InvalidParams", "tap_segment_stats: n_segments must be >= 1");
  if (taps.duration_s <= 0.0) fail("InvalidParams", "tap_segment_stats: duration must be positive");

  TapSegmentStats stats;
  stats.counts.assign(static_cast<std::size_t>(n_segments), 0);
  stats.avg_speeds.assign(static_cast<std::size_t>(n_segments), 0.0);
  const double seg_len = taps.duration_s / static_cast<double>(n_segments);

  auto segment_of = [&](double t) {
    int k = static_cast<int>(std::floor(t / seg_len));
    return std::clamp(k, 0, n_segments - 1);
  };

  std::vector<double> speed_sum(static_cast<std::size_t>(n_segments), 0.0);
  std::vector<int> speed_n(static_cast<std::size_t>(n_segments), 0);
  for (std::size_t i = 0; i < taps.events.size(); ++i) {
    const TapEvent& e = taps.events[i];
    if (e.t < 0.0 || e.t >= taps.duration_s) continue;
    const int k = segment_of(e.t);
    ++stats.counts[static_cast<std::size_t>(k)];
    if (i > 0) {
      const TapEvent& p = taps.events[i - 1];
      if (p.t >= 0.0 && segment_of(p.t) == k && e.t > p.t) {
        const double dist = std::hypot(e.x - p.x, e.y - p.y);
        speed_sum[static_cast<std::size_t>(k)] += dist / (e.t - p.t);
        ++speed_n[static_cast<std::size_t>(k)];
      }
    }
  }
  for (int k = 0; k < n_segments; ++k) {
    if (speed_n[static_cast<std::size_t>(k)] > 0) {
      stats.avg_speeds[static_cast<std::size_t>(k)] =
          speed_sum[static_cast<std::size_t>(k)] / speed_n[static_cast<std::size_t>(k)];
    }
  }
  return stats;
}

Eigen::VectorXd resample_linear(const Eigen::Ref<const Eigen::VectorXd>& signal, double from_hz,
                                double to_hz) {
  if (from_hz <= 0.0 || to_hz <= 0.0) fail("InvalidParams", "resample_linear: rates must be positive");
  if (signal.size() < 2) fail("InvalidParams", "resample_linear: need at least 2 samples");
  if (from_hz == to_hz) return signal;

  const double in_duration = static_cast<double>(signal.size() - 1) / from_hz;
  const Eigen::Index n_out = static_cast<Eigen::Index>(std::floor(in_duration * to_hz)) + 1;
  Eigen::VectorXd out(n_out);
  for (Eigen::Index i = 0; i < n_out; ++i) {
    const double t = static_cast<double>(i) / to_hz;
    const double pos = t * from_hz;
    const Eigen::Index lo = std::min<Eigen::Index>(static_cast<Eigen::Index>(pos), signal.size() - 2);
    const double frac = pos - static_cast<double>(lo);
    out[i] = signal[lo] * (1.0 - frac) + signal[lo + 1] * frac;
  }
  return out;
}

}  // namespace parkipipe
