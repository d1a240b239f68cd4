#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace accentid::dsp {

struct AudioClip {
  std::vector<double> samples;  // mono, in [-1, 1]
  int sample_rate = 16000;

  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

enum class FeatureGroup : int { energy_amplitude, spectral, mfcc, auditory_spectrum, voicing, formant };

inline constexpr int kNumGroups = 6;
std::string_view group_name(FeatureGroup g);
FeatureGroup parse_group(std::string_view name);  // throws ConfigError

struct DspConfig {
  int target_rate = 16000;
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  int fft_size = 512;
  int mel_bands = 26;
  int mfcc_count = 13;
  int delta_window = 2;
  int lpc_order = 16;
  int formant_count = 4;
  double f0_min_hz = 60.0;
  double f0_max_hz = 400.0;
  double voicing_threshold = 0.55;
  double energy_floor = -50.0;  // nats
  double rolloff_fraction = 0.85;
  double pre_emphasis = 0.97;
  double formant_max_bandwidth_hz = 400.0;
  double formant_min_hz = 90.0;
  double formant_max_hz = 5500.0;

  int frame_samples(int sample_rate) const;
  int hop_samples(int sample_rate) const;
  /// Throws ConfigError on inconsistent settings.
  void validate(int sample_rate) const;
};

// ---------------------------------------------------------------------------
// WAV input/output

enum class WavEncoding { pcm8, pcm16, pcm24, float32 };

/// Decodes RIFF/WAVE, downmixes by channel average and resamples to
/// `target_rate` with a windowed-sinc interpolator.
AudioClip load_audio(const std::string& path, int target_rate = 16000);
AudioClip decode_wav(std::string_view bytes, const std::string& label, int target_rate = 16000);

/// Interleaved samples in [-1, 1]; used by the tools and tests to produce inputs.
std::string encode_wav(const std::vector<double>& interleaved, int sample_rate, int channels,
                       WavEncoding encoding);

std::vector<double> resample(const std::vector<double>& x, int from_rate, int to_rate);

// ---------------------------------------------------------------------------
// Framing and low-level descriptors

struct FrameSequence {
  Eigen::MatrixXd frames;  // num_frames x frame_len, Hamming-windowed
  Eigen::MatrixXd raw;     // same frames before windowing
  int frame_len = 0;
  int hop = 0;
  int sample_rate = 16000;

  Eigen::Index num_frames() const { return frames.rows(); }
};

std::vector<double> hamming_window(int n);

FrameSequence frame_signal(const AudioClip& clip, const DspConfig& config);

struct LldTrack {
  std::string name;
  FeatureGroup group = FeatureGroup::energy_amplitude;
  std::vector<double> values;
  /// Empty when every frame is valid; otherwise one flag per frame. Masked
  /// tracks get functionals over valid frames plus a valid-fraction feature.
  std::vector<std::uint8_t> valid;

  bool masked() const { return !valid.empty(); }
};

/// Power spectrum per frame, fft_size/2 + 1 bins.
Eigen::MatrixXd power_spectrum(const FrameSequence& frames, const DspConfig& config);
/// Triangular HTK-mel filterbank, mel_bands x (fft_size/2 + 1).
Eigen::MatrixXd mel_filterbank(const DspConfig& config, int sample_rate);

std::vector<LldTrack> lld_energy_spectral(const FrameSequence& frames, const DspConfig& config);
std::vector<LldTrack> lld_mfcc(const FrameSequence& frames, const DspConfig& config);
std::vector<LldTrack> lld_voicing(const FrameSequence& frames, const DspConfig& config);
std::vector<LldTrack> lld_formants(const FrameSequence& frames, const DspConfig& config);

/// Regression deltas over +-window frames, edges replicated.
std::vector<double> delta(const std::vector<double>& track, int window);

// LPC helpers, exposed for tests.
std::vector<double> autocorrelation(const std::vector<double>& x, int max_lag);
/// Levinson-Durbin recursion; returns a[0..order] with a[0] = 1 for
/// A(z) = 1 + sum_k a[k] z^-k. Empty when the input is degenerate.
std::vector<double> levinson_durbin(const std::vector<double>& r, int order);

struct Formant {
  double frequency_hz;
  double bandwidth_hz;
};
/// Pole frequencies/bandwidths of 1/A(z) passing the config's range and
/// bandwidth limits, ascending by frequency.
std::vector<Formant> formants_from_lpc(const std::vector<double>& a, int sample_rate,
                                       const DspConfig& config);

// ---------------------------------------------------------------------------
// Functionals and the full vector

inline constexpr std::array<std::string_view, 14> kFunctionals = {
    "mean", "stddev", "skewness", "kurtosis", "min", "max", "range",
    "q1", "median", "q3", "iqr", "slope", "offset", "mean_crossing_rate"};

/// The 14 functionals over a sequence; all zeros for an empty sequence.
std::array<double, kFunctionals.size()> compute_functionals(const std::vector<double>& x);

struct FeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<FeatureGroup> groups;

  std::size_t size() const { return values.size(); }
  /// Indices of features tagged with the given group.
  std::vector<std::size_t> group_indices(FeatureGroup g) const;
};

FeatureVector apply_functionals(const std::vector<LldTrack>& tracks, const DspConfig& config);

FeatureVector extract_audio_features(const AudioClip& clip, const DspConfig& config);

/// Subset of a vector restricted to one group, preserving order.
FeatureVector subset(const FeatureVector& v, FeatureGroup g);

}  // namespace accentid::dsp
