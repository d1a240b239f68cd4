#include "accentid/dsp.hpp"

#include <fftw3.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>

#include "accentid/common.hpp"

namespace accentid::dsp {

namespace {

constexpr std::array<std::string_view, kNumGroups> kGroupNames = {
    "energy_amplitude", "spectral", "mfcc", "auditory_spectrum", "voicing", "formant"};

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::string indexed(std::string_view stem, int i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*s%02d", static_cast<int>(stem.size()), stem.data(), i);
  return buf;
}

// FFTW plan creation is not thread-safe; execution with new arrays is.
class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard lock(plan_mutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(plan_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  // Writes |X_k|^2 for k = 0..n/2 of the zero-padded input.
  template <class Row, class Out>
  void power(const Row& frame, Out&& dst) {
    std::fill(in_, in_ + n_, 0.0);
    for (Eigen::Index i = 0; i < frame.size(); ++i) in_[i] = frame(i);
    fftw_execute(plan_);
    for (int k = 0; k <= n_ / 2; ++k) dst(k) = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
  }

 private:
  static std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
  }
  int n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

double floored_log(double v, double floor) {
  if (!(v > 0.0)) return floor;
  return std::max(std::log(v), floor);
}

LldTrack make_track(std::string name, FeatureGroup group, Eigen::Index n) {
  LldTrack t;
  t.name = std::move(name);
  t.group = group;
  t.values.assign(static_cast<std::size_t>(n), 0.0);
  return t;
}

double quantile_sorted(const std::vector<double>& s, double p) {
  const double h = (static_cast<double>(s.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

}  // namespace

std::string_view group_name(FeatureGroup g) { return kGroupNames[static_cast<int>(g)]; }

FeatureGroup parse_group(std::string_view name) {
  for (int i = 0; i < kNumGroups; ++i)
    if (kGroupNames[i] == name) return static_cast<FeatureGroup>(i);
  throw ConfigError("unknown feature group '" + std::string(name) + "'");
}

int DspConfig::frame_samples(int sample_rate) const {
  return static_cast<int>(std::lround(frame_ms * sample_rate / 1000.0));
}

int DspConfig::hop_samples(int sample_rate) const {
  return static_cast<int>(std::lround(hop_ms * sample_rate / 1000.0));
}

void DspConfig::validate(int sample_rate) const {
  const int frame = frame_samples(sample_rate);
  if (frame < 2 || hop_samples(sample_rate) < 1) throw ConfigError("frame and hop must be positive");
  if (fft_size < frame) throw ConfigError("fft_size must be >= frame length in samples");
  if (mel_bands < 1 || mfcc_count < 1 || mfcc_count > mel_bands)
    throw ConfigError("mfcc_count must be in [1, mel_bands]");
  if (lpc_order < 2 * formant_count + 2) throw ConfigError("lpc_order must be >= 2*formant_count + 2");
  if (!(f0_min_hz > 0.0 && f0_min_hz < f0_max_hz && f0_max_hz < sample_rate / 2.0))
    throw ConfigError("f0 range must satisfy 0 < min < max < Nyquist");
  const int max_lag = static_cast<int>(std::floor(sample_rate / f0_min_hz));
  if (max_lag >= frame) throw ConfigError("frame too short for the lowest F0");
  if (delta_window < 1) throw ConfigError("delta_window must be >= 1");
  if (!(rolloff_fraction > 0.0 && rolloff_fraction <= 1.0))
    throw ConfigError("rolloff_fraction must be in (0, 1]");
}

std::vector<double> hamming_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
  return w;
}

FrameSequence frame_signal(const AudioClip& clip, const DspConfig& config) {
  config.validate(clip.sample_rate);
  const int len = config.frame_samples(clip.sample_rate);
  const int hop = config.hop_samples(clip.sample_rate);
  const auto total = static_cast<long long>(clip.samples.size());
  if (total < len)
    throw DataError("clip of " + std::to_string(total) + " samples is shorter than one frame (" +
                    std::to_string(len) + ")");
  const auto count = 1 + (total - len) / hop;
  const auto window = hamming_window(len);

  FrameSequence seq;
  seq.frame_len = len;
  seq.hop = hop;
  seq.sample_rate = clip.sample_rate;
  seq.raw.resize(count, len);
  seq.frames.resize(count, len);
  for (long long f = 0; f < count; ++f) {
    for (int i = 0; i < len; ++i) {
      const double s = clip.samples[f * hop + i];
      seq.raw(f, i) = s;
      seq.frames(f, i) = s * window[i];
    }
  }
  return seq;
}

Eigen::MatrixXd power_spectrum(const FrameSequence& frames, const DspConfig& config) {
  const int bins = config.fft_size / 2 + 1;
  Eigen::MatrixXd power(frames.num_frames(), bins);
  RealFft fft(config.fft_size);
  for (Eigen::Index f = 0; f < frames.num_frames(); ++f)
    fft.power(frames.frames.row(f), power.row(f));
  return power;
}

Eigen::MatrixXd mel_filterbank(const DspConfig& config, int sample_rate) {
  const int bins = config.fft_size / 2 + 1;
  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(config.mel_bands + 2);
  for (int i = 0; i < config.mel_bands + 2; ++i)
    edges[i] = mel_to_hz(top * i / (config.mel_bands + 1));
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(config.mel_bands, bins);
  for (int b = 0; b < config.mel_bands; ++b) {
    const double lo = edges[b];
    const double mid = edges[b + 1];
    const double hi = edges[b + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / config.fft_size;
      if (f > lo && f <= mid) {
        fb(b, k) = (f - lo) / (mid - lo);
      } else if (f > mid && f < hi) {
        fb(b, k) = (hi - f) / (hi - mid);
      }
    }
  }
  return fb;
}

std::vector<LldTrack> lld_energy_spectral(const FrameSequence& frames, const DspConfig& config) {
  const Eigen::Index n = frames.num_frames();
  const int len = frames.frame_len;
  const int bins = config.fft_size / 2 + 1;
  const double bin_hz = static_cast<double>(frames.sample_rate) / config.fft_size;

  auto rms = make_track("rms", FeatureGroup::energy_amplitude, n);
  auto log_energy = make_track("log_energy", FeatureGroup::energy_amplitude, n);
  auto zcr = make_track("zcr", FeatureGroup::energy_amplitude, n);
  auto centroid = make_track("spectral_centroid", FeatureGroup::spectral, n);
  auto rolloff = make_track("spectral_rolloff", FeatureGroup::spectral, n);
  auto flux = make_track("spectral_flux", FeatureGroup::spectral, n);
  std::vector<LldTrack> mel;
  for (int b = 0; b < config.mel_bands; ++b)
    mel.push_back(make_track(indexed("audspec_mel", b), FeatureGroup::auditory_spectrum, n));

  const Eigen::MatrixXd power = power_spectrum(frames, config);
  const Eigen::MatrixXd fb = mel_filterbank(config, frames.sample_rate);
  Eigen::VectorXd prev_mag = Eigen::VectorXd::Zero(bins);

  for (Eigen::Index f = 0; f < n; ++f) {
    const auto raw = frames.raw.row(f);
    const double mean_sq = raw.squaredNorm() / len;
    rms.values[f] = std::sqrt(mean_sq);
    log_energy.values[f] = floored_log(mean_sq, config.energy_floor);
    int crossings = 0;
    for (int i = 1; i < len; ++i) crossings += (raw(i) >= 0.0) != (raw(i - 1) >= 0.0);
    zcr.values[f] = static_cast<double>(crossings) / (len - 1);

    const auto p = power.row(f);
    const double total = p.sum();
    if (total > 0.0) {
      double weighted = 0.0;
      for (int k = 0; k < bins; ++k) weighted += k * bin_hz * p(k);
      centroid.values[f] = weighted / total;
      double cum = 0.0;
      int k = 0;
      for (; k < bins - 1; ++k) {
        cum += p(k);
        if (cum >= config.rolloff_fraction * total) break;
      }
      rolloff.values[f] = k * bin_hz;
    }
    Eigen::VectorXd mag = p.transpose().cwiseSqrt();
    const double norm = mag.norm();
    if (norm > 0.0) mag /= norm;
    flux.values[f] = f == 0 ? 0.0 : (mag - prev_mag).norm();
    prev_mag = mag;

    const Eigen::VectorXd energies = fb * p.transpose();
    for (int b = 0; b < config.mel_bands; ++b)
      mel[b].values[f] = floored_log(energies(b), config.energy_floor);
  }

  std::vector<LldTrack> out = {std::move(rms), std::move(log_energy), std::move(zcr),
                               std::move(centroid), std::move(rolloff), std::move(flux)};
  for (auto& t : mel) out.push_back(std::move(t));
  return out;
}

std::vector<double> delta(const std::vector<double>& track, int window) {
  const auto n = static_cast<long long>(track.size());
  double denom = 0.0;
  for (int k = 1; k <= window; ++k) denom += 2.0 * k * k;
  std::vector<double> d(track.size(), 0.0);
  auto at = [&](long long i) { return track[std::clamp<long long>(i, 0, n - 1)]; };
  for (long long t = 0; t < n; ++t) {
    double acc = 0.0;
    for (int k = 1; k <= window; ++k) acc += k * (at(t + k) - at(t - k));
    d[t] = acc / denom;
  }
  return d;
}

std::vector<LldTrack> lld_mfcc(const FrameSequence& frames, const DspConfig& config) {
  const Eigen::Index n = frames.num_frames();
  const int bands = config.mel_bands;
  const Eigen::MatrixXd power = power_spectrum(frames, config);
  const Eigen::MatrixXd fb = mel_filterbank(config, frames.sample_rate);

  // Orthonormal DCT-II basis.
  Eigen::MatrixXd dct(config.mfcc_count, bands);
  for (int k = 0; k < config.mfcc_count; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / bands);
    for (int m = 0; m < bands; ++m)
      dct(k, m) = scale * std::cos(std::numbers::pi * k * (2.0 * m + 1.0) / (2.0 * bands));
  }

  std::vector<LldTrack> base;
  for (int k = 0; k < config.mfcc_count; ++k)
    base.push_back(make_track(indexed("mfcc", k), FeatureGroup::mfcc, n));
  Eigen::VectorXd log_mel(bands);
  for (Eigen::Index f = 0; f < n; ++f) {
    const Eigen::VectorXd energies = fb * power.row(f).transpose();
    for (int b = 0; b < bands; ++b) log_mel(b) = floored_log(energies(b), config.energy_floor);
    const Eigen::VectorXd c = dct * log_mel;
    for (int k = 0; k < config.mfcc_count; ++k) base[k].values[f] = c(k);
  }

  std::vector<LldTrack> out = base;
  for (const auto& t : base) {
    LldTrack d = t;
    d.name += "_delta";
    d.values = delta(t.values, config.delta_window);
    out.push_back(std::move(d));
  }
  for (int k = 0; k < config.mfcc_count; ++k) {
    LldTrack dd = base[k];
    dd.name += "_delta2";
    dd.values = delta(out[config.mfcc_count + k].values, config.delta_window);
    out.push_back(std::move(dd));
  }
  return out;
}

std::vector<LldTrack> lld_voicing(const FrameSequence& frames, const DspConfig& config) {
  const Eigen::Index n = frames.num_frames();
  const int len = frames.frame_len;
  const int sr = frames.sample_rate;
  const int min_lag = std::max(2, static_cast<int>(std::ceil(sr / config.f0_max_hz)));
  const int max_lag = std::min(len - 2, static_cast<int>(std::floor(sr / config.f0_min_hz)));

  auto f0 = make_track("f0", FeatureGroup::voicing, n);
  auto prob = make_track("voicing_prob", FeatureGroup::voicing, n);
  auto jitter = make_track("jitter", FeatureGroup::voicing, n);
  auto shimmer = make_track("shimmer", FeatureGroup::voicing, n);
  auto hnr = make_track("hnr", FeatureGroup::voicing, n);
  for (auto* t : {&f0, &jitter, &shimmer, &hnr}) t->valid.assign(static_cast<std::size_t>(n), 0);

  std::vector<double> x(len);
  std::vector<double> nccf(max_lag + 2, 0.0);
  std::vector<double> prefix(len + 1);
  std::vector<double> period(static_cast<std::size_t>(n), 0.0);
  std::vector<double> amplitude(static_cast<std::size_t>(n), 0.0);

  for (Eigen::Index f = 0; f < n; ++f) {
    const auto raw = frames.raw.row(f);
    const double mean = raw.mean();
    for (int i = 0; i < len; ++i) x[i] = raw(i) - mean;
    prefix[0] = 0.0;
    for (int i = 0; i < len; ++i) prefix[i + 1] = prefix[i] + x[i] * x[i];
    amplitude[f] = std::sqrt(prefix[len] / len);
    if (floored_log(prefix[len] / len, config.energy_floor) <= config.energy_floor) continue;

    // Normalized cross-correlation between the frame head and its lagged tail.
    double best = 0.0;
    for (int lag = min_lag - 1; lag <= max_lag + 1 && lag < len; ++lag) {
      double num = 0.0;
      for (int i = 0; i + lag < len; ++i) num += x[i] * x[i + lag];
      const double e0 = prefix[len - lag];
      const double e1 = prefix[len] - prefix[lag];
      const double den = std::sqrt(e0 * e1);
      nccf[lag] = den > 0.0 ? num / den : 0.0;
      if (lag >= min_lag && lag <= max_lag) best = std::max(best, nccf[lag]);
    }
    if (best <= 0.0) continue;

    // Smallest-lag local peak close to the global maximum avoids octave drops.
    int chosen = -1;
    for (int lag = min_lag; lag <= max_lag; ++lag) {
      if (nccf[lag] >= 0.9 * best && nccf[lag] >= nccf[lag - 1] && nccf[lag] >= nccf[lag + 1]) {
        chosen = lag;
        break;
      }
    }
    if (chosen < 0)
      chosen = static_cast<int>(std::max_element(nccf.begin() + min_lag, nccf.begin() + max_lag + 1) -
                                nccf.begin());
    double refined = chosen;
    const double a = nccf[chosen - 1];
    const double b = nccf[chosen];
    const double c = nccf[chosen + 1];
    const double curvature = a - 2.0 * b + c;
    if (curvature < 0.0) refined += std::clamp(0.5 * (a - c) / curvature, -0.5, 0.5);

    const double r = std::clamp(b, 0.0, 1.0);
    prob.values[f] = r;
    if (r < config.voicing_threshold) continue;
    period[f] = refined / sr;
    f0.values[f] = sr / refined;
    f0.valid[f] = 1;
    const double rc = std::clamp(r, 1e-4, 1.0 - 1e-4);
    hnr.values[f] = 10.0 * std::log10(rc / (1.0 - rc));
    hnr.valid[f] = 1;
  }

  for (Eigen::Index f = 1; f < n; ++f) {
    if (!f0.valid[f] || !f0.valid[f - 1]) continue;
    const double tm = 0.5 * (period[f] + period[f - 1]);
    jitter.values[f] = std::abs(period[f] - period[f - 1]) / tm;
    jitter.valid[f] = 1;
    const double am = 0.5 * (amplitude[f] + amplitude[f - 1]);
    if (am > 0.0) {
      shimmer.values[f] = std::abs(amplitude[f] - amplitude[f - 1]) / am;
      shimmer.valid[f] = 1;
    }
  }
  return {std::move(f0), std::move(prob), std::move(jitter), std::move(shimmer), std::move(hnr)};
}

std::vector<double> autocorrelation(const std::vector<double>& x, int max_lag) {
  std::vector<double> r(max_lag + 1, 0.0);
  const auto n = static_cast<int>(x.size());
  for (int lag = 0; lag <= max_lag && lag < n; ++lag)
    for (int i = 0; i + lag < n; ++i) r[lag] += x[i] * x[i + lag];
  return r;
}

std::vector<double> levinson_durbin(const std::vector<double>& r, int order) {
  if (static_cast<int>(r.size()) <= order || !(r[0] > 0.0)) return {};
  std::vector<double> a(order + 1, 0.0);
  std::vector<double> tmp(order + 1, 0.0);
  a[0] = 1.0;
  double err = r[0];
  for (int i = 1; i <= order; ++i) {
    double acc = r[i];
    for (int j = 1; j < i; ++j) acc += a[j] * r[i - j];
    const double k = -acc / err;
    if (!std::isfinite(k) || std::abs(k) >= 1.0) return {};
    tmp = a;
    for (int j = 1; j < i; ++j) a[j] = tmp[j] + k * tmp[i - j];
    a[i] = k;
    err *= 1.0 - k * k;
    if (!(err > 0.0)) return {};
  }
  return a;
}

std::vector<Formant> formants_from_lpc(const std::vector<double>& a, int sample_rate,
                                       const DspConfig& config) {
  std::vector<Formant> out;
  const int p = static_cast<int>(a.size()) - 1;
  if (p < 1) return out;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (int j = 0; j < p; ++j) companion(0, j) = -a[j + 1];
  for (int i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  if (solver.info() != Eigen::Success) return out;
  for (const std::complex<double>& z : solver.eigenvalues()) {
    if (z.imag() <= 0.0) continue;
    const double radius = std::abs(z);
    if (!(radius > 0.0)) continue;
    const double freq = std::arg(z) * sample_rate / (2.0 * std::numbers::pi);
    const double bw = -std::log(radius) * sample_rate / std::numbers::pi;
    if (bw < config.formant_max_bandwidth_hz && freq >= config.formant_min_hz &&
        freq <= config.formant_max_hz)
      out.push_back({freq, bw});
  }
  std::sort(out.begin(), out.end(),
            [](const Formant& l, const Formant& r) { return l.frequency_hz < r.frequency_hz; });
  return out;
}

std::vector<LldTrack> lld_formants(const FrameSequence& frames, const DspConfig& config) {
  const Eigen::Index n = frames.num_frames();
  const int len = frames.frame_len;
  const auto window = hamming_window(len);

  std::vector<LldTrack> freq;
  std::vector<LldTrack> bw;
  for (int k = 1; k <= config.formant_count; ++k) {
    freq.push_back(make_track("f" + std::to_string(k) + "_freq", FeatureGroup::formant, n));
    bw.push_back(make_track("f" + std::to_string(k) + "_bw", FeatureGroup::formant, n));
    freq.back().valid.assign(static_cast<std::size_t>(n), 0);
    bw.back().valid.assign(static_cast<std::size_t>(n), 0);
  }

  std::vector<double> y(len);
  for (Eigen::Index f = 0; f < n; ++f) {
    const auto raw = frames.raw.row(f);
    y[0] = raw(0) * window[0];
    for (int i = 1; i < len; ++i) y[i] = (raw(i) - config.pre_emphasis * raw(i - 1)) * window[i];
    auto r = autocorrelation(y, config.lpc_order);
    if (!(r[0] > 0.0) || floored_log(r[0] / len, config.energy_floor) <= config.energy_floor) continue;
    r[0] *= 1.0 + 1e-9;  // white-noise correction keeps the recursion stable
    const auto a = levinson_durbin(r, config.lpc_order);
    if (a.empty()) continue;
    const auto found = formants_from_lpc(a, frames.sample_rate, config);
    for (int k = 0; k < config.formant_count && k < static_cast<int>(found.size()); ++k) {
      freq[k].values[f] = found[k].frequency_hz;
      bw[k].values[f] = found[k].bandwidth_hz;
      freq[k].valid[f] = 1;
      bw[k].valid[f] = 1;
    }
  }

  std::vector<LldTrack> out;
  for (int k = 0; k < config.formant_count; ++k) {
    out.push_back(std::move(freq[k]));
    out.push_back(std::move(bw[k]));
  }
  return out;
}

std::array<double, kFunctionals.size()> compute_functionals(const std::vector<double>& x) {
  std::array<double, kFunctionals.size()> out{};
  const std::size_t n = x.size();
  if (n == 0) return out;
  const double dn = static_cast<double>(n);

  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / dn;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= dn;
  m3 /= dn;
  m4 /= dn;
  const double sd = std::sqrt(m2);
  const bool flat = !(sd > 1e-12 * std::max(1.0, std::abs(mean)));

  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  const double q1 = quantile_sorted(sorted, 0.25);
  const double q2 = quantile_sorted(sorted, 0.5);
  const double q3 = quantile_sorted(sorted, 0.75);

  // Least-squares line over frame index 0..n-1.
  double slope = 0.0;
  double offset = mean;
  if (n > 1) {
    const double tmean = (dn - 1.0) / 2.0;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dt = static_cast<double>(i) - tmean;
      sxy += dt * (x[i] - mean);
      sxx += dt * dt;
    }
    slope = sxy / sxx;
    offset = mean - slope * tmean;
  }

  double mcr = 0.0;
  if (n > 1) {
    std::size_t changes = 0;
    for (std::size_t i = 1; i < n; ++i) changes += (x[i] >= mean) != (x[i - 1] >= mean);
    mcr = static_cast<double>(changes) / (dn - 1.0);
  }

  out = {mean,
         sd,
         flat ? 0.0 : m3 / (sd * sd * sd),
         flat ? 0.0 : m4 / (m2 * m2),
         sorted.front(),
         sorted.back(),
         sorted.back() - sorted.front(),
         q1,
         q2,
         q3,
         q3 - q1,
         slope,
         offset,
         mcr};
  return out;
}

std::vector<std::size_t> FeatureVector::group_indices(FeatureGroup g) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < groups.size(); ++i)
    if (groups[i] == g) idx.push_back(i);
  return idx;
}

FeatureVector apply_functionals(const std::vector<LldTrack>& tracks, const DspConfig&) {
  FeatureVector out;
  if (tracks.empty()) return out;
  const std::size_t frames = tracks.front().values.size();
  std::vector<double> buf;
  for (const auto& t : tracks) {
    if (t.values.size() != frames)
      throw DataError("track " + t.name + " has " + std::to_string(t.values.size()) +
                      " frames, expected " + std::to_string(frames));
    if (t.masked() && t.valid.size() != frames)
      throw DataError("track " + t.name + " validity mask length mismatch");

    buf.clear();
    if (t.masked()) {
      for (std::size_t i = 0; i < frames; ++i)
        if (t.valid[i]) buf.push_back(t.values[i]);
    } else {
      buf = t.values;
    }
    const auto stats = compute_functionals(buf);
    for (std::size_t k = 0; k < kFunctionals.size(); ++k) {
      out.names.push_back(t.name + "__" + std::string(kFunctionals[k]));
      out.values.push_back(std::isfinite(stats[k]) ? stats[k] : 0.0);
      out.groups.push_back(t.group);
    }
    if (t.masked()) {
      out.names.push_back(t.name + "__valid_fraction");
      out.values.push_back(frames == 0 ? 0.0 : static_cast<double>(buf.size()) / frames);
      out.groups.push_back(t.group);
    }
  }
  return out;
}

FeatureVector extract_audio_features(const AudioClip& clip, const DspConfig& config) {
  if (clip.samples.empty()) throw DataError("zero-length audio");
  if (clip.sample_rate <= 0) throw DataError("invalid sample rate");
  const FrameSequence frames = frame_signal(clip, config);
  std::vector<LldTrack> tracks = lld_energy_spectral(frames, config);
  for (auto* stage : {&lld_mfcc, &lld_voicing, &lld_formants}) {
    auto more = (*stage)(frames, config);
    std::move(more.begin(), more.end(), std::back_inserter(tracks));
  }
  return apply_functionals(tracks, config);
}

FeatureVector subset(const FeatureVector& v, FeatureGroup g) {
  FeatureVector out;
  for (std::size_t i : v.group_indices(g)) {
    out.names.push_back(v.names[i]);
    out.values.push_back(v.values[i]);
    out.groups.push_back(g);
  }
  return out;
}

}  // namespace accentid::dsp
