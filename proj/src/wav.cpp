#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>

#include "accentid/common.hpp"
#include "accentid/dsp.hpp"

namespace accentid::dsp {

namespace {

std::uint32_t le32(std::string_view b, std::size_t at) {
  return static_cast<std::uint8_t>(b[at]) | (static_cast<std::uint8_t>(b[at + 1]) << 8) |
         (static_cast<std::uint8_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(static_cast<std::uint8_t>(b[at + 3])) << 24);
}

std::uint16_t le16(std::string_view b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<std::uint8_t>(b[at]) |
                                    (static_cast<std::uint8_t>(b[at + 1]) << 8));
}

void put16(std::string& out, std::uint16_t v) {
  out += static_cast<char>(v & 0xff);
  out += static_cast<char>(v >> 8);
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

constexpr int kSincZeroCrossings = 16;

double blackman(double x) {  // x in [-1, 1]
  const double t = std::numbers::pi * (x + 1.0);
  return 0.42 - 0.5 * std::cos(t) + 0.08 * std::cos(2.0 * t);
}

}  // namespace

std::vector<double> resample(const std::vector<double>& x, int from_rate, int to_rate) {
  if (from_rate == to_rate || x.empty()) return x;
  const double ratio = static_cast<double>(to_rate) / from_rate;
  const auto out_len = static_cast<std::size_t>(std::llround(x.size() * ratio));
  // Cutoff relative to the input Nyquist; slightly below the lower rate's Nyquist.
  const double cutoff = std::min(1.0, ratio) * 0.95;
  const double half_width = kSincZeroCrossings / cutoff;
  const auto n = static_cast<long long>(x.size());
  std::vector<double> y(out_len);
  for (std::size_t m = 0; m < out_len; ++m) {
    const double t = static_cast<double>(m) / ratio;
    const auto lo = std::max<long long>(0, static_cast<long long>(std::ceil(t - half_width)));
    const auto hi = std::min<long long>(n - 1, static_cast<long long>(std::floor(t + half_width)));
    double acc = 0.0;
    double norm = 0.0;
    for (long long k = lo; k <= hi; ++k) {
      const double d = t - static_cast<double>(k);
      const double arg = cutoff * d;
      const double sinc = arg == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
      const double h = sinc * blackman(d / half_width);
      acc += h * x[k];
      norm += h;
    }
    y[m] = norm != 0.0 ? acc / norm : 0.0;
  }
  return y;
}

AudioClip decode_wav(std::string_view bytes, const std::string& label, int target_rate) {
  auto fail = [&](const std::string& why) { return DataError(why + ": " + label); };
  if (bytes.size() < 12 || bytes.substr(0, 4) != "RIFF" || bytes.substr(8, 4) != "WAVE")
    throw fail("not a RIFF/WAVE file");

  int format = -1;
  int channels = 0;
  int rate = 0;
  int bits = 0;
  std::string_view data;
  bool have_data = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const auto id = bytes.substr(pos, 4);
    const std::size_t size = le32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min(size, bytes.size() - body);
    if (id == "fmt ") {
      if (avail < 16) throw fail("truncated fmt chunk");
      format = le16(bytes, body);
      channels = le16(bytes, body + 2);
      rate = static_cast<int>(le32(bytes, body + 4));
      bits = le16(bytes, body + 14);
      if (format == 0xFFFE) {
        if (avail < 26) throw fail("truncated extensible fmt chunk");
        format = le16(bytes, body + 24);
      }
    } else if (id == "data") {
      data = bytes.substr(body, avail);
      have_data = true;
    }
    pos = body + size + (size & 1);
  }
  if (format < 0) throw fail("missing fmt chunk");
  if (!have_data) throw fail("missing data chunk");
  if (channels <= 0 || rate <= 0) throw fail("invalid channel count or sample rate");

  const bool pcm = format == 1 && (bits == 8 || bits == 16 || bits == 24);
  const bool flt = format == 3 && bits == 32;
  if (!pcm && !flt)
    throw fail("unsupported codec (format " + std::to_string(format) + ", " +
               std::to_string(bits) + " bits)");

  const std::size_t width = static_cast<std::size_t>(bits / 8);
  const std::size_t frame_bytes = width * channels;
  const std::size_t frames = data.size() / frame_bytes;
  if (frames == 0) throw fail("zero-length audio");

  std::vector<double> mono(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      const std::size_t at = f * frame_bytes + c * width;
      double v = 0.0;
      if (flt) {
        float s;
        const std::uint32_t u = le32(data, at);
        std::memcpy(&s, &u, 4);
        v = std::isfinite(s) ? std::clamp(static_cast<double>(s), -1.0, 1.0) : 0.0;
      } else if (bits == 8) {
        v = (static_cast<std::uint8_t>(data[at]) - 128) / 128.0;
      } else if (bits == 16) {
        v = static_cast<std::int16_t>(le16(data, at)) / 32768.0;
      } else {
        std::int32_t s = static_cast<std::uint8_t>(data[at]) |
                         (static_cast<std::uint8_t>(data[at + 1]) << 8) |
                         (static_cast<std::uint8_t>(data[at + 2]) << 16);
        if (s & 0x800000) s -= 0x1000000;
        v = s / 8388608.0;
      }
      acc += v;
    }
    mono[f] = acc / channels;
  }

  AudioClip clip;
  clip.samples = resample(mono, rate, target_rate);
  clip.sample_rate = target_rate;
  for (double& s : clip.samples) s = std::clamp(s, -1.0, 1.0);
  if (clip.samples.empty()) throw fail("zero-length audio");
  return clip;
}

AudioClip load_audio(const std::string& path, int target_rate) {
  if (!std::filesystem::is_regular_file(path)) throw DataError("unreadable audio file: " + path);
  return decode_wav(read_file(path), path, target_rate);
}

std::string encode_wav(const std::vector<double>& interleaved, int sample_rate, int channels,
                       WavEncoding encoding) {
  const int bits = encoding == WavEncoding::pcm8    ? 8
                   : encoding == WavEncoding::pcm16 ? 16
                   : encoding == WavEncoding::pcm24 ? 24
                                                    : 32;
  const std::uint32_t data_size = static_cast<std::uint32_t>(interleaved.size() * (bits / 8));
  std::string out = "RIFF";
  put32(out, 36 + data_size);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, encoding == WavEncoding::float32 ? 3 : 1);
  put16(out, static_cast<std::uint16_t>(channels));
  put32(out, static_cast<std::uint32_t>(sample_rate));
  put32(out, static_cast<std::uint32_t>(sample_rate * channels * (bits / 8)));
  put16(out, static_cast<std::uint16_t>(channels * (bits / 8)));
  put16(out, static_cast<std::uint16_t>(bits));
  out += "data";
  put32(out, data_size);
  for (double v : interleaved) {
    const double s = std::clamp(v, -1.0, 1.0);
    switch (encoding) {
      case WavEncoding::pcm8:
        out += static_cast<char>(std::clamp<long>(std::lround(s * 128.0) + 128, 0, 255));
        break;
      case WavEncoding::pcm16:
        put16(out, static_cast<std::uint16_t>(
                       static_cast<std::int16_t>(std::clamp<long>(std::lround(s * 32768.0), -32768, 32767))));
        break;
      case WavEncoding::pcm24: {
        const auto q = static_cast<std::int32_t>(std::clamp<long>(std::lround(s * 8388608.0), -8388608, 8388607));
        const auto u = static_cast<std::uint32_t>(q);
        out += static_cast<char>(u & 0xff);
        out += static_cast<char>((u >> 8) & 0xff);
        out += static_cast<char>((u >> 16) & 0xff);
        break;
      }
      case WavEncoding::float32: {
        const float f = static_cast<float>(s);
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        put32(out, u);
        break;
      }
    }
  }
  return out;
}

}  // namespace accentid::dsp
