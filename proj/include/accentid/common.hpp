#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace accentid {

// Error categories map onto CLI exit codes (2 config, 3 data, 4 numerical).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 64-bit FNV-1a. Stable across platforms, used for fingerprints and seeds.
class Fnv1a {
 public:
  Fnv1a& update(std::string_view bytes);
  Fnv1a& update(std::span<const double> values);
  Fnv1a& update(std::uint64_t value);
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::uint64_t hash_string(std::string_view s);
std::string hex64(std::uint64_t v);

/// Derive an independent stream seed from a root seed and a stream name
/// ("smote", "folds", ...), so adding a consumer never reshuffles others.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream);

/// Uniform double in [0, 1) from a 64-bit engine output; unlike
/// std::uniform_real_distribution this is identical on every standard library.
double unit_uniform(std::uint64_t bits);

/// Uniform integer in [0, n) by rejection; portable across standard libraries.
template <class Engine>
std::uint64_t uniform_index(Engine& eng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r;
  do {
    r = eng();
  } while (r >= limit);
  return r % n;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Callers write results
/// into pre-sized slots, so the output never depends on scheduling.
void parallel_for(std::size_t n, unsigned jobs,
                  const std::function<void(std::size_t)>& fn);

/// Writes through a temporary file then renames into place.
void write_file_atomic(const std::string& path, std::string_view content);
std::string read_file(const std::string& path);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

// Little-endian IEEE-754 packing used by the model file.
std::string pack_doubles(std::span<const double> values);
std::vector<double> unpack_doubles(std::string_view b64);

/// Shortest representation that round-trips exactly.
std::string format_double(double v);

}  // namespace accentid
