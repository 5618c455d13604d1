#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace prefgen {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// bad or inconsistent configuration / input schema
struct ConfigError : Error {
  using Error::Error;
};

// malformed data encountered at runtime (CSV rows, PNG payloads, ...)
struct DataError : Error {
  using Error::Error;
};

// a pipeline stage was invoked before the stages it consumes
struct DependencyError : Error {
  using Error::Error;
};

// Deterministic RNG. mt19937_64 gives a portable bit stream, but the std
// distributions on top of it are implementation-defined, so the draws are
// hand-rolled here to keep artifacts bit-stable across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // [0, 1), 53-bit resolution
  double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive bounds, rejection sampled so the distribution is exact
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    std::uint64_t range = std::uint64_t(hi - lo) + 1;
    if (range == 0) return std::int64_t(gen_());  // full 64-bit span
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    std::uint64_t r;
    do {
      r = gen_();
    } while (r >= limit);
    return lo + std::int64_t(r % range);
  }

  // N(0,1) via Box-Muller; the spare value is cached
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  template <class It>
  void shuffle(It first, It last) {
    auto n = last - first;
    for (decltype(n) i = n - 1; i > 0; --i) {
      auto j = uniform_int(0, i);
      std::swap(first[i], first[j]);
    }
  }

  // index drawn with probability proportional to w[i]; w must sum to > 0
  std::size_t pick_weighted(const std::vector<double>& w) {
    double total = 0.0;
    for (double x : w) total += x;
    if (!(total > 0.0)) throw Error("pick_weighted: non-positive weight total");
    double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      acc += w[i];
      if (u < acc) return i;
    }
    return w.size() - 1;  // fp slack on the last bucket
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stable fanout from one master seed to per-stage seeds. FNV-1a over the
// stage tag, master seed folded in, then a splitmix64 finalizer so nearby
// seeds do not produce correlated streams.
inline std::uint64_t stage_seed(std::uint64_t master, std::string_view stage) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : stage) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  h ^= master + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

}  // namespace prefgen
