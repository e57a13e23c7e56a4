#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace phnmf {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives a child seed from a parent seed and an index. Used to give every
/// replicate, NMF restart and tree node its own reproducible seed.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept;

/// Stable 64-bit FNV-1a hash of a string (node paths, labels).
std::uint64_t hash_string(std::string_view s) noexcept;

/// Keyed random stream. Identical (master_seed, stream_id) pairs give
/// identical sequences on every platform: the engine is mt19937_64, whose
/// output is fixed by the standard, and all distributions below are
/// implemented here rather than through <random>'s unspecified ones.
class SeededRng {
 public:
  SeededRng(std::uint64_t master_seed, std::uint64_t stream_id = 0);

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (lo, hi].
  double uniform_left_open(double lo, double hi);
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t index(std::uint64_t n);
  /// Standard normal (Marsaglia polar method).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace phnmf
