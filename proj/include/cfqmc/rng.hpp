#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

namespace cfq {

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Combine a base seed with a list of stream labels into a new seed.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> labels) noexcept;

/// FNV-1a hash of a string, for turning cell keys into stream labels.
std::uint64_t hash_label(std::string_view s) noexcept;

// Seeded generator with portable variate conversions. std:: distributions are
// implementation-defined, so uniform and normal draws are done here to keep
// outputs bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0,1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0,1).
  double uniform_open() noexcept {
    return (static_cast<double>(engine_() >> 12) + 0.5) * 0x1.0p-52;
  }

  /// Standard normal via Box-Muller (no caching of the second variate).
  double normal() noexcept;

  std::uint64_t bits() noexcept { return engine_(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;

  std::vector<double> uniform_vector(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace cfq
