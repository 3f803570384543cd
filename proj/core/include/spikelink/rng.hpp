#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

namespace spikelink {

/// SplitMix64 finalizer; used to derive child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

/// 64-bit FNV-1a over the bytes of `text`.
std::uint64_t fnv1a(std::string_view text);

/// Seedable, splittable random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The std distributions are not (their algorithms vary between
/// standard libraries), so uniform and normal variates are produced here:
///   uniform(): top 53 bits of one engine draw, scaled into [0, 1)
///   normal():  Box-Muller on two uniforms, second value cached
/// Children derived with split() depend only on the parent seed and the
/// child name/index, never on how far the parent stream has advanced.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  [[nodiscard]] Rng split(std::string_view name) const;
  [[nodiscard]] Rng split(std::uint64_t index) const;

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64();
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  bool bernoulli(double p);
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

}  // namespace spikelink
