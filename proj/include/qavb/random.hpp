#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace qavb {

/// Seedable generator with portable variate transforms.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard distribution classes are implementation-defined, so
/// every variate below is derived from raw 64-bit draws by a fixed recipe.
/// Files written by this project record the generator name kRngName.
class Rng {
 public:
  static constexpr std::string_view kRngName = "mt19937_64";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Uniform integer in [0, n) by rejection (unbiased).
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal via the Box-Muller transform (one value per call).
  double normal();
  /// Gamma(shape, 1) via Marsaglia-Tsang, with the shape < 1 boost.
  double gamma(double shape);
  std::vector<double> dirichlet(std::span<const double> alpha);
  /// Index drawn with probability proportional to weights.
  std::size_t categorical(std::span<const double> weights);

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a base seed and a salt
/// (SplitMix64 finalizer), for per-restart or per-purpose streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt);

}  // namespace qavb
