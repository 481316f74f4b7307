#pragma once

#include <cstdint>
#include <initializer_list>

namespace sysid {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Derives a stream key from a root seed and a path of indices, e.g.
/// (experiment seed, T, trial). Distinct paths give unrelated streams.
std::uint64_t derive_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

/// Counter-based generator: the n-th output is mix64(key + n * gamma), so a
/// stream is fully determined by its key and can be replayed from any point.
/// Normal variates use the Box-Muller transform on two 53-bit uniforms; the
/// second variate of each pair is cached.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace sysid
