#pragma once

#include <cstdint>
#include <random>

namespace cposterior {

/// Deterministic random stream identified by (seed, stream id).
///
/// Algorithm identity (pinned): the engine is std::mt19937_64 seeded through
/// std::seed_seq with the four 32-bit halves of (seed, stream), low word first.
/// Both algorithms are fully specified by the C++ standard, so a given
/// (seed, stream) yields the same sequence on every conforming platform.
/// Uniforms are built from the top 53 bits of each engine output; normal
/// variates use the Marsaglia polar method with one cached spare. Library
/// distribution objects from <random> are never used because their output is
/// implementation-defined.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Child source on a derived stream id; distinct children of one parent get
  /// distinct, well-mixed stream ids.
  RandomSource split(std::uint64_t child) const;

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform();

  /// Standard normal.
  double normal();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer, used to derive stream ids.
std::uint64_t mix64(std::uint64_t x);

}  // namespace cposterior
