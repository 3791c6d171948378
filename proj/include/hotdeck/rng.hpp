#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace hotdeck {

/// Seeded random stream identified by (seed, stream id).
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Uniform variates are derived from the raw 64-bit output here
/// rather than through <random> distributions, whose algorithms are
/// implementation-defined, so draws are identical across platforms.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Independent child stream; depends only on (seed, stream, tag), never on
  /// how many draws this stream has made.
  RngStream derive(std::uint64_t tag) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform integer on {0, ..., bound-1}; bound > 0.
  std::uint64_t below(std::uint64_t bound);
  /// Index drawn with probability proportional to probs[i]. The last
  /// positive entry absorbs any rounding slack in the cumulative sum.
  std::size_t categorical(std::span<const double> probs);

  /// Number of draws made so far; used by tests asserting a code path is
  /// RNG-free.
  std::uint64_t draws() const noexcept { return draws_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace hotdeck
