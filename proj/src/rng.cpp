#include "hotdeck/rng.hpp"

#include <stdexcept>

namespace hotdeck {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL))) {}

RngStream RngStream::derive(std::uint64_t tag) const {
  return RngStream(splitmix64(seed_) ^ splitmix64(stream_ * 0x9e3779b97f4a7c15ULL + 1), tag);
}

double RngStream::uniform() {
  ++draws_;
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("RngStream::below: bound must be positive");
  ++draws_;
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = bound * ((~std::uint64_t{0}) / bound);
  std::uint64_t r;
  do {
    r = engine_();
  } while (r >= limit);
  return r % bound;
}

std::size_t RngStream::categorical(std::span<const double> probs) {
  double total = 0.0;
  std::size_t last_positive = probs.size();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) {
      total += probs[i];
      last_positive = i;
    }
  }
  if (last_positive == probs.size()) throw std::invalid_argument("categorical: no positive mass");
  const double u = uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < last_positive; ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    if (u < acc) return i;
  }
  return last_positive;
}

}  // namespace hotdeck
