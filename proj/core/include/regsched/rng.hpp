#pragma once

#include <cstdint>

namespace regsched {

// Counter-based random stream: every draw is a stateless hash of
// (key, counter), and substreams derive a fresh key. Draws in one stream
// never perturb another, so replications are reproducible independently
// of scheduling order.
class RandomStream {
public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(mix(seed) ^ mix(stream + 0x6a09e667f3bcc909ull))) {}

  RandomStream substream(std::uint64_t id) const { return RandomStream(key_, id + 1); }

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ull); }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return next_double() < p; }

private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace regsched
