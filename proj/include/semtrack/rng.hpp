#pragma once

#include <cstdint>
#include <initializer_list>

namespace semtrack {

std::uint64_t mix64(std::uint64_t z);

// Hash an ordered tuple of integers into a stream key. Used to derive
// independent substreams such as (seed, frame, stage).
std::uint64_t derive_key(std::initializer_list<std::uint64_t> parts);

// Counter-based generator: the i-th draw is mix64(key + i * golden_gamma).
// Satisfies std::uniform_random_bit_generator. Distribution helpers are
// self-contained and give identical values across standard libraries.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t key = 0) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()();

  // Uniform in [0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform in the open interval (lo, hi).
  double uniform_open(double lo, double hi);
  // Uniform integer in [lo, hi], unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal();
  std::int64_t poisson(double mean);
  bool bernoulli(double p) { return uniform() < p; }

  RngStream substream(std::uint64_t tag) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace semtrack
