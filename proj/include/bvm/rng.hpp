#pragma once

#include "bvm/core.hpp"

#include <cstdint>
#include <random>

namespace bvm {

/// Reproducible random stream addressed by (seed, stream_index).
///
/// Distinct stream indices feed independent SplitMix64-derived seeds into a
/// 64-bit Mersenne twister, so replications can be scheduled on any thread
/// without changing their draws.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_index);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_index() const noexcept { return stream_; }

  /// Sub-stream for a nested task, e.g. one purpose within one replication.
  RngStream child(std::uint64_t k) const;

  std::mt19937_64& engine() noexcept { return engine_; }

  double uniform();
  double normal();
  Vector normal_vector(Eigen::Index p);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace bvm
