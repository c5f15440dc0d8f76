#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace mmcmc {

/// Seeded random stream.
///
/// A stream is identified by (seed, stream_id). Both words are fed through a
/// std::seed_seq into a 64-bit Mersenne twister, so equal identifiers give
/// identical draw sequences and distinct stream ids give decorrelated engines.
/// Every chain, replica and worker owns its own stream; nothing is shared.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Child stream for sub-component `child` (replica, chain, mode...).
  RngStream split(std::uint64_t child) const;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double normal();
  Eigen::VectorXd normal_vector(Eigen::Index d);
  /// Uniform integer on {0, ..., n-1}.
  std::size_t index(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }
  double chi_squared(double dof);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace mmcmc
