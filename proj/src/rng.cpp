#include "mmcmc/rng.hpp"

namespace mmcmc {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32), 0x6d6d636dU};
  return std::mt19937_64(seq);
}

// splitmix64 finalizer, used to derive child stream ids.
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

RngStream RngStream::split(std::uint64_t child) const {
  return RngStream(seed_, mix(stream_id_ ^ mix(child + 1)));
}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() { return normal_(engine_); }

Eigen::VectorXd RngStream::normal_vector(Eigen::Index d) {
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < d; ++i) z[i] = normal();
  return z;
}

std::size_t RngStream::index(std::size_t n) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

double RngStream::chi_squared(double dof) {
  std::gamma_distribution<double> gamma(0.5 * dof, 2.0);
  return gamma(engine_);
}

}  // namespace mmcmc
