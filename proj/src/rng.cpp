#include "bvm/rng.hpp"

#include <sstream>

namespace bvm {

DomainError::DomainError(std::size_t coordinate, double value, double lo, double hi)
    : Error([&] {
        std::ostringstream os;
        os.precision(17);
        os << "parameter coordinate " << coordinate << " = " << value << " outside domain ["
           << lo << ", " << hi << "]";
        return os.str();
      }()),
      coordinate_(coordinate) {}

NotPositiveDefiniteError::NotPositiveDefiniteError(const std::string& what, Vector eigenvalues)
    : Error([&] {
        std::ostringstream os;
        os.precision(6);
        os << what << " (spectrum:";
        for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) os << ' ' << eigenvalues[i];
        os << ')';
        return os.str();
      }()),
      eigenvalues_(std::move(eigenvalues)) {}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

namespace {
std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}
}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_index)
    : seed_(seed), stream_(stream_index) {
  std::uint64_t s = mix(seed, stream_index);
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(stream_index), static_cast<std::uint32_t>(seed)};
  engine_.seed(seq);
}

RngStream RngStream::child(std::uint64_t k) const {
  return RngStream(mix(seed_, stream_), k);
}

double RngStream::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

double RngStream::normal() { return normal_(engine_); }

Vector RngStream::normal_vector(Eigen::Index p) {
  Vector v(p);
  for (Eigen::Index i = 0; i < p; ++i) v[i] = normal_(engine_);
  return v;
}

}  // namespace bvm
