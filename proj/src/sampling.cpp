#include "pzos/sampling.hpp"

#include <cmath>
#include <numbers>

#include "pzos/errors.hpp"

namespace pzos {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

void check_dimension(Eigen::Index dx) {
  if (dx < 1) {
    throw InvalidArgument("sampling dimension must be >= 1");
  }
}

}  // namespace

std::uint64_t mix64(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_stream_id(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6A09E667F3BCC908ULL;
  for (std::uint64_t p : parts) {
    h = mix64(h ^ mix64(p));
  }
  return h;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), key_(mix64(mix64(seed) ^ (stream_id * kGolden + 1))) {}

std::uint64_t RngStream::next_u64() {
  ++counter_;
  // Two rounds keep neighbouring counters decorrelated for nearby keys.
  return mix64(mix64(key_ + counter_ * kGolden) ^ key_);
}

double RngStream::next_uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_uniform(double lo, double hi) {
  return lo + (hi - lo) * next_uniform();
}

std::int64_t RngStream::next_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) {
    throw InvalidArgument("next_int: empty range");
  }
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) {
    return static_cast<std::int64_t>(next_u64());
  }
  // Rejection keeps the result exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t r = 0;
  do {
    r = next_u64();
  } while (r >= limit);
  return lo + static_cast<std::int64_t>(r % span);
}

double RngStream::next_normal() {
  double u1 = 0.0;
  do {
    u1 = next_uniform();
  } while (u1 <= 0.0);
  const double u2 = next_uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RngStream RngStream::child(std::uint64_t tag) const {
  return RngStream(seed_, derive_stream_id({stream_id_, tag}));
}

Eigen::VectorXd sample_unit_sphere(RngStream& rng, Eigen::Index dx) {
  check_dimension(dx);
  Eigen::VectorXd v(dx);
  for (;;) {
    for (Eigen::Index i = 0; i < dx; ++i) {
      v[i] = rng.next_normal();
    }
    const double norm = v.norm();
    if (norm > 1e-300) {
      v /= norm;
      return v;
    }
  }
}

Eigen::VectorXd sample_unit_ball(RngStream& rng, Eigen::Index dx) {
  Eigen::VectorXd u = sample_unit_sphere(rng, dx);
  const double r = std::pow(rng.next_uniform(), 1.0 / static_cast<double>(dx));
  u *= r;
  return u;
}

}  // namespace pzos
