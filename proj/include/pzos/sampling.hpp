#pragma once

#include <cstdint>
#include <initializer_list>

#include <Eigen/Core>

namespace pzos {

/// SplitMix64 finalizer. Bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t z);

/// Hashes an ordered tuple of words into a single stream identifier.
std::uint64_t derive_stream_id(std::initializer_list<std::uint64_t> parts);

/// Counter-based random stream keyed by (seed, stream_id).
///
/// The k-th 64-bit output is a pure function of (seed, stream_id, k), so two
/// streams built from the same pair produce the same sequence on every
/// platform, and streams with different ids share no state. The only mutable
/// member is the draw counter.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  /// Number of 64-bit words consumed so far.
  std::uint64_t position() const { return counter_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double next_uniform();
  /// Uniform on [lo, hi).
  double next_uniform(double lo, double hi);
  /// Uniform integer on the closed range [lo, hi].
  std::int64_t next_int(std::int64_t lo, std::int64_t hi);
  /// Standard normal via Box-Muller (cosine branch only).
  double next_normal();

  /// Independent child stream; does not advance this stream.
  RngStream child(std::uint64_t tag) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Uniform direction on the unit sphere in R^dx (normalized Gaussian).
Eigen::VectorXd sample_unit_sphere(RngStream& rng, Eigen::Index dx);

/// Uniform point in the closed unit ball of R^dx.
Eigen::VectorXd sample_unit_ball(RngStream& rng, Eigen::Index dx);

}  // namespace pzos
