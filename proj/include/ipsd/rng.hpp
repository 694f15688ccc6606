#pragma once

#include <cstdint>
#include <string_view>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace ipsd {

/// Random engine used by every simulation routine.
///
/// Boost.Random is used instead of <random> distributions because its
/// algorithms are fixed across standard library implementations, which keeps
/// seeded outputs portable.
using Rng = boost::random::mt19937_64;

/// Stream derivation.
///
/// A stream seed is a pure function of (master seed, replicate index, role
/// tag):
///
///   tag_hash = FNV-1a-64(role)
///   h = mix64(master ^ 0x9e3779b97f4a7c15)
///   h = mix64(h ^ tag_hash)
///   h = mix64(h ^ (index * 0xbf58476d1ce4e5b9 + 0x94d049bb133111eb))
///
/// where mix64 is the SplitMix64 finalizer. The resulting 64-bit value seeds
/// an mt19937_64 engine. Alternate implementations reproduce streams by
/// following these three steps.
std::uint64_t mix64(std::uint64_t z);
std::uint64_t fnv1a64(std::string_view s);
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index, std::string_view role);
Rng derive_stream(std::uint64_t master, std::uint64_t index, std::string_view role);

inline double uniform01(Rng& rng) { return boost::random::uniform_01<double>{}(rng); }

/// Uniform on (0,1], safe for log().
inline double uniform_open0(Rng& rng) { return 1.0 - uniform01(rng); }

inline double exponential(Rng& rng, double rate) {
  return boost::random::exponential_distribution<double>{rate}(rng);
}

inline double standard_normal(Rng& rng) {
  return boost::random::normal_distribution<double>{}(rng);
}

}  // namespace ipsd
