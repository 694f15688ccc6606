#include "ipsd/rng.hpp"

namespace ipsd {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index, std::string_view role) {
  std::uint64_t h = mix64(master ^ 0x9e3779b97f4a7c15ULL);
  h = mix64(h ^ fnv1a64(role));
  h = mix64(h ^ (index * 0xbf58476d1ce4e5b9ULL + 0x94d049bb133111ebULL));
  return h;
}

Rng derive_stream(std::uint64_t master, std::uint64_t index, std::string_view role) {
  return Rng{stream_seed(master, index, role)};
}

}  // namespace ipsd
