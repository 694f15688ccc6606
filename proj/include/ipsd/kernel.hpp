#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ipsd {

using Site = std::uint32_t;

/// Periodic d-dimensional box with side L; sites are row-major coordinates
/// (last coordinate fastest).
struct Torus {
  int dim = 1;
  int side = 3;

  std::size_t size() const;
  std::vector<int> coords(Site x) const;
  Site site(std::span<const int> coords) const;
  Site shift(Site x, std::span<const int> displacement) const;
};

struct Neighbor {
  Site site;
  double weight;
};

struct Edge {
  Site from;
  Site to;
  double weight;
};

/// Finite site set with a zero-trace, stochastic, irreducible transition
/// kernel q, stored as sparse neighbor lists. Immutable once built.
class Kernel {
 public:
  static Kernel torus(int dim, int side);
  static Kernel complete(std::size_t n);
  /// Arbitrary finite kernel; duplicate edges are summed. Validated.
  static Kernel from_edges(std::size_t n, std::span<const Edge> edges);

  std::size_t size() const { return out_.size(); }
  /// q(x, .) restricted to its support, sorted by site.
  std::span<const Neighbor> neighbors(Site x) const { return out_[x]; }
  /// Sites w with q(w, y) > 0, carrying weight q(w, y).
  std::span<const Neighbor> predecessors(Site y) const { return in_[y]; }
  double q(Site x, Site y) const;
  /// Sum over y of q(x,y)^2.
  double sum_squares(Site x) const { return sum_sq_[x]; }
  const std::optional<Torus>& torus_shape() const { return torus_; }
  std::string describe() const;

 private:
  Kernel(std::vector<std::vector<Neighbor>> out, std::optional<Torus> torus, std::string description);
  void validate() const;

  std::vector<std::vector<Neighbor>> out_;
  std::vector<std::vector<Neighbor>> in_;
  std::vector<double> sum_sq_;
  std::optional<Torus> torus_;
  std::string description_;
};

/// A {0,1} value per site. Also used for dual configurations, where 1 means
/// occupied.
struct SpinConfig {
  std::vector<std::uint8_t> values;

  SpinConfig() = default;
  explicit SpinConfig(std::size_t n, std::uint8_t v = 0) : values(n, v) {}

  std::size_t size() const { return values.size(); }
  std::uint8_t operator[](Site x) const { return values[x]; }
  std::uint8_t& operator[](Site x) { return values[x]; }
  std::size_t count() const;
  bool operator==(const SpinConfig&) const = default;

  static SpinConfig indicator(std::size_t n, std::span<const Site> set);
  /// Bit x of `bits` is the value at site x; n <= 64.
  static SpinConfig from_bits(std::size_t n, std::uint64_t bits);
  std::uint64_t to_bits() const;
};

/// Kernel-weighted frequency of type `type` around x.
double local_frequency(const Kernel& k, const SpinConfig& eta, Site x, int type);

}  // namespace ipsd
