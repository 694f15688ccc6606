#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ipsd/kernel.hpp"
#include "ipsd/spin.hpp"

namespace ipsd {

/// Rate matrix of a finite continuous-time Markov chain, stored dense.
/// Spin-system states are |E|-bit integers (bit x = value at site x).
class DenseGenerator {
 public:
  static constexpr std::size_t kMaxSites = 12;

  explicit DenseGenerator(std::size_t dim);
  /// Generator over {0,1}^E; rejects |E| > kMaxSites.
  static DenseGenerator for_sites(std::size_t sites);

  std::size_t dim() const { return dim_; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * dim_ + j]; }
  std::span<const double> row(std::size_t i) const { return {a_.data() + i * dim_, dim_}; }

  /// Adds an off-diagonal jump i -> j (i == j is ignored) and keeps row sums 0.
  void add_rate(std::size_t from, std::size_t to, double rate);

  /// Largest |row sum|, and throws if an off-diagonal entry is negative.
  double validate() const;
  double max_exit_rate() const;

 private:
  std::size_t dim_;
  std::vector<double> a_;
};

double max_abs_difference(const DenseGenerator& a, const DenseGenerator& b);

/// Entry (eta, eta^x) = flip_rate_general at x.
DenseGenerator build_generator_np(const NPParams& p, const Kernel& k);
/// Sum of rate r(J) on eta -> (Id+J)eta over annihilation and voter matrices.
DenseGenerator build_generator_from_events(const NPParams& p, const Kernel& k);
/// Transposed updates at the same rates.
DenseGenerator build_generator_dual(const NPParams& p, const Kernel& k);

/// exp(tG) v by uniformization with rate 1.01 max|G_ii|, split into chunks
/// of at most 10 expected jumps, each series cut at tail mass 1e-14.
std::vector<double> semigroup_apply(const DenseGenerator& g, double t, std::span<const double> v);
/// mu exp(tG): the law at time t of a chain started from distribution mu.
std::vector<double> semigroup_apply_left(const DenseGenerator& g, double t, std::span<const double> mu);
/// Relative max-norm gap between exp(tG)v and exp(tG/2)exp(tG/2)v.
double semigroup_self_check(const DenseGenerator& g, double t, std::span<const double> v);

/// |P_t phi_B(1_A) - Q_t phi_A(1_B)| with phi_A(B) = 1{<1_B,1_A> odd}.
double feynman_kac_residual(const NPParams& p, const Kernel& k, double t, std::uint64_t set_a,
                            std::uint64_t set_b);

struct FeynmanKacReport {
  double max_residual = 0.0;
  std::size_t pairs = 0;
};

/// Every (A,B) pair of subsets at time t.
FeynmanKacReport feynman_kac_battery(const NPParams& p, const Kernel& k, double t);

/// prod_m (1 - 2 u_m).
double parity_deviation(std::span<const double> u);
/// P(sum even) - P(sum odd) by enumerating all 2^N parity outcomes.
double parity_deviation_enumerate(std::span<const double> u);

/// nu{eta : <1_B, eta> odd} for every B, indexed by the bits of B.
std::vector<double> parity_functionals(std::span<const double> nu, std::size_t sites);
/// Rebuilds a measure from its parity functionals and total mass through
/// product moments and inclusion–exclusion.
std::vector<double> reconstruct_from_parities(std::span<const double> parities, double mass, std::size_t sites);

struct MeasureCheck {
  bool equal = false;
  bool mass_mismatch = false;
  std::optional<std::uint64_t> witness;  // B whose parity functionals differ
  double reconstruction_error = 0.0;     // max |reconstructed - given| when equal
};

/// Measures are given as masses over the 2^|E| configurations, |E| <= 10.
MeasureCheck measure_determination_check(std::span<const double> nu1, std::span<const double> nu2,
                                         std::size_t sites, double tol = 1e-12);

}  // namespace ipsd
