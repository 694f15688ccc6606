#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ipsd/diffusion.hpp"
#include "ipsd/dualspin.hpp"
#include "ipsd/stats.hpp"
#include "ipsd/walkers.hpp"

namespace ipsd {

/// prod_x v(x)^xi(x), with 0^0 = 1 and the empty product 1.
double moment_eval(std::span<const double> v, const ParticleState& xi);

/// Generator of the sigma = 1-2p process (mu = 2) applied to H(., xi) at
/// sigma. Uses the divided closed form when sigma(x) != 0 on the support of
/// xi and the polynomial form otherwise.
double gen_sigma_on_H(std::span<const double> sigma, const ParticleState& xi, double s, const Migration& m);
/// Both forms, exposed for cross-checks.
double gen_sigma_on_H_polynomial(std::span<const double> sigma, const ParticleState& xi, double s,
                                 const Migration& m);
double gen_sigma_on_H_divided(std::span<const double> sigma, const ParticleState& xi, double s, const Migration& m);

/// Generator of the p process (any s, mu) applied to H(., xi) at p.
double gen_p_on_H(std::span<const double> p, const ParticleState& xi, double s, double mu, const Migration& m);

/// sum over the walker rate table of rate * (H(v, after) - H(v, before)).
double gen_walker_on_H(std::span<const double> v, const ParticleState& xi, const WalkerKind& kind,
                       const Migration& m);

/// Which side of the duality is used: sigma with DBARW(s/2) (mu = 2, s >= 0),
/// or p with BCRW(s, mu) (s <= 0, mu in [-1,0]; CRW when s = 0).
enum class Coordinates { Sigma, P };

/// The dual walker for a diffusion parameter set; throws outside the gates.
WalkerKind dual_walker(const DiffusionParams& prm, Coordinates c);

struct BatteryReport {
  double max_gap = 0.0;
  std::size_t pairs = 0;
  std::size_t degenerate = 0;  // pairs with a zero coordinate on the support of xi
};

/// `count` random (state, xi) pairs on a d=1 torus of side L with |xi| <=
/// max_particles; max |generator on H - walker generator on H|.
BatteryReport generator_duality_battery(const DiffusionParams& prm, Coordinates c, std::size_t count, Rng& rng,
                                        int side = 8, std::uint64_t max_particles = 6);

struct MomentCheckRow {
  double time = 0.0;
  MCEstimate lhs;       // E[H(state_t, xi_0)] at dt
  MCEstimate lhs_half;  // same at dt/2, coupled Brownian path
  MCEstimate rhs;       // E[H(state_0, xi_t)]
  double z = 0.0;
  double z_half = 0.0;
  double dt_shift = 0.0;     // |lhs - lhs_half|
  double dt_shift_se = 0.0;  // sqrt(se^2 + se_half^2)
  bool pass = false;
};

/// Forward diffusion runs against dual walker runs on separate stream
/// families. A row passes when |z| < 4 at both step sizes and the step-size
/// shift is within the combined standard error.
std::vector<MomentCheckRow> moment_duality_mc(const DiffusionParams& prm, Coordinates c, const Migration& m,
                                              const std::vector<double>& p0, const ParticleState& xi0,
                                              std::span<const double> times, double dt, const McOptions& mc,
                                              std::uint64_t cap = 100000);

struct CoexistenceReport {
  double kappa = 0.0;
  double het_time = 0.0;
  MCEstimate het;           // P(kappa < p_t(0) < 1-kappa) from p0 = 1/2, at dt
  MCEstimate het_half;      // same at dt/2
  double het_lower99 = 0.0;
  MCEstimate sigma_sq;      // E[sigma_t(0)^2] from the same runs
  double sigma_sq_bound = 0.0;  // (1-2kappa)^2 het + (1 - het)
  MCEstimate survival_at_het_time;  // DBARW(s/2) from 2 delta_0
  SurvivalReport survival;          // at walker_horizon
  double survival_lower99 = 0.0;
  double walker_horizon = 0.0;
  bool inconsistent = false;
};

CoexistenceReport coexistence_probe(double s, const Migration& m, double het_time, double walker_horizon,
                                    double kappa, double dt, const McOptions& mc, std::uint64_t cap = 100000);

struct ExtinctionRow {
  double time = 0.0;
  MCEstimate forward;  // E[prod p_t^xi0]
  MCEstimate dual;     // E[(1-eps)^|xi_t|]
  bool within_bound = false;
};

struct ExtinctionReport {
  double epsilon = 0.0;
  std::vector<ExtinctionRow> rows;
  bool forward_decreasing = false;
  bool dual_decreasing = false;
  bool bound_holds = false;
  std::size_t cap_hits = 0;
};

/// s < 0, mu in [-1,0]. epsilon defaults (when <= 0) to 1 - max p0. The
/// forward side runs on the boundary-split scheme unless told otherwise:
/// the clamped Euler scheme overstates small mixed moments here.
ExtinctionReport extinction_probe(double s, double mu, const Migration& m, const std::vector<double>& p0,
                                  double epsilon, const ParticleState& xi0, std::span<const double> times, double dt,
                                  const McOptions& mc, std::uint64_t cap = 100000,
                                  Scheme scheme = Scheme::BoundarySplit);

}  // namespace ipsd
