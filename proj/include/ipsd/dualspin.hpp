#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ipsd/kernel.hpp"
#include "ipsd/spin.hpp"
#include "ipsd/stats.hpp"

namespace ipsd {

/// Replicate count, master seed and worker count for Monte Carlo routines.
/// Results depend only on (reps, seed), never on `threads`.
struct McOptions {
  std::size_t reps = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Transposed update: branching with pairwise annihilation, or a walk step
/// with annihilation. In place.
void apply_event_dual(SpinConfig& xi, const UpdateEvent& e);

/// Replays the log's events with time <= t in reverse order from `start`.
SpinConfig evolve_dual_replay(const SpinConfig& start, const EventLog& log, double t);

/// <1_B, eta> mod 2.
int parity(const SpinConfig& eta, std::span<const Site> set);
/// <a, b> mod 2.
int inner_parity(const SpinConfig& a, const SpinConfig& b);

/// Dual chain sample path: the non-trivial updates in the order applied.
struct DualTrajectory {
  SpinConfig initial;
  std::vector<UpdateEvent> updates;
  double horizon = 0.0;
  SpinConfig terminal;

  SpinConfig at(double t) const;
};

/// Fresh dual dynamics: each occupied site fires at its total event rate and
/// applies the transposed update. Empty sites never act.
DualTrajectory simulate_dual_fresh(const NPParams& p, const Kernel& k, const SpinConfig& start, double horizon,
                                   Rng& rng);

struct PathwiseCheck {
  std::size_t checked = 0;
  std::size_t violations = 0;
  struct Row {
    double time;
    int forward;
    int dual;
  };
  std::vector<Row> rows;  // filled when requested
};

/// Compares parity(evolve_graphical(A,log,t),B) with
/// inner_parity(evolve_dual_replay(B,log,t),1_A) at t=0 and every event time.
PathwiseCheck pathwise_duality_check(const EventLog& log, std::size_t n, std::span<const Site> a,
                                     std::span<const Site> b, bool keep_rows = false);

struct DualityEstimate {
  MCEstimate lhs;
  MCEstimate rhs;
  double z = 0.0;
};

/// P(<1_B, eta_t^A> odd) by forward Gillespie runs against
/// P(<dual_t^B, 1_A> odd) by independent fresh dual runs.
DualityEstimate parity_duality_mc(const NPParams& p, const Kernel& k, std::span<const Site> a,
                                  std::span<const Site> b, double t, const McOptions& mc);

struct BernoulliParityRow {
  std::size_t set_index = 0;
  double time = 0.0;
  MCEstimate direct;         // P(<1_B, eta_t> odd) from a Bernoulli(1/2) start
  MCEstimate half_survival;  // (1/2) P(dual_t^B != 0)
  MCEstimate survival;       // P(dual_t^B != 0)
  double z = 0.0;
};

/// Batch form: one forward run per replicate serves every (B, t); one fresh
/// dual run per replicate and B serves every t.
std::vector<BernoulliParityRow> bernoulli_parity_table(const NPParams& p, const Kernel& k,
                                                       const std::vector<std::vector<Site>>& sets,
                                                       std::span<const double> times, const McOptions& mc);

BernoulliParityRow bernoulli_parity_identity(const NPParams& p, const Kernel& k, std::span<const Site> b, double t,
                                             const McOptions& mc);

/// Empirical law of the dual population size at a horizon; sizes above
/// `cap` are lumped into the infinity atom.
struct ZBDistribution {
  std::vector<double> probability;  // index = size, 0..cap
  double infinite_mass = 0.0;
  std::size_t reps = 0;

  double total() const;
};

ZBDistribution sample_zb(const NPParams& p, const Kernel& k, std::span<const Site> b, double t, std::size_t cap,
                         const McOptions& mc);

/// (1/2) E[1 - (1-2u)^Z] with (1-2u)^inf = 0 for u != 1/2 and 0^0 = 1.
double limit_formula(double u, const ZBDistribution& zb);

struct EvugRow {
  double time = 0.0;
  MCEstimate bounded;   // P(1 <= |dual_t^B| <= cap)
  MCEstimate survival;  // P(|dual_t^B| >= 1)
};

std::vector<EvugRow> evug_statistic(const NPParams& p, const Kernel& k, std::span<const Site> b,
                                    std::span<const double> grid, std::size_t cap, const McOptions& mc);

}  // namespace ipsd
