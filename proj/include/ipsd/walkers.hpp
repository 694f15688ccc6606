#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ipsd/diffusion.hpp"
#include "ipsd/dualspin.hpp"
#include "ipsd/rng.hpp"
#include "ipsd/stats.hpp"

namespace ipsd {

/// Particle counts per site with a cached total.
class ParticleState {
 public:
  ParticleState() = default;
  explicit ParticleState(std::size_t n) : counts_(n, 0) {}

  /// k particles at each listed site (repeats add up).
  static ParticleState at_sites(std::size_t n, std::span<const Site> sites);
  /// "empty", "delta:x:k" or "sites:x,y,...".
  static ParticleState parse(std::string_view spec, std::size_t n);

  std::size_t size() const { return counts_.size(); }
  std::uint64_t operator[](Site x) const { return counts_[x]; }
  std::uint64_t total() const { return total_; }
  std::size_t occupied() const;
  std::span<const std::uint64_t> counts() const { return counts_; }

  /// Adds delta at x; throws if a count would go negative.
  void add(Site x, std::int64_t delta);

  bool operator==(const ParticleState&) const = default;

 private:
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

enum class WalkerType { Crw, Dbarw, Bcrw };

/// CRW: walk + pairwise coalescence (-1).
/// DBARW(b): walk + branching by 2 at rate b per particle + pairwise
/// annihilation (-2).
/// BCRW(s, mu), s <= 0, mu in [-1,0]: walk + pairwise coalescence + branching
/// by 1 at rate (-s)(mu+1) and by 2 at rate (-s)(-mu) per particle.
struct WalkerKind {
  WalkerType type = WalkerType::Crw;
  double branch = 0.0;
  double s = 0.0;
  double mu = 0.0;

  static WalkerKind crw() { return {}; }
  static WalkerKind dbarw(double b);
  static WalkerKind bcrw(double s, double mu);

  void validate() const;
  double plus_one_rate() const;
  double plus_two_rate() const;
  /// Change in count at a pair reaction: -1 (coalescence) or -2.
  int pair_delta() const { return type == WalkerType::Dbarw ? -2 : -1; }
  std::string_view name() const;
};

enum class TransitionKind { Migrate, PlusOne, PlusTwo, Pair };

struct Transition {
  TransitionKind kind;
  Site from;
  Site to;  // equal to `from` for on-site reactions
  double rate;
};

/// Complete rate table of the current state, site by site.
std::vector<Transition> walker_rates(const WalkerKind& kind, const ParticleState& xi, const Migration& m);

/// Applies a transition (ignores its rate).
void apply_transition(ParticleState& xi, const WalkerKind& kind, const Transition& tr);

enum class WalkerStop { Horizon, Extinct, Cap };

struct WalkerRun {
  ParticleState terminal;
  double end_time = 0.0;
  std::optional<double> extinction_time;
  WalkerStop stop = WalkerStop::Horizon;
  std::uint64_t events = 0;
};

struct WalkerObservers {
  /// After each event: time, state, change in total.
  std::function<void(double, const ParticleState&, int)> on_event;
  /// Grid times: index and the state at that time. Points past an early stop
  /// see the terminal state.
  std::span<const double> grid;
  std::function<void(std::size_t, const ParticleState&)> on_grid;
};

/// Gillespie run until extinction, the horizon, or total > cap.
WalkerRun simulate_walker(const WalkerKind& kind, const Migration& m, const ParticleState& xi0, double horizon,
                          std::uint64_t cap, Rng& rng, const WalkerObservers& obs = {});

struct SurvivalReport {
  MCEstimate survival;  // not extinct at the horizon (cap hits count as survival)
  std::size_t extinct = 0;
  std::size_t cap_hits = 0;
  std::size_t reps = 0;
};

SurvivalReport survival_probability(const WalkerKind& kind, const Migration& m, const ParticleState& xi0,
                                    double horizon, std::uint64_t cap, const McOptions& mc);

/// P(extinct by t) for a single-site population (no migration) from n0
/// particles, from the birth–death generator on {0..truncation}; births
/// past the truncation are dropped.
double single_site_extinction_exact(const WalkerKind& kind, std::uint64_t n0, double t, std::uint64_t truncation);

}  // namespace ipsd
