#pragma once

#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "ipsd/kernel.hpp"
#include "ipsd/rng.hpp"

namespace ipsd {

/// Neuhauser–Pacala parameters. The symmetric model has lambda = 1 and
/// alpha01 = alpha10 = alpha in [0,1).
struct NPParams {
  double lambda = 1.0;
  double alpha01 = 0.0;
  double alpha10 = 0.0;
  bool symmetric = true;

  static NPParams symmetric_model(double alpha);
  static NPParams general(double lambda, double alpha01, double alpha10);

  double alpha() const { return alpha01; }
  /// Throws std::invalid_argument on bad values, including the voter point.
  void validate() const;
};

/// Flip rate of a site currently holding `current`, given local frequencies.
double flip_rate(const NPParams& p, int current, double f0, double f1);

double flip_rate_general(const NPParams& p, const Kernel& k, const SpinConfig& eta, Site x);

enum class EventKind : std::uint8_t { Annihilation, Voter };

/// One Poisson update. Annihilation: focal x, unordered pair {first, second}.
/// Voter: focal x adopts from `first`; `second` is unused.
struct UpdateEvent {
  double time = 0.0;
  EventKind kind = EventKind::Annihilation;
  Site focal = 0;
  Site first = 0;
  Site second = 0;

  bool operator==(const UpdateEvent&) const = default;
};

struct EventLog {
  double horizon = 0.0;
  std::vector<UpdateEvent> events;  // strictly increasing times in (0, horizon]
};

/// eta(x) <- eta(x)+eta(y)+eta(z) mod 2, or eta(x) <- eta(y). In place.
void apply_event_forward(SpinConfig& eta, const UpdateEvent& e);

/// Samples the merged Poisson event streams of the symmetric model:
/// rate (1-alpha) q(x,y) q(x,z) for each focal x and unordered pair y != z,
/// and rate alpha q(x,y) for each ordered (x,y).
class EventLogSampler {
 public:
  EventLogSampler(const NPParams& p, const Kernel& k);

  EventLog sample(double horizon, Rng& rng) const;
  /// Draws the event type and partner sites for a firing at focal x.
  UpdateEvent draw_event_at(Site x, double time, Rng& rng) const;
  /// Rate of all events with focal site x.
  double site_rate(Site x) const { return ann_rate_[x] + alpha_; }
  /// Total event rate summed over all focal sites.
  double total_rate() const { return total_; }
  double annihilation_rate(Site x) const { return ann_rate_[x]; }
  double voter_rate() const { return alpha_; }

 private:
  Site pick_neighbor(Site x, Rng& rng) const;

  const Kernel* kernel_;
  double alpha_;
  std::vector<double> ann_rate_;
  std::vector<double> site_cumulative_;
  std::vector<std::vector<double>> neighbor_cumulative_;
  double total_ = 0.0;
};

EventLog sample_event_log(const NPParams& p, const Kernel& k, double horizon, Rng& rng);

/// Folds apply_event_forward over events with time <= t starting at `start`.
SpinConfig evolve_graphical(const SpinConfig& start, const EventLog& log, double t);
SpinConfig evolve_graphical(std::size_t n, std::span<const Site> set, const EventLog& log, double t);

struct Flip {
  double time;
  Site site;
};

/// Piecewise-constant sample path stored as its initial state plus flips.
struct SpinTrajectory {
  SpinConfig initial;
  std::vector<Flip> flips;
  double horizon = 0.0;

  SpinConfig at(double t) const;
  /// (time, density of 1's) at time 0 and after each flip.
  std::vector<std::pair<double, double>> density_path() const;
};

/// Direct Gillespie dynamics with the general flip rates.
SpinTrajectory simulate_gillespie(const NPParams& p, const Kernel& k, const SpinConfig& eta0,
                                  double horizon, Rng& rng);

/// "all0", "all1", "bernoulli:u", "indicator:x1,x2,...".
SpinConfig parse_initial_condition(std::string_view spec, std::size_t n, Rng& rng);
/// Comma-separated site list; empty string is the empty set.
std::vector<Site> parse_site_list(std::string_view text);

}  // namespace ipsd
