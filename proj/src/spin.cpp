#include "ipsd/spin.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ipsd/rate_tree.hpp"

namespace ipsd {

NPParams NPParams::symmetric_model(double alpha) {
  NPParams p{1.0, alpha, alpha, true};
  p.validate();
  return p;
}

NPParams NPParams::general(double lambda, double alpha01, double alpha10) {
  NPParams p{lambda, alpha01, alpha10, false};
  p.validate();
  return p;
}

void NPParams::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("NP params: lambda must be positive");
  if (!(alpha01 >= 0.0) || !(alpha10 >= 0.0)) throw std::invalid_argument("NP params: alphas must be nonnegative");
  if (lambda == 1.0 && alpha01 == 1.0 && alpha10 == 1.0)
    throw std::invalid_argument("NP params: lambda=1, alpha01=alpha10=1 is the voter model and is excluded");
  if (symmetric) {
    if (lambda != 1.0 || alpha01 != alpha10) throw std::invalid_argument("NP params: symmetric model needs lambda=1, alpha01=alpha10");
    if (alpha01 >= 1.0) throw std::invalid_argument("NP params: symmetric alpha must lie in [0,1)");
  }
}

double flip_rate(const NPParams& p, int current, double f0, double f1) {
  const double denom = p.lambda * f1 + f0;
  if (denom <= 0.0) return 0.0;
  if (current == 0) return (f0 + p.alpha01 * f1) * (p.lambda * f1 / denom);
  return (f1 + p.alpha10 * f0) * (f0 / denom);
}

double flip_rate_general(const NPParams& p, const Kernel& k, const SpinConfig& eta, Site x) {
  const double f1 = local_frequency(k, eta, x, 1);
  const double f0 = local_frequency(k, eta, x, 0);
  return flip_rate(p, eta[x], f0, f1);
}

void apply_event_forward(SpinConfig& eta, const UpdateEvent& e) {
  if (e.kind == EventKind::Annihilation) {
    eta[e.focal] = static_cast<std::uint8_t>((eta[e.focal] + eta[e.first] + eta[e.second]) & 1u);
  } else {
    eta[e.focal] = eta[e.first];
  }
}

EventLogSampler::EventLogSampler(const NPParams& p, const Kernel& k) : kernel_(&k), alpha_(p.alpha()) {
  if (!p.symmetric) throw std::invalid_argument("event log: graphical construction needs the symmetric model");
  p.validate();
  const std::size_t n = k.size();
  ann_rate_.resize(n);
  site_cumulative_.resize(n);
  neighbor_cumulative_.resize(n);
  double acc = 0.0;
  for (Site x = 0; x < n; ++x) {
    // Sum over unordered pairs y != z of q(x,y)q(x,z) = (1 - sum q^2)/2.
    ann_rate_[x] = std::max(0.0, (1.0 - alpha_) * (1.0 - k.sum_squares(x)) / 2.0);
    acc += ann_rate_[x] + alpha_;
    site_cumulative_[x] = acc;
    double c = 0.0;
    for (const auto& nb : k.neighbors(x)) {
      c += nb.weight;
      neighbor_cumulative_[x].push_back(c);
    }
  }
  total_ = acc;
}

Site EventLogSampler::pick_neighbor(Site x, Rng& rng) const {
  const auto& cum = neighbor_cumulative_[x];
  const double u = uniform01(rng) * cum.back();
  auto it = std::upper_bound(cum.begin(), cum.end(), u);
  std::size_t i = static_cast<std::size_t>(it - cum.begin());
  if (i >= cum.size()) i = cum.size() - 1;
  return kernel_->neighbors(x)[i].site;
}

EventLog EventLogSampler::sample(double horizon, Rng& rng) const {
  if (!(horizon > 0.0)) throw std::invalid_argument("event log: horizon must be positive");
  EventLog log;
  log.horizon = horizon;
  if (total_ <= 0.0) return log;
  double t = 0.0;
  for (;;) {
    const double next = t + exponential(rng, total_);
    if (next > horizon) break;
    if (next == t) continue;  // tie with the previous event; draw again
    t = next;
    const double u = uniform01(rng) * total_;
    auto it = std::upper_bound(site_cumulative_.begin(), site_cumulative_.end(), u);
    Site x = static_cast<Site>(std::min<std::size_t>(it - site_cumulative_.begin(), site_cumulative_.size() - 1));
    log.events.push_back(draw_event_at(x, t, rng));
  }
  return log;
}

UpdateEvent EventLogSampler::draw_event_at(Site x, double time, Rng& rng) const {
  UpdateEvent e;
  e.time = time;
  e.focal = x;
  const double v = uniform01(rng) * (ann_rate_[x] + alpha_);
  if (v < ann_rate_[x]) {
    e.kind = EventKind::Annihilation;
    // Ordered i.i.d. draws conditioned on y != z give each unordered pair
    // probability proportional to q(x,y)q(x,z).
    Site y, z;
    do {
      y = pick_neighbor(x, rng);
      z = pick_neighbor(x, rng);
    } while (y == z);
    e.first = std::min(y, z);
    e.second = std::max(y, z);
  } else {
    e.kind = EventKind::Voter;
    e.first = pick_neighbor(x, rng);
    e.second = e.first;
  }
  return e;
}

EventLog sample_event_log(const NPParams& p, const Kernel& k, double horizon, Rng& rng) {
  return EventLogSampler(p, k).sample(horizon, rng);
}

SpinConfig evolve_graphical(const SpinConfig& start, const EventLog& log, double t) {
  if (t > log.horizon) throw std::invalid_argument("evolve_graphical: t exceeds log horizon");
  SpinConfig eta = start;
  for (const auto& e : log.events) {
    if (e.time > t) break;
    apply_event_forward(eta, e);
  }
  return eta;
}

SpinConfig evolve_graphical(std::size_t n, std::span<const Site> set, const EventLog& log, double t) {
  return evolve_graphical(SpinConfig::indicator(n, set), log, t);
}

SpinConfig SpinTrajectory::at(double t) const {
  SpinConfig eta = initial;
  for (const auto& f : flips) {
    if (f.time > t) break;
    eta[f.site] ^= 1u;
  }
  return eta;
}

std::vector<std::pair<double, double>> SpinTrajectory::density_path() const {
  std::vector<std::pair<double, double>> path;
  path.reserve(flips.size() + 1);
  const double n = static_cast<double>(initial.size());
  long ones = static_cast<long>(initial.count());
  SpinConfig eta = initial;
  path.emplace_back(0.0, static_cast<double>(ones) / n);
  for (const auto& f : flips) {
    ones += eta[f.site] ? -1 : 1;
    eta[f.site] ^= 1u;
    path.emplace_back(f.time, static_cast<double>(ones) / n);
  }
  return path;
}

SpinTrajectory simulate_gillespie(const NPParams& p, const Kernel& k, const SpinConfig& eta0, double horizon,
                                  Rng& rng) {
  p.validate();
  if (!(horizon > 0.0)) throw std::invalid_argument("simulate_gillespie: horizon must be positive");
  const std::size_t n = k.size();
  if (eta0.size() != n) throw std::invalid_argument("simulate_gillespie: configuration size mismatch");

  SpinTrajectory traj{eta0, {}, horizon};
  SpinConfig eta = eta0;
  // f1 is kept incrementally; the integer count of 1-neighbours pins the
  // all-0 and all-1 neighbourhoods to exact frequencies so absorbing states
  // stay absorbing despite rounding.
  std::vector<double> f1(n, 0.0);
  std::vector<std::uint32_t> ones(n, 0);
  for (Site x = 0; x < n; ++x)
    for (const auto& nb : k.neighbors(x))
      if (eta[nb.site]) {
        f1[x] += nb.weight;
        ++ones[x];
      }
  auto freq1 = [&](Site x) {
    if (ones[x] == 0) return 0.0;
    if (ones[x] == k.neighbors(x).size()) return 1.0;
    return std::clamp(f1[x], 0.0, 1.0);
  };
  RateTree tree(n);
  auto refresh = [&](Site x) {
    const double g1 = freq1(x);
    tree.set(x, flip_rate(p, eta[x], 1.0 - g1, g1));
  };
  for (Site x = 0; x < n; ++x) refresh(x);

  double t = 0.0;
  std::size_t since_rebuild = 0;
  for (;;) {
    const double total = tree.total();
    if (!(total > 0.0)) break;
    t += exponential(rng, total);
    if (t > horizon) break;
    const Site x = static_cast<Site>(tree.find(uniform01(rng) * total));
    eta[x] ^= 1u;
    traj.flips.push_back({t, x});
    const bool now_one = eta[x] != 0;
    for (const auto& pred : k.predecessors(x)) {
      if (now_one) {
        f1[pred.site] += pred.weight;
        ++ones[pred.site];
      } else {
        f1[pred.site] -= pred.weight;
        --ones[pred.site];
      }
      refresh(pred.site);
    }
    refresh(x);
    if (++since_rebuild == 4096) {
      tree.rebuild();
      since_rebuild = 0;
    }
  }
  return traj;
}

namespace {

double parse_double(std::string_view s) {
  std::string tmp(s);
  std::size_t pos = 0;
  double v = std::stod(tmp, &pos);
  if (pos != tmp.size()) throw std::invalid_argument("bad number: " + tmp);
  return v;
}

}  // namespace

std::vector<Site> parse_site_list(std::string_view text) {
  std::vector<Site> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view tok = text.substr(start, end - start);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    if (!tok.empty()) {
      Site v = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw std::invalid_argument("bad site index: " + std::string(tok));
      out.push_back(v);
    }
    start = end + 1;
  }
  return out;
}

SpinConfig parse_initial_condition(std::string_view spec, std::size_t n, Rng& rng) {
  if (spec == "all0") return SpinConfig(n, 0);
  if (spec == "all1") return SpinConfig(n, 1);
  if (spec.starts_with("bernoulli:")) {
    const double u = parse_double(spec.substr(10));
    if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("bernoulli density must lie in [0,1]");
    SpinConfig s(n);
    for (std::size_t x = 0; x < n; ++x) s.values[x] = uniform01(rng) < u ? 1 : 0;
    return s;
  }
  if (spec.starts_with("indicator:")) {
    const auto sites = parse_site_list(spec.substr(10));
    return SpinConfig::indicator(n, sites);
  }
  throw std::invalid_argument("unknown initial condition: " + std::string(spec));
}

}  // namespace ipsd
