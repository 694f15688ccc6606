#include "ipsd/dualspin.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ipsd/parallel.hpp"
#include "ipsd/rate_tree.hpp"

namespace ipsd {

void apply_event_dual(SpinConfig& xi, const UpdateEvent& e) {
  const std::uint8_t at_x = xi[e.focal];
  if (e.kind == EventKind::Annihilation) {
    xi[e.first] ^= at_x;
    xi[e.second] ^= at_x;
  } else {
    xi[e.first] ^= at_x;
    xi[e.focal] = 0;
  }
}

SpinConfig evolve_dual_replay(const SpinConfig& start, const EventLog& log, double t) {
  if (t > log.horizon) throw std::invalid_argument("evolve_dual_replay: t exceeds log horizon");
  auto end = std::upper_bound(log.events.begin(), log.events.end(), t,
                              [](double v, const UpdateEvent& e) { return v < e.time; });
  SpinConfig xi = start;
  for (auto it = std::make_reverse_iterator(end); it != log.events.rend(); ++it) apply_event_dual(xi, *it);
  return xi;
}

int parity(const SpinConfig& eta, std::span<const Site> set) {
  unsigned acc = 0;
  for (Site x : set) acc ^= eta[x];
  return static_cast<int>(acc & 1u);
}

int inner_parity(const SpinConfig& a, const SpinConfig& b) {
  if (a.size() != b.size()) throw std::invalid_argument("inner_parity: size mismatch");
  unsigned acc = 0;
  for (std::size_t x = 0; x < a.size(); ++x) acc ^= (a.values[x] & b.values[x]);
  return static_cast<int>(acc & 1u);
}

SpinConfig DualTrajectory::at(double t) const {
  SpinConfig xi = initial;
  for (const auto& e : updates) {
    if (e.time > t) break;
    apply_event_dual(xi, e);
  }
  return xi;
}

DualTrajectory simulate_dual_fresh(const NPParams& p, const Kernel& k, const SpinConfig& start, double horizon,
                                   Rng& rng) {
  if (!(horizon > 0.0)) throw std::invalid_argument("simulate_dual_fresh: horizon must be positive");
  if (start.size() != k.size()) throw std::invalid_argument("simulate_dual_fresh: configuration size mismatch");
  const EventLogSampler sampler(p, k);
  DualTrajectory traj{start, {}, horizon, start};
  SpinConfig& xi = traj.terminal;
  RateTree tree(k.size());
  for (Site x = 0; x < k.size(); ++x) tree.set(x, xi[x] ? sampler.site_rate(x) : 0.0);
  auto refresh = [&](Site x) { tree.set(x, xi[x] ? sampler.site_rate(x) : 0.0); };

  double t = 0.0;
  std::size_t since_rebuild = 0;
  for (;;) {
    const double total = tree.total();
    if (!(total > 0.0)) break;
    t += exponential(rng, total);
    if (t > horizon) break;
    const Site x = static_cast<Site>(tree.find(uniform01(rng) * total));
    const UpdateEvent e = sampler.draw_event_at(x, t, rng);
    apply_event_dual(xi, e);
    traj.updates.push_back(e);
    refresh(e.focal);
    refresh(e.first);
    refresh(e.second);
    if (++since_rebuild == 4096) {
      tree.rebuild();
      since_rebuild = 0;
    }
  }
  return traj;
}

PathwiseCheck pathwise_duality_check(const EventLog& log, std::size_t n, std::span<const Site> a,
                                     std::span<const Site> b, bool keep_rows) {
  PathwiseCheck out;
  const SpinConfig one_a = SpinConfig::indicator(n, a);
  const SpinConfig one_b = SpinConfig::indicator(n, b);
  SpinConfig eta = one_a;
  auto compare = [&](double t, std::size_t applied) {
    SpinConfig xi = one_b;
    for (std::size_t j = applied; j-- > 0;) apply_event_dual(xi, log.events[j]);
    const int fwd = parity(eta, b);
    const int dual = inner_parity(xi, one_a);
    ++out.checked;
    if (fwd != dual) ++out.violations;
    if (keep_rows) out.rows.push_back({t, fwd, dual});
  };
  compare(0.0, 0);
  for (std::size_t j = 0; j < log.events.size(); ++j) {
    apply_event_forward(eta, log.events[j]);
    compare(log.events[j].time, j + 1);
  }
  return out;
}

DualityEstimate parity_duality_mc(const NPParams& p, const Kernel& k, std::span<const Site> a,
                                  std::span<const Site> b, double t, const McOptions& mc) {
  const std::size_t n = k.size();
  const SpinConfig one_a = SpinConfig::indicator(n, a);
  const SpinConfig one_b = SpinConfig::indicator(n, b);
  auto forward = run_replicates<double>(mc.reps, mc.threads, [&](std::size_t i) {
    if (t <= 0.0) return static_cast<double>(parity(one_a, b));
    Rng rng = derive_stream(mc.seed, i, "parity-forward");
    return static_cast<double>(parity(simulate_gillespie(p, k, one_a, t, rng).at(t), b));
  });
  auto dual = run_replicates<double>(mc.reps, mc.threads, [&](std::size_t i) {
    if (t <= 0.0) return static_cast<double>(inner_parity(one_b, one_a));
    Rng rng = derive_stream(mc.seed, i, "parity-dual");
    return static_cast<double>(inner_parity(simulate_dual_fresh(p, k, one_b, t, rng).terminal, one_a));
  });
  DualityEstimate out{estimate(forward, mc.seed), estimate(dual, mc.seed), 0.0};
  out.z = two_sample_z(out.lhs, out.rhs);
  return out;
}

std::vector<BernoulliParityRow> bernoulli_parity_table(const NPParams& p, const Kernel& k,
                                                       const std::vector<std::vector<Site>>& sets,
                                                       std::span<const double> times, const McOptions& mc) {
  if (times.empty()) throw std::invalid_argument("bernoulli_parity_table: empty time grid");
  const std::size_t n = k.size();
  const double t_max = *std::max_element(times.begin(), times.end());
  if (!(t_max > 0.0)) throw std::invalid_argument("bernoulli_parity_table: horizon must be positive");
  const std::size_t ns = sets.size(), nt = times.size();

  // Forward: one value per (set, time), flattened.
  auto forward = run_replicates<std::vector<double>>(mc.reps, mc.threads, [&](std::size_t i) {
    Rng rng = derive_stream(mc.seed, i, "bernoulli-forward");
    SpinConfig eta0(n);
    for (std::size_t x = 0; x < n; ++x) eta0.values[x] = uniform01(rng) < 0.5 ? 1 : 0;
    const auto traj = simulate_gillespie(p, k, eta0, t_max, rng);
    std::vector<double> v(ns * nt);
    for (std::size_t j = 0; j < nt; ++j) {
      const SpinConfig eta = traj.at(times[j]);
      for (std::size_t s = 0; s < ns; ++s) v[s * nt + j] = parity(eta, sets[s]);
    }
    return v;
  });
  auto survival = run_replicates<std::vector<double>>(mc.reps, mc.threads, [&](std::size_t i) {
    std::vector<double> v(ns * nt);
    for (std::size_t s = 0; s < ns; ++s) {
      Rng rng = derive_stream(mc.seed, i * ns + s, "bernoulli-dual");
      const auto traj = simulate_dual_fresh(p, k, SpinConfig::indicator(n, sets[s]), t_max, rng);
      for (std::size_t j = 0; j < nt; ++j) v[s * nt + j] = traj.at(times[j]).count() > 0 ? 1.0 : 0.0;
    }
    return v;
  });

  std::vector<BernoulliParityRow> rows;
  std::vector<double> col(mc.reps), half(mc.reps), surv(mc.reps);
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t j = 0; j < nt; ++j) {
      for (std::size_t i = 0; i < mc.reps; ++i) {
        col[i] = forward[i][s * nt + j];
        surv[i] = survival[i][s * nt + j];
        half[i] = 0.5 * surv[i];
      }
      BernoulliParityRow row{s, times[j], estimate(col, mc.seed), estimate(half, mc.seed), estimate(surv, mc.seed),
                             0.0};
      row.z = two_sample_z(row.direct, row.half_survival);
      rows.push_back(row);
    }
  }
  return rows;
}

BernoulliParityRow bernoulli_parity_identity(const NPParams& p, const Kernel& k, std::span<const Site> b, double t,
                                             const McOptions& mc) {
  const std::vector<std::vector<Site>> sets{std::vector<Site>(b.begin(), b.end())};
  const double times[] = {t};
  return bernoulli_parity_table(p, k, sets, times, mc).front();
}

double ZBDistribution::total() const {
  double s = infinite_mass;
  for (double v : probability) s += v;
  return s;
}

ZBDistribution sample_zb(const NPParams& p, const Kernel& k, std::span<const Site> b, double t, std::size_t cap,
                         const McOptions& mc) {
  const SpinConfig one_b = SpinConfig::indicator(k.size(), b);
  auto sizes = run_replicates<std::size_t>(mc.reps, mc.threads, [&](std::size_t i) -> std::size_t {
    Rng rng = derive_stream(mc.seed, i, "zb-dual");
    return simulate_dual_fresh(p, k, one_b, t, rng).terminal.count();
  });
  ZBDistribution zb;
  zb.probability.assign(cap + 1, 0.0);
  zb.reps = mc.reps;
  const double w = 1.0 / static_cast<double>(mc.reps);
  for (std::size_t s : sizes) {
    if (s > cap)
      zb.infinite_mass += w;
    else
      zb.probability[s] += w;
  }
  return zb;
}

double limit_formula(double u, const ZBDistribution& zb) {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("limit_formula: u must lie in (0,1)");
  const double base = 1.0 - 2.0 * u;
  double expect = 0.0;  // E[(1-2u)^Z]
  for (std::size_t z = 0; z < zb.probability.size(); ++z) {
    const double power = z == 0 ? 1.0 : std::pow(base, static_cast<double>(z));
    expect += zb.probability[z] * power;
  }
  // (1-2u)^inf is 0 for |1-2u| < 1, which covers every u in (0,1).
  return 0.5 * (zb.total() - expect);
}

std::vector<EvugRow> evug_statistic(const NPParams& p, const Kernel& k, std::span<const Site> b,
                                    std::span<const double> grid, std::size_t cap, const McOptions& mc) {
  if (grid.empty()) throw std::invalid_argument("evug_statistic: empty grid");
  const double t_max = *std::max_element(grid.begin(), grid.end());
  const SpinConfig one_b = SpinConfig::indicator(k.size(), b);
  auto sizes = run_replicates<std::vector<std::size_t>>(mc.reps, mc.threads, [&](std::size_t i) {
    std::vector<std::size_t> v(grid.size(), one_b.count());
    if (t_max <= 0.0) return v;
    Rng rng = derive_stream(mc.seed, i, "evug-dual");
    const auto traj = simulate_dual_fresh(p, k, one_b, t_max, rng);
    for (std::size_t j = 0; j < grid.size(); ++j) v[j] = traj.at(grid[j]).count();
    return v;
  });
  std::vector<EvugRow> rows;
  std::vector<double> bounded(mc.reps), alive(mc.reps);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    for (std::size_t i = 0; i < mc.reps; ++i) {
      const std::size_t s = sizes[i][j];
      bounded[i] = (s >= 1 && s <= cap) ? 1.0 : 0.0;
      alive[i] = s >= 1 ? 1.0 : 0.0;
    }
    rows.push_back({grid[j], estimate(bounded, mc.seed), estimate(alive, mc.seed)});
  }
  return rows;
}

}  // namespace ipsd
