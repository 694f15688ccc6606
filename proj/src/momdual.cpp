#include "ipsd/momdual.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ipsd/parallel.hpp"

namespace ipsd {

namespace {

double ipow(double v, std::uint64_t k) {
  double r = 1.0;
  for (; k; k >>= 1, v *= v)
    if (k & 1) r *= v;
  return r;
}

void check_sizes(std::span<const double> v, const ParticleState& xi, const Migration& m) {
  if (v.size() != xi.size() || v.size() != m.size()) throw std::invalid_argument("moment duality: size mismatch");
}

// prod_{y != x} v(y)^xi(y)
double product_without(std::span<const double> v, const ParticleState& xi, Site x) {
  double r = 1.0;
  for (Site y = 0; y < xi.size(); ++y)
    if (y != x && xi[y] > 0) r *= ipow(v[y], xi[y]);
  return r;
}

double migration_gradient(std::span<const double> v, const Migration& m, Site x) {
  double g = 0.0;
  for (const auto& nb : m.out(x)) g += nb.weight * (v[nb.site] - v[x]);
  return g;
}

}  // namespace

double moment_eval(std::span<const double> v, const ParticleState& xi) {
  if (v.size() != xi.size()) throw std::invalid_argument("moment_eval: size mismatch");
  double r = 1.0;
  for (Site x = 0; x < xi.size(); ++x)
    if (xi[x] > 0) r *= ipow(v[x], xi[x]);
  return r;
}

double gen_sigma_on_H_polynomial(std::span<const double> sigma, const ParticleState& xi, double s,
                                 const Migration& m) {
  check_sizes(sigma, xi, m);
  double total = 0.0;
  for (Site x = 0; x < xi.size(); ++x) {
    const std::uint64_t k = xi[x];
    if (k == 0) continue;
    const double v = sigma[x];
    const auto kd = static_cast<double>(k);
    const double rest = product_without(sigma, xi, x);
    double term = (migration_gradient(sigma, m, x) + 0.5 * s * (v * v * v - v)) * kd * ipow(v, k - 1);
    if (k >= 2) term += 0.5 * (1.0 - v * v) * kd * (kd - 1.0) * ipow(v, k - 2);
    total += term * rest;
  }
  return total;
}

double gen_sigma_on_H_divided(std::span<const double> sigma, const ParticleState& xi, double s, const Migration& m) {
  check_sizes(sigma, xi, m);
  const double h = moment_eval(sigma, xi);
  double total = 0.0;
  for (Site x = 0; x < xi.size(); ++x) {
    if (xi[x] == 0) continue;
    const double v = sigma[x];
    if (v == 0.0) throw std::domain_error("gen_sigma_on_H_divided: sigma vanishes on the support of xi");
    const auto kd = static_cast<double>(xi[x]);
    double mig = 0.0;
    for (const auto& nb : m.out(x)) mig += nb.weight * (sigma[nb.site] / v - 1.0);
    total += kd * mig + 0.5 * s * kd * (v * v - 1.0) + 0.5 * kd * (kd - 1.0) * (1.0 / (v * v) - 1.0);
  }
  return total * h;
}

double gen_sigma_on_H(std::span<const double> sigma, const ParticleState& xi, double s, const Migration& m) {
  check_sizes(sigma, xi, m);
  for (Site x = 0; x < xi.size(); ++x)
    if (xi[x] > 0 && sigma[x] == 0.0) return gen_sigma_on_H_polynomial(sigma, xi, s, m);
  return gen_sigma_on_H_divided(sigma, xi, s, m);
}

double gen_p_on_H(std::span<const double> p, const ParticleState& xi, double s, double mu, const Migration& m) {
  check_sizes(p, xi, m);
  double total = 0.0;
  for (Site x = 0; x < xi.size(); ++x) {
    const std::uint64_t k = xi[x];
    if (k == 0) continue;
    const double v = p[x];
    const auto kd = static_cast<double>(k);
    const double rest = product_without(p, xi, x);
    double term = migration_gradient(p, m, x) * kd * ipow(v, k - 1);
    term += s * kd * (1.0 - (mu + 1.0) * v + mu * v * v) * ipow(v, k);
    if (k >= 2) term += 0.5 * kd * (kd - 1.0) * (ipow(v, k - 1) - ipow(v, k));
    total += term * rest;
  }
  return total;
}

double gen_walker_on_H(std::span<const double> v, const ParticleState& xi, const WalkerKind& kind,
                       const Migration& m) {
  check_sizes(v, xi, m);
  const double before = moment_eval(v, xi);
  double total = 0.0;
  for (const auto& tr : walker_rates(kind, xi, m)) {
    ParticleState after = xi;
    apply_transition(after, kind, tr);
    total += tr.rate * (moment_eval(v, after) - before);
  }
  return total;
}

WalkerKind dual_walker(const DiffusionParams& prm, Coordinates c) {
  prm.validate();
  if (prm.noise_n != 1.0) throw std::invalid_argument("moment duality: requires noise scale N = 1");
  if (c == Coordinates::Sigma) {
    if (prm.mu != 2.0) throw std::invalid_argument("moment duality (sigma): requires mu = 2");
    if (prm.s < 0.0) throw std::invalid_argument("moment duality (sigma): requires s >= 0");
    return WalkerKind::dbarw(prm.s / 2.0);
  }
  if (prm.s == 0.0) return WalkerKind::crw();
  if (prm.s > 0.0 || prm.mu < -1.0 || prm.mu > 0.0)
    throw std::invalid_argument("moment duality (p): requires s <= 0 and mu in [-1, 0]");
  return WalkerKind::bcrw(prm.s, prm.mu);
}

BatteryReport generator_duality_battery(const DiffusionParams& prm, Coordinates c, std::size_t count, Rng& rng,
                                        int side, std::uint64_t max_particles) {
  const WalkerKind kind = dual_walker(prm, c);
  const Torus torus{1, side};
  const Migration m = Migration::nearest_neighbor(torus, 1.0);
  const std::size_t n = torus.size();
  BatteryReport rep;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < count; ++i) {
    for (auto& x : v) {
      const double u = uniform01(rng);
      if (u < 0.1) {
        x = c == Coordinates::Sigma ? 0.0 : (uniform01(rng) < 0.5 ? 0.0 : 1.0);
      } else if (u < 0.15) {
        x = c == Coordinates::Sigma ? (uniform01(rng) < 0.5 ? -1.0 : 1.0) : 0.5;
      } else {
        x = c == Coordinates::Sigma ? 2.0 * uniform01(rng) - 1.0 : uniform01(rng);
      }
    }
    ParticleState xi(n);
    const auto k = static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(max_particles + 1));
    for (std::uint64_t j = 0; j < std::min(k, max_particles); ++j) {
      // Half the particles crowd onto three sites so multi-occupancy is common.
      const std::size_t span = uniform01(rng) < 0.5 ? std::min<std::size_t>(3, n) : n;
      xi.add(static_cast<Site>(uniform01(rng) * static_cast<double>(span)), 1);
    }
    bool degenerate = false;
    for (Site x = 0; x < n; ++x) degenerate |= xi[x] > 0 && v[x] == 0.0;
    rep.degenerate += degenerate;
    const double lhs = c == Coordinates::Sigma ? gen_sigma_on_H(v, xi, prm.s, m) : gen_p_on_H(v, xi, prm.s, prm.mu, m);
    rep.max_gap = std::max(rep.max_gap, std::abs(lhs - gen_walker_on_H(v, xi, kind, m)));
    ++rep.pairs;
  }
  return rep;
}

namespace {

std::vector<double> to_coordinates(std::span<const double> p, Coordinates c) {
  std::vector<double> out(p.begin(), p.end());
  if (c == Coordinates::Sigma)
    for (double& v : out) v = 1.0 - 2.0 * v;
  return out;
}

std::vector<MCEstimate> column_estimates(const std::vector<std::vector<double>>& rows, std::size_t cols,
                                         std::uint64_t seed, std::optional<double> dt) {
  std::vector<MCEstimate> out;
  std::vector<double> col(rows.size());
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) col[i] = rows[i][j];
    out.push_back(estimate(col, seed, dt));
  }
  return out;
}

double combined_se(const MCEstimate& a, const MCEstimate& b) { return std::hypot(a.std_error, b.std_error); }

}  // namespace

std::vector<MomentCheckRow> moment_duality_mc(const DiffusionParams& prm, Coordinates c, const Migration& m,
                                              const std::vector<double>& p0, const ParticleState& xi0,
                                              std::span<const double> times, double dt, const McOptions& mc,
                                              std::uint64_t cap) {
  const WalkerKind kind = dual_walker(prm, c);
  if (p0.size() != m.size() || xi0.size() != m.size())
    throw std::invalid_argument("moment_duality_mc: size mismatch");
  const std::size_t nt = times.size();
  const std::vector<double> v0 = to_coordinates(p0, c);

  // Per replicate: [coarse H at each time..., fine H at each time...].
  const auto fwd = run_replicates<std::vector<double>>(mc.reps, mc.threads, [&](std::size_t i) {
    std::vector<double> out(2 * nt);
    for (int pass = 0; pass < 2; ++pass) {
      Rng rng = derive_stream(mc.seed, i, "moment-forward");
      const bool coarse = pass == 0;
      simulate_diffusion(
          prm, m, p0, times, coarse ? dt : dt / 2, rng,
          [&](std::size_t j, std::span<const double> p) {
            out[(coarse ? 0 : nt) + j] = moment_eval(to_coordinates(p, c), xi0);
          },
          1.0, coarse);
    }
    return out;
  });
  const auto dual = run_replicates<std::vector<double>>(mc.reps, mc.threads, [&](std::size_t i) {
    Rng rng = derive_stream(mc.seed, i, "moment-dual");
    std::vector<double> out(nt);
    WalkerObservers obs;
    obs.grid = times;
    obs.on_grid = [&](std::size_t j, const ParticleState& xi) { out[j] = moment_eval(v0, xi); };
    simulate_walker(kind, m, xi0, times.empty() ? 0.0 : times.back(), cap, rng, obs);
    return out;
  });

  const auto all_fwd = column_estimates(fwd, 2 * nt, mc.seed, std::nullopt);
  const auto all_dual = column_estimates(dual, nt, mc.seed, std::nullopt);
  std::vector<MomentCheckRow> rows;
  for (std::size_t j = 0; j < nt; ++j) {
    MomentCheckRow r;
    r.time = times[j];
    r.lhs = all_fwd[j];
    r.lhs.dt = dt;
    r.lhs_half = all_fwd[nt + j];
    r.lhs_half.dt = dt / 2;
    r.rhs = all_dual[j];
    r.z = two_sample_z(r.lhs, r.rhs);
    r.z_half = two_sample_z(r.lhs_half, r.rhs);
    r.dt_shift = std::abs(r.lhs.mean - r.lhs_half.mean);
    r.dt_shift_se = combined_se(r.lhs, r.lhs_half);
    r.pass = std::abs(r.z) < 4.0 && std::abs(r.z_half) < 4.0 && r.dt_shift <= r.dt_shift_se;
    rows.push_back(r);
  }
  return rows;
}

CoexistenceReport coexistence_probe(double s, const Migration& m, double het_time, double walker_horizon,
                                    double kappa, double dt, const McOptions& mc, std::uint64_t cap) {
  if (!(kappa >= 0.0 && kappa < 0.5)) throw std::invalid_argument("coexistence_probe: kappa must lie in [0, 1/2)");
  const DiffusionParams prm{s, 2.0, 1.0};
  const WalkerKind kind = dual_walker(prm, Coordinates::Sigma);
  const std::vector<double> p0(m.size(), 0.5);
  const double grid[] = {het_time};

  // Per replicate: het indicator (dt), het indicator (dt/2), sigma^2 (dt).
  const auto fwd = run_replicates<std::vector<double>>(mc.reps, mc.threads, [&](std::size_t i) {
    std::vector<double> out(3);
    for (int pass = 0; pass < 2; ++pass) {
      Rng rng = derive_stream(mc.seed, i, "coexist-forward");
      const bool coarse = pass == 0;
      simulate_diffusion(
          prm, m, p0, grid, coarse ? dt : dt / 2, rng,
          [&](std::size_t, std::span<const double> p) {
            out[coarse ? 0 : 1] = (p[0] > kappa && p[0] < 1.0 - kappa) ? 1.0 : 0.0;
            if (coarse) out[2] = (1.0 - 2.0 * p[0]) * (1.0 - 2.0 * p[0]);
          },
          1.0, coarse);
    }
    return out;
  });
  const double horizon = std::max(walker_horizon, het_time);
  const double wgrid[] = {het_time};
  // Per replicate: alive at het_time, stop reason at the walker horizon.
  const auto dual = run_replicates<std::pair<double, WalkerStop>>(mc.reps, mc.threads, [&](std::size_t i) {
    Rng rng = derive_stream(mc.seed, i, "coexist-dual");
    double alive = 0.0;
    WalkerObservers obs;
    obs.grid = wgrid;
    obs.on_grid = [&](std::size_t, const ParticleState& xi) { alive = xi.total() > 0 ? 1.0 : 0.0; };
    const auto run = simulate_walker(kind, m, ParticleState::parse("delta:0:2", m.size()), horizon, cap, rng, obs);
    return std::make_pair(alive, run.stop);
  });

  CoexistenceReport rep;
  rep.kappa = kappa;
  rep.het_time = het_time;
  rep.walker_horizon = horizon;
  const auto f = column_estimates(fwd, 3, mc.seed, dt);
  rep.het = f[0];
  rep.het_half = f[1];
  rep.het_half.dt = dt / 2;
  rep.sigma_sq = f[2];
  const double edge = (1.0 - 2.0 * kappa) * (1.0 - 2.0 * kappa);
  rep.sigma_sq_bound = edge * rep.het.mean + (1.0 - rep.het.mean);
  rep.het_lower99 = wilson_lower(static_cast<std::size_t>(std::llround(rep.het.mean * static_cast<double>(mc.reps))),
                                 mc.reps, kZ99);

  std::vector<double> alive_t(dual.size()), alive_h(dual.size());
  rep.survival.reps = mc.reps;
  for (std::size_t i = 0; i < dual.size(); ++i) {
    alive_t[i] = dual[i].first;
    alive_h[i] = dual[i].second == WalkerStop::Extinct ? 0.0 : 1.0;
    rep.survival.extinct += dual[i].second == WalkerStop::Extinct;
    rep.survival.cap_hits += dual[i].second == WalkerStop::Cap;
  }
  rep.survival_at_het_time = estimate(alive_t, mc.seed);
  rep.survival.survival = estimate(alive_h, mc.seed);
  rep.survival_lower99 = wilson_lower(mc.reps - rep.survival.extinct, mc.reps, kZ99);
  rep.inconsistent = rep.het_lower99 > 0.0 && rep.survival.extinct == mc.reps;
  return rep;
}

ExtinctionReport extinction_probe(double s, double mu, const Migration& m, const std::vector<double>& p0,
                                  double epsilon, const ParticleState& xi0, std::span<const double> times, double dt,
                                  const McOptions& mc, std::uint64_t cap, Scheme scheme) {
  if (!(s < 0.0)) throw std::invalid_argument("extinction_probe: requires s < 0");
  const DiffusionParams prm{s, mu, 1.0, scheme};
  const WalkerKind kind = dual_walker(prm, Coordinates::P);
  if (p0.size() != m.size() || xi0.size() != m.size()) throw std::invalid_argument("extinction_probe: size mismatch");
  if (epsilon <= 0.0) epsilon = 1.0 - *std::max_element(p0.begin(), p0.end());
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("extinction_probe: epsilon must lie in (0, 1]");
  const std::size_t nt = times.size();

  const auto fwd = run_replicates<std::vector<double>>(mc.reps, mc.threads, [&](std::size_t i) {
    Rng rng = derive_stream(mc.seed, i, "extinct-forward");
    std::vector<double> out(nt);
    simulate_diffusion(prm, m, p0, times, dt, rng,
                       [&](std::size_t j, std::span<const double> p) { out[j] = moment_eval(p, xi0); });
    return out;
  });
  std::vector<WalkerStop> stops(mc.reps);
  const auto dual = run_replicates<std::vector<double>>(mc.reps, mc.threads, [&](std::size_t i) {
    Rng rng = derive_stream(mc.seed, i, "extinct-dual");
    std::vector<double> out(nt);
    WalkerObservers obs;
    obs.grid = times;
    obs.on_grid = [&](std::size_t j, const ParticleState& xi) { out[j] = ipow(1.0 - epsilon, xi.total()); };
    stops[i] = simulate_walker(kind, m, xi0, times.empty() ? 0.0 : times.back(), cap, rng, obs).stop;
    return out;
  });

  ExtinctionReport rep;
  rep.epsilon = epsilon;
  for (auto st : stops) rep.cap_hits += st == WalkerStop::Cap;
  const auto f = column_estimates(fwd, nt, mc.seed, dt);
  const auto d = column_estimates(dual, nt, mc.seed, std::nullopt);
  rep.bound_holds = true;
  rep.forward_decreasing = nt >= 2;
  rep.dual_decreasing = nt >= 2;
  for (std::size_t j = 0; j < nt; ++j) {
    ExtinctionRow r{times[j], f[j], d[j], false};
    r.within_bound = r.forward.mean <= r.dual.mean + 3.0 * combined_se(r.forward, r.dual);
    rep.bound_holds &= r.within_bound;
    if (j > 0) {
      rep.forward_decreasing &= r.forward.mean < rep.rows.back().forward.mean;
      rep.dual_decreasing &= r.dual.mean < rep.rows.back().dual.mean;
    }
    rep.rows.push_back(r);
  }
  return rep;
}

}  // namespace ipsd
