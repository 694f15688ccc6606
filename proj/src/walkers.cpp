#include "ipsd/walkers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ipsd/exact.hpp"
#include "ipsd/parallel.hpp"
#include "ipsd/rate_tree.hpp"

namespace ipsd {

ParticleState ParticleState::at_sites(std::size_t n, std::span<const Site> sites) {
  ParticleState st(n);
  for (Site x : sites) {
    if (x >= n) throw std::out_of_range("particle site out of range");
    st.add(x, 1);
  }
  return st;
}

ParticleState ParticleState::parse(std::string_view spec, std::size_t n) {
  if (spec == "empty") return ParticleState(n);
  if (spec.starts_with("delta:")) {
    const std::string rest(spec.substr(6));
    const auto colon = rest.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("particles: expected delta:x:k");
    const auto x = static_cast<Site>(std::stoul(rest.substr(0, colon)));
    const auto k = std::stoll(rest.substr(colon + 1));
    if (x >= n || k < 0) throw std::invalid_argument("particles: bad delta spec");
    ParticleState st(n);
    st.add(x, k);
    return st;
  }
  if (spec.starts_with("sites:")) {
    std::vector<Site> sites;
    const std::string rest(spec.substr(6));
    std::size_t start = 0;
    while (start < rest.size()) {
      auto end = rest.find(',', start);
      if (end == std::string::npos) end = rest.size();
      if (end > start) sites.push_back(static_cast<Site>(std::stoul(rest.substr(start, end - start))));
      start = end + 1;
    }
    return at_sites(n, sites);
  }
  throw std::invalid_argument("particles: unknown spec " + std::string(spec));
}

std::size_t ParticleState::occupied() const {
  std::size_t k = 0;
  for (auto c : counts_) k += c > 0;
  return k;
}

void ParticleState::add(Site x, std::int64_t delta) {
  if (delta < 0 && counts_[x] < static_cast<std::uint64_t>(-delta))
    throw std::logic_error("particle count would go negative");
  counts_[x] += static_cast<std::uint64_t>(delta);
  total_ += static_cast<std::uint64_t>(delta);
}

WalkerKind WalkerKind::dbarw(double b) {
  WalkerKind k;
  k.type = WalkerType::Dbarw;
  k.branch = b;
  k.validate();
  return k;
}

WalkerKind WalkerKind::bcrw(double s, double mu) {
  WalkerKind k;
  k.type = WalkerType::Bcrw;
  k.s = s;
  k.mu = mu;
  k.validate();
  return k;
}

void WalkerKind::validate() const {
  switch (type) {
    case WalkerType::Crw:
      break;
    case WalkerType::Dbarw:
      if (!(branch >= 0.0) || !std::isfinite(branch)) throw std::invalid_argument("DBARW: branch rate must be >= 0");
      break;
    case WalkerType::Bcrw:
      if (!(s <= 0.0) || !std::isfinite(s)) throw std::invalid_argument("BCRW: requires s <= 0");
      if (!(mu >= -1.0 && mu <= 0.0)) throw std::invalid_argument("BCRW: requires mu in [-1, 0]");
      break;
  }
}

double WalkerKind::plus_one_rate() const { return type == WalkerType::Bcrw ? (-s) * (mu + 1.0) : 0.0; }

double WalkerKind::plus_two_rate() const {
  switch (type) {
    case WalkerType::Dbarw:
      return branch;
    case WalkerType::Bcrw:
      return (-s) * (-mu);
    default:
      return 0.0;
  }
}

std::string_view WalkerKind::name() const {
  switch (type) {
    case WalkerType::Crw:
      return "crw";
    case WalkerType::Dbarw:
      return "dbarw";
    default:
      return "bcrw";
  }
}

std::vector<Transition> walker_rates(const WalkerKind& kind, const ParticleState& xi, const Migration& m) {
  kind.validate();
  if (xi.size() != m.size()) throw std::invalid_argument("walker_rates: state size mismatch");
  std::vector<Transition> out;
  const double b1 = kind.plus_one_rate(), b2 = kind.plus_two_rate();
  for (Site x = 0; x < xi.size(); ++x) {
    const auto c = static_cast<double>(xi[x]);
    if (c == 0.0) continue;
    for (const auto& nb : m.out(x)) out.push_back({TransitionKind::Migrate, x, nb.site, c * nb.weight});
    if (b1 > 0.0) out.push_back({TransitionKind::PlusOne, x, x, c * b1});
    if (b2 > 0.0) out.push_back({TransitionKind::PlusTwo, x, x, c * b2});
    if (xi[x] >= 2) out.push_back({TransitionKind::Pair, x, x, c * (c - 1.0) / 2.0});
  }
  return out;
}

void apply_transition(ParticleState& xi, const WalkerKind& kind, const Transition& tr) {
  switch (tr.kind) {
    case TransitionKind::Migrate:
      xi.add(tr.from, -1);
      xi.add(tr.to, 1);
      break;
    case TransitionKind::PlusOne:
      xi.add(tr.from, 1);
      break;
    case TransitionKind::PlusTwo:
      xi.add(tr.from, 2);
      break;
    case TransitionKind::Pair:
      xi.add(tr.from, kind.pair_delta());
      break;
  }
}

namespace {

double site_rate(std::uint64_t count, double per_particle) {
  const auto c = static_cast<double>(count);
  return c * per_particle + c * (c - 1.0) / 2.0;
}

}  // namespace

WalkerRun simulate_walker(const WalkerKind& kind, const Migration& m, const ParticleState& xi0, double horizon,
                          std::uint64_t cap, Rng& rng, const WalkerObservers& obs) {
  kind.validate();
  if (xi0.size() != m.size()) throw std::invalid_argument("simulate_walker: state size mismatch");
  if (!(horizon >= 0.0)) throw std::invalid_argument("simulate_walker: negative horizon");
  for (std::size_t j = 1; j < obs.grid.size(); ++j)
    if (obs.grid[j] < obs.grid[j - 1]) throw std::invalid_argument("simulate_walker: grid must be sorted");

  const double b1 = kind.plus_one_rate(), b2 = kind.plus_two_rate();
  const double per_particle = m.total_rate() + b1 + b2;
  const std::size_t n = m.size();

  WalkerRun run;
  run.terminal = xi0;
  ParticleState& xi = run.terminal;
  RateTree tree(n);
  for (Site x = 0; x < n; ++x) tree.set(x, site_rate(xi[x], per_particle));

  std::size_t next_grid = 0;
  auto emit_until = [&](double t_exclusive) {
    while (next_grid < obs.grid.size() && obs.grid[next_grid] < t_exclusive) {
      if (obs.on_grid) obs.on_grid(next_grid, xi);
      ++next_grid;
    }
  };
  auto finish = [&](double t, WalkerStop why) {
    run.end_time = t;
    run.stop = why;
    while (next_grid < obs.grid.size()) {
      if (obs.on_grid) obs.on_grid(next_grid, xi);
      ++next_grid;
    }
    return run;
  };

  double t = 0.0;
  if (xi.total() == 0) {
    run.extinction_time = 0.0;
    return finish(0.0, WalkerStop::Extinct);
  }
  if (xi.total() > cap) return finish(0.0, WalkerStop::Cap);

  for (;;) {
    double total = tree.total();
    if (total < 1e-9) {
      tree.rebuild();
      total = tree.total();
    }
    if (total <= 0.0) {
      emit_until(std::nextafter(horizon, INFINITY));
      return finish(horizon, WalkerStop::Horizon);
    }
    const double t_next = t + exponential(rng, total);
    if (t_next > horizon) {
      emit_until(std::nextafter(horizon, INFINITY));
      return finish(horizon, WalkerStop::Horizon);
    }
    emit_until(t_next);
    t = t_next;

    const Site x = static_cast<Site>(tree.find(uniform01(rng) * total));
    const auto c = static_cast<double>(xi[x]);
    double u = uniform01(rng) * tree.rate(x);
    int delta = 0;
    Site touched = x;
    const double mig = c * m.total_rate();
    if (u < mig) {
      u /= c;
      Site y = m.out(x).back().site;
      for (const auto& nb : m.out(x)) {
        if (u < nb.weight) {
          y = nb.site;
          break;
        }
        u -= nb.weight;
      }
      xi.add(x, -1);
      xi.add(y, 1);
      touched = y;
    } else if ((u -= mig) < c * b1) {
      xi.add(x, 1);
      delta = 1;
    } else if ((u -= c * b1) < c * b2) {
      xi.add(x, 2);
      delta = 2;
    } else {
      delta = kind.pair_delta();
      if (xi[x] < 2) throw std::logic_error("simulate_walker: pair reaction at a site with < 2 particles");
      xi.add(x, delta);
    }
    tree.set(x, site_rate(xi[x], per_particle));
    if (touched != x) tree.set(touched, site_rate(xi[touched], per_particle));
    if (++run.events % 4096 == 0) tree.rebuild();
    if (obs.on_event) obs.on_event(t, xi, delta);

    if (xi.total() == 0) {
      run.extinction_time = t;
      return finish(t, WalkerStop::Extinct);
    }
    if (xi.total() > cap) return finish(t, WalkerStop::Cap);
  }
}

SurvivalReport survival_probability(const WalkerKind& kind, const Migration& m, const ParticleState& xi0,
                                    double horizon, std::uint64_t cap, const McOptions& mc) {
  const auto stops = run_replicates<WalkerStop>(mc.reps, mc.threads, [&](std::size_t i) {
    Rng rng = derive_stream(mc.seed, i, "walker-survival");
    return simulate_walker(kind, m, xi0, horizon, cap, rng).stop;
  });
  SurvivalReport rep;
  rep.reps = mc.reps;
  std::vector<double> alive(stops.size());
  for (std::size_t i = 0; i < stops.size(); ++i) {
    alive[i] = stops[i] == WalkerStop::Extinct ? 0.0 : 1.0;
    rep.extinct += stops[i] == WalkerStop::Extinct;
    rep.cap_hits += stops[i] == WalkerStop::Cap;
  }
  rep.survival = estimate(alive, mc.seed);
  return rep;
}

double single_site_extinction_exact(const WalkerKind& kind, std::uint64_t n0, double t, std::uint64_t truncation) {
  kind.validate();
  if (n0 > truncation) throw std::invalid_argument("single_site_extinction_exact: n0 exceeds truncation");
  const std::size_t dim = truncation + 1;
  DenseGenerator g(dim);
  const double b1 = kind.plus_one_rate(), b2 = kind.plus_two_rate();
  for (std::size_t c = 1; c < dim; ++c) {
    const auto cd = static_cast<double>(c);
    if (b1 > 0.0 && c + 1 < dim) g.add_rate(c, c + 1, cd * b1);
    if (b2 > 0.0 && c + 2 < dim) g.add_rate(c, c + 2, cd * b2);
    if (c >= 2) g.add_rate(c, c - static_cast<std::size_t>(-kind.pair_delta()), cd * (cd - 1.0) / 2.0);
  }
  std::vector<double> mu(dim, 0.0);
  mu[n0] = 1.0;
  return semigroup_apply_left(g, t, mu)[0];
}

}  // namespace ipsd
