#include "ipsd/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "ipsd/parallel.hpp"

namespace ipsd {

Migration::Migration(const Torus& torus, std::vector<StencilEntry> stencil) : torus_(torus) {
  const std::size_t n = torus.size();
  out_.resize(n);
  for (const auto& e : stencil) {
    if (e.displacement.size() != static_cast<std::size_t>(torus.dim))
      throw std::invalid_argument("migration: displacement dimension mismatch");
    if (e.weight < 0.0) throw std::invalid_argument("migration: stencil weights must be nonnegative");
  }
  for (Site x = 0; x < n; ++x) {
    std::map<Site, double> row;
    for (const auto& e : stencil) {
      if (e.weight == 0.0) continue;
      const Site y = torus.shift(x, e.displacement);
      if (y != x) row[y] += e.weight;
    }
    for (const auto& [y, w] : row) out_[x].push_back({y, w});
  }
  for (const auto& nb : out_[0]) total_ += nb.weight;
}

Migration Migration::nearest_neighbor(const Torus& torus, double rho) {
  if (rho < 0.0) throw std::invalid_argument("migration: rate must be nonnegative");
  std::vector<StencilEntry> st;
  for (int i = 0; i < torus.dim; ++i)
    for (int sgn : {-1, 1}) {
      std::vector<int> d(static_cast<std::size_t>(torus.dim), 0);
      d[static_cast<std::size_t>(i)] = sgn;
      st.push_back({d, rho / (2.0 * torus.dim)});
    }
  return Migration(torus, std::move(st));
}

Migration Migration::parse(std::string_view spec, const Torus& torus) {
  if (spec == "none") return Migration(torus, {});
  if (spec.starts_with("nn:")) return nearest_neighbor(torus, std::stod(std::string(spec.substr(3))));
  if (spec.starts_with("box:")) {
    const std::string rest(spec.substr(4));
    const auto colon = rest.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("migration: expected box:R:w");
    const int range = std::stoi(rest.substr(0, colon));
    const double w = std::stod(rest.substr(colon + 1));
    if (range < 1) throw std::invalid_argument("migration: box range must be >= 1");
    std::vector<StencilEntry> st;
    std::vector<int> d(static_cast<std::size_t>(torus.dim), -(range - 1));
    for (;;) {
      if (std::any_of(d.begin(), d.end(), [](int v) { return v != 0; })) st.push_back({d, w});
      std::size_t i = 0;
      while (i < d.size() && ++d[i] > range - 1) d[i++] = -(range - 1);
      if (i == d.size()) break;
    }
    return Migration(torus, std::move(st));
  }
  throw std::invalid_argument("migration: unknown stencil spec " + std::string(spec));
}

Scheme parse_scheme(std::string_view name) {
  if (name == "em") return Scheme::EulerClamp;
  if (name == "split") return Scheme::BoundarySplit;
  throw std::invalid_argument("diffusion: unknown scheme " + std::string(name));
}

std::string_view scheme_name(Scheme s) { return s == Scheme::EulerClamp ? "em" : "split"; }

void DiffusionParams::validate() const {
  if (!std::isfinite(s) || !std::isfinite(mu)) throw std::invalid_argument("diffusion: s and mu must be finite");
  if (!(noise_n > 0.0)) throw std::invalid_argument("diffusion: noise scale N must be positive");
}

double drift(const DiffusionParams& prm, const Migration& m, std::span<const double> p, Site x) {
  double mig = 0.0;
  for (const auto& nb : m.out(x)) mig += nb.weight * (p[nb.site] - p[x]);
  const double v = p[x];
  return mig + prm.s * v * (1.0 - v) * (1.0 - prm.mu * v);
}

namespace {

struct Scratch {
  std::vector<double> drift;
  std::vector<double> noise;
};

void em_step_impl(const DiffusionParams& prm, const Migration& m, std::vector<double>& p, double dt, Rng& rng,
                  double noise_sign, bool paired, Scratch& scratch) {
  const std::size_t n = p.size();
  scratch.drift.resize(n);
  scratch.noise.resize(n);
  for (Site x = 0; x < n; ++x) scratch.drift[x] = drift(prm, m, p, x);
  for (std::size_t x = 0; x < n; ++x) scratch.noise[x] = noise_sign * standard_normal(rng);
  if (paired) {
    for (std::size_t x = 0; x < n; ++x)
      scratch.noise[x] = (scratch.noise[x] + noise_sign * standard_normal(rng)) * 0.70710678118654752440;
  }
  const double inv_n = 1.0 / prm.noise_n;
  for (std::size_t x = 0; x < n; ++x) {
    const double v = p[x];
    const double coeff = std::sqrt(std::max(0.0, inv_n * v * (1.0 - v)) * dt);
    p[x] = std::clamp(v + scratch.drift[x] * dt + coeff * scratch.noise[x], 0.0, 1.0);
  }
}

// X' for dX = (a - bX)dt + sqrt(sig2 X) dW over dt: c times a noncentral
// chi-square with 4a/sig2 degrees of freedom and noncentrality X e^{-b dt}/c,
// drawn as a Poisson mixture of gammas.
double cir_transition(double x, double a, double b, double sig2, double dt, Rng& rng) {
  const double decay = std::exp(-b * dt);
  const double c = std::abs(b * dt) < 1e-12 ? sig2 * dt / 4.0 : sig2 * -std::expm1(-b * dt) / (4.0 * b);
  const double noncentral = x * decay / c;
  long long k = 0;
  if (noncentral > 0.0) k = boost::random::poisson_distribution<long long, double>(noncentral / 2.0)(rng);
  const double shape = 2.0 * std::max(a, 0.0) / sig2 + static_cast<double>(k);
  if (shape <= 0.0) return 0.0;
  return 2.0 * c * boost::random::gamma_distribution<double>(shape, 1.0)(rng);
}

void split_step_impl(const DiffusionParams& prm, const Migration& m, std::vector<double>& p, double dt, Rng& rng,
                     Scratch& scratch) {
  const std::size_t n = p.size();
  const double total = m.total_rate();
  scratch.drift.resize(n);
  for (Site x = 0; x < n; ++x) {
    double inflow = 0.0;
    for (const auto& nb : m.out(x)) inflow += nb.weight * p[nb.site];
    const double v = p[x];
    if (v <= 0.5) {
      // dp = [inflow - (M - s(1-p)(1-mu p)) p] dt + sqrt((1-p)/N) sqrt(p) dW
      const double b = total - prm.s * (1.0 - v) * (1.0 - prm.mu * v);
      scratch.drift[x] = std::min(1.0, cir_transition(v, inflow, b, (1.0 - v) / prm.noise_n, dt, rng));
    } else {
      // q = 1-p: dq = [(M - inflow) - (M + s p(1-mu p)) q] dt - sqrt(p/N) sqrt(q) dW
      const double b = total + prm.s * v * (1.0 - prm.mu * v);
      scratch.drift[x] = 1.0 - std::min(1.0, cir_transition(1.0 - v, total - inflow, b, v / prm.noise_n, dt, rng));
    }
  }
  p.swap(scratch.drift);
}

}  // namespace

void split_step(const DiffusionParams& prm, const Migration& m, std::vector<double>& p, double dt, Rng& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("split_step: dt must be positive");
  if (p.size() != m.size()) throw std::invalid_argument("split_step: state size mismatch");
  Scratch scratch;
  split_step_impl(prm, m, p, dt, rng, scratch);
}

void em_step(const DiffusionParams& prm, const Migration& m, std::vector<double>& p, double dt, Rng& rng,
             double noise_sign) {
  if (!(dt > 0.0)) throw std::invalid_argument("em_step: dt must be positive");
  if (p.size() != m.size()) throw std::invalid_argument("em_step: state size mismatch");
  Scratch scratch;
  em_step_impl(prm, m, p, dt, rng, noise_sign, false, scratch);
}

DiffusionState sigma_transform(const DiffusionState& state) {
  DiffusionState out{state.p};
  for (double& v : out.p) v = 1.0 - 2.0 * v;
  return out;
}

DiffusionState sigma_inverse(const DiffusionState& sigma) {
  DiffusionState out{sigma.p};
  for (double& v : out.p) v = (1.0 - v) / 2.0;
  return out;
}

void simulate_diffusion(const DiffusionParams& prm, const Migration& m, std::vector<double> p0,
                        std::span<const double> grid, double dt, Rng& rng, const DiffusionObserver& observe,
                        double noise_sign, bool paired_noise) {
  prm.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("simulate_diffusion: dt must be positive");
  if (p0.size() != m.size()) throw std::invalid_argument("simulate_diffusion: state size mismatch");
  const bool split = prm.scheme == Scheme::BoundarySplit;
  if (split && (paired_noise || noise_sign != 1.0))
    throw std::invalid_argument("simulate_diffusion: paired or mirrored noise needs the em scheme");
  Scratch scratch;
  std::size_t done = 0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (grid[j] < 0.0 || (j > 0 && grid[j] < grid[j - 1]))
      throw std::invalid_argument("simulate_diffusion: grid must be nonnegative and sorted");
    const auto target = static_cast<std::size_t>(std::llround(grid[j] / dt));
    for (; done < target; ++done) {
      if (split)
        split_step_impl(prm, m, p0, dt, rng, scratch);
      else
        em_step_impl(prm, m, p0, dt, rng, noise_sign, paired_noise, scratch);
    }
    observe(j, p0);
  }
}

std::vector<double> parse_diffusion_initial(std::string_view spec, std::size_t n) {
  std::vector<double> p;
  if (spec.starts_with("const:")) {
    p.assign(n, std::stod(std::string(spec.substr(6))));
  } else if (spec.starts_with("values:")) {
    std::string rest(spec.substr(7));
    std::size_t start = 0;
    while (start <= rest.size()) {
      auto end = rest.find(',', start);
      if (end == std::string::npos) end = rest.size();
      if (end > start) p.push_back(std::stod(rest.substr(start, end - start)));
      start = end + 1;
    }
    if (p.size() != n) throw std::invalid_argument("diffusion init: expected one value per site");
  } else {
    throw std::invalid_argument("diffusion init: unknown spec " + std::string(spec));
  }
  for (double v : p)
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("diffusion init: values must lie in [0,1]");
  return p;
}

std::vector<MCEstimate> heterozygosity_stat(const std::vector<std::vector<double>>& paths, double kappa) {
  if (paths.empty()) return {};
  const std::size_t nt = paths.front().size();
  std::vector<MCEstimate> out;
  std::vector<double> col(paths.size());
  for (std::size_t j = 0; j < nt; ++j) {
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const double v = paths[i][j];
      col[i] = (v > kappa && v < 1.0 - kappa) ? 1.0 : 0.0;
    }
    out.push_back(estimate(col));
  }
  return out;
}

std::vector<MCEstimate> heterozygosity_stat(const DiffusionParams& prm, const Migration& m,
                                            const std::vector<double>& p0, std::span<const double> grid,
                                            double kappa, Site x0, double dt, const McOptions& mc) {
  if (!(kappa >= 0.0 && kappa < 0.5)) throw std::invalid_argument("heterozygosity: kappa must lie in [0, 1/2)");
  auto paths = run_replicates<std::vector<double>>(mc.reps, mc.threads, [&](std::size_t i) {
    Rng rng = derive_stream(mc.seed, i, "heterozygosity");
    std::vector<double> v(grid.size());
    simulate_diffusion(prm, m, p0, grid, dt, rng, [&](std::size_t j, std::span<const double> p) { v[j] = p[x0]; });
    return v;
  });
  auto out = heterozygosity_stat(paths, kappa);
  for (auto& e : out) {
    e.seed = mc.seed;
    e.dt = dt;
  }
  return out;
}

}  // namespace ipsd
