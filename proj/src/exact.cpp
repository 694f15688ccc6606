#include "ipsd/exact.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "ipsd/dualspin.hpp"

namespace ipsd {

DenseGenerator::DenseGenerator(std::size_t dim) : dim_(dim), a_(dim * dim, 0.0) {
  if (dim == 0) throw std::invalid_argument("generator: empty state space");
}

DenseGenerator DenseGenerator::for_sites(std::size_t sites) {
  if (sites > kMaxSites) throw std::invalid_argument("generator: at most 12 sites supported");
  return DenseGenerator(std::size_t{1} << sites);
}

void DenseGenerator::add_rate(std::size_t from, std::size_t to, double rate) {
  if (from == to) return;
  a_[from * dim_ + to] += rate;
  a_[from * dim_ + from] -= rate;
}

double DenseGenerator::validate() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      const double v = a_[i * dim_ + j];
      if (i != j && v < 0.0) throw std::logic_error("generator: negative off-diagonal rate");
      s += v;
    }
    worst = std::max(worst, std::abs(s));
  }
  return worst;
}

double DenseGenerator::max_exit_rate() const {
  double m = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) m = std::max(m, -a_[i * dim_ + i]);
  return m;
}

double max_abs_difference(const DenseGenerator& a, const DenseGenerator& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("max_abs_difference: dimension mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

DenseGenerator build_generator_np(const NPParams& p, const Kernel& k) {
  p.validate();
  const std::size_t n = k.size();
  auto g = DenseGenerator::for_sites(n);
  for (std::uint64_t s = 0; s < g.dim(); ++s) {
    const SpinConfig eta = SpinConfig::from_bits(n, s);
    for (Site x = 0; x < n; ++x) g.add_rate(s, s ^ (std::uint64_t{1} << x), flip_rate_general(p, k, eta, x));
  }
  return g;
}

namespace {

// Calls fn(event, rate) for every annihilation and voter matrix of the
// symmetric model.
template <class Fn>
void for_each_update(const NPParams& p, const Kernel& k, Fn&& fn) {
  if (!p.symmetric) throw std::invalid_argument("event generators need the symmetric model");
  p.validate();
  const double alpha = p.alpha();
  for (Site x = 0; x < k.size(); ++x) {
    const auto nbs = k.neighbors(x);
    for (std::size_t i = 0; i < nbs.size(); ++i) {
      for (std::size_t j = i + 1; j < nbs.size(); ++j) {
        UpdateEvent e{0.0, EventKind::Annihilation, x, nbs[i].site, nbs[j].site};
        fn(e, (1.0 - alpha) * nbs[i].weight * nbs[j].weight);
      }
      if (alpha > 0.0) fn(UpdateEvent{0.0, EventKind::Voter, x, nbs[i].site, nbs[i].site}, alpha * nbs[i].weight);
    }
  }
}

template <class Apply>
DenseGenerator build_from_updates(const NPParams& p, const Kernel& k, Apply&& apply) {
  const std::size_t n = k.size();
  auto g = DenseGenerator::for_sites(n);
  for (std::uint64_t s = 0; s < g.dim(); ++s) {
    const SpinConfig from = SpinConfig::from_bits(n, s);
    for_each_update(p, k, [&](const UpdateEvent& e, double rate) {
      SpinConfig to = from;
      apply(to, e);
      g.add_rate(s, to.to_bits(), rate);
    });
  }
  return g;
}

// v <- sum_k Poisson(k; lt) P^k v with P = I + G/l, for one chunk.
template <class MatVec>
std::vector<double> uniformized_chunk(std::size_t dim, double lt, double l, std::span<const double> v,
                                      MatVec&& matvec) {
  std::vector<double> term(v.begin(), v.end()), next(dim), out(dim, 0.0);
  double weight = std::exp(-lt);
  double cumulative = 0.0;
  for (std::size_t k = 0;; ++k) {
    for (std::size_t i = 0; i < dim; ++i) out[i] += weight * term[i];
    cumulative += weight;
    if (1.0 - cumulative <= 1e-14 || k > 10000) break;
    matvec(term, next);
    for (std::size_t i = 0; i < dim; ++i) term[i] += next[i] / l;
    weight *= lt / static_cast<double>(k + 1);
  }
  return out;
}

template <class MatVec>
std::vector<double> uniformized(const DenseGenerator& g, double t, std::span<const double> v, MatVec&& matvec) {
  if (t < 0.0) throw std::invalid_argument("semigroup: negative time");
  if (v.size() != g.dim()) throw std::invalid_argument("semigroup: vector size mismatch");
  const double l = g.max_exit_rate() * 1.01;
  std::vector<double> cur(v.begin(), v.end());
  if (t == 0.0 || l == 0.0) return cur;
  const auto chunks = static_cast<std::size_t>(std::ceil(l * t / 10.0));
  const double tau = t / static_cast<double>(chunks);
  for (std::size_t c = 0; c < chunks; ++c) cur = uniformized_chunk(g.dim(), l * tau, l, cur, matvec);
  return cur;
}

}  // namespace

DenseGenerator build_generator_from_events(const NPParams& p, const Kernel& k) {
  return build_from_updates(p, k, [](SpinConfig& s, const UpdateEvent& e) { apply_event_forward(s, e); });
}

DenseGenerator build_generator_dual(const NPParams& p, const Kernel& k) {
  return build_from_updates(p, k, [](SpinConfig& s, const UpdateEvent& e) { apply_event_dual(s, e); });
}

std::vector<double> semigroup_apply(const DenseGenerator& g, double t, std::span<const double> v) {
  const std::size_t d = g.dim();
  return uniformized(g, t, v, [&](const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < d; ++i) {
      const auto r = g.row(i);
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += r[j] * x[j];
      y[i] = s;
    }
  });
}

std::vector<double> semigroup_apply_left(const DenseGenerator& g, double t, std::span<const double> mu) {
  const std::size_t d = g.dim();
  return uniformized(g, t, mu, [&](const std::vector<double>& x, std::vector<double>& y) {
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      if (x[i] == 0.0) continue;
      const auto r = g.row(i);
      for (std::size_t j = 0; j < d; ++j) y[j] += x[i] * r[j];
    }
  });
}

double semigroup_self_check(const DenseGenerator& g, double t, std::span<const double> v) {
  const auto full = semigroup_apply(g, t, v);
  const auto half = semigroup_apply(g, t / 2, semigroup_apply(g, t / 2, v));
  double scale = 0.0, gap = 0.0;
  for (std::size_t i = 0; i < full.size(); ++i) {
    scale = std::max(scale, std::abs(full[i]));
    gap = std::max(gap, std::abs(full[i] - half[i]));
  }
  return scale > 0.0 ? gap / scale : gap;
}

namespace {

std::vector<double> parity_indicator(std::size_t dim, std::uint64_t set) {
  std::vector<double> phi(dim);
  for (std::uint64_t s = 0; s < dim; ++s) phi[s] = (std::popcount(s & set) & 1) ? 1.0 : 0.0;
  return phi;
}

}  // namespace

double feynman_kac_residual(const NPParams& p, const Kernel& k, double t, std::uint64_t set_a,
                            std::uint64_t set_b) {
  const auto lnp = build_generator_np(p, k);
  const auto ldual = build_generator_dual(p, k);
  const double lhs = semigroup_apply(lnp, t, parity_indicator(lnp.dim(), set_b))[set_a];
  const double rhs = semigroup_apply(ldual, t, parity_indicator(ldual.dim(), set_a))[set_b];
  return std::abs(lhs - rhs);
}

FeynmanKacReport feynman_kac_battery(const NPParams& p, const Kernel& k, double t) {
  const auto lnp = build_generator_np(p, k);
  const auto ldual = build_generator_dual(p, k);
  const std::size_t dim = lnp.dim();
  // Row B of the forward table is P_t phi_B; row A of the dual table is Q_t phi_A.
  std::vector<std::vector<double>> fwd(dim), dual(dim);
  for (std::uint64_t s = 0; s < dim; ++s) {
    fwd[s] = semigroup_apply(lnp, t, parity_indicator(dim, s));
    dual[s] = semigroup_apply(ldual, t, parity_indicator(dim, s));
  }
  FeynmanKacReport r;
  for (std::uint64_t a = 0; a < dim; ++a)
    for (std::uint64_t b = 0; b < dim; ++b) {
      r.max_residual = std::max(r.max_residual, std::abs(fwd[b][a] - dual[a][b]));
      ++r.pairs;
    }
  return r;
}

double parity_deviation(std::span<const double> u) {
  double prod = 1.0;
  for (double v : u) prod *= 1.0 - 2.0 * v;
  return prod;
}

double parity_deviation_enumerate(std::span<const double> u) {
  const std::size_t n = u.size();
  if (n > 30) throw std::invalid_argument("parity_deviation_enumerate: too many variables");
  double even = 0.0, odd = 0.0;
  for (std::uint64_t outcome = 0; outcome < (std::uint64_t{1} << n); ++outcome) {
    double prob = 1.0;
    for (std::size_t m = 0; m < n; ++m) prob *= ((outcome >> m) & 1u) ? u[m] : 1.0 - u[m];
    if (std::popcount(outcome) & 1)
      odd += prob;
    else
      even += prob;
  }
  return even - odd;
}

std::vector<double> parity_functionals(std::span<const double> nu, std::size_t sites) {
  if (sites > 10) throw std::invalid_argument("parity_functionals: at most 10 sites");
  const std::size_t dim = std::size_t{1} << sites;
  if (nu.size() != dim) throw std::invalid_argument("parity_functionals: measure size mismatch");
  std::vector<double> out(dim, 0.0);
  for (std::uint64_t b = 0; b < dim; ++b)
    for (std::uint64_t eta = 0; eta < dim; ++eta)
      if (std::popcount(b & eta) & 1) out[b] += nu[eta];
  return out;
}

std::vector<double> reconstruct_from_parities(std::span<const double> parities, double mass, std::size_t sites) {
  const std::size_t dim = std::size_t{1} << sites;
  // W(A) = integral of prod_{x in A}(2 eta(x) - 1) = (-1)^|A| (mass - 2 nu{<1_A,eta> odd}).
  std::vector<double> moment(dim, 0.0);  // integral of prod_{x in A} eta(x)
  std::vector<std::uint64_t> order(dim);
  for (std::uint64_t a = 0; a < dim; ++a) order[a] = a;
  std::stable_sort(order.begin(), order.end(),
                   [](std::uint64_t l, std::uint64_t r) { return std::popcount(l) < std::popcount(r); });
  for (std::uint64_t a : order) {
    const int size_a = std::popcount(a);
    if (a == 0) {
      moment[a] = mass;
      continue;
    }
    const double w = ((size_a & 1) ? -1.0 : 1.0) * (mass - 2.0 * parities[a]);
    double rest = 0.0;
    // Proper subsets B of A: 2^|B| (-1)^|A-B| m(B).
    for (std::uint64_t b = (a - 1) & a;; b = (b - 1) & a) {
      const int size_b = std::popcount(b);
      const double sign = ((size_a - size_b) & 1) ? -1.0 : 1.0;
      rest += std::ldexp(1.0, size_b) * sign * moment[b];
      if (b == 0) break;
    }
    moment[a] = (w - rest) / std::ldexp(1.0, size_a);
  }
  // Inclusion–exclusion: nu{eta = 1_S} = sum_{A ⊇ S} (-1)^|A-S| m(A).
  std::vector<double> nu(dim, 0.0);
  const std::uint64_t full = dim - 1;
  for (std::uint64_t s = 0; s < dim; ++s) {
    const std::uint64_t free = full & ~s;
    double acc = 0.0;
    for (std::uint64_t extra = free;; extra = (extra - 1) & free) {
      acc += ((std::popcount(extra) & 1) ? -1.0 : 1.0) * moment[s | extra];
      if (extra == 0) break;
    }
    nu[s] = acc;
  }
  return nu;
}

MeasureCheck measure_determination_check(std::span<const double> nu1, std::span<const double> nu2,
                                         std::size_t sites, double tol) {
  const auto par1 = parity_functionals(nu1, sites);
  const auto par2 = parity_functionals(nu2, sites);
  MeasureCheck out;
  double m1 = 0.0, m2 = 0.0;
  for (double v : nu1) m1 += v;
  for (double v : nu2) m2 += v;
  if (std::abs(m1 - m2) > tol) {
    out.mass_mismatch = true;
    return out;
  }
  for (std::uint64_t b = 0; b < par1.size(); ++b) {
    if (std::abs(par1[b] - par2[b]) > tol) {
      out.witness = b;
      return out;
    }
  }
  const auto rec1 = reconstruct_from_parities(par1, m1, sites);
  const auto rec2 = reconstruct_from_parities(par2, m2, sites);
  double err = 0.0, gap = 0.0;
  for (std::size_t i = 0; i < rec1.size(); ++i) {
    err = std::max({err, std::abs(rec1[i] - nu1[i]), std::abs(rec2[i] - nu2[i])});
    gap = std::max(gap, std::abs(rec1[i] - rec2[i]));
  }
  out.reconstruction_error = err;
  out.equal = gap <= std::max(tol, 1e-9);
  return out;
}

}  // namespace ipsd
