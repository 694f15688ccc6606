#include "ipsd/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace ipsd {

std::size_t Torus::size() const {
  std::size_t n = 1;
  for (int i = 0; i < dim; ++i) n *= static_cast<std::size_t>(side);
  return n;
}

std::vector<int> Torus::coords(Site x) const {
  std::vector<int> c(static_cast<std::size_t>(dim));
  for (int i = dim - 1; i >= 0; --i) {
    c[static_cast<std::size_t>(i)] = static_cast<int>(x % static_cast<Site>(side));
    x /= static_cast<Site>(side);
  }
  return c;
}

Site Torus::site(std::span<const int> c) const {
  Site x = 0;
  for (int v : c) {
    const int w = ((v % side) + side) % side;
    x = x * static_cast<Site>(side) + static_cast<Site>(w);
  }
  return x;
}

Site Torus::shift(Site x, std::span<const int> displacement) const {
  auto c = coords(x);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += displacement[i];
  return site(c);
}

Kernel::Kernel(std::vector<std::vector<Neighbor>> out, std::optional<Torus> torus, std::string description)
    : out_(std::move(out)), torus_(torus), description_(std::move(description)) {
  in_.resize(out_.size());
  sum_sq_.assign(out_.size(), 0.0);
  for (Site x = 0; x < out_.size(); ++x) {
    auto& row = out_[x];
    std::sort(row.begin(), row.end(), [](const Neighbor& a, const Neighbor& b) { return a.site < b.site; });
    for (const auto& nb : row) {
      in_[nb.site].push_back({x, nb.weight});
      sum_sq_[x] += nb.weight * nb.weight;
    }
  }
  validate();
}

void Kernel::validate() const {
  const std::size_t n = out_.size();
  if (n < 2) throw std::invalid_argument("kernel: need at least 2 sites");
  for (Site x = 0; x < n; ++x) {
    double sum = 0.0;
    for (const auto& nb : out_[x]) {
      if (nb.site >= n) throw std::invalid_argument("kernel: neighbor outside site set");
      if (nb.site == x) throw std::invalid_argument("kernel: q(x,x) must be 0 (zero trace)");
      if (!(nb.weight > 0.0) || nb.weight > 1.0) throw std::invalid_argument("kernel: weights must lie in (0,1]");
      sum += nb.weight;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("kernel: row " + std::to_string(x) + " does not sum to 1");
  }
  // Strong connectivity: everything reachable from 0 along q and along q^T.
  auto reach = [&](const std::vector<std::vector<Neighbor>>& adj) {
    std::vector<char> seen(n, 0);
    std::vector<Site> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      const Site x = stack.back();
      stack.pop_back();
      for (const auto& nb : adj[x]) {
        if (!seen[nb.site]) {
          seen[nb.site] = 1;
          ++count;
          stack.push_back(nb.site);
        }
      }
    }
    return count == n;
  };
  if (!reach(out_) || !reach(in_)) throw std::invalid_argument("kernel: not irreducible");
}

Kernel Kernel::torus(int dim, int side) {
  if (dim < 1) throw std::invalid_argument("torus: dimension must be >= 1");
  if (side < 3) throw std::invalid_argument("torus: side length must be >= 3");
  const Torus t{dim, side};
  const std::size_t n = t.size();
  const double w = 1.0 / (2.0 * dim);
  std::vector<std::vector<Neighbor>> out(n);
  std::vector<int> disp(static_cast<std::size_t>(dim), 0);
  for (Site x = 0; x < n; ++x) {
    for (int i = 0; i < dim; ++i) {
      for (int sgn : {-1, 1}) {
        disp.assign(static_cast<std::size_t>(dim), 0);
        disp[static_cast<std::size_t>(i)] = sgn;
        out[x].push_back({t.shift(x, disp), w});
      }
    }
  }
  return Kernel(std::move(out), t, "torus d=" + std::to_string(dim) + " L=" + std::to_string(side));
}

Kernel Kernel::complete(std::size_t n) {
  if (n < 2) throw std::invalid_argument("complete kernel: need N >= 2");
  const double w = 1.0 / static_cast<double>(n - 1);
  std::vector<std::vector<Neighbor>> out(n);
  for (Site x = 0; x < n; ++x)
    for (Site y = 0; y < n; ++y)
      if (y != x) out[x].push_back({y, w});
  return Kernel(std::move(out), std::nullopt, "complete N=" + std::to_string(n));
}

Kernel Kernel::from_edges(std::size_t n, std::span<const Edge> edges) {
  std::vector<std::map<Site, double>> rows(n);
  for (const auto& e : edges) {
    if (e.from >= n || e.to >= n) throw std::invalid_argument("kernel: edge endpoint outside site set");
    rows[e.from][e.to] += e.weight;
  }
  std::vector<std::vector<Neighbor>> out(n);
  for (Site x = 0; x < n; ++x)
    for (const auto& [y, w] : rows[x]) out[x].push_back({y, w});
  return Kernel(std::move(out), std::nullopt, "explicit N=" + std::to_string(n));
}

double Kernel::q(Site x, Site y) const {
  const auto& row = out_[x];
  auto it = std::lower_bound(row.begin(), row.end(), y, [](const Neighbor& a, Site s) { return a.site < s; });
  return (it != row.end() && it->site == y) ? it->weight : 0.0;
}

std::string Kernel::describe() const { return description_; }

std::size_t SpinConfig::count() const {
  std::size_t c = 0;
  for (auto v : values) c += v;
  return c;
}

SpinConfig SpinConfig::indicator(std::size_t n, std::span<const Site> set) {
  SpinConfig s(n);
  for (Site x : set) {
    if (x >= n) throw std::invalid_argument("indicator: site outside site set");
    s.values[x] = 1;
  }
  return s;
}

SpinConfig SpinConfig::from_bits(std::size_t n, std::uint64_t bits) {
  SpinConfig s(n);
  for (std::size_t x = 0; x < n; ++x) s.values[x] = static_cast<std::uint8_t>((bits >> x) & 1u);
  return s;
}

std::uint64_t SpinConfig::to_bits() const {
  std::uint64_t b = 0;
  for (std::size_t x = 0; x < values.size() && x < 64; ++x) b |= static_cast<std::uint64_t>(values[x] & 1u) << x;
  return b;
}

double local_frequency(const Kernel& k, const SpinConfig& eta, Site x, int type) {
  if (x >= k.size()) throw std::out_of_range("local_frequency: site outside kernel");
  if (eta.size() != k.size()) throw std::invalid_argument("local_frequency: configuration size mismatch");
  double f = 0.0;
  for (const auto& nb : k.neighbors(x))
    if (eta[nb.site] == type) f += nb.weight;
  return f;
}

}  // namespace ipsd
