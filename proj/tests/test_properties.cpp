// Randomized property checks. Each generator draws from a seeded stream so a
// failure reproduces; the failing case is printed via CAPTURE.
#include <doctest.h>

#include <bit>
#include <cmath>
#include <set>
#include <vector>

#include "ipsd/exact.hpp"
#include "ipsd/momdual.hpp"
#include "ipsd/parallel.hpp"
#include "oracles.hpp"

using namespace ipsd;

namespace {

constexpr int kTrials = 300;

std::size_t pick(Rng& rng, std::size_t n) { return static_cast<std::size_t>(uniform01(rng) * n) % n; }

// Ring (for irreducibility) plus random extra edges, rows normalized.
Kernel random_kernel(Rng& rng) {
  switch (pick(rng, 3)) {
    case 0:
      return Kernel::torus(1 + static_cast<int>(pick(rng, 2)), 3 + static_cast<int>(pick(rng, 3)));
    case 1:
      return Kernel::complete(2 + pick(rng, 6));
    default: {
      const std::size_t n = 3 + pick(rng, 6);
      std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
      for (Site x = 0; x < n; ++x) {
        w[x][(x + 1) % n] = 0.1 + uniform01(rng);
        for (int extra = 0; extra < 2; ++extra) {
          const Site y = static_cast<Site>(pick(rng, n));
          if (y != x) w[x][y] += uniform01(rng);
        }
      }
      std::vector<Edge> edges;
      for (Site x = 0; x < n; ++x) {
        double total = 0.0;
        for (double v : w[x]) total += v;
        for (Site y = 0; y < n; ++y)
          if (w[x][y] > 0.0) edges.push_back({x, y, w[x][y] / total});
      }
      return Kernel::from_edges(n, edges);
    }
  }
}

SpinConfig random_config(std::size_t n, Rng& rng, double density = 0.5) {
  SpinConfig eta(n);
  for (Site x = 0; x < n; ++x) eta[x] = uniform01(rng) < density;
  return eta;
}

UpdateEvent random_event(std::size_t n, Rng& rng, bool annihilation_only = false) {
  UpdateEvent e;
  e.kind = (annihilation_only || uniform01(rng) < 0.5) ? EventKind::Annihilation : EventKind::Voter;
  e.focal = static_cast<Site>(pick(rng, n));
  do e.first = static_cast<Site>(pick(rng, n));
  while (e.first == e.focal);
  e.second = e.first;
  if (e.kind == EventKind::Annihilation && n >= 3)
    do e.second = static_cast<Site>(pick(rng, n));
    while (e.second == e.focal || e.second == e.first);
  return e;
}

WalkerKind random_walker(Rng& rng) {
  switch (pick(rng, 3)) {
    case 0:
      return WalkerKind::crw();
    case 1:
      return WalkerKind::dbarw(3.0 * uniform01(rng));
    default:
      return WalkerKind::bcrw(-2.0 * uniform01(rng), -uniform01(rng));
  }
}

}  // namespace

TEST_CASE("kernels are stochastic with zero trace and frequencies sum to one") {
  Rng rng = derive_stream(100, 0, "prop-kernel");
  for (int trial = 0; trial < kTrials; ++trial) {
    const Kernel k = random_kernel(rng);
    CAPTURE(k.describe());
    for (Site x = 0; x < k.size(); ++x) {
      double row = 0.0;
      for (const auto& nb : k.neighbors(x)) row += nb.weight;
      CHECK(std::abs(row - 1.0) < 1e-12);
      CHECK(k.q(x, x) == 0.0);
    }
    const auto eta = random_config(k.size(), rng);
    for (Site x = 0; x < k.size(); ++x)
      CHECK(std::abs(local_frequency(k, eta, x, 0) + local_frequency(k, eta, x, 1) - 1.0) < 1e-14);
  }
}

TEST_CASE("forward updates only touch the focal site") {
  Rng rng = derive_stream(101, 0, "prop-local");
  for (int trial = 0; trial < 5 * kTrials; ++trial) {
    const std::size_t n = 3 + pick(rng, 8);
    const auto eta = random_config(n, rng);
    const auto e = random_event(n, rng);
    SpinConfig after = eta;
    apply_event_forward(after, e);
    for (Site x = 0; x < n; ++x)
      if (x != e.focal) CHECK(after[x] == eta[x]);
  }
}

TEST_CASE("each update and its transpose preserve the parity pairing") {
  Rng rng = derive_stream(102, 0, "prop-pairing");
  for (int trial = 0; trial < 5 * kTrials; ++trial) {
    const std::size_t n = 3 + pick(rng, 8);
    const auto eta = random_config(n, rng), xi = random_config(n, rng);
    const auto e = random_event(n, rng);
    SpinConfig fwd = eta, dual = xi;
    apply_event_forward(fwd, e);
    apply_event_dual(dual, e);
    CHECK(inner_parity(fwd, xi) == inner_parity(eta, dual));
  }
}

TEST_CASE("annihilation-only dual updates never empty a nonempty configuration") {
  Rng rng = derive_stream(103, 0, "prop-support");
  for (int trial = 0; trial < kTrials; ++trial) {
    const std::size_t n = 3 + pick(rng, 8);
    SpinConfig xi = random_config(n, rng, 0.3);
    if (xi.count() == 0) xi[pick(rng, n)] = 1;
    for (int k = 0; k < 200; ++k) {
      apply_event_dual(xi, random_event(n, rng, true));
      REQUIRE(xi.count() > 0);
    }
  }
}

TEST_CASE("constant configurations are absorbing in the symmetric model") {
  Rng rng = derive_stream(104, 0, "prop-absorb");
  for (int trial = 0; trial < kTrials; ++trial) {
    const Kernel k = random_kernel(rng);
    const auto p = NPParams::symmetric_model(uniform01(rng));
    for (int c : {0, 1}) {
      const SpinConfig eta(k.size(), c);
      for (Site x = 0; x < k.size(); ++x) CHECK(flip_rate_general(p, k, eta, x) == 0.0);
    }
  }
}

TEST_CASE("flip rates agree with the oracle for random parameters") {
  Rng rng = derive_stream(105, 0, "prop-rates");
  for (int trial = 0; trial < kTrials; ++trial) {
    const Kernel k = random_kernel(rng);
    const double lambda = 0.2 + 3 * uniform01(rng);
    const auto p = NPParams::general(lambda, uniform01(rng) / lambda * 0.99, lambda * uniform01(rng) * 0.99);
    const auto q = oracle::dense_q(k);
    const auto eta = random_config(k.size(), rng);
    std::vector<int> v(k.size());
    for (Site x = 0; x < k.size(); ++x) v[x] = eta[x];
    for (Site x = 0; x < k.size(); ++x)
      CHECK(std::abs(flip_rate_general(p, k, eta, x) - oracle::flip_rate(p.lambda, p.alpha01, p.alpha10, q, v, x)) <
            1e-12);
  }
}

TEST_CASE("parity deviation product equals enumeration") {
  Rng rng = derive_stream(106, 0, "prop-parity");
  for (int trial = 0; trial < kTrials; ++trial) {
    std::vector<double> u(pick(rng, 13));
    for (double& v : u) v = uniform01(rng);
    CHECK(std::abs(parity_deviation(u) - parity_deviation_enumerate(u)) < 1e-12);
  }
}

TEST_CASE("walker transitions change the total by the allowed amounts") {
  Rng rng = derive_stream(107, 0, "prop-walker");
  const auto m = Migration::nearest_neighbor(Torus{1, 6}, 1.0);
  for (int trial = 0; trial < kTrials; ++trial) {
    const auto kind = random_walker(rng);
    ParticleState xi(6);
    for (Site x = 0; x < 6; ++x) xi.add(x, static_cast<std::int64_t>(pick(rng, 5)));
    for (const auto& tr : walker_rates(kind, xi, m)) {
      CHECK(tr.rate > 0.0);
      if (tr.kind == TransitionKind::Pair) CHECK(xi[tr.from] >= 2);
      ParticleState next = xi;
      apply_transition(next, kind, tr);
      const auto delta = static_cast<long long>(next.total()) - static_cast<long long>(xi.total());
      switch (kind.type) {
        case WalkerType::Crw:
          CHECK((delta == 0 || delta == -1));
          break;
        case WalkerType::Dbarw:
          CHECK(delta % 2 == 0);
          break;
        case WalkerType::Bcrw:
          CHECK(delta >= -1);
          break;
      }
    }
  }
}

TEST_CASE("generator duality holds for random admissible parameters") {
  Rng rng = derive_stream(108, 0, "prop-battery");
  for (int trial = 0; trial < 40; ++trial) {
    DiffusionParams sig;
    sig.s = 6.0 * uniform01(rng);
    CHECK(generator_duality_battery(sig, Coordinates::Sigma, 50, rng).max_gap < 1e-10);
    DiffusionParams p;
    p.s = -3.0 * uniform01(rng);
    p.mu = -uniform01(rng);
    CHECK(generator_duality_battery(p, Coordinates::P, 50, rng).max_gap < 1e-10);
  }
}

TEST_CASE("moment function is bounded by one on admissible states") {
  Rng rng = derive_stream(109, 0, "prop-moment");
  for (int trial = 0; trial < 5 * kTrials; ++trial) {
    std::vector<double> v(5);
    for (double& x : v) x = 2.0 * uniform01(rng) - 1.0;
    ParticleState xi(5);
    for (Site x = 0; x < 5; ++x) xi.add(x, static_cast<std::int64_t>(pick(rng, 6)));
    CHECK(std::abs(moment_eval(v, xi)) <= 1.0);
  }
}

TEST_CASE("both diffusion schemes stay in the unit interval") {
  Rng rng = derive_stream(110, 0, "prop-diffusion");
  for (int trial = 0; trial < 60; ++trial) {
    const auto m = Migration::nearest_neighbor(Torus{1, 5}, 3.0 * uniform01(rng));
    DiffusionParams prm;
    prm.s = 20.0 * uniform01(rng) - 10.0;
    prm.mu = 6.0 * uniform01(rng) - 3.0;
    prm.noise_n = 0.5 + 4.0 * uniform01(rng);
    std::vector<double> p(5), q(5);
    for (std::size_t x = 0; x < 5; ++x) p[x] = q[x] = uniform01(rng);
    for (int k = 0; k < 200; ++k) {
      em_step(prm, m, p, 0.02, rng);
      split_step(prm, m, q, 0.02, rng);
      for (std::size_t x = 0; x < 5; ++x) REQUIRE((p[x] >= 0.0 && p[x] <= 1.0 && q[x] >= 0.0 && q[x] <= 1.0));
    }
  }
}

TEST_CASE("derived streams are distinct and reproducible") {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t master : {0ull, 1ull, 2ull})
    for (std::uint64_t i = 0; i < 200; ++i)
      for (const char* role : {"a", "b", "forward", "dual"}) seeds.insert(stream_seed(master, i, role));
  CHECK(seeds.size() == 3 * 200 * 4);
  Rng a = derive_stream(5, 7, "x"), b = derive_stream(5, 7, "x");
  for (int k = 0; k < 10; ++k) CHECK(a() == b());
}

TEST_CASE("replicate results do not depend on the thread count") {
  auto body = [](std::size_t i) {
    Rng rng = derive_stream(11, i, "prop-threads");
    double s = 0.0;
    for (int k = 0; k < 100; ++k) s += uniform01(rng);
    return s;
  };
  const auto one = run_replicates<double>(97, 1, body);
  for (unsigned t : {2u, 3u, 8u}) CHECK(run_replicates<double>(97, t, body) == one);
}
