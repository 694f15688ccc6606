#include <doctest.h>

#include <cmath>
#include <vector>

#include "ipsd/diffusion.hpp"
#include "ipsd/stats.hpp"

using namespace ipsd;

namespace {

DiffusionParams params(double s, double mu) {
  DiffusionParams p;
  p.s = s;
  p.mu = mu;
  return p;
}

// Site-mean of p at each grid time, one row per replicate.
std::vector<std::vector<double>> mean_paths(const DiffusionParams& prm, const Migration& m,
                                            const std::vector<double>& p0, const std::vector<double>& grid,
                                            double dt, std::size_t reps, std::uint64_t seed, double sign,
                                            bool complement) {
  std::vector<std::vector<double>> out(reps, std::vector<double>(grid.size()));
  for (std::size_t i = 0; i < reps; ++i) {
    Rng rng = derive_stream(seed, i, "mirror");
    simulate_diffusion(prm, m, p0, grid, dt, rng,
                       [&](std::size_t j, std::span<const double> p) {
                         double s = 0.0;
                         for (double v : p) s += complement ? 1.0 - v : v;
                         out[i][j] = s / p.size();
                       },
                       sign);
  }
  return out;
}

}  // namespace

TEST_CASE("migration stencils") {
  const Torus t{1, 8};
  const auto nn = Migration::nearest_neighbor(t, 1.0);
  CHECK(nn.size() == 8);
  CHECK(nn.total_rate() == doctest::Approx(1.0));
  CHECK(nn.out(0).size() == 2);
  for (const auto& e : nn.out(3)) CHECK(e.weight == doctest::Approx(0.5));
  const auto box = Migration::parse("box:2:0.1", Torus{2, 5});
  CHECK(box.out(0).size() == 8);
  CHECK(box.total_rate() == doctest::Approx(0.8));
  CHECK(Migration::parse("none", t).total_rate() == 0.0);
  CHECK(Migration::parse("nn:3", Torus{2, 4}).out(5).size() == 4);
  CHECK_THROWS(Migration::parse("ring:1", t));
  // On a side-3 ring, displacements +1 and -1 hit distinct targets; side 3 with range 2 merges nothing.
  CHECK(Migration::parse("box:3:1", Torus{1, 3}).out(0).size() == 2);
}

TEST_CASE("drift examples") {
  const auto m = Migration::nearest_neighbor(Torus{1, 6}, 1.0);
  const std::vector<double> half(6, 0.5), zero(6, 0.0), one(6, 1.0), quarter(6, 0.25);
  CHECK(drift(params(3.0, 2.0), m, half, 2) == 0.0);
  CHECK(drift(params(3.0, 0.7), m, zero, 2) == 0.0);
  CHECK(drift(params(3.0, 0.7), m, one, 2) == 0.0);
  CHECK(drift(params(2.0, 2.0), m, quarter, 0) == doctest::Approx(0.1875).epsilon(1e-15));
  std::vector<double> bump(6, 0.0);
  bump[1] = 1.0;
  CHECK(drift(params(0.0, 2.0), m, bump, 0) == doctest::Approx(0.5));
  CHECK(drift(params(0.0, 2.0), m, bump, 1) == doctest::Approx(-1.0));
}

TEST_CASE("Euler-Maruyama step keeps boundaries absorbing and rejects bad steps") {
  const auto m = Migration::nearest_neighbor(Torus{1, 5}, 1.0);
  Rng rng = derive_stream(1, 0, "em");
  for (double c : {0.0, 1.0}) {
    std::vector<double> p(5, c);
    for (int k = 0; k < 100; ++k) em_step(params(2.0, 0.5), m, p, 0.01, rng);
    for (double v : p) CHECK(v == c);
  }
  std::vector<double> p(5, 0.5);
  CHECK_THROWS(em_step(params(0.0, 2.0), m, p, 0.0, rng));
  CHECK_THROWS(em_step(params(0.0, 2.0), m, p, -1e-3, rng));
  for (int k = 0; k < 2000; ++k) {
    em_step(params(5.0, 2.0), m, p, 0.05, rng);
    for (double v : p) REQUIRE((v >= 0.0 && v <= 1.0));
  }
}

TEST_CASE("neutral site mean is a martingale") {
  const auto m = Migration::nearest_neighbor(Torus{1, 16}, 1.0);
  const std::vector<double> p0(16, 0.5), grid{1.0};
  const std::size_t reps = 10000;
  std::vector<double> site0(reps);
  for (std::size_t i = 0; i < reps; ++i) {
    Rng rng = derive_stream(17, i, "martingale");
    simulate_diffusion(params(0.0, 2.0), m, p0, grid, 1e-3, rng,
                       [&](std::size_t, std::span<const double> p) { site0[i] = p[0]; });
  }
  const auto e = estimate(site0);
  CHECK(std::abs(e.mean - 0.5) < 3 * e.std_error);
}

TEST_CASE("sigma transform round trip") {
  CHECK(sigma_transform({std::vector<double>(4, 0.5)}).p == std::vector<double>(4, 0.0));
  CHECK(sigma_transform({std::vector<double>(4, 0.0)}).p == std::vector<double>(4, 1.0));
  Rng rng = derive_stream(2, 0, "sigma");
  for (int trial = 0; trial < 100; ++trial) {
    DiffusionState s{std::vector<double>(10)};
    // Dyadic values make the affine map exact in floating point.
    for (double& v : s.p) v = std::floor(uniform01(rng) * 1024.0) / 1024.0;
    CHECK(sigma_inverse(sigma_transform(s)).p == s.p);
  }
}

TEST_CASE("complement under mirrored noise follows the transformed parameters") {
  const auto m = Migration::nearest_neighbor(Torus{1, 8}, 1.0);
  std::vector<double> p0(8), q0(8);
  for (std::size_t x = 0; x < 8; ++x) {
    p0[x] = 0.2 + 0.075 * x;
    q0[x] = 1.0 - p0[x];
  }
  const std::vector<double> grid{0.5, 1.0, 2.0};
  for (auto [s, mu] : {std::pair{1.5, 0.5}, std::pair{-1.0, -0.5}, std::pair{2.0, 3.0}}) {
    const auto prime = params(-s * (1.0 - mu), mu / (mu - 1.0));
    const auto lhs = mean_paths(params(s, mu), m, p0, grid, 1e-3, 400, 5, 1.0, true);
    const auto rhs = mean_paths(prime, m, q0, grid, 1e-3, 400, 5, -1.0, false);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      std::vector<double> a(400), b(400), d(400);
      for (std::size_t i = 0; i < 400; ++i) {
        a[i] = lhs[i][j];
        b[i] = rhs[i][j];
        d[i] = a[i] - b[i];
      }
      const auto ea = estimate(a), eb = estimate(b);
      CHECK(std::abs(ea.mean - eb.mean) <= 3 * std::hypot(ea.std_error, eb.std_error));
      // Pathwise the two agree up to rounding, which the square root amplifies near 0 and 1.
      CHECK(std::abs(estimate(d).mean) < 1e-4);
    }
  }
}

TEST_CASE("at mu = 2 the two types evolve symmetrically") {
  const auto m = Migration::nearest_neighbor(Torus{1, 8}, 1.0);
  std::vector<double> p0(8), q0(8);
  for (std::size_t x = 0; x < 8; ++x) {
    p0[x] = x < 4 ? 0.3 : 0.6;
    q0[x] = 1.0 - p0[x];
  }
  const std::vector<double> grid{1.0, 3.0};
  const auto lhs = mean_paths(params(2.0, 2.0), m, p0, grid, 1e-3, 400, 6, 1.0, true);
  const auto rhs = mean_paths(params(2.0, 2.0), m, q0, grid, 1e-3, 400, 6, -1.0, false);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    std::vector<double> a(400), b(400);
    for (std::size_t i = 0; i < 400; ++i) {
      a[i] = lhs[i][j];
      b[i] = rhs[i][j];
    }
    const auto ea = estimate(a), eb = estimate(b);
    CHECK(std::abs(ea.mean - eb.mean) <= 3 * std::hypot(ea.std_error, eb.std_error));
  }
}

TEST_CASE("paired noise at dt couples to the dt/2 path") {
  const auto m = Migration::nearest_neighbor(Torus{1, 4}, 1.0);
  const std::vector<double> p0(4, 0.5), grid{1.0};
  double coupled = 0.0, independent = 0.0;
  for (std::size_t i = 0; i < 200; ++i) {
    double coarse = 0, fine = 0, other = 0;
    Rng r1 = derive_stream(8, i, "pair"), r2 = derive_stream(8, i, "pair"), r3 = derive_stream(8, i, "other");
    auto at0 = [](double& out) { return [&out](std::size_t, std::span<const double> p) { out = p[0]; }; };
    simulate_diffusion(params(1.0, 2.0), m, p0, grid, 0.01, r1, at0(coarse), 1.0, true);
    simulate_diffusion(params(1.0, 2.0), m, p0, grid, 0.005, r2, at0(fine));
    simulate_diffusion(params(1.0, 2.0), m, p0, grid, 0.005, r3, at0(other));
    coupled += std::abs(coarse - fine);
    independent += std::abs(coarse - other);
  }
  CHECK(coupled < 0.25 * independent);
}

TEST_CASE("initial condition specs") {
  CHECK(parse_diffusion_initial("const:0.25", 3) == std::vector<double>{0.25, 0.25, 0.25});
  CHECK(parse_diffusion_initial("values:0,0.5,1", 3) == std::vector<double>{0.0, 0.5, 1.0});
  CHECK_THROWS(parse_diffusion_initial("values:0,0.5", 3));
  CHECK_THROWS(parse_diffusion_initial("const:1.5", 3));
  CHECK_THROWS(parse_diffusion_initial("uniform", 3));
}

TEST_CASE("heterozygosity statistic") {
  const auto m = Migration::nearest_neighbor(Torus{1, 8}, 1.0);
  const std::vector<double> grid{0.0, 1.0, 5.0};
  const auto zero = heterozygosity_stat(params(1.0, 2.0), m, std::vector<double>(8, 0.0), grid, 0.1, 0, 1e-3,
                                        {50, 1, 1});
  for (const auto& e : zero) CHECK(e.mean == 0.0);

  // kappa = 0 counts exactly the paths not at a boundary.
  const std::vector<std::vector<double>> paths{{0.5, 0.0}, {0.5, 1.0}, {0.5, 0.3}, {0.5, 1e-9}};
  const auto h = heterozygosity_stat(paths, 0.0);
  CHECK(h[0].mean == 1.0);
  CHECK(h[1].mean == 0.5);
  CHECK(heterozygosity_stat(paths, 0.2)[1].mean == 0.25);
  CHECK_THROWS(heterozygosity_stat(params(1.0, 2.0), m, std::vector<double>(8, 0.5), grid, 0.5, 0, 1e-3, {10, 1, 1}));
}

TEST_CASE("strong selection at mu = 2 keeps site 0 heterozygous") {
  const auto m = Migration::nearest_neighbor(Torus{1, 32}, 1.0);
  const std::vector<double> grid{10.0};
  const auto h = heterozygosity_stat(params(20.0, 2.0), m, std::vector<double>(32, 0.5), grid, 0.1, 0, 1e-3,
                                     {200, 4, 1});
  CHECK(h[0].mean > 0.0);
  CHECK(wilson_lower(static_cast<std::size_t>(std::llround(h[0].mean * 200)), 200, kZ99) > 0.0);
}

TEST_CASE("boundary-split scheme") {
  const auto m = Migration::nearest_neighbor(Torus{1, 6}, 1.0);
  auto prm = params(-1.0, -0.5);
  prm.scheme = Scheme::BoundarySplit;
  CHECK(parse_scheme("split") == Scheme::BoundarySplit);
  CHECK(parse_scheme("em") == Scheme::EulerClamp);
  CHECK_THROWS(parse_scheme("milstein"));
  Rng rng = derive_stream(9, 0, "split");
  for (double c : {0.0, 1.0}) {
    std::vector<double> p(6, c);
    for (int k = 0; k < 100; ++k) split_step(prm, m, p, 0.01, rng);
    for (double v : p) CHECK(v == c);
  }
  std::vector<double> p(6, 0.5);
  for (int k = 0; k < 1000; ++k) {
    split_step(prm, m, p, 0.05, rng);
    for (double v : p) REQUIRE((v >= 0.0 && v <= 1.0));
  }
  const std::vector<double> grid{1.0};
  CHECK_THROWS(simulate_diffusion(prm, m, p, grid, 0.01, rng, [](std::size_t, std::span<const double>) {}, 1.0, true));
  CHECK_THROWS(simulate_diffusion(prm, m, p, grid, 0.01, rng, [](std::size_t, std::span<const double>) {}, -1.0));
}

TEST_CASE("boundary-split scheme keeps the neutral mean") {
  const auto m = Migration::nearest_neighbor(Torus{1, 8}, 1.0);
  auto prm = params(0.0, 2.0);
  prm.scheme = Scheme::BoundarySplit;
  std::vector<double> p0(8);
  for (std::size_t x = 0; x < 8; ++x) p0[x] = 0.1 * (x + 1);
  const std::vector<double> grid{2.0};
  const std::size_t reps = 10000;
  std::vector<double> site0(reps);
  for (std::size_t i = 0; i < reps; ++i) {
    Rng rng = derive_stream(19, i, "split-martingale");
    simulate_diffusion(prm, m, p0, grid, 1e-2, rng, [&](std::size_t, std::span<const double> p) {
      double s = 0.0;
      for (double v : p) s += v;
      site0[i] = s / 8.0;
    });
  }
  const auto e = estimate(site0);
  CHECK(std::abs(e.mean - 0.45) < 3 * e.std_error);
}
