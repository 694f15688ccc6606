// Acceptance suite: one PASS/FAIL line per criterion. Every tolerance, seed
// and replicate count is fixed here. Exit status is nonzero if any line fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "ipsd/exact.hpp"
#include "ipsd/harness.hpp"
#include "ipsd/meanfield.hpp"
#include "ipsd/momdual.hpp"

using namespace ipsd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<Site> random_subset(std::size_t n, Rng& rng, bool nonempty) {
  for (;;) {
    std::vector<Site> out;
    for (Site x = 0; x < n; ++x)
      if (uniform01(rng) < 0.5) out.push_back(x);
    if (!nonempty || !out.empty()) return out;
  }
}

// 1. Pathwise parity duality, zero tolerance.
Outcome pathwise() {
  constexpr std::size_t kLogs = 10000, kPairs = 20;
  const Kernel k = Kernel::torus(2, 4);
  std::size_t checked = 0, violations = 0;
  for (double alpha : {0.0, 0.3, 0.7}) {
    const auto p = NPParams::symmetric_model(alpha);
    for (std::size_t i = 0; i < kLogs; ++i) {
      Rng rng = derive_stream(1001, i, alpha == 0.0 ? "acc1-a0" : alpha < 0.5 ? "acc1-a3" : "acc1-a7");
      const auto log = sample_event_log(p, k, 5.0, rng);
      for (std::size_t j = 0; j < kPairs; ++j) {
        const auto a = random_subset(k.size(), rng, false), b = random_subset(k.size(), rng, false);
        const auto r = pathwise_duality_check(log, k.size(), a, b);
        checked += r.checked;
        violations += r.violations;
      }
    }
  }
  return {violations == 0, fmt("%zu event-grid checks, %zu violations", checked, violations)};
}

std::vector<Kernel> small_kernels() {
  return {Kernel::torus(1, 3), Kernel::torus(1, 4), Kernel::torus(1, 5),
          Kernel::complete(3), Kernel::complete(4), Kernel::complete(5)};
}

// 2. Event-built generator equals flip-rate generator to 1e-12.
Outcome generator_equality() {
  double worst = 0.0;
  for (const auto& k : small_kernels())
    for (double alpha : {0.0, 0.3, 0.7}) {
      const auto p = NPParams::symmetric_model(alpha);
      worst = std::max(worst, max_abs_difference(build_generator_from_events(p, k), build_generator_np(p, k)));
    }
  return {worst <= 1e-12, fmt("max entry gap %.3e (tol 1e-12)", worst)};
}

// 3. Feynman-Kac residual below 1e-9 for |E| <= 4.
Outcome feynman_kac() {
  double worst = 0.0;
  std::size_t pairs = 0;
  for (const auto& k : {Kernel::torus(1, 3), Kernel::torus(1, 4), Kernel::complete(3), Kernel::complete(4)})
    for (double alpha : {0.0, 0.3, 0.7})
      for (double t : {0.1, 1.0, 5.0}) {
        const auto r = feynman_kac_battery(NPParams::symmetric_model(alpha), k, t);
        worst = std::max(worst, r.max_residual);
        pairs += r.pairs;
      }
  return {worst < 1e-9, fmt("%zu (A,B,t) cases, max residual %.3e (tol 1e-9)", pairs, worst)};
}

// 4. Parity-deviation product equals enumeration to 1e-12.
Outcome parity_deviation_check() {
  Rng rng = derive_stream(1004, 0, "acc4");
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> u(1 + static_cast<std::size_t>(uniform01(rng) * 12) % 12);
    for (double& v : u) v = uniform01(rng);
    worst = std::max(worst, std::abs(parity_deviation(u) - parity_deviation_enumerate(u)));
  }
  return {worst <= 1e-12, fmt("100 vectors, max gap %.3e (tol 1e-12)", worst)};
}

// 5. Bernoulli(1/2) invariance at alpha = 0.
Outcome bernoulli_invariance() {
  const Kernel k = Kernel::torus(2, 4);
  Rng rng = derive_stream(1005, 0, "acc5-sets");
  std::vector<std::vector<Site>> sets;
  for (int i = 0; i < 10; ++i) sets.push_back(random_subset(k.size(), rng, true));
  const std::vector<double> times{1.0, 5.0};
  const auto rows = bernoulli_parity_table(NPParams::symmetric_model(0.0), k, sets, times, {100000, 1005, 1});
  double worst_z = 0.0;
  bool ok = rows.size() == sets.size() * times.size(), all_survive = true;
  for (const auto& r : rows) {
    const double z = std::abs(r.direct.mean - 0.5) / r.direct.std_error;
    worst_z = std::max(worst_z, z);
    ok &= z <= 3.0;
    all_survive &= r.survival.mean == 1.0;
  }
  return {ok && all_survive, fmt("%zu rows, max |direct-1/2|/se %.2f (tol 3), dual survival %s", rows.size(), worst_z,
                                 all_survive ? "1 in every replicate" : "below 1")};
}

// 6. Mean-field ODE converges to the closed-form equilibrium.
Outcome meanfield_equilibrium() {
  Rng rng = derive_stream(1006, 0, "acc6");
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double lambda = 0.25 + 3.75 * uniform01(rng);
    const double a10 = lambda * 0.9 * uniform01(rng);
    const double a01 = 0.9 * uniform01(rng) / lambda;
    const double pstar = equilibrium(lambda, a01, a10);
    const double a = 1 - lambda * a01, b = lambda - a10;
    // Linear relaxation rate at the equilibrium sets the horizon.
    const double rate = pstar * (1 - pstar) * (a + b) / (lambda * (1 - pstar) + pstar);
    const double horizon = std::max(200.0, 20.0 / rate);
    for (double p0 : {0.1, 0.5, 0.9}) {
      const auto path = integrate_density(p0, lambda, a01, a10, horizon, 1e-2);
      worst = std::max(worst, std::abs(path.states.back()[0] - pstar));
    }
  }
  bool symmetric = true;
  for (double alpha : {0.0, 0.3, 0.7, 0.99}) symmetric &= equilibrium(1.0, alpha, alpha) == 0.5;
  return {worst <= 1e-6 && symmetric,
          fmt("20 triples x 3 starts, max |p(T)-p*| %.3e (tol 1e-6), symmetric p* = 1/2 %s", worst,
              symmetric ? "exactly" : "NOT exactly")};
}

// 7. Complete-graph comparator.
Outcome complete_graph() {
  const auto r = meanfield_comparator(200, NPParams::symmetric_model(0.5), 0.3, 3.0, {200, 1007, 1});
  return {r.median <= 0.05, fmt("N=200, 200 reps, median sup-distance %.4f (tol 0.05)", r.median)};
}

// 8. Generator-level moment duality.
Outcome generator_battery() {
  double worst = 0.0;
  std::size_t pairs = 0, degenerate = 0;
  Rng rng = derive_stream(1008, 0, "acc8");
  for (double s : {0.5, 1.0, 5.0}) {
    DiffusionParams prm;
    prm.s = s;
    const auto r = generator_duality_battery(prm, Coordinates::Sigma, 10000, rng, 8, 6);
    worst = std::max(worst, r.max_gap);
    pairs += r.pairs;
    degenerate += r.degenerate;
  }
  for (double s : {-0.5, -1.0})
    for (double mu : {-1.0, -0.5, 0.0}) {
      DiffusionParams prm;
      prm.s = s;
      prm.mu = mu;
      const auto r = generator_duality_battery(prm, Coordinates::P, 10000, rng, 8, 6);
      worst = std::max(worst, r.max_gap);
      pairs += r.pairs;
    }
  return {worst < 1e-10, fmt("%zu pairs (%zu with zeros on the support), max gap %.3e (tol 1e-10)", pairs, degenerate,
                             worst)};
}

// 9. Semigroup-level moment duality by Monte Carlo.
Outcome moment_mc() {
  struct Case {
    const char* name;
    double s, mu;
    Coordinates c;
    double p0;
    const char* xi;
  };
  const Case cases[] = {{"s=0 CRW", 0.0, 2.0, Coordinates::P, 0.25, "sites:0,1"},
                        {"s=1 mu=2 DBARW", 1.0, 2.0, Coordinates::Sigma, 0.5, "delta:0:2"},
                        {"s=-1 mu=-0.5 BCRW", -1.0, -0.5, Coordinates::P, 0.5, "sites:0,1"}};
  const auto m = Migration::nearest_neighbor(Torus{1, 8}, 1.0);
  const std::vector<double> times{0.25, 0.5};
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    DiffusionParams prm;
    prm.s = c.s;
    prm.mu = c.mu;
    const auto rows = moment_duality_mc(prm, c.c, m, std::vector<double>(8, c.p0), ParticleState::parse(c.xi, 8), times,
                                        1e-3, {100000, 1009, 1});
    for (const auto& r : rows) {
      ok &= r.pass;
      detail += fmt("[%s t=%.2f z=%.2f z_half=%.2f shift=%.1e<=%.1e] ", c.name, r.time, r.z, r.z_half, r.dt_shift,
                    r.dt_shift_se);
    }
  }
  return {ok, detail + "(|z|<4 at dt and dt/2, shift within combined se)"};
}

// 10. Walker invariants.
Outcome walker_invariants() {
  const auto m = Migration::nearest_neighbor(Torus{1, 8}, 1.0);
  std::size_t parity_violations = 0;
  for (std::size_t i = 0; i < 10000; ++i) {
    Rng rng = derive_stream(1010, i, "acc10-dbarw");
    ParticleState xi0(8);
    xi0.add(static_cast<Site>(i % 8), static_cast<std::int64_t>(1 + i % 5));
    const auto parity = xi0.total() % 2;
    WalkerObservers obs;
    obs.on_event = [&](double, const ParticleState& xi, int) { parity_violations += xi.total() % 2 != parity; };
    simulate_walker(WalkerKind::dbarw(1.0), m, xi0, 10.0, 100000, rng, obs);
  }
  std::size_t crw_not_one = 0;
  const std::vector<Site> five{0, 1, 3, 5, 6};
  for (std::size_t i = 0; i < 1000; ++i) {
    Rng rng = derive_stream(1010, i, "acc10-crw");
    crw_not_one += simulate_walker(WalkerKind::crw(), m, ParticleState::at_sites(8, five), 200.0, 100000, rng)
                       .terminal.total() != 1;
  }
  const auto bcrw = survival_probability(WalkerKind::bcrw(-1.0, -0.5), m, ParticleState::parse("delta:0:1", 8), 20.0,
                                         100000, {10000, 1010, 1});
  const bool ok = parity_violations == 0 && crw_not_one == 0 && bcrw.survival.mean == 1.0;
  return {ok, fmt("DBARW parity violations %zu/10000 runs; CRW runs not at 1 particle %zu/1000; BCRW survival %.4f "
                  "(%zu extinct, %zu cap hits)",
                  parity_violations, crw_not_one, bcrw.survival.mean, bcrw.extinct, bcrw.cap_hits)};
}

// 11. Coexistence and extinction probes.
Outcome probes() {
  const auto m32 = Migration::nearest_neighbor(Torus{1, 32}, 1.0);
  const auto co = coexistence_probe(20.0, m32, 10.0, 50.0, 0.1, 1e-3, {200, 1011, 1});
  const auto m16 = Migration::nearest_neighbor(Torus{1, 16}, 1.0);
  const std::vector<double> times{1.0, 2.0, 5.0, 10.0};
  const auto ex = extinction_probe(-1.0, -0.5, m16, std::vector<double>(16, 0.5), 0.0,
                                   ParticleState::parse("delta:0:1", 16), times, 1e-3, {4000, 1011, 1});
  std::string rows;
  for (const auto& r : ex.rows)
    rows += fmt("t=%g %.4f<=%.4f%s ", r.time, r.forward.mean, r.dual.mean, r.within_bound ? "" : "(X)");
  const bool ok = co.survival_lower99 > 0.0 && co.het_lower99 > 0.0 && ex.bound_holds && ex.forward_decreasing &&
                  ex.dual_decreasing;
  return {ok, fmt("s=20: survival %.3f (lower99 %.3f), het %.3f (lower99 %.3f); s=-1: ", co.survival.survival.mean,
                  co.survival_lower99, co.het.mean, co.het_lower99) +
                  rows +
                  fmt("decreasing fwd=%d dual=%d", ex.forward_decreasing ? 1 : 0, ex.dual_decreasing ? 1 : 0)};
}

// 12. Byte-identical outputs across thread counts.
Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "ipsd-acceptance-determinism";
  fs::remove_all(root);
  const RunConfig base = RunConfig::from_string(R"(
seed = 1012
[spin-run]
kernel = torus:2:4
reps = 8
[dual-run]
kernel = torus:2:4
B = 0,5
reps = 8
[parity-check]
mode = mc
kernel = torus:1:5
A = 0,1
B = 1,3
reps = 2000
[exact-check]
kernel = torus:1:4
[meanfield]
comparator_n = 40
reps = 16
T = 2
[diffusion-run]
L = 8
T = 0.5
reps = 64
[walker-run]
kind = bcrw
L = 8
reps = 64
[moment-check]
L = 8
reps = 2000
dt = 0.01
[coexist-probe]
L = 8
s = 5
het_time = 1
horizon = 2
dt = 0.01
reps = 64
[extinct-probe]
L = 8
times = 0.5,1
dt = 0.01
reps = 64
[sweep]
target = walker-run
key = T
values = 1,2
)");
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  std::size_t files = 0, mismatches = 0;
  for (const auto& cmd : subcommands()) {
    for (unsigned threads : {1u, 4u}) {
      RunConfig cfg = base;
      cfg.command = cmd;
      cfg.threads = threads;
      cfg.out_dir = (root / std::to_string(threads)).string();
      run(cfg);
    }
    for (const char* ext : {".csv", ".json"}) {
      const auto a = slurp(root / "1" / (cmd + ext)), b = slurp(root / "4" / (cmd + ext));
      ++files;
      mismatches += a.empty() || a != b;
    }
  }
  fs::remove_all(root);
  return {mismatches == 0, fmt("%zu files compared between 1 and 4 threads, %zu differ", files, mismatches)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"pathwise parity duality", pathwise},
      {"generator-construction equality", generator_equality},
      {"Feynman-Kac duality", feynman_kac},
      {"parity-deviation lemma", parity_deviation_check},
      {"Bernoulli(1/2) invariance", bernoulli_invariance},
      {"mean-field equilibrium", meanfield_equilibrium},
      {"complete-graph convergence", complete_graph},
      {"moment-duality generator battery", generator_battery},
      {"moment-duality Monte Carlo", moment_mc},
      {"walker invariants", walker_invariants},
      {"coexistence/extinction probes", probes},
      {"determinism", determinism}};
  int failures = 0, index = 0;
  for (const auto& [name, fn] : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::printf("%s %2d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", index - failures, index);
  return failures == 0 ? 0 : 1;
}
