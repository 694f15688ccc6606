#include "ipsd/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ipsd/diffusion.hpp"
#include "ipsd/exact.hpp"
#include "ipsd/meanfield.hpp"
#include "ipsd/momdual.hpp"
#include "ipsd/parallel.hpp"
#include "ipsd/spin.hpp"
#include "ipsd/walkers.hpp"

namespace ipsd {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::uint64_t parse_u64(const std::string& text, const char* what) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    if (!text.empty() && text[0] == '-') throw std::invalid_argument(what);
    v = std::stoull(text, &used, 0);
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string(what) + ": not an unsigned integer: " + text);
  }
  if (used != text.size()) throw std::invalid_argument(std::string(what) + ": trailing characters: " + text);
  return v;
}

void flatten(const boost::property_tree::ptree& tree, const std::string& prefix,
             std::map<std::string, std::string>& out) {
  for (const auto& [key, child] : tree) {
    const std::string full = prefix.empty() ? key : prefix + "." + key;
    if (child.empty())
      out[full] = child.data();
    else
      flatten(child, full, out);
  }
}

RunConfig from_ptree(const boost::property_tree::ptree& tree) {
  RunConfig cfg;
  std::map<std::string, std::string> flat;
  flatten(tree, "", flat);
  for (const auto& [k, v] : flat) cfg.set(k, v);
  return cfg;
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw std::invalid_argument("config: " + std::string(e.what()));
  }
  return from_ptree(tree);
}

RunConfig RunConfig::from_string(const std::string& text) {
  std::istringstream in(text);
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw std::invalid_argument("config: " + std::string(e.what()));
  }
  return from_ptree(tree);
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "seed") {
    seed = parse_u64(value, "seed");
  } else if (key == "reps") {
    reps = parse_u64(value, "reps");
  } else if (key == "threads") {
    threads = static_cast<unsigned>(std::max<std::uint64_t>(1, parse_u64(value, "threads")));
  } else if (key == "out") {
    out_dir = value;
  } else if (key == "command") {
    command = value;
  } else {
    entries_[key] = value;
  }
}

std::optional<std::string> RunConfig::lookup(const std::string& key) const {
  if (!command.empty()) {
    auto it = entries_.find(command + "." + key);
    if (it != entries_.end()) return it->second;
  }
  auto it = entries_.find(key);
  if (it != entries_.end()) return it->second;
  return std::nullopt;
}

bool RunConfig::has(const std::string& key) const { return lookup(key).has_value(); }

std::string RunConfig::get(const std::string& key, const std::string& fallback) const {
  return lookup(key).value_or(fallback);
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  const auto v = lookup(key);
  if (!v) return fallback;
  std::size_t used = 0;
  double d = 0;
  try {
    d = std::stod(*v, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: " + key + " is not a number: " + *v);
  }
  if (used != v->size()) throw std::invalid_argument("config: " + key + " is not a number: " + *v);
  return d;
}

long long RunConfig::get_int(const std::string& key, long long fallback) const {
  const auto v = lookup(key);
  if (!v) return fallback;
  std::size_t used = 0;
  long long d = 0;
  try {
    d = std::stoll(*v, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: " + key + " is not an integer: " + *v);
  }
  if (used != v->size()) throw std::invalid_argument("config: " + key + " is not an integer: " + *v);
  return d;
}

std::vector<double> RunConfig::get_list(const std::string& key, const std::string& fallback) const {
  const std::string text = get(key, fallback);
  std::vector<double> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    if (end > start) out.push_back(std::stod(text.substr(start, end - start)));
    start = end + 1;
  }
  return out;
}

McOptions RunConfig::mc(std::size_t default_reps) const {
  if (!seed) throw std::invalid_argument("a master seed is required (--seed, config 'seed', or IPSD_SEED)");
  const std::size_t r = reps.value_or(default_reps);
  if (r == 0) throw std::invalid_argument("reps must be positive");
  return {r, *seed, threads};
}

json RunConfig::echo() const {
  json j;
  j["command"] = command;
  if (seed) j["seed"] = *seed;
  if (reps) j["reps"] = *reps;
  json kv = json::object();
  for (const auto& [k, v] : entries_) kv[k] = v;
  j["settings"] = kv;
  return j;
}

void apply_seed_fallback(RunConfig& cfg) {
  if (cfg.seed) return;
  if (const char* env = std::getenv("IPSD_SEED"); env && *env) cfg.seed = parse_u64(env, "IPSD_SEED");
}

namespace {

json estimate_json(const MCEstimate& e) {
  json j{{"mean", e.mean}, {"std_error", e.std_error}, {"reps", e.reps}, {"seed", e.seed}};
  if (e.dt) j["dt"] = *e.dt;
  return j;
}

class Csv {
 public:
  explicit Csv(std::initializer_list<std::string_view> header) {
    bool first = true;
    for (auto h : header) {
      if (!first) out_ += ',';
      out_ += h;
      first = false;
    }
    out_ += '\n';
  }
  Csv& cell(double v) { return raw(format_double(v)); }
  Csv& cell(std::uint64_t v) { return raw(std::to_string(v)); }
  Csv& cell(int v) { return raw(std::to_string(v)); }
  Csv& cell(std::string_view v) { return raw(v); }
  Csv& end() {
    out_ += '\n';
    at_start_ = true;
    return *this;
  }
  const std::string& str() const { return out_; }

 private:
  Csv& raw(std::string_view v) {
    if (!at_start_) out_ += ',';
    out_ += v;
    at_start_ = false;
    return *this;
  }
  std::string out_;
  bool at_start_ = true;
};

Kernel kernel_from(const RunConfig& cfg, const std::string& fallback) {
  const std::string spec = cfg.get("kernel", fallback);
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.size() == 3 && parts[0] == "torus") return Kernel::torus(std::stoi(parts[1]), std::stoi(parts[2]));
  if (parts.size() == 2 && parts[0] == "complete") return Kernel::complete(std::stoul(parts[1]));
  throw std::invalid_argument("config: kernel must be torus:d:L or complete:n, got " + spec);
}

NPParams np_from(const RunConfig& cfg) {
  NPParams p = (cfg.has("lambda") || cfg.has("alpha01") || cfg.has("alpha10"))
                   ? NPParams::general(cfg.get_double("lambda", 1.0), cfg.get_double("alpha01", 0.0),
                                       cfg.get_double("alpha10", 0.0))
                   : NPParams::symmetric_model(cfg.get_double("alpha", 0.0));
  p.validate();
  return p;
}

Torus torus_from(const RunConfig& cfg, int default_side) {
  Torus t{static_cast<int>(cfg.get_int("d", 1)), static_cast<int>(cfg.get_int("L", default_side))};
  if (t.dim < 1 || t.side < 3) throw std::invalid_argument("config: torus needs d >= 1 and L >= 3");
  return t;
}

DiffusionParams diffusion_from(const RunConfig& cfg, double s, double mu) {
  DiffusionParams prm{cfg.get_double("s", s), cfg.get_double("mu", mu), cfg.get_double("N", 1.0),
                      parse_scheme(cfg.get("scheme", "em"))};
  prm.validate();
  return prm;
}

double positive(const RunConfig& cfg, const std::string& key, double fallback) {
  const double v = cfg.get_double(key, fallback);
  if (!(v > 0.0)) throw std::invalid_argument("config: " + key + " must be positive");
  return v;
}

std::vector<double> even_grid(double horizon, std::size_t samples) {
  if (samples < 2) return {horizon};
  std::vector<double> g(samples);
  for (std::size_t j = 0; j < samples; ++j) g[j] = horizon * static_cast<double>(j) / static_cast<double>(samples - 1);
  return g;
}

std::vector<double> time_list(const RunConfig& cfg, const std::string& key, const std::string& fallback) {
  auto t = cfg.get_list(key, fallback);
  if (t.empty()) throw std::invalid_argument("config: " + key + " must list at least one time");
  for (std::size_t j = 0; j < t.size(); ++j)
    if (t[j] < 0.0 || (j > 0 && t[j] < t[j - 1]))
      throw std::invalid_argument("config: " + key + " must be nonnegative and sorted");
  return t;
}

WalkerKind walker_from(const RunConfig& cfg) {
  const std::string kind = cfg.get("kind", "crw");
  if (kind == "crw") return WalkerKind::crw();
  if (kind == "dbarw") return WalkerKind::dbarw(cfg.get_double("b", 0.0));
  if (kind == "bcrw") return WalkerKind::bcrw(cfg.get_double("s", -1.0), cfg.get_double("mu", -0.5));
  throw std::invalid_argument("config: kind must be crw, dbarw or bcrw");
}

std::uint64_t cap_from(const RunConfig& cfg) {
  const long long cap = cfg.get_int("cap", 100000);
  if (cap < 1) throw std::invalid_argument("config: cap must be positive");
  return static_cast<std::uint64_t>(cap);
}

RunOutput cmd_spin_run(const RunConfig& cfg) {
  const McOptions mc = cfg.mc(1);
  const NPParams p = np_from(cfg);
  const Kernel k = kernel_from(cfg, "torus:2:8");
  const double horizon = positive(cfg, "T", 10.0);
  const std::string init = cfg.get("init", "bernoulli:0.5");
  const auto grid = even_grid(horizon, static_cast<std::size_t>(cfg.get_int("samples", 101)));
  const auto paths = run_replicates<std::vector<double>>(mc.reps, mc.threads, [&](std::size_t i) {
    Rng rng = derive_stream(mc.seed, i, "spin-run");
    const SpinConfig eta0 = parse_initial_condition(init, k.size(), rng);
    const auto traj = simulate_gillespie(p, k, eta0, horizon, rng);
    std::vector<double> out;
    for (double t : grid) out.push_back(static_cast<double>(traj.at(t).count()) / static_cast<double>(k.size()));
    return out;
  });
  Csv csv{"replicate", "t", "density"};
  std::vector<double> last;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (std::size_t j = 0; j < grid.size(); ++j) csv.cell(static_cast<std::uint64_t>(i)).cell(grid[j]).cell(paths[i][j]).end();
    last.push_back(paths[i].back());
  }
  json res{{"kernel", k.describe()}, {"horizon", horizon}};
  if (last.size() >= 2) res["terminal_density"] = estimate_json(estimate(last, mc.seed));
  else res["terminal_density"] = last.front();
  return {res, csv.str()};
}

RunOutput cmd_dual_run(const RunConfig& cfg) {
  const McOptions mc = cfg.mc(1);
  const NPParams p = np_from(cfg);
  const Kernel k = kernel_from(cfg, "torus:2:8");
  const double horizon = positive(cfg, "T", 10.0);
  const auto b = parse_site_list(cfg.get("B", "0"));
  const auto grid = even_grid(horizon, static_cast<std::size_t>(cfg.get_int("samples", 101)));
  const SpinConfig start = SpinConfig::indicator(k.size(), b);
  const auto paths = run_replicates<std::vector<double>>(mc.reps, mc.threads, [&](std::size_t i) {
    Rng rng = derive_stream(mc.seed, i, "dual-run");
    const auto traj = simulate_dual_fresh(p, k, start, horizon, rng);
    std::vector<double> out;
    for (double t : grid) out.push_back(static_cast<double>(traj.at(t).count()));
    return out;
  });
  Csv csv{"replicate", "t", "occupied"};
  std::vector<double> alive;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (std::size_t j = 0; j < grid.size(); ++j)
      csv.cell(static_cast<std::uint64_t>(i)).cell(grid[j]).cell(static_cast<std::uint64_t>(paths[i][j])).end();
    alive.push_back(paths[i].back() > 0 ? 1.0 : 0.0);
  }
  json res{{"kernel", k.describe()}, {"horizon", horizon}};
  if (alive.size() >= 2) res["survival"] = estimate_json(estimate(alive, mc.seed));
  return {res, csv.str()};
}

RunOutput cmd_parity_check(const RunConfig& cfg) {
  const NPParams p = np_from(cfg);
  const Kernel k = kernel_from(cfg, "torus:2:4");
  const std::string mode = cfg.get("mode", "pathwise");
  const auto a = parse_site_list(cfg.get("A", "0"));
  const auto b = parse_site_list(cfg.get("B", "1"));
  json res{{"kernel", k.describe()}, {"mode", mode}};
  if (mode == "pathwise") {
    const McOptions mc = cfg.mc(1000);
    const double horizon = positive(cfg, "T", 5.0);
    const auto checks = run_replicates<PathwiseCheck>(mc.reps, mc.threads, [&](std::size_t i) {
      Rng rng = derive_stream(mc.seed, i, "parity-pathwise");
      return pathwise_duality_check(sample_event_log(p, k, horizon, rng), k.size(), a, b);
    });
    Csv csv{"replicate", "checked", "violations"};
    std::uint64_t checked = 0, violations = 0;
    for (std::size_t i = 0; i < checks.size(); ++i) {
      csv.cell(static_cast<std::uint64_t>(i)).cell(static_cast<std::uint64_t>(checks[i].checked))
          .cell(static_cast<std::uint64_t>(checks[i].violations)).end();
      checked += checks[i].checked;
      violations += checks[i].violations;
    }
    res["checked"] = checked;
    res["violations"] = violations;
    res["pass"] = violations == 0;
    return {res, csv.str()};
  }
  if (mode == "mc") {
    const McOptions mc = cfg.mc(10000);
    const auto times = time_list(cfg, "times", "1");
    Csv csv{"t", "lhs", "lhs_se", "rhs", "rhs_se", "z"};
    json rows = json::array();
    for (double t : times) {
      const auto d = parity_duality_mc(p, k, a, b, t, mc);
      csv.cell(t).cell(d.lhs.mean).cell(d.lhs.std_error).cell(d.rhs.mean).cell(d.rhs.std_error).cell(d.z).end();
      rows.push_back({{"t", t}, {"lhs", estimate_json(d.lhs)}, {"rhs", estimate_json(d.rhs)}, {"z", d.z}});
    }
    res["rows"] = rows;
    return {res, csv.str()};
  }
  if (mode == "bernoulli") {
    const McOptions mc = cfg.mc(10000);
    const auto times = time_list(cfg, "times", "1,5");
    const auto table = bernoulli_parity_table(p, k, {b}, times, mc);
    Csv csv{"t", "direct", "direct_se", "half_survival", "half_survival_se", "survival", "z"};
    json rows = json::array();
    for (const auto& r : table) {
      csv.cell(r.time).cell(r.direct.mean).cell(r.direct.std_error).cell(r.half_survival.mean)
          .cell(r.half_survival.std_error).cell(r.survival.mean).cell(r.z).end();
      rows.push_back({{"t", r.time}, {"direct", estimate_json(r.direct)},
                      {"half_survival", estimate_json(r.half_survival)}, {"survival", estimate_json(r.survival)},
                      {"z", r.z}});
    }
    res["rows"] = rows;
    return {res, csv.str()};
  }
  throw std::invalid_argument("config: mode must be pathwise, mc or bernoulli");
}

RunOutput cmd_exact_check(const RunConfig& cfg) {
  const NPParams p = np_from(cfg);
  const Kernel k = kernel_from(cfg, "torus:1:4");
  if (k.size() > DenseGenerator::kMaxSites) throw std::invalid_argument("exact-check: at most 12 sites");
  const auto times = time_list(cfg, "times", "0.1,1,5");
  json res{{"kernel", k.describe()}};
  if (p.symmetric)
    res["generator_gap"] = max_abs_difference(build_generator_np(p, k), build_generator_from_events(p, k));
  Csv csv{"t", "max_residual", "pairs"};
  json rows = json::array();
  double worst = 0.0;
  for (double t : times) {
    const auto fk = feynman_kac_battery(p, k, t);
    worst = std::max(worst, fk.max_residual);
    csv.cell(t).cell(fk.max_residual).cell(static_cast<std::uint64_t>(fk.pairs)).end();
    rows.push_back({{"t", t}, {"max_residual", fk.max_residual}, {"pairs", fk.pairs}});
  }
  res["feynman_kac"] = rows;
  res["max_residual"] = worst;
  return {res, csv.str()};
}

RunOutput cmd_meanfield(const RunConfig& cfg) {
  const double lambda = cfg.get_double("lambda", 1.0);
  const double a01 = cfg.get_double("alpha01", cfg.get_double("alpha", 0.5));
  const double a10 = cfg.get_double("alpha10", cfg.get_double("alpha", 0.5));
  const double p0 = cfg.get_double("p0", 0.3);
  if (!(p0 >= 0.0 && p0 <= 1.0)) throw std::invalid_argument("config: p0 must lie in [0,1]");
  const double horizon = positive(cfg, "T", 50.0);
  const double dt = positive(cfg, "dt", 1e-3);
  const auto path = integrate_density(p0, lambda, a01, a10, horizon, dt);
  const std::size_t stride = std::max<std::size_t>(1, path.times.size() / 1000);
  Csv csv{"t", "p0"};
  for (std::size_t j = 0; j < path.times.size(); j += stride) csv.cell(path.times[j]).cell(path.states[j][0]).end();
  if ((path.times.size() - 1) % stride) csv.cell(path.times.back()).cell(path.states.back()[0]).end();
  json res{{"lambda", lambda}, {"alpha01", a01}, {"alpha10", a10}, {"terminal", path.states.back()[0]},
           {"terminal_error", path.terminal_error}};
  try {
    res["equilibrium"] = equilibrium(lambda, a01, a10);
  } catch (const std::invalid_argument& e) {
    res["equilibrium"] = nullptr;
    res["equilibrium_note"] = e.what();
  }
  if (cfg.has("comparator_n")) {
    const McOptions mc = cfg.mc(200);
    const auto n = static_cast<std::size_t>(cfg.get_int("comparator_n", 200));
    const NPParams np = (lambda == 1.0 && a01 == a10) ? NPParams::symmetric_model(a01)
                                                      : NPParams::general(lambda, a01, a10);
    const auto rep = meanfield_comparator(n, np, 1.0 - p0, horizon, mc, dt);
    res["comparator"] = {{"n", n}, {"median_sup", rep.median}, {"mean_sup", rep.mean}, {"reps", mc.reps}};
  }
  return {res, csv.str()};
}

RunOutput cmd_diffusion_run(const RunConfig& cfg) {
  const McOptions mc = cfg.mc(100);
  const DiffusionParams prm = diffusion_from(cfg, 0.0, 2.0);
  const Torus torus = torus_from(cfg, 16);
  const Migration m = Migration::parse(cfg.get("m", "nn:1"), torus);
  const double dt = positive(cfg, "dt", 1e-3);
  const double horizon = positive(cfg, "T", 1.0);
  const double kappa = cfg.get_double("kappa", 0.1);
  const auto x0 = static_cast<Site>(cfg.get_int("x0", 0));
  if (x0 >= m.size()) throw std::invalid_argument("config: x0 outside the torus");
  const auto p0 = parse_diffusion_initial(cfg.get("init", "const:0.5"), m.size());
  const auto grid = even_grid(horizon, static_cast<std::size_t>(cfg.get_int("samples", 11)));
  // Per replicate and grid time: spatial mean, spatial variance, p(x0).
  const auto runs = run_replicates<std::vector<double>>(mc.reps, mc.threads, [&](std::size_t i) {
    Rng rng = derive_stream(mc.seed, i, "diffusion-run");
    std::vector<double> out(3 * grid.size());
    simulate_diffusion(prm, m, p0, grid, dt, rng, [&](std::size_t j, std::span<const double> p) {
      double mean = 0.0, sq = 0.0;
      for (double v : p) mean += v;
      mean /= static_cast<double>(p.size());
      for (double v : p) sq += (v - mean) * (v - mean);
      out[3 * j] = mean;
      out[3 * j + 1] = sq / static_cast<double>(p.size());
      out[3 * j + 2] = p[x0];
    });
    return out;
  });
  std::vector<std::vector<double>> at_x0(runs.size(), std::vector<double>(grid.size()));
  for (std::size_t i = 0; i < runs.size(); ++i)
    for (std::size_t j = 0; j < grid.size(); ++j) at_x0[i][j] = runs[i][3 * j + 2];
  const auto het = heterozygosity_stat(at_x0, kappa);
  Csv csv{"t", "mean_p", "var_p", "het_stat"};
  json rows = json::array();
  for (std::size_t j = 0; j < grid.size(); ++j) {
    double mean = 0.0, var = 0.0;
    for (const auto& r : runs) {
      mean += r[3 * j];
      var += r[3 * j + 1];
    }
    mean /= static_cast<double>(runs.size());
    var /= static_cast<double>(runs.size());
    const double h = het.empty() ? 0.0 : het[j].mean;
    csv.cell(grid[j]).cell(mean).cell(var).cell(h).end();
    rows.push_back({{"t", grid[j]}, {"mean_p", mean}, {"var_p", var}, {"het_stat", h}});
  }
  return {json{{"dt", dt}, {"kappa", kappa}, {"x0", x0}, {"rows", rows}}, csv.str()};
}

RunOutput cmd_walker_run(const RunConfig& cfg) {
  const McOptions mc = cfg.mc(100);
  const WalkerKind kind = walker_from(cfg);
  const Torus torus = torus_from(cfg, 16);
  const Migration m = Migration::parse(cfg.get("m", "nn:1"), torus);
  const double horizon = positive(cfg, "T", 10.0);
  const std::uint64_t cap = cap_from(cfg);
  const ParticleState xi0 = ParticleState::parse(cfg.get("init", "delta:0:2"), m.size());
  const auto grid = even_grid(horizon, static_cast<std::size_t>(cfg.get_int("samples", 11)));
  struct Rec {
    std::vector<std::uint64_t> total, occupied;
    WalkerStop stop = WalkerStop::Horizon;
  };
  const auto recs = run_replicates<Rec>(mc.reps, mc.threads, [&](std::size_t i) {
    Rng rng = derive_stream(mc.seed, i, "walker-run");
    Rec r;
    r.total.resize(grid.size());
    r.occupied.resize(grid.size());
    WalkerObservers obs;
    obs.grid = grid;
    obs.on_grid = [&](std::size_t j, const ParticleState& xi) {
      r.total[j] = xi.total();
      r.occupied[j] = xi.occupied();
    };
    r.stop = simulate_walker(kind, m, xi0, horizon, cap, rng, obs).stop;
    return r;
  });
  Csv csv{"replicate", "t", "total", "occupied_sites"};
  std::vector<double> alive;
  std::size_t cap_hits = 0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    for (std::size_t j = 0; j < grid.size(); ++j)
      csv.cell(static_cast<std::uint64_t>(i)).cell(grid[j]).cell(recs[i].total[j]).cell(recs[i].occupied[j]).end();
    alive.push_back(recs[i].stop == WalkerStop::Extinct ? 0.0 : 1.0);
    cap_hits += recs[i].stop == WalkerStop::Cap;
  }
  json res{{"kind", std::string(kind.name())}, {"horizon", horizon}, {"cap", cap}, {"cap_hits", cap_hits}};
  if (alive.size() >= 2) res["survival"] = estimate_json(estimate(alive, mc.seed));
  return {res, csv.str()};
}

RunOutput cmd_moment_check(const RunConfig& cfg) {
  const McOptions mc = cfg.mc(10000);
  const DiffusionParams prm = diffusion_from(cfg, 0.0, 2.0);
  const std::string coords =
      cfg.get("coords", (prm.mu == 2.0 && prm.s > 0.0) ? "sigma" : "p");
  if (coords != "sigma" && coords != "p") throw std::invalid_argument("config: coords must be sigma or p");
  const Coordinates c = coords == "sigma" ? Coordinates::Sigma : Coordinates::P;
  const Torus torus = torus_from(cfg, 8);
  const Migration m = Migration::parse(cfg.get("m", "nn:1"), torus);
  const auto p0 = parse_diffusion_initial(cfg.get("init", "const:0.25"), m.size());
  const ParticleState xi0 = ParticleState::parse(cfg.get("xi", "sites:0,1"), m.size());
  const auto times = time_list(cfg, "times", "0.25,0.5");
  const double dt = positive(cfg, "dt", 1e-3);
  const auto rows = moment_duality_mc(prm, c, m, p0, xi0, times, dt, mc, cap_from(cfg));
  Csv csv{"t", "lhs", "lhs_se", "lhs_half", "lhs_half_se", "rhs", "rhs_se", "z", "z_half", "pass"};
  json jr = json::array();
  bool pass = true;
  for (const auto& r : rows) {
    csv.cell(r.time).cell(r.lhs.mean).cell(r.lhs.std_error).cell(r.lhs_half.mean).cell(r.lhs_half.std_error)
        .cell(r.rhs.mean).cell(r.rhs.std_error).cell(r.z).cell(r.z_half).cell(r.pass ? 1 : 0).end();
    jr.push_back({{"t", r.time}, {"lhs", estimate_json(r.lhs)}, {"lhs_half", estimate_json(r.lhs_half)},
                  {"rhs", estimate_json(r.rhs)}, {"z", r.z}, {"z_half", r.z_half}, {"dt_shift", r.dt_shift},
                  {"dt_shift_se", r.dt_shift_se}, {"pass", r.pass}});
    pass &= r.pass;
  }
  return {json{{"coords", coords}, {"walker", std::string(dual_walker(prm, c).name())}, {"rows", jr}, {"pass", pass}},
          csv.str()};
}

RunOutput cmd_coexist_probe(const RunConfig& cfg) {
  const McOptions mc = cfg.mc(1000);
  const double s = cfg.get_double("s", 20.0);
  const Torus torus = torus_from(cfg, 32);
  const Migration m = Migration::parse(cfg.get("m", "nn:1"), torus);
  const auto r = coexistence_probe(s, m, positive(cfg, "het_time", 10.0), positive(cfg, "horizon", 50.0),
                                   cfg.get_double("kappa", 0.1), positive(cfg, "dt", 1e-3), mc, cap_from(cfg));
  Csv csv{"s", "het", "het_se", "het_half", "het_lower99", "sigma_sq", "sigma_sq_bound", "survival_at_het_time",
          "survival", "survival_lower99", "cap_hits"};
  csv.cell(s).cell(r.het.mean).cell(r.het.std_error).cell(r.het_half.mean).cell(r.het_lower99).cell(r.sigma_sq.mean)
      .cell(r.sigma_sq_bound).cell(r.survival_at_het_time.mean).cell(r.survival.survival.mean)
      .cell(r.survival_lower99).cell(static_cast<std::uint64_t>(r.survival.cap_hits)).end();
  json res{{"s", s},
           {"kappa", r.kappa},
           {"het_time", r.het_time},
           {"walker_horizon", r.walker_horizon},
           {"het", estimate_json(r.het)},
           {"het_half", estimate_json(r.het_half)},
           {"het_lower99", r.het_lower99},
           {"sigma_sq", estimate_json(r.sigma_sq)},
           {"sigma_sq_bound", r.sigma_sq_bound},
           {"survival_at_het_time", estimate_json(r.survival_at_het_time)},
           {"survival", estimate_json(r.survival.survival)},
           {"survival_lower99", r.survival_lower99},
           {"cap_hits", r.survival.cap_hits},
           {"inconsistent", r.inconsistent}};
  return {res, csv.str()};
}

RunOutput cmd_extinct_probe(const RunConfig& cfg) {
  const McOptions mc = cfg.mc(2000);
  const double s = cfg.get_double("s", -1.0);
  const double mu = cfg.get_double("mu", -0.5);
  const Torus torus = torus_from(cfg, 16);
  const Migration m = Migration::parse(cfg.get("m", "nn:1"), torus);
  const auto p0 = parse_diffusion_initial(cfg.get("init", "const:0.5"), m.size());
  const ParticleState xi0 = ParticleState::parse(cfg.get("xi", "delta:0:1"), m.size());
  const auto times = time_list(cfg, "times", "1,2,5,10");
  const Scheme scheme = parse_scheme(cfg.get("scheme", "split"));
  const auto r = extinction_probe(s, mu, m, p0, cfg.get_double("eps", 0.0), xi0, times, positive(cfg, "dt", 1e-3),
                                  mc, cap_from(cfg), scheme);
  Csv csv{"t", "forward", "forward_se", "dual", "dual_se", "within_bound"};
  json rows = json::array();
  for (const auto& row : r.rows) {
    csv.cell(row.time).cell(row.forward.mean).cell(row.forward.std_error).cell(row.dual.mean)
        .cell(row.dual.std_error).cell(row.within_bound ? 1 : 0).end();
    rows.push_back({{"t", row.time}, {"forward", estimate_json(row.forward)}, {"dual", estimate_json(row.dual)},
                    {"within_bound", row.within_bound}});
  }
  json res{{"s", s},
           {"mu", mu},
           {"scheme", scheme_name(scheme)},
           {"epsilon", r.epsilon},
           {"rows", rows},
           {"bound_holds", r.bound_holds},
           {"forward_decreasing", r.forward_decreasing},
           {"dual_decreasing", r.dual_decreasing},
           {"cap_hits", r.cap_hits}};
  return {res, csv.str()};
}

RunOutput dispatch(const RunConfig& cfg);

RunOutput cmd_sweep(const RunConfig& cfg) {
  const std::string target = cfg.get("target", "");
  const std::string key = cfg.get("key", "");
  const std::string values = cfg.get("values", "");
  if (target.empty() || target == "sweep") throw std::invalid_argument("sweep: 'target' must name a subcommand");
  if (key.empty() || values.empty()) throw std::invalid_argument("sweep: 'key' and 'values' are required");
  std::vector<std::string> list;
  std::stringstream ss(values);
  for (std::string v; std::getline(ss, v, ',');)
    if (!v.empty()) list.push_back(v);
  json runs = json::array();
  std::string csv;
  for (const auto& v : list) {
    RunConfig sub = cfg;
    sub.command = target;
    const bool typed = key == "seed" || key == "reps";
    sub.set(typed ? key : target + "." + key, v);
    const RunOutput out = dispatch(sub);
    runs.push_back({{"value", v}, {"results", out.report}});
    // Prefix every row with the swept value; keep one header.
    std::stringstream rows(out.csv);
    std::string line;
    std::getline(rows, line);
    if (csv.empty()) csv = key + "," + line + "\n";
    while (std::getline(rows, line)) csv += v + "," + line + "\n";
  }
  return {json{{"target", target}, {"key", key}, {"runs", runs}}, csv};
}

const std::map<std::string, std::function<RunOutput(const RunConfig&)>>& table() {
  static const std::map<std::string, std::function<RunOutput(const RunConfig&)>> t{
      {"spin-run", cmd_spin_run},         {"dual-run", cmd_dual_run},           {"parity-check", cmd_parity_check},
      {"exact-check", cmd_exact_check},   {"meanfield", cmd_meanfield},         {"diffusion-run", cmd_diffusion_run},
      {"walker-run", cmd_walker_run},     {"moment-check", cmd_moment_check},   {"coexist-probe", cmd_coexist_probe},
      {"extinct-probe", cmd_extinct_probe}, {"sweep", cmd_sweep}};
  return t;
}

RunOutput dispatch(const RunConfig& cfg) {
  const auto it = table().find(cfg.command);
  if (it == table().end()) throw std::invalid_argument("unknown subcommand: " + cfg.command);
  return it->second(cfg);
}

}  // namespace

std::vector<std::string> subcommands() {
  std::vector<std::string> out;
  for (const auto& [name, fn] : table()) out.push_back(name);
  return out;
}

RunOutput execute(const RunConfig& cfg) {
  if (!cfg.seed) throw std::invalid_argument("a master seed is required (--seed, config 'seed', or IPSD_SEED)");
  if (cfg.reps && *cfg.reps == 0) throw std::invalid_argument("reps must be positive");
  RunOutput out = dispatch(cfg);
  json report{{"version", std::string(kVersion)}, {"config", cfg.echo()}, {"results", std::move(out.report)}};
  out.report = std::move(report);
  return out;
}

RunOutput run(const RunConfig& cfg) {
  RunOutput out = execute(cfg);
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const fs::path base = fs::path(cfg.out_dir) / cfg.command;
  std::ofstream csv(base.string() + ".csv", std::ios::binary);
  csv << out.csv;
  std::ofstream js(base.string() + ".json", std::ios::binary);
  js << out.report.dump(2) << '\n';
  if (!csv || !js) throw std::runtime_error("failed to write outputs under " + cfg.out_dir);
  return out;
}

}  // namespace ipsd
