#include "ipsd/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ipsd/parallel.hpp"

namespace ipsd {

void LVParams::validate() const {
  if (!(r0 > 0 && r1 > 0 && K0 > 0 && K1 > 0)) throw std::invalid_argument("LV params: r and K must be positive");
  if (!(alpha01 >= 0 && alpha10 >= 0)) throw std::invalid_argument("LV params: alphas must be nonnegative");
}

std::pair<double, double> lv_rhs(double n0, double n1, const LVParams& p) {
  p.validate();
  if (n0 < 0 || n1 < 0) throw std::invalid_argument("lv_rhs: population sizes must be nonnegative");
  return {p.r0 * n0 * (1.0 - (n0 + p.alpha01 * n1) / p.K0), p.r1 * n1 * (1.0 - (n1 + p.alpha10 * n0) / p.K1)};
}

double density_rhs(double p0, double lambda, double alpha01, double alpha10) {
  const double a = 1.0 - lambda * alpha01;
  const double b = lambda - alpha10;
  const double f = p0 * (1.0 - p0) * (a - p0 * (a + b));
  return f / (lambda * (1.0 - p0) + p0);
}

double equilibrium(double lambda, double alpha01, double alpha10) {
  if (!(lambda > 0.0)) throw std::invalid_argument("equilibrium: lambda must be positive");
  if (!(alpha10 >= 0.0 && alpha10 < lambda))
    throw std::invalid_argument("equilibrium: interior condition 0 <= alpha10 < lambda violated");
  if (!(alpha01 >= 0.0 && alpha01 < 1.0 / lambda))
    throw std::invalid_argument("equilibrium: interior condition 0 <= alpha01 < 1/lambda violated");
  const double a = 1.0 - lambda * alpha01;
  return a / (a + (lambda - alpha10));
}

double OdePath::interpolate(double t, std::size_t i) const {
  if (times.empty()) throw std::logic_error("interpolate: empty path");
  if (t <= times.front()) return states.front()[i];
  if (t >= times.back()) return states.back()[i];
  auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - times.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - times[lo]) / (times[hi] - times[lo]);
  return states[lo][i] + w * (states[hi][i] - states[lo][i]);
}

namespace {

std::vector<std::vector<double>> rk4_run(const OdeRhs& rhs, const std::vector<double>& x0, double horizon,
                                         std::size_t steps, std::vector<double>* times) {
  const std::size_t d = x0.size();
  const double h = horizon / static_cast<double>(steps);
  std::vector<std::vector<double>> out;
  out.reserve(steps + 1);
  std::vector<double> x = x0, k1(d), k2(d), k3(d), k4(d), tmp(d);
  out.push_back(x);
  if (times) times->push_back(0.0);
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = h * static_cast<double>(s);
    rhs(t, x, k1);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    rhs(t + 0.5 * h, tmp, k2);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    rhs(t + 0.5 * h, tmp, k3);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + h * k3[i];
    rhs(t + h, tmp, k4);
    for (std::size_t i = 0; i < d; ++i) x[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    out.push_back(x);
    if (times) times->push_back(h * static_cast<double>(s + 1));
  }
  return out;
}

}  // namespace

OdePath integrate_ode(const OdeRhs& rhs, const std::vector<double>& x0, double horizon, double dt) {
  if (!(horizon >= 0.0)) throw std::invalid_argument("integrate_ode: negative horizon");
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_ode: dt must be positive");
  const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9)));
  OdePath path;
  path.states = rk4_run(rhs, x0, horizon, steps, &path.times);
  const auto fine = rk4_run(rhs, x0, horizon, 2 * steps, nullptr);
  for (std::size_t i = 0; i < x0.size(); ++i)
    path.terminal_error = std::max(path.terminal_error, std::abs(fine.back()[i] - path.states.back()[i]));
  return path;
}

OdePath integrate_density(double p0, double lambda, double alpha01, double alpha10, double horizon, double dt) {
  return integrate_ode(
      [=](double, const std::vector<double>& x, std::vector<double>& dx) {
        dx[0] = density_rhs(x[0], lambda, alpha01, alpha10);
      },
      {p0}, horizon, dt);
}

ComparatorReport meanfield_comparator(std::size_t n, const NPParams& p, double density0, double horizon,
                                      const McOptions& mc, double dt) {
  p.validate();
  if (!(density0 >= 0.0 && density0 <= 1.0)) throw std::invalid_argument("comparator: density0 must lie in [0,1]");
  const Kernel k = Kernel::complete(n);
  // The ODE tracks the density of 0's; the spin density of 1's is 1 - p0.
  const OdePath ode = integrate_density(1.0 - density0, p.lambda, p.alpha01, p.alpha10, horizon, dt);
  const auto ones = static_cast<std::size_t>(std::llround(density0 * static_cast<double>(n)));
  SpinConfig eta0(n);
  for (std::size_t x = 0; x < ones; ++x) eta0.values[x] = 1;

  ComparatorReport report;
  report.sup_distance = run_replicates<double>(mc.reps, mc.threads, [&](std::size_t i) {
    Rng rng = derive_stream(mc.seed, i, "meanfield-spin");
    const auto path = simulate_gillespie(p, k, eta0, horizon, rng).density_path();
    auto ode_density = [&](double t) { return 1.0 - ode.interpolate(t); };
    double sup = 0.0;
    // Jump instants: both one-sided limits.
    for (std::size_t j = 0; j < path.size(); ++j) {
      const double od = ode_density(path[j].first);
      sup = std::max(sup, std::abs(path[j].second - od));
      if (j > 0) sup = std::max(sup, std::abs(path[j - 1].second - od));
    }
    // ODE grid between jumps.
    std::size_t j = 0;
    for (std::size_t g = 0; g < ode.times.size(); ++g) {
      const double t = ode.times[g];
      while (j + 1 < path.size() && path[j + 1].first <= t) ++j;
      sup = std::max(sup, std::abs(path[j].second - (1.0 - ode.states[g][0])));
    }
    return sup;
  });
  std::vector<double> sorted = report.sup_distance;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  if (m > 0) {
    report.median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    double s = 0.0;
    for (double v : sorted) s += v;
    report.mean = s / static_cast<double>(m);
  }
  return report;
}

}  // namespace ipsd
