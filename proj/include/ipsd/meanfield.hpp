#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "ipsd/dualspin.hpp"
#include "ipsd/spin.hpp"

namespace ipsd {

/// Competitive Lotka–Volterra parameters.
struct LVParams {
  double r0 = 1.0, r1 = 1.0;
  double K0 = 1.0, K1 = 1.0;
  double alpha01 = 0.0, alpha10 = 0.0;

  double lambda() const { return K1 / K0; }
  void validate() const;
};

std::pair<double, double> lv_rhs(double n0, double n1, const LVParams& p);

/// d p0/dt = F(p0) / (lambda (1-p0) + p0), where
/// F(p) = p(1-p){(1 - lambda a01) - p[(1 - lambda a01) + (lambda - a10)]}.
double density_rhs(double p0, double lambda, double alpha01, double alpha10);

/// Interior equilibrium; requires 0 <= a10 < lambda and 0 <= a01 < 1/lambda.
double equilibrium(double lambda, double alpha01, double alpha10);

using OdeRhs = std::function<void(double t, const std::vector<double>& x, std::vector<double>& dx)>;

struct OdePath {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  /// Max-norm terminal gap between the dt run and a dt/2 run.
  double terminal_error = 0.0;

  /// Linear interpolation of component i at time t.
  double interpolate(double t, std::size_t i = 0) const;
};

/// Classical RK4 with fixed step; repeats at dt/2 to report terminal_error.
OdePath integrate_ode(const OdeRhs& rhs, const std::vector<double>& x0, double horizon, double dt = 1e-3);

/// Scalar density ODE path for p0.
OdePath integrate_density(double p0, double lambda, double alpha01, double alpha10, double horizon,
                          double dt = 1e-3);

struct ComparatorReport {
  std::vector<double> sup_distance;  // one per replicate, replicate order
  double median = 0.0;
  double mean = 0.0;
};

/// Gillespie on complete_kernel(n) from a configuration with round(n *
/// density0) ones placed at sites 0.., against the ODE path for the density
/// of 1's; records sup over [0, horizon] of the gap per replicate.
ComparatorReport meanfield_comparator(std::size_t n, const NPParams& p, double density0, double horizon,
                                      const McOptions& mc, double dt = 1e-3);

}  // namespace ipsd
