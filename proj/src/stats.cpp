#include "ipsd/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ipsd {

MCEstimate estimate(std::span<const double> samples, std::uint64_t seed, std::optional<double> dt) {
  if (samples.size() < 2) throw std::invalid_argument("estimate: need at least 2 replicates");
  // Welford, in replicate order so the result does not depend on scheduling.
  double mean = 0.0, m2 = 0.0;
  std::size_t n = 0;
  for (double v : samples) {
    ++n;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }
  const double var = m2 / static_cast<double>(n - 1);
  return MCEstimate{mean, std::sqrt(var / static_cast<double>(n)), n, seed, dt};
}

double two_sample_z(const MCEstimate& a, const MCEstimate& b) {
  const double diff = a.mean - b.mean;
  const double se = std::hypot(a.std_error, b.std_error);
  if (se == 0.0) {
    if (diff == 0.0) return 0.0;
    return diff > 0 ? std::numeric_limits<double>::infinity()
                    : -std::numeric_limits<double>::infinity();
  }
  return diff / se;
}

double wilson_lower(std::size_t successes, std::size_t n, double z) {
  if (n == 0) return 0.0;
  const double nn = static_cast<double>(n);
  const double phat = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double centre = phat + z2 / (2 * nn);
  const double half = z * std::sqrt(phat * (1 - phat) / nn + z2 / (4 * nn * nn));
  return std::max(0.0, (centre - half) / (1 + z2 / nn));
}

}  // namespace ipsd
