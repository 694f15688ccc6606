#pragma once

#include <cstdint>
#include <optional>
#include <span>

namespace ipsd {

/// Monte Carlo mean with its standard error (sample sd / sqrt(reps)).
struct MCEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  std::optional<double> dt;
};

/// Requires at least two samples.
MCEstimate estimate(std::span<const double> samples, std::uint64_t seed = 0,
                    std::optional<double> dt = std::nullopt);

/// Two-sample z statistic. Identical estimates with zero error give 0;
/// different estimates with zero error give +/-infinity.
double two_sample_z(const MCEstimate& a, const MCEstimate& b);

/// One-sided Wilson score lower bound for a binomial proportion.
double wilson_lower(std::size_t successes, std::size_t n, double z);

/// One-sided 99% normal quantile.
inline constexpr double kZ99 = 2.3263478740408408;

}  // namespace ipsd
