#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ipsd/dualspin.hpp"

namespace ipsd {

inline constexpr std::string_view kVersion = "ipsd 1.0.0";

/// One run: subcommand, flattened key/value settings and the Monte Carlo
/// controls. Keys are looked up as "<command>.<key>" first, then "<key>".
class RunConfig {
 public:
  std::string command;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  unsigned threads = 1;
  std::string out_dir = ".";

  /// INI file: "key = value" lines, optionally under [section] headers;
  /// section keys become "section.key". The keys seed and reps are lifted
  /// into the typed fields.
  static RunConfig from_file(const std::string& path);
  static RunConfig from_string(const std::string& text);

  /// "key=value" override; seed/reps/threads/out are routed to fields.
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::vector<double> get_list(const std::string& key, const std::string& fallback) const;

  /// Seed and replicate count resolved for a run; throws when no seed is
  /// set or when reps is 0.
  McOptions mc(std::size_t default_reps) const;

  /// Settings echoed into every report. Excludes threads and out_dir, which
  /// do not affect results.
  nlohmann::json echo() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::optional<std::string> lookup(const std::string& key) const;
  std::map<std::string, std::string> entries_;
};

/// Fills a missing seed from the IPSD_SEED environment variable.
void apply_seed_fallback(RunConfig& cfg);

struct RunOutput {
  nlohmann::json report;
  std::string csv;
};

/// Runs a subcommand in memory. Output depends only on the config and seed.
RunOutput execute(const RunConfig& cfg);

/// execute() then writes <out>/<command>.csv and <out>/<command>.json.
RunOutput run(const RunConfig& cfg);

std::vector<std::string> subcommands();

/// Shortest-safe fixed form: 17 significant digits.
std::string format_double(double v);

}  // namespace ipsd
