#pragma once

#include <cstddef>
#include <vector>

namespace ipsd {

/// Complete binary sum tree over per-slot rates: O(log n) update and
/// proportional sampling. Used by every Gillespie loop in the library.
class RateTree {
 public:
  explicit RateTree(std::size_t n);

  std::size_t size() const { return n_; }
  double total() const { return tree_[1]; }
  double rate(std::size_t i) const { return tree_[leaves_ + i]; }

  void set(std::size_t i, double rate);

  /// Slot i such that the prefix sum of rates up to i brackets u, for
  /// u in [0, total()). Zero-rate slots are never returned.
  std::size_t find(double u) const;

  /// Recompute internal nodes from the leaves; clears accumulated rounding.
  void rebuild();

 private:
  std::size_t n_;
  std::size_t leaves_;
  std::vector<double> tree_;
};

}  // namespace ipsd
