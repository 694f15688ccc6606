#include "ipsd/rate_tree.hpp"

#include <stdexcept>

namespace ipsd {

RateTree::RateTree(std::size_t n) : n_(n), leaves_(1) {
  if (n == 0) throw std::invalid_argument("RateTree: empty");
  while (leaves_ < n) leaves_ <<= 1;
  tree_.assign(2 * leaves_, 0.0);
}

void RateTree::set(std::size_t i, double rate) {
  std::size_t k = leaves_ + i;
  tree_[k] = rate;
  for (k >>= 1; k >= 1; k >>= 1) tree_[k] = tree_[2 * k] + tree_[2 * k + 1];
}

std::size_t RateTree::find(double u) const {
  std::size_t k = 1;
  while (k < leaves_) {
    const double left = tree_[2 * k];
    if (u < left || tree_[2 * k + 1] <= 0.0) {
      k = 2 * k;
    } else {
      u -= left;
      k = 2 * k + 1;
    }
  }
  // Rounding can land on an empty leaf at the far right; walk back.
  std::size_t i = k - leaves_;
  while (i > 0 && tree_[leaves_ + i] <= 0.0) --i;
  if (tree_[leaves_ + i] <= 0.0) {
    for (i = 0; i < n_ && tree_[leaves_ + i] <= 0.0; ++i) {
    }
  }
  return i;
}

void RateTree::rebuild() {
  for (std::size_t k = leaves_ - 1; k >= 1; --k) tree_[k] = tree_[2 * k] + tree_[2 * k + 1];
}

}  // namespace ipsd
