#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace dynet {

inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = a > b ? a : b;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

/// Unsigned Stirling numbers of the first kind in log space:
/// s(0,0) = s(1,1) = 1, s(n,0) = 0 for n > 0, s(n,m) = 0 for m > n,
/// s(n+1,m) = s(n,m-1) + n s(n,m).
class StirlingTable {
 public:
  explicit StirlingTable(int n_max) : n_max_(n_max) {
    if (n_max < 0) throw std::invalid_argument("n_max must be >= 0");
    rows_.resize(static_cast<std::size_t>(n_max) + 1);
    rows_[0] = {0.0};  // log s(0,0) = 0
    for (int n = 0; n < n_max; ++n) {
      auto& next = rows_[static_cast<std::size_t>(n) + 1];
      next.assign(static_cast<std::size_t>(n) + 2, -inf());
      for (int m = 1; m <= n + 1; ++m) {
        const double carry = m - 1 <= n ? at(n, m - 1) : -inf();
        const double scale = m <= n ? std::log(double(n)) + at(n, m) : -inf();
        next[static_cast<std::size_t>(m)] = log_add_exp(carry, scale);
      }
    }
  }

  int n_max() const { return n_max_; }

  /// log s(n, m); -infinity where s(n, m) = 0.
  double log_s(int n, int m) const {
    if (n < 0 || m < 0) throw std::invalid_argument("negative Stirling index");
    if (n > n_max_) throw std::invalid_argument("Stirling index above table");
    if (m > n) return -inf();
    if (n > 0 && m == 0) return -inf();
    return at(n, m);
  }

 private:
  static double inf() { return std::numeric_limits<double>::infinity(); }
  double at(int n, int m) const {
    return rows_[static_cast<std::size_t>(n)][static_cast<std::size_t>(m)];
  }

  int n_max_;
  std::vector<std::vector<double>> rows_;
};

}  // namespace dynet
