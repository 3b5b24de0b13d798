#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <optional>

namespace sinkasym {

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
};

// Continued-fraction convergents of x; returns the first convergent p/q with
// q <= max_den and |x - p/q| <= tol * max(1, |x|).
inline std::optional<Rational> rational_reconstruct(double x, std::int64_t max_den = 64,
                                                    double tol = 1e-9) {
  if (!std::isfinite(x)) return std::nullopt;
  const double scale = std::max(1.0, std::abs(x));
  std::int64_t h_prev = 1, h_prev2 = 0;
  std::int64_t k_prev = 0, k_prev2 = 1;
  double r = x;
  for (int iter = 0; iter < 40; ++iter) {
    const double a_d = std::floor(r);
    if (std::abs(a_d) > 1e15) break;
    const auto a = static_cast<std::int64_t>(a_d);
    const std::int64_t h = a * h_prev + h_prev2;
    const std::int64_t k = a * k_prev + k_prev2;
    if (k > max_den) break;
    if (std::abs(x - static_cast<double>(h) / static_cast<double>(k)) <= tol * scale) {
      return Rational{h, k};
    }
    const double frac = r - a_d;
    if (frac <= 0.0) break;
    r = 1.0 / frac;
    h_prev2 = h_prev;
    h_prev = h;
    k_prev2 = k_prev;
    k_prev = k;
  }
  return std::nullopt;
}

}  // namespace sinkasym
