#include "ccd/pchip.hpp"

#include <algorithm>
#include <cmath>

namespace ccd {

double pchip_interior_slope(double h0, double h1, double s0, double s1) {
  if (s0 * s1 <= 0.0) return 0.0;
  const double w0 = 2.0 * h1 + h0;
  const double w1 = h1 + 2.0 * h0;
  return (w0 + w1) / (w0 / s0 + w1 / s1);
}

double pchip_end_slope(double h0, double h1, double s0, double s1) {
  double d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
  if (d * s0 <= 0.0) return 0.0;
  if (s0 * s1 < 0.0 && std::abs(d) > std::abs(3.0 * s0)) d = 3.0 * s0;
  return d;
}

Pchip::Pchip(std::vector<double> knots, Matrix values) : x_(std::move(knots)), y_(std::move(values)) {
  const auto n = x_.size();
  if (n < 2) throw DomainError("pchip needs at least two knots");
  if (static_cast<std::size_t>(y_.rows()) != n)
    throw DimensionError("pchip values must have one row per knot");
  for (std::size_t i = 1; i < n; ++i)
    if (!(x_[i] > x_[i - 1])) throw DomainError("pchip knots must be strictly increasing");

  const auto k = y_.cols();
  d_.resize(static_cast<Eigen::Index>(n), k);
  std::vector<double> h(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) h[i] = x_[i + 1] - x_[i];

  for (Eigen::Index c = 0; c < k; ++c) {
    std::vector<double> s(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i)
      s[i] = (y_(static_cast<Eigen::Index>(i + 1), c) - y_(static_cast<Eigen::Index>(i), c)) / h[i];
    if (n == 2) {
      d_(0, c) = d_(1, c) = s[0];
      continue;
    }
    for (std::size_t i = 1; i + 1 < n; ++i)
      d_(static_cast<Eigen::Index>(i), c) = pchip_interior_slope(h[i - 1], h[i], s[i - 1], s[i]);
    d_(0, c) = pchip_end_slope(h[0], h[1], s[0], s[1]);
    d_(static_cast<Eigen::Index>(n - 1), c) = pchip_end_slope(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
  }
}

std::size_t Pchip::interval(double x) const {
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - x_.begin() - 1, 0));
  return std::min(i, x_.size() - 2);
}

void Pchip::evaluate(double x, Vector& value, Vector& slope) const {
  const auto i = interval(x);
  const auto r0 = static_cast<Eigen::Index>(i);
  const auto r1 = r0 + 1;
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1;
  const double h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2;
  const double h11 = t3 - t2;
  const double g00 = (6 * t2 - 6 * t) / h;
  const double g10 = 3 * t2 - 4 * t + 1;
  const double g01 = (-6 * t2 + 6 * t) / h;
  const double g11 = 3 * t2 - 2 * t;
  value = h00 * y_.row(r0).transpose() + (h10 * h) * d_.row(r0).transpose() +
          h01 * y_.row(r1).transpose() + (h11 * h) * d_.row(r1).transpose();
  slope = g00 * y_.row(r0).transpose() + g10 * d_.row(r0).transpose() +
          g01 * y_.row(r1).transpose() + g11 * d_.row(r1).transpose();
}

Vector Pchip::operator()(double x) const {
  // Hit knots exactly so stored samples come back bit-for-bit.
  const auto it = std::lower_bound(x_.begin(), x_.end(), x);
  if (it != x_.end() && *it == x) return y_.row(it - x_.begin()).transpose();
  Vector v, s;
  evaluate(x, v, s);
  return v;
}

Vector Pchip::derivative(double x) const {
  Vector v, s;
  evaluate(x, v, s);
  return s;
}

}  // namespace ccd
