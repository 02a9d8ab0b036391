#pragma once

#include "ccd/common.hpp"

#include <span>
#include <vector>

namespace ccd {

// Shape-preserving piecewise cubic Hermite interpolation (Fritsch-Carlson slopes with the
// three-point one-sided endpoint rule). Many channels share one knot vector, which is the
// layout used for the element-wise matrix interpolation.
class Pchip {
 public:
  Pchip() = default;

  /// `values` has one row per knot and one column per channel. Needs >= 2 strictly increasing knots.
  Pchip(std::vector<double> knots, Matrix values);

  std::size_t knots() const { return x_.size(); }
  int channels() const { return static_cast<int>(y_.cols()); }
  const std::vector<double>& knot_vector() const { return x_; }
  double front() const { return x_.front(); }
  double back() const { return x_.back(); }

  /// Values at x. Outside the knot span the end cubic is continued.
  Vector operator()(double x) const;
  /// First derivative in x.
  Vector derivative(double x) const;
  /// Both at once; avoids a second interval search.
  void evaluate(double x, Vector& value, Vector& slope) const;

  const Matrix& slopes() const { return d_; }

 private:
  std::size_t interval(double x) const;

  std::vector<double> x_;
  Matrix y_;
  Matrix d_;
};

/// Slope at the interior knot between intervals of width h0, h1 with secants s0, s1.
double pchip_interior_slope(double h0, double h1, double s0, double s1);
/// One-sided three-point slope at an end knot, limited to keep the end interval monotone.
double pchip_end_slope(double h0, double h1, double s0, double s1);

}  // namespace ccd
