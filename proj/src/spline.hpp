#pragma once

#include <vector>

namespace bax {

// Natural cubic spline through strictly increasing knots.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> x, std::vector<double> y);

  // Evaluates at t; clamps to the knot range outside it.
  double operator()(double t) const;

 private:
  std::vector<double> x_, y_, m_;  // m_ = second derivatives at the knots
};

}  // namespace bax
