#include "spline.hpp"

#include <algorithm>
#include <cstddef>

#include "error.hpp"

namespace bax {

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) fail(Errc::invalid_argument, "spline needs >= 2 matching knots");
  for (std::size_t i = 1; i < n; ++i) {
    if (x_[i] <= x_[i - 1]) fail(Errc::invalid_argument, "spline knots must strictly increase");
  }
  m_.assign(n, 0.0);
  if (n == 2) return;

  // Thomas algorithm on the tridiagonal system for natural end conditions.
  std::vector<double> diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
  diag[0] = 1.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x_[i] - x_[i - 1];
    const double h1 = x_[i + 1] - x_[i];
    diag[i] = 2.0 * (h0 + h1);
    upper[i] = h1;
    rhs[i] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
  }
  diag[n - 1] = 1.0;

  std::vector<double> lower(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) lower[i] = x_[i] - x_[i - 1];

  for (std::size_t i = 2; i + 1 < n; ++i) {
    const double w = lower[i] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
    if (i == 1) break;
  }
}

double CubicSpline::operator()(double t) const {
  const std::size_t n = x_.size();
  if (t <= x_.front()) t = x_.front();
  if (t >= x_.back()) t = x_.back();
  const auto it = std::upper_bound(x_.begin(), x_.end(), t);
  std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - x_.begin())) - 1;
  if (i > n - 2) i = n - 2;

  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - t) / h;
  const double b = (t - x_[i]) / h;
  return a * y_[i] + b * y_[i + 1] +
         ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

}  // namespace bax
