#include <algorithm>
#include <cmath>

#include "gigareg/error.hpp"
#include "gigareg/field.hpp"

namespace gigareg {
namespace {

// Solves c[k-1] + 4 c[k] + c[k+1] = 6 f[k] for the interior with the end
// coefficients pinned to the end samples. Operates on a strided sequence.
void solve_line(double* f, int n, std::size_t stride, std::vector<double>& scratch) {
  if (n <= 2) return;
  const int m = n - 2;
  scratch.resize(2 * static_cast<std::size_t>(m));
  double* cp = scratch.data();
  double* dp = scratch.data() + m;
  const double first = f[0];
  const double last = f[static_cast<std::size_t>(n - 1) * stride];
  for (int i = 0; i < m; ++i) {
    double rhs = 6.0 * f[static_cast<std::size_t>(i + 1) * stride];
    if (i == 0) rhs -= first;
    if (i == m - 1) rhs -= last;
    const double denom = i == 0 ? 4.0 : 4.0 - cp[i - 1];
    cp[i] = 1.0 / denom;
    dp[i] = i == 0 ? rhs / denom : (rhs - dp[i - 1]) / denom;
  }
  double next = dp[m - 1];
  f[static_cast<std::size_t>(m) * stride] = next;
  for (int i = m - 2; i >= 0; --i) {
    next = dp[i] - cp[i] * next;
    f[static_cast<std::size_t>(i + 1) * stride] = next;
  }
}

void bspline_weights(double t, double w[4]) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double s = 1.0 - t;
  w[0] = s * s * s / 6.0;
  w[1] = (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0;
  w[2] = (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0;
  w[3] = t3 / 6.0;
}

}  // namespace

BSplineChannel::BSplineChannel(const std::vector<double>& samples, int width, int height)
    : width_(width), height_(height), coef_(samples) {
  if (samples.size() != static_cast<std::size_t>(width) * height)
    throw Error(ErrorKind::ShapeMismatch, "spline samples do not match dimensions");
  std::vector<double> scratch;
  for (int y = 0; y < height_; ++y)
    solve_line(coef_.data() + static_cast<std::size_t>(y) * width_, width_, 1, scratch);
  for (int x = 0; x < width_; ++x)
    solve_line(coef_.data() + x, height_, static_cast<std::size_t>(width_), scratch);
}

double BSplineChannel::coef(int x, int y) const {
  if (width_ == 1) x = 0;
  if (height_ == 1) y = 0;
  if (x < 0) return 2.0 * coef(0, y) - coef(-x, y);
  if (x > width_ - 1) return 2.0 * coef(width_ - 1, y) - coef(2 * (width_ - 1) - x, y);
  if (y < 0) return 2.0 * coef(x, 0) - coef(x, -y);
  if (y > height_ - 1) return 2.0 * coef(x, height_ - 1) - coef(x, 2 * (height_ - 1) - y);
  return coef_[static_cast<std::size_t>(y) * width_ + x];
}

double BSplineChannel::operator()(double x, double y) const {
  x = std::clamp(x, -1.0, static_cast<double>(width_));
  y = std::clamp(y, -1.0, static_cast<double>(height_));
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  double wx[4], wy[4];
  bspline_weights(x - fx, wx);
  bspline_weights(y - fy, wy);
  const int kx = static_cast<int>(fx) - 1;
  const int ky = static_cast<int>(fy) - 1;
  const bool interior = kx >= 0 && ky >= 0 && kx + 3 < width_ && ky + 3 < height_;
  double value = 0.0;
  for (int j = 0; j < 4; ++j) {
    double r = 0.0;
    if (interior) {
      const double* row = coef_.data() + static_cast<std::size_t>(ky + j) * width_ + kx;
      for (int i = 0; i < 4; ++i) r = r + wx[i] * row[i];
    } else {
      for (int i = 0; i < 4; ++i) r = r + wx[i] * coef(kx + i, ky + j);
    }
    value = value + wy[j] * r;
  }
  return value;
}

BSplineField::BSplineField(const DisplacementField& u)
    : ux_(u.ux, u.width, u.height), uy_(u.uy, u.width, u.height) {}

BSplineField::Vec BSplineField::at_grid(double i, double j, int out_w, int out_h) const {
  const double sx = static_cast<double>(width()) / out_w;
  const double sy = static_cast<double>(height()) / out_h;
  const double x = (i + 0.5) * sx - 0.5;
  const double y = (j + 0.5) * sy - 0.5;
  return {ux_(x, y) / sx, uy_(x, y) / sy};
}

}  // namespace gigareg
