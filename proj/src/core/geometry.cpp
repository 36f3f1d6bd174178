#include "gigareg/geometry.hpp"

#include <cmath>
#include <numbers>

#include "gigareg/error.hpp"
#include "gigareg/field.hpp"

namespace gigareg {

bool AffineTransform::finite() const {
  for (double v : m)
    if (!std::isfinite(v)) return false;
  return true;
}

AffineTransform AffineTransform::inverse() const {
  const double det = determinant();
  if (!(std::abs(det) > 1e-12))
    throw Error(ErrorKind::DegenerateConfiguration, "affine transform is not invertible");
  const double ia = m[4] / det;
  const double ib = -m[1] / det;
  const double ic = -m[3] / det;
  const double id = m[0] / det;
  return {{ia, ib, -(ia * m[2] + ib * m[5]), ic, id, -(ic * m[2] + id * m[5])}};
}

double AffineTransform::rotation_degrees() const {
  // Polar decomposition of a 2x2 matrix: the orthogonal factor's angle is
  // atan2(c - b, a + d) for positive-determinant matrices.
  return std::atan2(m[3] - m[1], m[0] + m[4]) * 180.0 / std::numbers::pi;
}

std::vector<Point2> affine_apply(const AffineTransform& t, std::span<const Point2> pts) {
  std::vector<Point2> out;
  out.reserve(pts.size());
  for (const Point2& p : pts) out.push_back(t.apply(p));
  return out;
}

AffineTransform compose(const AffineTransform& outer, const AffineTransform& inner) {
  const auto& o = outer.m;
  const auto& i = inner.m;
  return {{
      i[0] * o[0] + i[1] * o[3],
      i[0] * o[1] + i[1] * o[4],
      i[0] * o[2] + i[1] * o[5] + i[2],
      i[3] * o[0] + i[4] * o[3],
      i[3] * o[1] + i[4] * o[4],
      i[3] * o[2] + i[4] * o[5] + i[5],
  }};
}

AffineTransform rotation_about_center(double theta_deg, int w, int h) {
  if (theta_deg == 0.0) return AffineTransform::identity();
  const double rad = theta_deg * std::numbers::pi / 180.0;
  // Exact values on the quarter turns keep grid points on the grid.
  double c = std::cos(rad);
  double s = std::sin(rad);
  const double quarter = theta_deg / 90.0;
  if (quarter == std::round(quarter)) {
    c = std::round(c);
    s = std::round(s);
  }
  const double cx = (w - 1) / 2.0;
  const double cy = (h - 1) / 2.0;
  return {{c, -s, cx - c * cx + s * cy, s, c, cy - s * cx - c * cy}};
}

AffineTransform grid_rescale(int from_w, int from_h, int to_w, int to_h) {
  const double sx = static_cast<double>(to_w) / from_w;
  const double sy = static_cast<double>(to_h) / from_h;
  return {{sx, 0.0, 0.5 * sx - 0.5, 0.0, sy, 0.5 * sy - 0.5}};
}

AffineTransform conjugate_to_grids(const AffineTransform& t, int tgt_w, int tgt_h, int new_tgt_w,
                                   int new_tgt_h, int src_w, int src_h, int new_src_w,
                                   int new_src_h) {
  const AffineTransform to_old_tgt = grid_rescale(new_tgt_w, new_tgt_h, tgt_w, tgt_h);
  const AffineTransform to_new_src = grid_rescale(src_w, src_h, new_src_w, new_src_h);
  return compose(compose(to_old_tgt, t), to_new_src);
}

DisplacementField affine_to_displacement(const AffineTransform& t, int w, int h) {
  DisplacementField u(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Point2 q = t.apply({static_cast<double>(x), static_cast<double>(y)});
      u.ux[u.index(x, y)] = q.x - x;
      u.uy[u.index(x, y)] = q.y - y;
    }
  return u;
}

}  // namespace gigareg
