#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <tuple>

#include "gigareg/error.hpp"
#include "gigareg/features.hpp"

namespace gigareg {
namespace {

// Similarity taking the points to zero mean and RMS distance sqrt(2).
struct Normalizer {
  double cx = 0.0, cy = 0.0, s = 1.0;

  explicit Normalizer(std::span<const Point2> pts) {
    for (const auto& p : pts) {
      cx += p.x;
      cy += p.y;
    }
    cx /= pts.size();
    cy /= pts.size();
    double r2 = 0.0;
    for (const auto& p : pts) r2 += (p.x - cx) * (p.x - cx) + (p.y - cy) * (p.y - cy);
    const double rms = std::sqrt(r2 / pts.size());
    s = rms > 0.0 ? std::sqrt(2.0) / rms : 1.0;
  }

  Point2 operator()(Point2 p) const { return {(p.x - cx) * s, (p.y - cy) * s}; }
};

double triangle_area(Point2 a, Point2 b, Point2 c) {
  return 0.5 * std::abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double residual(const AffineTransform& t, Point2 from, Point2 to) {
  const Point2 q = t.apply(from);
  return std::hypot(q.x - to.x, q.y - to.y);
}

}  // namespace

AffineTransform estimate_affine_least_squares(std::span<const Point2> from, std::span<const Point2> to) {
  if (from.size() != to.size()) throw Error(ErrorKind::ShapeMismatch, "point lists differ in length");
  if (from.size() < 3) throw Error(ErrorKind::InsufficientMatches, "affine fit needs at least 3 matches");
  const Normalizer nf(from);
  const Normalizer nt(to);
  const double n = static_cast<double>(from.size());

  // Normal equations M p = r for each output row, M = mean of [x y 1]^T [x y 1].
  double m[3][3] = {};
  double rx[3] = {};
  double ry[3] = {};
  for (std::size_t k = 0; k < from.size(); ++k) {
    const Point2 f = nf(from[k]);
    const Point2 t = nt(to[k]);
    const double v[3] = {f.x, f.y, 1.0};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) m[i][j] += v[i] * v[j];
      rx[i] += v[i] * t.x;
      ry[i] += v[i] * t.y;
    }
  }
  for (auto& r : m)
    for (double& v : r) v /= n;
  for (int i = 0; i < 3; ++i) {
    rx[i] /= n;
    ry[i] /= n;
  }
  const double c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
  const double c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
  const double c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
  const double det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
  if (!(std::abs(det) >= 1e-12))
    throw Error(ErrorKind::DegenerateConfiguration, "normal equations are singular");
  double inv[3][3];
  inv[0][0] = c00 / det;
  inv[1][0] = c01 / det;
  inv[2][0] = c02 / det;
  inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  double px[3] = {};
  double py[3] = {};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      px[i] += inv[i][j] * rx[j];
      py[i] += inv[i][j] * ry[j];
    }

  // Undo the normalizations: A = Nt^-1 * An * Nf.
  const double a = px[0], b = px[1], c = px[2];
  const double d = py[0], e = py[1], f = py[2];
  AffineTransform out;
  out.m[0] = a * nf.s / nt.s;
  out.m[1] = b * nf.s / nt.s;
  out.m[2] = (c - a * nf.s * nf.cx - b * nf.s * nf.cy) / nt.s + nt.cx;
  out.m[3] = d * nf.s / nt.s;
  out.m[4] = e * nf.s / nt.s;
  out.m[5] = (f - d * nf.s * nf.cx - e * nf.s * nf.cy) / nt.s + nt.cy;
  return out;
}

AffineTransform estimate_affine_least_squares(const MatchSet& ms) {
  std::vector<Point2> from;
  std::vector<Point2> to;
  from.reserve(ms.size());
  to.reserve(ms.size());
  for (const auto& m : ms.matches) {
    from.push_back({m.target.x, m.target.y});
    to.push_back({m.source.x, m.source.y});
  }
  return estimate_affine_least_squares(from, to);
}

RobustAffine robust_affine(const MatchSet& ms, const RansacParams& params) {
  const std::size_t n = ms.size();
  if (n < 3) throw Error(ErrorKind::InsufficientMatches, "robust affine needs at least 3 matches");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto key = [&ms](std::size_t i) {
    const Match& m = ms.matches[i];
    return std::make_tuple(m.source.x, m.source.y, m.confidence, m.target.x, m.target.y);
  };
  std::stable_sort(order.begin(), order.end(),
                   [&key](std::size_t a, std::size_t b) { return key(a) < key(b); });
  std::vector<Point2> from(n);
  std::vector<Point2> to(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Match& m = ms.matches[order[k]];
    from[k] = {m.target.x, m.target.y};
    to[k] = {m.source.x, m.source.y};
  }

  std::mt19937_64 rng(params.seed);
  std::vector<std::size_t> best;
  std::vector<std::size_t> current;
  bool any_valid = false;
  for (int it = 0; it < params.iterations; ++it) {
    std::size_t i0 = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    std::size_t i1 = std::uniform_int_distribution<std::size_t>(0, n - 2)(rng);
    std::size_t i2 = std::uniform_int_distribution<std::size_t>(0, n - 3)(rng);
    if (i1 >= i0) ++i1;
    const std::size_t lo = std::min(i0, i1);
    const std::size_t hi = std::max(i0, i1);
    if (i2 >= lo) ++i2;
    if (i2 >= hi) ++i2;
    if (triangle_area(from[i0], from[i1], from[i2]) < 1e-6 ||
        triangle_area(to[i0], to[i1], to[i2]) < 1e-6)
      continue;
    const Point2 f3[3] = {from[i0], from[i1], from[i2]};
    const Point2 t3[3] = {to[i0], to[i1], to[i2]};
    AffineTransform t;
    try {
      t = estimate_affine_least_squares(f3, t3);
    } catch (const Error&) {
      continue;
    }
    any_valid = true;
    current.clear();
    for (std::size_t k = 0; k < n; ++k)
      if (residual(t, from[k], to[k]) < params.inlier_tol) current.push_back(k);
    if (current.size() > best.size()) best.swap(current);
  }
  if (!any_valid)
    throw Error(ErrorKind::DegenerateConfiguration, "every sampled triple was collinear");
  if (best.size() < 3)
    throw Error(ErrorKind::InsufficientMatches, "consensus set has fewer than 3 matches");

  std::vector<Point2> bf;
  std::vector<Point2> bt;
  for (std::size_t k : best) {
    bf.push_back(from[k]);
    bt.push_back(to[k]);
  }
  RobustAffine out;
  out.affine = estimate_affine_least_squares(bf, bt);
  double err = 0.0;
  for (std::size_t k : best) err += residual(out.affine, from[k], to[k]);
  out.mean_inlier_error = err / best.size();
  for (std::size_t k : best) out.inliers.push_back(order[k]);
  std::sort(out.inliers.begin(), out.inliers.end());
  return out;
}

}  // namespace gigareg
