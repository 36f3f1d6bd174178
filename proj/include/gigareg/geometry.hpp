#pragma once

// Affine algebra in the backward convention: a transform maps output
// (target-frame) pixel coordinates to input (source-frame) coordinates.

#include <array>
#include <span>
#include <vector>

namespace gigareg {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct DisplacementField;

// [[a, b, tx], [c, d, ty]]: (x, y) -> (a x + b y + tx, c x + d y + ty).
struct AffineTransform {
  std::array<double, 6> m{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

  static AffineTransform identity() { return {}; }
  static AffineTransform translation(double tx, double ty) { return {{1.0, 0.0, tx, 0.0, 1.0, ty}}; }
  static AffineTransform scaling(double sx, double sy) { return {{sx, 0.0, 0.0, 0.0, sy, 0.0}}; }

  double a() const { return m[0]; }
  double b() const { return m[1]; }
  double tx() const { return m[2]; }
  double c() const { return m[3]; }
  double d() const { return m[4]; }
  double ty() const { return m[5]; }

  double determinant() const { return m[0] * m[4] - m[1] * m[3]; }
  bool finite() const;

  Point2 apply(Point2 p) const {
    return {m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5]};
  }

  // Throws DegenerateConfiguration when |det| <= 1e-12.
  AffineTransform inverse() const;

  // Rotation angle of the closest rotation to the linear part, in degrees
  // within (-180, 180].
  double rotation_degrees() const;

  friend bool operator==(const AffineTransform&, const AffineTransform&) = default;
};

std::vector<Point2> affine_apply(const AffineTransform& t, std::span<const Point2> pts);

// r(p) = inner(outer(p)).
AffineTransform compose(const AffineTransform& outer, const AffineTransform& inner);

// Rotation by theta degrees about ((w - 1) / 2, (h - 1) / 2).
AffineTransform rotation_about_center(double theta_deg, int w, int h);

// Align-corners-false change of pixel grid: maps coordinates on a grid of
// size (from_w, from_h) to the same physical location on (to_w, to_h).
AffineTransform grid_rescale(int from_w, int from_h, int to_w, int to_h);

// Re-expresses t (target grid -> source grid) on resized target and source
// grids.
AffineTransform conjugate_to_grids(const AffineTransform& t, int tgt_w, int tgt_h, int new_tgt_w,
                                   int new_tgt_h, int src_w, int src_h, int new_src_w,
                                   int new_src_h);

DisplacementField affine_to_displacement(const AffineTransform& t, int w, int h);

}  // namespace gigareg
