#pragma once

#include <cstddef>
#include <vector>

namespace gigareg {

// Dense displacement field in pixel units, backward convention: the warped
// image samples the source at (x + ux, y + uy).
struct DisplacementField {
  int width = 0;
  int height = 0;
  std::vector<double> ux;
  std::vector<double> uy;

  DisplacementField() = default;
  DisplacementField(int w, int h)
      : width(w), height(h), ux(static_cast<std::size_t>(w) * h, 0.0),
        uy(static_cast<std::size_t>(w) * h, 0.0) {}

  std::size_t size() const noexcept { return ux.size(); }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x);
  }

  friend bool operator==(const DisplacementField&, const DisplacementField&) = default;
};

// Cubic B-spline interpolant of one field channel. Coefficients are solved
// so the spline passes through every sample; the end coefficients equal the
// end samples and the coefficient sequence is extended point-symmetrically,
// which makes the interpolant reproduce linear functions exactly, including
// slightly beyond the sampled range.
class BSplineChannel {
 public:
  BSplineChannel() = default;
  BSplineChannel(const std::vector<double>& samples, int width, int height);

  // Value at continuous coordinates on the sample grid.
  double operator()(double x, double y) const;

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

 private:
  double coef(int x, int y) const;

  int width_ = 0;
  int height_ = 0;
  std::vector<double> coef_;
};

// Both channels of a field plus the unit rescaling used when evaluating it
// on a different (align-corners-false) grid.
class BSplineField {
 public:
  explicit BSplineField(const DisplacementField& u);

  int width() const noexcept { return ux_.width(); }
  int height() const noexcept { return ux_.height(); }

  struct Vec {
    double x, y;
  };

  // Displacement at pixel (i, j) of an out_w x out_h grid, in that grid's
  // pixel units.
  Vec at_grid(double i, double j, int out_w, int out_h) const;

  // Displacement at continuous coordinates of the native grid.
  Vec at_native(double x, double y) const { return {ux_(x, y), uy_(x, y)}; }

 private:
  BSplineChannel ux_;
  BSplineChannel uy_;
};

}  // namespace gigareg
