#pragma once

// Multilevel instance optimization of a dense displacement field under the
// objective  (1 - mean local NCC)(warped source, target) + theta * Reg(u),
// with Reg the diffusive (squared forward-difference) regularizer.

#include <string>
#include <vector>

#include "gigareg/field.hpp"
#include "gigareg/geometry.hpp"
#include "gigareg/image.hpp"

namespace gigareg {

struct LevelConfig {
  int max_side = 512;
  int iterations = 100;
  double learning_rate = 1.0;  // pixels per step
  double theta = 0.5;
};

struct NonrigidConfig {
  // Octave ladder. The two finest levels refine with small steps and a
  // stiffer regularizer; large steps there roughen the field and fold it.
  std::vector<LevelConfig> levels{
      {128, 100, 0.5, 0.25},
      {256, 100, 0.25, 0.5},
      {512, 100, 0.125, 1.0},
      {1024, 50, 0.1, 2.0},
      {2048, 30, 0.1, 4.0},
  };
  int ncc_window = 7;

  // The default levels coarser than finest_side followed by a level at
  // finest_side that takes the parameters of the first default level at or
  // above it (the last one when finest_side exceeds the ladder).
  static NonrigidConfig with_finest_side(int finest_side);
  void validate() const;
};

struct RegistrationResult {
  DisplacementField field;  // residual field on the target grid, finest level
  std::vector<std::vector<double>> per_level_objective_trace;
  std::vector<Size2> level_sizes;
  double folding_ratio = 0.0;
};

// out(x, y) = bicubic(p, x + ux, y + uy), border 0.
ImagePlane warp(const ImagePlane& p, const DisplacementField& u);

// Samples src on a target grid of the given size at t(x, y).
ImagePlane warp_affine(const ImagePlane& src, const AffineTransform& t, int out_w, int out_h);

struct CostAndGradient {
  double cost = 0.0;
  std::vector<double> grad;  // row-major, one entry per pixel
};

struct FieldCostAndGradient {
  double cost = 0.0;
  DisplacementField grad;
};

inline constexpr double kNccEpsilon = 1e-5;

// cost = 1 - mean over pixels of the windowed NCC; gradient with respect to a.
// Windows are truncated at the image border.
CostAndGradient local_ncc(const ImagePlane& a, const ImagePlane& b, int window);
double local_ncc_cost(const ImagePlane& a, const ImagePlane& b, int window);

// Reg(u) = 1 / (2 w h) * sum(|grad ux|^2 + |grad uy|^2), forward differences,
// zero difference past the last row/column.
FieldCostAndGradient diffusive_reg(const DisplacementField& u);

FieldCostAndGradient objective(const ImagePlane& src, const ImagePlane& tgt,
                               const DisplacementField& u, double theta, int window);
double objective_value(const ImagePlane& src, const ImagePlane& tgt, const DisplacementField& u,
                       double theta, int window);

// Cubic B-spline upsampling with displacement units rescaled to the new grid.
DisplacementField upsample_field(const DisplacementField& u, int new_w, int new_h);

struct LevelOutcome {
  DisplacementField field;
  std::vector<double> objective_trace;  // trace[k] = objective before step k+1; trace[0] at u0
  std::size_t best_iteration = 0;
};

// Exactly lc.iterations Adam steps; returns the iterate with the lowest
// objective seen (u0 included).
LevelOutcome optimize_level(const ImagePlane& src, const ImagePlane& tgt,
                            const DisplacementField& u0, const LevelConfig& lc, int window);

// src and tgt are preprocessed planes at the finest resolution. init maps
// target-grid coordinates to source-grid coordinates; it is applied as a
// fixed pre-warp at every level and the returned field is the residual, so
// the full mapping is x -> init(x + u(x)).
RegistrationResult register_multilevel(const ImagePlane& src, const ImagePlane& tgt,
                                       const AffineTransform& init, const NonrigidConfig& cfg);

// Fraction of pixels whose mapping x + u(x) has a Jacobian determinant <= 0
// (forward differences, zero past the last row/column).
double folding_ratio(const DisplacementField& u);

// Full mapping x -> affine(x + u(x)) evaluated at continuous target-grid
// coordinates, u interpolated with the cubic B-spline.
Point2 map_point(const AffineTransform& affine, const BSplineField& u, Point2 p);

}  // namespace gigareg
