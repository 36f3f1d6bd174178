#pragma once

// Seed-deterministic synthetic registration cases: a band-limited texture,
// a ground-truth affine, a smooth ground-truth deformation and grid
// landmarks. The target is built as
//   target(x) = gamma(source(true_affine(x + true_field(x)))),
// so the truths follow the same backward convention as registration output.

#include <cmath>
#include <cstdint>

#include "gigareg/evaluation.hpp"
#include "gigareg/field.hpp"
#include "gigareg/geometry.hpp"
#include "gigareg/image.hpp"

namespace gigareg {

struct SynthParams {
  int size = 512;
  double rot_deg = 0.0;
  double max_deform_px = 10.0;
  int n_blobs = 3;
  double translation_frac = 0.05;  // translation drawn per axis in +-frac * size
  double gamma_jitter = 0.10;      // target gamma drawn in [1 - j, 1 + j]
  double blob_sigma_min_frac = 1.0 / 16.0;
  double blob_sigma_max_frac = 1.0 / 8.0;
};

struct SyntheticCase {
  ImagePlane source;
  ImagePlane target;
  AffineTransform true_affine;
  DisplacementField true_field;
  LandmarkSet landmarks_source;
  LandmarkSet landmarks_target;  // 10 x 10 interior grid on integer pixels
  std::uint64_t seed = 0;
  double gamma = 1.0;
};

SyntheticCase generate_case(std::uint64_t seed, const SynthParams& params);
SyntheticCase generate_case(std::uint64_t seed, int size, double rot_deg, double max_deform_px,
                            int n_blobs);

// Texture only (the source image of a case).
ImagePlane synth_texture(std::uint64_t seed, int size);

// Sum of Gaussian bumps scaled to the requested maximum magnitude.
DisplacementField synth_deformation(std::uint64_t seed, int size, double max_px, int n_blobs,
                                    double sigma_min, double sigma_max);

// Mean and median distances between mapped target landmarks and source
// landmarks for a given mapping (for benchmarks and acceptance checks).
template <typename Mapping>
std::vector<double> landmark_errors(const SyntheticCase& c, Mapping&& map) {
  std::vector<double> errors;
  for (std::size_t i = 0; i < c.landmarks_target.size(); ++i) {
    const Point2 p = map(c.landmarks_target.points[i]);
    const Point2 s = c.landmarks_source.points[i];
    errors.push_back(std::hypot(p.x - s.x, p.y - s.y));
  }
  return errors;
}

}  // namespace gigareg
