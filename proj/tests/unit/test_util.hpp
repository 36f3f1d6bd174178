#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "gigareg/field.hpp"
#include "gigareg/image.hpp"

namespace testutil {

inline gigareg::ImagePlane random_plane(int w, int h, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  gigareg::ImagePlane p(w, h);
  for (double& v : p.values()) v = d(rng);
  return p;
}

// Random values blurred a little so the plane has spatial structure.
inline gigareg::ImagePlane smooth_random_plane(int w, int h, std::uint64_t seed, double sigma = 1.0) {
  return gigareg::gaussian_blur(random_plane(w, h, seed), sigma);
}

inline gigareg::DisplacementField random_field(int w, int h, std::uint64_t seed, double amp) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-amp, amp);
  gigareg::DisplacementField u(w, h);
  for (double& v : u.ux) v = d(rng);
  for (double& v : u.uy) v = d(rng);
  return u;
}

// Copy of the pixel values, safe to iterate over for temporaries.
inline std::vector<double> values(const gigareg::ImagePlane& p) { return {p.values().begin(), p.values().end()}; }

inline double max_abs_diff(const gigareg::ImagePlane& a, const gigareg::ImagePlane& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

// Fresh scratch directory under the build tree, removed first if present.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("gigareg_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
