#pragma once

#include <vector>

#include "gigareg/image.hpp"

namespace gigareg::detail {

// Windowed NCC against a fixed target. Target window sums and per-pixel
// window counts are computed once; scratch buffers are reused between calls,
// so an instance must not be shared between threads.
class LocalNcc {
 public:
  LocalNcc(const ImagePlane& target, int window);

  // Returns the cost; fills grad (resized to the pixel count) when non-null.
  double evaluate(const ImagePlane& a, std::vector<double>* grad) const;

 private:
  void box(const double* in, std::vector<double>& out) const;

  int width_;
  int height_;
  int radius_;
  std::vector<double> b_;
  std::vector<double> sb_, sbb_;
  std::vector<double> count_x_, count_y_;
  mutable std::vector<double> tmp_, prod_, sa_, saa_, sab_, ncc_, d_sa_, d_saa_, d_sab_;
};

void box_filter(const double* in, std::vector<double>& out, std::vector<double>& tmp, int width,
                int height, int radius);

}  // namespace gigareg::detail
