#pragma once

// Raster types and low-level image operations. All operations take their
// inputs by const reference and return new rasters.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace gigareg {

// Single-channel row-major raster of doubles. Planes produced by grayscale
// conversion, CLAHE and synthetic generation hold values in [0, 1];
// interpolating operations may overshoot slightly and are left unclamped.
class ImagePlane {
 public:
  ImagePlane() = default;
  ImagePlane(int width, int height, double fill = 0.0);
  ImagePlane(int width, int height, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double at(int x, int y) const { return data_[index(x, y)]; }
  double& at(int x, int y) { return data_[index(x, y)]; }

  const double* row(int y) const { return data_.data() + static_cast<std::size_t>(y) * width_; }
  double* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_; }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

  friend bool operator==(const ImagePlane&, const ImagePlane&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

// Interleaved 8-bit RGB.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* pixel(int x, int y) { return data.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* pixel(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
};

enum class Interpolation { Bilinear, Bicubic };

struct Size2 {
  int width = 0;
  int height = 0;
  friend bool operator==(const Size2&, const Size2&) = default;
};

// Dimensions of an image scaled so that its larger side equals max_side,
// aspect ratio preserved (each side at least 1).
Size2 fit_max_side(int width, int height, int max_side);

ImagePlane to_grayscale(const RgbImage& img);

// Separable Gaussian with kernel radius ceil(3 sigma), normalized taps and
// clamp-to-border replication. sigma == 0 returns the input.
ImagePlane gaussian_blur(const ImagePlane& p, double sigma);
ImagePlane gaussian_blur(const ImagePlane& p, double sigma_x, double sigma_y);
std::vector<double> gaussian_taps(double sigma);

// Align-corners-false resampling: output pixel i samples the input at
// (i + 0.5) * w / new_w - 0.5. Same-size requests return the input.
ImagePlane resample(const ImagePlane& p, int new_w, int new_h, Interpolation mode);

// resample preceded by a Gaussian of sigma = factor / 2 along each axis that
// is reduced (factor = old / new).
ImagePlane resample_antialiased(const ImagePlane& p, int new_w, int new_h,
                                Interpolation mode = Interpolation::Bilinear);

struct ClaheParams {
  double clip_limit = 2.0;
  int tiles_x = 8;
  int tiles_y = 8;
};

ImagePlane clahe(const ImagePlane& p, const ClaheParams& params = {});

// Per-tile lookup tables (256 entries each, row-major over tiles) used by
// clahe; exposed for inspection.
std::vector<std::vector<double>> clahe_tile_luts(const ImagePlane& p, const ClaheParams& params);

// Catmull-Rom (a = -0.5) cubic sampling. Coordinates outside
// [0, w-1] x [0, h-1] return border; neighbors are clamped at the edges.
double bicubic_sample(const ImagePlane& p, double x, double y, double border = 0.0);

struct SampleWithGradient {
  double value = 0.0;
  double dx = 0.0;
  double dy = 0.0;
};

// Value and analytic spatial derivatives of the bicubic interpolant.
SampleWithGradient bicubic_sample_grad(const ImagePlane& p, double x, double y,
                                       double border = 0.0);

double bilinear_sample(const ImagePlane& p, double x, double y);

// Cubic convolution weights for the four taps at offsets -1..2 from floor(t).
void cubic_weights(double t, double w[4]);
void cubic_weight_derivatives(double t, double dw[4]);

}  // namespace gigareg
