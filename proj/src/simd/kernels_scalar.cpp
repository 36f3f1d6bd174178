#include "kernels_internal.hpp"

namespace gigareg::simd::detail {

void convolve_rows(const double* in, double* out, int width, int height, const double* taps,
                   int radius) {
  for (int y = 0; y < height; ++y) {
    const double* row = in + static_cast<std::size_t>(y) * width;
    double* dst = out + static_cast<std::size_t>(y) * width;
    for (int x = 0; x < width; ++x) dst[x] = convolve_at(row, width, x, taps, radius);
  }
}

void convolve_cols(const double* in, double* out, int width, int height, const double* taps,
                   int radius) {
  for (int y = 0; y < height; ++y) {
    double* dst = out + static_cast<std::size_t>(y) * width;
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = 0; k <= 2 * radius; ++k) {
        const int yi = std::clamp(y + k - radius, 0, height - 1);
        acc = acc + taps[k] * in[static_cast<std::size_t>(yi) * width + x];
      }
      dst[x] = acc;
    }
  }
}

void box_rows(const double* in, double* out, int width, int height, int radius) {
  for (int y = 0; y < height; ++y) {
    const double* row = in + static_cast<std::size_t>(y) * width;
    double* dst = out + static_cast<std::size_t>(y) * width;
    for (int x = 0; x < width; ++x) dst[x] = box_at(row, width, x, radius);
  }
}

void box_cols(const double* in, double* out, int width, int height, int radius) {
  for (int y = 0; y < height; ++y) {
    const int lo = std::max(0, y - radius);
    const int hi = std::min(height - 1, y + radius);
    double* dst = out + static_cast<std::size_t>(y) * width;
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = lo; k <= hi; ++k) acc = acc + in[static_cast<std::size_t>(k) * width + x];
      dst[x] = acc;
    }
  }
}

void ncc_terms_row(const double* sa, const double* sb, const double* saa, const double* sbb,
                   const double* sab, const double* count_x, double count_y, int width,
                   double eps, double* ncc, double* d_sa, double* d_saa, double* d_sab) {
  for (int x = 0; x < width; ++x) {
    const NccPixel p =
        ncc_pixel(sa[x], sb[x], saa[x], sbb[x], sab[x], count_x[x] * count_y, eps);
    ncc[x] = p.ncc;
    d_sa[x] = p.d_sa;
    d_saa[x] = p.d_saa;
    d_sab[x] = p.d_sab;
  }
}

void ncc_grad_row(const double* a, const double* b, const double* box_d_sa,
                  const double* box_d_saa, const double* box_d_sab, double scale, int width,
                  double* grad) {
  for (int x = 0; x < width; ++x)
    grad[x] = ncc_grad_at(a[x], b[x], box_d_sa[x], box_d_saa[x], box_d_sab[x], scale);
}

void adam_step(double* param, double* m1, double* m2, const double* grad, std::size_t n,
               double step, double beta1, double beta2, double bias1, double bias2, double eps) {
  const double c1 = 1.0 - beta1;
  const double c2 = 1.0 - beta2;
  for (std::size_t i = 0; i < n; ++i)
    adam_at(param[i], m1[i], m2[i], grad[i], step, beta1, c1, beta2, c2, bias1, bias2, eps);
}

void dot_bank(const float* query, const float* bank, int dim, int blocks, float* out) {
  for (int b = 0; b < blocks; ++b) {
    const float* col = bank + static_cast<std::size_t>(b) * dim * kDotLanes;
    for (int lane = 0; lane < kDotLanes; ++lane) {
      float acc = 0.0f;
      for (int k = 0; k < dim; ++k) acc = acc + query[k] * col[k * kDotLanes + lane];
      out[b * kDotLanes + lane] = acc;
    }
  }
}

}  // namespace gigareg::simd::detail
