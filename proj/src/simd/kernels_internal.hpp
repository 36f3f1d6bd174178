#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "gigareg/simd.hpp"

namespace gigareg::simd::detail {

// Scalar building blocks shared by the reference table and by the border
// columns of the vector variants.

inline double convolve_at(const double* row, int width, int x, const double* taps, int radius) {
  double acc = 0.0;
  for (int k = 0; k <= 2 * radius; ++k) {
    const int xi = std::clamp(x + k - radius, 0, width - 1);
    acc = acc + taps[k] * row[xi];
  }
  return acc;
}

inline double box_at(const double* row, int width, int x, int radius) {
  const int lo = std::max(0, x - radius);
  const int hi = std::min(width - 1, x + radius);
  double acc = 0.0;
  for (int k = lo; k <= hi; ++k) acc = acc + row[k];
  return acc;
}

struct NccPixel {
  double ncc, d_sa, d_saa, d_sab;
};

inline NccPixel ncc_pixel(double sa, double sb, double saa, double sbb, double sab, double n,
                          double eps) {
  const double ma = sa / n;
  const double mb = sb / n;
  const double va = saa / n - ma * ma;
  const double vb = sbb / n - mb * mb;
  const double cov = sab / n - ma * mb;
  const double da = va + eps;
  const double db = vb + eps;
  const double denom = std::sqrt(da * db);
  const double ncc = cov / denom;
  const double nd = n * denom;
  const double nda = n * da;
  NccPixel r;
  r.ncc = ncc;
  r.d_sab = 1.0 / nd;
  r.d_saa = (-0.5 * ncc) / nda;
  r.d_sa = (ncc * ma) / nda - mb / nd;
  return r;
}

inline double ncc_grad_at(double a, double b, double bsa, double bsaa, double bsab, double scale) {
  const double t2 = (2.0 * a) * bsaa;
  const double t3 = b * bsab;
  return scale * ((bsa + t2) + t3);
}

inline void adam_at(double& p, double& m1, double& m2, double g, double step, double beta1,
                    double one_minus_beta1, double beta2, double one_minus_beta2, double bias1,
                    double bias2, double eps) {
  m1 = beta1 * m1 + one_minus_beta1 * g;
  m2 = beta2 * m2 + one_minus_beta2 * (g * g);
  const double mh = m1 / bias1;
  const double vh = m2 / bias2;
  p = p - (step * mh) / (std::sqrt(vh) + eps);
}

void convolve_rows(const double* in, double* out, int width, int height, const double* taps,
                   int radius);
void convolve_cols(const double* in, double* out, int width, int height, const double* taps,
                   int radius);
void box_rows(const double* in, double* out, int width, int height, int radius);
void box_cols(const double* in, double* out, int width, int height, int radius);
void ncc_terms_row(const double* sa, const double* sb, const double* saa, const double* sbb,
                   const double* sab, const double* count_x, double count_y, int width,
                   double eps, double* ncc, double* d_sa, double* d_saa, double* d_sab);
void ncc_grad_row(const double* a, const double* b, const double* box_d_sa,
                  const double* box_d_saa, const double* box_d_sab, double scale, int width,
                  double* grad);
void adam_step(double* param, double* m1, double* m2, const double* grad, std::size_t n,
               double step, double beta1, double beta2, double bias1, double bias2, double eps);
void dot_bank(const float* query, const float* bank, int dim, int blocks, float* out);

#if defined(GIGAREG_WITH_AVX2)
const KernelTable& avx2_table();
#endif

}  // namespace gigareg::simd::detail
