// Compiled with -mavx2 only. Runtime dispatch guarantees these functions are
// never entered on CPUs without AVX2.

#include <immintrin.h>

#include "kernels_internal.hpp"

namespace gigareg::simd::detail {
namespace {

void convolve_rows_avx2(const double* in, double* out, int width, int height,
                        const double* taps, int radius) {
  const int x_begin = std::min(radius, width);
  const int x_end = std::max(x_begin, width - radius);  // interior: [x_begin, x_end)
  for (int y = 0; y < height; ++y) {
    const double* row = in + static_cast<std::size_t>(y) * width;
    double* dst = out + static_cast<std::size_t>(y) * width;
    for (int x = 0; x < x_begin; ++x) dst[x] = convolve_at(row, width, x, taps, radius);
    int x = x_begin;
    for (; x + 4 <= x_end; x += 4) {
      __m256d acc = _mm256_setzero_pd();
      const double* src = row + x - radius;
      for (int k = 0; k <= 2 * radius; ++k)
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(taps[k]), _mm256_loadu_pd(src + k)));
      _mm256_storeu_pd(dst + x, acc);
    }
    for (; x < width; ++x) dst[x] = convolve_at(row, width, x, taps, radius);
  }
}

void convolve_cols_avx2(const double* in, double* out, int width, int height,
                        const double* taps, int radius) {
  for (int y = 0; y < height; ++y) {
    double* dst = out + static_cast<std::size_t>(y) * width;
    int x = 0;
    for (; x + 4 <= width; x += 4) {
      __m256d acc = _mm256_setzero_pd();
      for (int k = 0; k <= 2 * radius; ++k) {
        const int yi = std::clamp(y + k - radius, 0, height - 1);
        const double* src = in + static_cast<std::size_t>(yi) * width + x;
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(taps[k]), _mm256_loadu_pd(src)));
      }
      _mm256_storeu_pd(dst + x, acc);
    }
    for (; x < width; ++x) {
      double acc = 0.0;
      for (int k = 0; k <= 2 * radius; ++k) {
        const int yi = std::clamp(y + k - radius, 0, height - 1);
        acc = acc + taps[k] * in[static_cast<std::size_t>(yi) * width + x];
      }
      dst[x] = acc;
    }
  }
}

void box_rows_avx2(const double* in, double* out, int width, int height, int radius) {
  const int x_begin = std::min(radius, width);
  const int x_end = std::max(x_begin, width - radius);
  for (int y = 0; y < height; ++y) {
    const double* row = in + static_cast<std::size_t>(y) * width;
    double* dst = out + static_cast<std::size_t>(y) * width;
    for (int x = 0; x < x_begin; ++x) dst[x] = box_at(row, width, x, radius);
    int x = x_begin;
    for (; x + 4 <= x_end; x += 4) {
      __m256d acc = _mm256_setzero_pd();
      const double* src = row + x - radius;
      for (int k = 0; k <= 2 * radius; ++k) acc = _mm256_add_pd(acc, _mm256_loadu_pd(src + k));
      _mm256_storeu_pd(dst + x, acc);
    }
    for (; x < width; ++x) dst[x] = box_at(row, width, x, radius);
  }
}

void box_cols_avx2(const double* in, double* out, int width, int height, int radius) {
  for (int y = 0; y < height; ++y) {
    const int lo = std::max(0, y - radius);
    const int hi = std::min(height - 1, y + radius);
    double* dst = out + static_cast<std::size_t>(y) * width;
    int x = 0;
    for (; x + 4 <= width; x += 4) {
      __m256d acc = _mm256_setzero_pd();
      for (int k = lo; k <= hi; ++k)
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(in + static_cast<std::size_t>(k) * width + x));
      _mm256_storeu_pd(dst + x, acc);
    }
    for (; x < width; ++x) {
      double acc = 0.0;
      for (int k = lo; k <= hi; ++k) acc = acc + in[static_cast<std::size_t>(k) * width + x];
      dst[x] = acc;
    }
  }
}

void ncc_terms_row_avx2(const double* sa, const double* sb, const double* saa,
                        const double* sbb, const double* sab, const double* count_x,
                        double count_y, int width, double eps, double* ncc, double* d_sa,
                        double* d_saa, double* d_sab) {
  const __m256d vcy = _mm256_set1_pd(count_y);
  const __m256d veps = _mm256_set1_pd(eps);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d mhalf = _mm256_set1_pd(-0.5);
  int x = 0;
  for (; x + 4 <= width; x += 4) {
    const __m256d n = _mm256_mul_pd(_mm256_loadu_pd(count_x + x), vcy);
    const __m256d ma = _mm256_div_pd(_mm256_loadu_pd(sa + x), n);
    const __m256d mb = _mm256_div_pd(_mm256_loadu_pd(sb + x), n);
    const __m256d va = _mm256_sub_pd(_mm256_div_pd(_mm256_loadu_pd(saa + x), n), _mm256_mul_pd(ma, ma));
    const __m256d vb = _mm256_sub_pd(_mm256_div_pd(_mm256_loadu_pd(sbb + x), n), _mm256_mul_pd(mb, mb));
    const __m256d cov = _mm256_sub_pd(_mm256_div_pd(_mm256_loadu_pd(sab + x), n), _mm256_mul_pd(ma, mb));
    const __m256d da = _mm256_add_pd(va, veps);
    const __m256d db = _mm256_add_pd(vb, veps);
    const __m256d denom = _mm256_sqrt_pd(_mm256_mul_pd(da, db));
    const __m256d r = _mm256_div_pd(cov, denom);
    const __m256d nd = _mm256_mul_pd(n, denom);
    const __m256d nda = _mm256_mul_pd(n, da);
    _mm256_storeu_pd(ncc + x, r);
    _mm256_storeu_pd(d_sab + x, _mm256_div_pd(one, nd));
    _mm256_storeu_pd(d_saa + x, _mm256_div_pd(_mm256_mul_pd(mhalf, r), nda));
    _mm256_storeu_pd(d_sa + x, _mm256_sub_pd(_mm256_div_pd(_mm256_mul_pd(r, ma), nda),
                                             _mm256_div_pd(mb, nd)));
  }
  for (; x < width; ++x) {
    const NccPixel p = ncc_pixel(sa[x], sb[x], saa[x], sbb[x], sab[x], count_x[x] * count_y, eps);
    ncc[x] = p.ncc;
    d_sa[x] = p.d_sa;
    d_saa[x] = p.d_saa;
    d_sab[x] = p.d_sab;
  }
}

void ncc_grad_row_avx2(const double* a, const double* b, const double* box_d_sa,
                       const double* box_d_saa, const double* box_d_sab, double scale, int width,
                       double* grad) {
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d vs = _mm256_set1_pd(scale);
  int x = 0;
  for (; x + 4 <= width; x += 4) {
    const __m256d t2 = _mm256_mul_pd(_mm256_mul_pd(two, _mm256_loadu_pd(a + x)), _mm256_loadu_pd(box_d_saa + x));
    const __m256d t3 = _mm256_mul_pd(_mm256_loadu_pd(b + x), _mm256_loadu_pd(box_d_sab + x));
    const __m256d s = _mm256_add_pd(_mm256_add_pd(_mm256_loadu_pd(box_d_sa + x), t2), t3);
    _mm256_storeu_pd(grad + x, _mm256_mul_pd(vs, s));
  }
  for (; x < width; ++x)
    grad[x] = ncc_grad_at(a[x], b[x], box_d_sa[x], box_d_saa[x], box_d_sab[x], scale);
}

void adam_step_avx2(double* param, double* m1, double* m2, const double* grad, std::size_t n,
                    double step, double beta1, double beta2, double bias1, double bias2,
                    double eps) {
  const double c1 = 1.0 - beta1;
  const double c2 = 1.0 - beta2;
  const __m256d vb1 = _mm256_set1_pd(beta1), vc1 = _mm256_set1_pd(c1);
  const __m256d vb2 = _mm256_set1_pd(beta2), vc2 = _mm256_set1_pd(c2);
  const __m256d vbias1 = _mm256_set1_pd(bias1), vbias2 = _mm256_set1_pd(bias2);
  const __m256d vstep = _mm256_set1_pd(step), veps = _mm256_set1_pd(eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d a = _mm256_add_pd(_mm256_mul_pd(vb1, _mm256_loadu_pd(m1 + i)), _mm256_mul_pd(vc1, g));
    const __m256d b = _mm256_add_pd(_mm256_mul_pd(vb2, _mm256_loadu_pd(m2 + i)),
                                    _mm256_mul_pd(vc2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m1 + i, a);
    _mm256_storeu_pd(m2 + i, b);
    const __m256d mh = _mm256_div_pd(a, vbias1);
    const __m256d vh = _mm256_div_pd(b, vbias2);
    const __m256d upd = _mm256_div_pd(_mm256_mul_pd(vstep, mh), _mm256_add_pd(_mm256_sqrt_pd(vh), veps));
    _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), upd));
  }
  for (; i < n; ++i)
    adam_at(param[i], m1[i], m2[i], grad[i], step, beta1, c1, beta2, c2, bias1, bias2, eps);
}

void dot_bank_avx2(const float* query, const float* bank, int dim, int blocks, float* out) {
  static_assert(kDotLanes == 8);
  for (int b = 0; b < blocks; ++b) {
    const float* col = bank + static_cast<std::size_t>(b) * dim * kDotLanes;
    __m256 acc = _mm256_setzero_ps();
    for (int k = 0; k < dim; ++k)
      acc = _mm256_add_ps(acc, _mm256_mul_ps(_mm256_set1_ps(query[k]), _mm256_loadu_ps(col + k * kDotLanes)));
    _mm256_storeu_ps(out + b * kDotLanes, acc);
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{
      Isa::Avx2,          "avx2",        &convolve_rows_avx2, &convolve_cols_avx2,
      &box_rows_avx2,     &box_cols_avx2, &ncc_terms_row_avx2, &ncc_grad_row_avx2,
      &adam_step_avx2,    &dot_bank_avx2,
  };
  return table;
}

}  // namespace gigareg::simd::detail
