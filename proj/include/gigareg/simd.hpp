#pragma once

// Data-parallel inner loops used by filtering, the NCC objective and the
// optimizer. Every kernel has a scalar reference implementation; vector
// variants parallelize across independent outputs and keep the per-output
// operation order, so their results are bit-identical to the reference.

#include <cstddef>
#include <string_view>

namespace gigareg::simd {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  Isa isa;
  std::string_view name;

  // out(x,y) = sum_k taps[k] * in(clamp(x + k - radius), y), k ascending.
  void (*convolve_rows)(const double* in, double* out, int width, int height,
                        const double* taps, int radius);
  // out(x,y) = sum_k taps[k] * in(x, clamp(y + k - radius)), k ascending.
  void (*convolve_cols)(const double* in, double* out, int width, int height,
                        const double* taps, int radius);

  // Window sums truncated at the image border (no padding), ascending order.
  void (*box_rows)(const double* in, double* out, int width, int height, int radius);
  void (*box_cols)(const double* in, double* out, int width, int height, int radius);

  // Per-pixel local NCC and its partials with respect to the window sums of
  // a, a*a and a*b. count_x[x] * count_y is the number of window pixels.
  void (*ncc_terms_row)(const double* sa, const double* sb, const double* saa,
                        const double* sbb, const double* sab, const double* count_x,
                        double count_y, int width, double eps, double* ncc, double* d_sa,
                        double* d_saa, double* d_sab);

  // grad = scale * (box_d_sa + 2 a box_d_saa + b box_d_sab)
  void (*ncc_grad_row)(const double* a, const double* b, const double* box_d_sa,
                       const double* box_d_saa, const double* box_d_sab, double scale,
                       int width, double* grad);

  // One Adam step over n parameters.
  void (*adam_step)(double* param, double* m1, double* m2, const double* grad, std::size_t n,
                    double step, double beta1, double beta2, double bias1, double bias2,
                    double eps);

  // out[j] = dot(query, bank column j) for a bank stored in blocks of
  // kDotLanes columns: bank[(block * dim + k) * kDotLanes + lane].
  void (*dot_bank)(const float* query, const float* bank, int dim, int blocks, float* out);
};

inline constexpr int kDotLanes = 8;

// Active table: chosen once from CPU capabilities, overridable with the
// GIGAREG_SIMD environment variable ("scalar" or "avx2") or force().
const KernelTable& kernels();
const KernelTable& scalar_kernels();
// nullptr when the variant is not compiled in or the CPU lacks support.
const KernelTable* avx2_kernels();

bool force(Isa isa);

}  // namespace gigareg::simd
