#include <algorithm>

#include "gigareg/error.hpp"
#include "gigareg/nonrigid.hpp"
#include "gigareg/simd.hpp"
#include "ncc_internal.hpp"

namespace gigareg {
namespace detail {

void box_filter(const double* in, std::vector<double>& out, std::vector<double>& tmp, int width,
                int height, int radius) {
  const auto& k = simd::kernels();
  const std::size_t n = static_cast<std::size_t>(width) * height;
  tmp.resize(n);
  out.resize(n);
  k.box_rows(in, tmp.data(), width, height, radius);
  k.box_cols(tmp.data(), out.data(), width, height, radius);
}

LocalNcc::LocalNcc(const ImagePlane& target, int window)
    : width_(target.width()), height_(target.height()), radius_(window / 2),
      b_(target.values().begin(), target.values().end()) {
  if (window < 3 || window % 2 == 0)
    throw Error(ErrorKind::InvalidArgument, "NCC window must be odd and at least 3");
  box(b_.data(), sb_);
  prod_.resize(b_.size());
  for (std::size_t i = 0; i < b_.size(); ++i) prod_[i] = b_[i] * b_[i];
  box(prod_.data(), sbb_);
  count_x_.resize(width_);
  count_y_.resize(height_);
  for (int x = 0; x < width_; ++x)
    count_x_[x] = std::min(width_ - 1, x + radius_) - std::max(0, x - radius_) + 1;
  for (int y = 0; y < height_; ++y)
    count_y_[y] = std::min(height_ - 1, y + radius_) - std::max(0, y - radius_) + 1;
}

void LocalNcc::box(const double* in, std::vector<double>& out) const {
  box_filter(in, out, tmp_, width_, height_, radius_);
}

double LocalNcc::evaluate(const ImagePlane& a, std::vector<double>* grad) const {
  if (a.width() != width_ || a.height() != height_)
    throw Error(ErrorKind::ShapeMismatch, "NCC inputs differ in size");
  const auto av = a.values();
  const std::size_t n = av.size();
  const double* a_vec = av.data();

  box(a_vec, sa_);
  prod_.resize(n);
  for (std::size_t i = 0; i < n; ++i) prod_[i] = a_vec[i] * a_vec[i];
  box(prod_.data(), saa_);
  for (std::size_t i = 0; i < n; ++i) prod_[i] = a_vec[i] * b_[i];
  box(prod_.data(), sab_);

  ncc_.resize(n);
  d_sa_.resize(n);
  d_saa_.resize(n);
  d_sab_.resize(n);
  const auto& k = simd::kernels();
  for (int y = 0; y < height_; ++y) {
    const std::size_t o = static_cast<std::size_t>(y) * width_;
    k.ncc_terms_row(sa_.data() + o, sb_.data() + o, saa_.data() + o, sbb_.data() + o,
                    sab_.data() + o, count_x_.data(), count_y_[y], width_, kNccEpsilon,
                    ncc_.data() + o, d_sa_.data() + o, d_saa_.data() + o, d_sab_.data() + o);
  }
  double sum = 0.0;
  for (double v : ncc_) sum += v;
  const double pixels = static_cast<double>(n);
  const double cost = std::clamp(1.0 - sum / pixels, 0.0, 2.0);

  if (grad != nullptr) {
    // Window membership is symmetric, so the adjoint of a window sum is the
    // same window sum.
    std::vector<double>& b1 = sa_;
    std::vector<double>& b2 = saa_;
    std::vector<double>& b3 = sab_;
    box(d_sa_.data(), b1);
    box(d_saa_.data(), b2);
    box(d_sab_.data(), b3);
    grad->resize(n);
    const double scale = -1.0 / pixels;
    for (int y = 0; y < height_; ++y) {
      const std::size_t o = static_cast<std::size_t>(y) * width_;
      k.ncc_grad_row(a_vec + o, b_.data() + o, b1.data() + o, b2.data() + o,
                     b3.data() + o, scale, width_, grad->data() + o);
    }
  }
  return cost;
}

}  // namespace detail

CostAndGradient local_ncc(const ImagePlane& a, const ImagePlane& b, int window) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error(ErrorKind::ShapeMismatch, "NCC inputs differ in size");
  const detail::LocalNcc ncc(b, window);
  CostAndGradient out;
  out.cost = ncc.evaluate(a, &out.grad);
  return out;
}

double local_ncc_cost(const ImagePlane& a, const ImagePlane& b, int window) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error(ErrorKind::ShapeMismatch, "NCC inputs differ in size");
  return detail::LocalNcc(b, window).evaluate(a, nullptr);
}

}  // namespace gigareg
