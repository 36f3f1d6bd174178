#include <algorithm>
#include <cmath>

#include "gigareg/error.hpp"
#include "gigareg/nonrigid.hpp"
#include "gigareg/simd.hpp"
#include "ncc_internal.hpp"
#include "warp_internal.hpp"

namespace gigareg {
namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

// Objective evaluation with buffers reused across optimizer iterations.
class ObjectiveEvaluator {
 public:
  ObjectiveEvaluator(const ImagePlane& src, const ImagePlane& tgt, double theta, int window)
      : src_(src), ncc_(tgt, window), theta_(theta) {
    if (src.width() != tgt.width() || src.height() != tgt.height())
      throw Error(ErrorKind::ShapeMismatch, "source and target differ in size");
  }

  double operator()(const DisplacementField& u, DisplacementField* grad) {
    if (grad == nullptr) {
      const ImagePlane warped = warp(src_, u);
      const double sim = ncc_.evaluate(warped, nullptr);
      return theta_ == 0.0 ? sim : sim + theta_ * diffusive_reg(u).cost;
    }
    detail::warp_with_gradient(src_, u, warped_, gx_, gy_);
    const double sim = ncc_.evaluate(warped_, &gw_);
    if (grad->width != u.width || grad->height != u.height) *grad = DisplacementField(u.width, u.height);
    if (theta_ == 0.0) {
      for (std::size_t i = 0; i < u.size(); ++i) {
        grad->ux[i] = gw_[i] * gx_[i];
        grad->uy[i] = gw_[i] * gy_[i];
      }
      return sim;
    }
    const FieldCostAndGradient reg = diffusive_reg(u);
    for (std::size_t i = 0; i < u.size(); ++i) {
      grad->ux[i] = gw_[i] * gx_[i] + theta_ * reg.grad.ux[i];
      grad->uy[i] = gw_[i] * gy_[i] + theta_ * reg.grad.uy[i];
    }
    return sim + theta_ * reg.cost;
  }

 private:
  const ImagePlane& src_;
  detail::LocalNcc ncc_;
  double theta_;
  ImagePlane warped_;
  std::vector<double> gx_, gy_, gw_;
};

}  // namespace

FieldCostAndGradient objective(const ImagePlane& src, const ImagePlane& tgt,
                               const DisplacementField& u, double theta, int window) {
  ObjectiveEvaluator eval(src, tgt, theta, window);
  FieldCostAndGradient out;
  out.cost = eval(u, &out.grad);
  return out;
}

double objective_value(const ImagePlane& src, const ImagePlane& tgt, const DisplacementField& u,
                       double theta, int window) {
  ObjectiveEvaluator eval(src, tgt, theta, window);
  return eval(u, nullptr);
}

DisplacementField upsample_field(const DisplacementField& u, int new_w, int new_h) {
  if (new_w < 1 || new_h < 1) throw Error(ErrorKind::InvalidArgument, "field size must be positive");
  if (new_w == u.width && new_h == u.height) return u;
  const BSplineField spline(u);
  DisplacementField out(new_w, new_h);
  for (int j = 0; j < new_h; ++j)
    for (int i = 0; i < new_w; ++i) {
      const auto d = spline.at_grid(i, j, new_w, new_h);
      out.ux[out.index(i, j)] = d.x;
      out.uy[out.index(i, j)] = d.y;
    }
  return out;
}

LevelOutcome optimize_level(const ImagePlane& src, const ImagePlane& tgt,
                            const DisplacementField& u0, const LevelConfig& lc, int window) {
  if (u0.width != tgt.width() || u0.height != tgt.height())
    throw Error(ErrorKind::ShapeMismatch, "initial field and target differ in size");
  if (lc.iterations < 0 || !(lc.learning_rate > 0.0) || lc.theta < 0.0)
    throw Error(ErrorKind::InvalidArgument, "invalid level configuration");

  ObjectiveEvaluator eval(src, tgt, lc.theta, window);
  LevelOutcome out;
  out.field = u0;
  DisplacementField u = u0;
  DisplacementField grad(u.width, u.height);
  const std::size_t n = u.size();
  std::vector<double> m1(2 * n, 0.0), m2(2 * n, 0.0), g(2 * n), params(2 * n);
  std::copy(u.ux.begin(), u.ux.end(), params.begin());
  std::copy(u.uy.begin(), u.uy.end(), params.begin() + static_cast<std::ptrdiff_t>(n));

  // The objective is a per-pixel mean; Adam sees the per-pixel-sum gradient so
  // its epsilon is independent of the level resolution.
  const double grad_scale = static_cast<double>(n);
  double best = 0.0;
  const auto& k = simd::kernels();
  for (int it = 0; it <= lc.iterations; ++it) {
    const bool step = it < lc.iterations;
    const double value = step ? eval(u, &grad) : eval(u, nullptr);
    out.objective_trace.push_back(value);
    if (it == 0 || value < best) {
      best = value;
      out.best_iteration = static_cast<std::size_t>(it);
      if (it > 0) out.field = u;
    }
    if (!step) break;
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = grad.ux[i] * grad_scale;
      g[n + i] = grad.uy[i] * grad_scale;
    }
    const double t = it + 1;
    k.adam_step(params.data(), m1.data(), m2.data(), g.data(), 2 * n, lc.learning_rate, kBeta1,
                kBeta2, 1.0 - std::pow(kBeta1, t), 1.0 - std::pow(kBeta2, t), kAdamEps);
    std::copy(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(n), u.ux.begin());
    std::copy(params.begin() + static_cast<std::ptrdiff_t>(n), params.end(), u.uy.begin());
  }
  return out;
}

NonrigidConfig NonrigidConfig::with_finest_side(int finest_side) {
  const NonrigidConfig defaults;
  NonrigidConfig cfg;
  cfg.levels.clear();
  for (const LevelConfig& l : defaults.levels) {
    if (l.max_side < finest_side) {
      cfg.levels.push_back(l);
      continue;
    }
    cfg.levels.push_back(l);
    break;
  }
  if (cfg.levels.back().max_side < finest_side) cfg.levels.push_back(cfg.levels.back());
  cfg.levels.back().max_side = finest_side;
  return cfg;
}

void NonrigidConfig::validate() const {
  if (levels.empty()) throw Error(ErrorKind::InvalidArgument, "nonrigid config needs at least one level");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const LevelConfig& l = levels[i];
    if (l.max_side < 1 || l.iterations < 0 || !(l.learning_rate > 0.0) || l.theta < 0.0)
      throw Error(ErrorKind::InvalidArgument, "invalid nonrigid level " + std::to_string(i));
    if (i > 0 && l.max_side <= levels[i - 1].max_side)
      throw Error(ErrorKind::InvalidArgument, "nonrigid level sizes must strictly increase");
  }
  if (ncc_window < 3 || ncc_window % 2 == 0)
    throw Error(ErrorKind::InvalidArgument, "ncc_window must be odd and at least 3");
}

RegistrationResult register_multilevel(const ImagePlane& src, const ImagePlane& tgt,
                                       const AffineTransform& init, const NonrigidConfig& cfg) {
  cfg.validate();
  const int tgt_side = std::max(tgt.width(), tgt.height());
  RegistrationResult result;
  DisplacementField u;
  int prev_side = 0;
  for (const LevelConfig& level : cfg.levels) {
    // Levels above the input resolution collapse onto it; only the first of
    // them runs.
    const int side = std::min(level.max_side, tgt_side);
    if (side == prev_side) break;
    prev_side = side;
    const Size2 tsz = fit_max_side(tgt.width(), tgt.height(), side);
    const double s = static_cast<double>(tsz.width) / tgt.width();
    const Size2 ssz{std::max(1, static_cast<int>(std::lround(src.width() * s))),
                    std::max(1, static_cast<int>(std::lround(src.height() * s)))};
    const ImagePlane t_level = resample_antialiased(tgt, tsz.width, tsz.height);
    const ImagePlane s_level = resample_antialiased(src, ssz.width, ssz.height);
    const AffineTransform a_level =
        conjugate_to_grids(init, tgt.width(), tgt.height(), tsz.width, tsz.height, src.width(),
                           src.height(), ssz.width, ssz.height);
    const ImagePlane prewarped = warp_affine(s_level, a_level, tsz.width, tsz.height);

    u = u.size() == 0 ? DisplacementField(tsz.width, tsz.height)
                      : upsample_field(u, tsz.width, tsz.height);
    LevelOutcome outcome = optimize_level(prewarped, t_level, u, level, cfg.ncc_window);
    u = std::move(outcome.field);
    result.per_level_objective_trace.push_back(std::move(outcome.objective_trace));
    result.level_sizes.push_back(tsz);
  }
  if (u.width != tgt.width() || u.height != tgt.height()) u = upsample_field(u, tgt.width(), tgt.height());
  result.folding_ratio = folding_ratio(u);
  result.field = std::move(u);
  return result;
}

Point2 map_point(const AffineTransform& affine, const BSplineField& u, Point2 p) {
  const auto d = u.at_native(p.x, p.y);
  return affine.apply({p.x + d.x, p.y + d.y});
}

}  // namespace gigareg
