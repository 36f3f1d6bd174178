#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "gigareg/error.hpp"
#include "gigareg/initial_alignment.hpp"
#include "gigareg/nonrigid.hpp"

namespace gigareg {
namespace {

struct Rotated {
  ImagePlane image;
  AffineTransform to_source;  // rotated image -> resized source
};

// Source rotated about its centre on its own canvas; content rotated out of
// the frame is clipped.
Rotated rotate_source(const ImagePlane& s, double angle) {
  Rotated r;
  r.to_source = rotation_about_center(angle, s.width(), s.height());
  r.image = warp_affine(s, r.to_source, s.width(), s.height());
  return r;
}

struct ScaleInputs {
  int scale = 0;
  bool usable = false;
  ImagePlane src;
  ImagePlane tgt;
  std::vector<Feature> tgt_features;
};

ScaleInputs prepare_scale(const ImagePlane& src, const ImagePlane& tgt, int scale,
                          const InitialAlignmentConfig& cfg, bool with_features) {
  ScaleInputs in;
  in.scale = scale;
  if (scale > std::max(src.width(), src.height()) || scale > std::max(tgt.width(), tgt.height()))
    return in;
  in.usable = true;
  const Size2 ssz = fit_max_side(src.width(), src.height(), scale);
  const Size2 tsz = fit_max_side(tgt.width(), tgt.height(), scale);
  in.src = resample_antialiased(src, ssz.width, ssz.height);
  in.tgt = resample_antialiased(tgt, tsz.width, tsz.height);
  if (with_features) in.tgt_features = detect_and_describe(in.tgt, cfg.max_keypoints, cfg.detector);
  return in;
}

CandidateResult evaluate_prepared(const ScaleInputs& in, double angle, const InitialAlignmentConfig& cfg) {
  CandidateResult r;
  r.scale = in.scale;
  r.angle = angle;
  r.source_size = {in.src.width(), in.src.height()};
  r.target_size = {in.tgt.width(), in.tgt.height()};
  if (!in.usable) {
    r.reason = "scale exceeds input resolution";
    return r;
  }
  const Rotated rot = rotate_source(in.src, angle);

  MatchSet ms;
  bool adapter_used = false;
  if (cfg.backend == MatcherBackend::Adapter) {
    try {
      ms = external_match(cfg.adapter_cmd, rot.image, in.tgt, cfg.adapter);
      adapter_used = true;
    } catch (const Error& e) {
      r.adapter_fallback = true;
      r.reason = std::string("adapter fallback: ") + e.what();
    }
  }
  if (!adapter_used) {
    const std::vector<Feature> sf = detect_and_describe(rot.image, cfg.max_keypoints, cfg.detector);
    const std::vector<Feature> tf = in.tgt_features.empty() && cfg.backend == MatcherBackend::Adapter
                                        ? detect_and_describe(in.tgt, cfg.max_keypoints, cfg.detector)
                                        : in.tgt_features;
    ms = classical_match(sf, tf, cfg.ratio);
  }
  r.backend_id = ms.backend_id;

  const std::string prefix = r.adapter_fallback ? r.reason + "; " : std::string();
  if (static_cast<int>(ms.size()) < cfg.min_matches) {
    r.reason = prefix + "too few matches (" + std::to_string(ms.size()) + ")";
    return r;
  }
  try {
    const RobustAffine ra = robust_affine(ms, cfg.ransac);
    const int count = adapter_used ? static_cast<int>(ms.size()) : static_cast<int>(ra.inliers.size());
    if (static_cast<int>(ra.inliers.size()) < cfg.min_matches) {
      r.reason = prefix + "too few inliers (" + std::to_string(ra.inliers.size()) + ")";
      return r;
    }
    // Target -> rotated canvas -> resized source.
    r.affine_at_scale = compose(ra.affine, rot.to_source);
    r.mean_inlier_error = ra.mean_inlier_error;
    r.match_count = count;
    if (!r.adapter_fallback) r.reason.clear();
  } catch (const Error& e) {
    r.reason = prefix + e.what();
  }
  return r;
}

template <typename F>
void parallel_for(std::size_t n, int threads, F&& f) {
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) f(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace

void InitialAlignmentConfig::validate() const {
  if (scales.empty()) throw Error(ErrorKind::InvalidArgument, "scale list is empty");
  for (std::size_t i = 0; i < scales.size(); ++i)
    if (scales[i] < 1 || (i > 0 && scales[i] <= scales[i - 1]))
      throw Error(ErrorKind::InvalidArgument, "scales must be positive and strictly increasing");
  if (!(angle_step > 0.0 && angle_step <= 360.0))
    throw Error(ErrorKind::InvalidArgument, "angle_step must lie in (0, 360]");
  if (min_matches < 3) throw Error(ErrorKind::InvalidArgument, "min_matches must be at least 3");
  if (backend == MatcherBackend::Adapter && adapter_cmd.empty())
    throw Error(ErrorKind::InvalidArgument, "adapter backend needs a command");
}

std::vector<double> InitialAlignmentConfig::angles() const {
  std::vector<double> out;
  for (int k = 0; k * angle_step < 360.0 - 1e-9; ++k) out.push_back(k * angle_step);
  return out;
}

CandidateResult evaluate_candidate(const ImagePlane& src, const ImagePlane& tgt, int scale, double angle,
                                   const InitialAlignmentConfig& cfg) {
  const ScaleInputs in = prepare_scale(src, tgt, scale, cfg, cfg.backend == MatcherBackend::Classical);
  return evaluate_prepared(in, angle, cfg);
}

std::optional<std::size_t> select_winner(const std::vector<CandidateResult>& c, int min_matches) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i].match_count < min_matches) continue;
    if (!best) {
      best = i;
      continue;
    }
    const CandidateResult& a = c[i];
    const CandidateResult& b = c[*best];
    bool better = false;
    if (a.match_count != b.match_count)
      better = a.match_count > b.match_count;
    else if (a.mean_inlier_error != b.mean_inlier_error)
      better = a.mean_inlier_error < b.mean_inlier_error;
    else if (a.scale != b.scale)
      better = a.scale > b.scale;
    else
      better = a.angle < b.angle;
    if (better) best = i;
  }
  return best;
}

InitialAlignmentResult run_initial_alignment(const ImagePlane& src, const ImagePlane& tgt,
                                             const InitialAlignmentConfig& cfg) {
  cfg.validate();
  if (src.empty() || tgt.empty()) throw Error(ErrorKind::EmptyInput, "initial alignment needs two images");
  const std::vector<double> angles = cfg.angles();
  std::vector<ScaleInputs> inputs(cfg.scales.size());
  parallel_for(inputs.size(), cfg.threads, [&](std::size_t i) {
    inputs[i] = prepare_scale(src, tgt, cfg.scales[i], cfg, cfg.backend == MatcherBackend::Classical);
  });

  InitialAlignmentResult out;
  out.candidates.resize(inputs.size() * angles.size());
  parallel_for(out.candidates.size(), cfg.threads, [&](std::size_t k) {
    out.candidates[k] = evaluate_prepared(inputs[k / angles.size()], angles[k % angles.size()], cfg);
  });

  out.winner = select_winner(out.candidates, cfg.min_matches);
  if (!out.winner) {
    out.fallback_identity = true;
    out.affine = AffineTransform::identity();
    return out;
  }
  const CandidateResult& w = out.candidates[*out.winner];
  out.affine = conjugate_to_grids(w.affine_at_scale, w.target_size.width, w.target_size.height, tgt.width(),
                                  tgt.height(), w.source_size.width, w.source_size.height, src.width(),
                                  src.height());
  return out;
}

}  // namespace gigareg
