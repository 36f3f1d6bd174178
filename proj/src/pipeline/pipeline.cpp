#include <algorithm>
#include <cmath>

#include "gigareg/error.hpp"
#include "gigareg/pipeline.hpp"

namespace gigareg {

using nlohmann::ordered_json;

LevelSelection select_pyramid_level(const std::vector<PyramidLevel>& levels, int desired_side) {
  LevelSelection sel;
  std::optional<int> best;
  for (int i = 0; i < static_cast<int>(levels.size()); ++i) {
    const int side = std::max(levels[i].width, levels[i].height);
    if (side < desired_side) continue;
    if (!best || side < std::max(levels[*best].width, levels[*best].height)) best = i;
  }
  if (best) {
    sel.index = *best;
  } else {
    sel.index = 0;
    sel.warning = true;
  }
  return sel;
}

LevelSelection select_pyramid_level(const PyramidImage& p, int desired_side) {
  return select_pyramid_level(p.levels(), desired_side);
}

PreparedImage load_and_preprocess(const PyramidImage& img, int desired_side, const ClaheParams& clahe_params) {
  PreparedImage out;
  out.level = select_pyramid_level(img, desired_side);
  out.level0_size = {img.levels()[0].width, img.levels()[0].height};
  const ImagePlane gray = to_grayscale(img.read_level(out.level.index));
  const Size2 sz = fit_max_side(gray.width(), gray.height(), desired_side);
  out.plane = clahe(resample_antialiased(gray, sz.width, sz.height), clahe_params);
  return out;
}

PreparedPair load_and_preprocess_pair(const PyramidImage& src, const PyramidImage& tgt, const PipelineConfig& cfg) {
  PreparedPair p;
  p.source = load_and_preprocess(src, cfg.desired_registration_side, cfg.clahe);
  p.target = load_and_preprocess(tgt, cfg.desired_registration_side, cfg.clahe);
  return p;
}

PairRegistration register_pair(const PyramidImage& src, const PyramidImage& tgt, const PipelineConfig& cfg) {
  cfg.validate();
  PairRegistration r;
  r.inputs = load_and_preprocess_pair(src, tgt, cfg);
  r.initial = run_initial_alignment(r.inputs.source.plane, r.inputs.target.plane, cfg.initial);
  r.nonrigid = register_multilevel(r.inputs.source.plane, r.inputs.target.plane, r.initial.affine, cfg.nonrigid);
  return r;
}

Size2 source_registration_size(Size2 source_level0, const DisplacementField& field) {
  return fit_max_side(source_level0.width, source_level0.height, std::max(field.width, field.height));
}

PairMapping::PairMapping(const AffineTransform& affine, const DisplacementField& field, Size2 source_level0,
                         Size2 target_level0)
    : field_(field) {
  if (field.width < 1 || field.height < 1) throw Error(ErrorKind::ShapeMismatch, "empty displacement field");
  const Size2 sreg = source_registration_size(source_level0, field);
  to_reg_ = grid_rescale(target_level0.width, target_level0.height, field.width, field.height);
  to_src0_ = compose(affine, grid_rescale(sreg.width, sreg.height, source_level0.width, source_level0.height));
}

Point2 PairMapping::operator()(Point2 p) const {
  const Point2 q = to_reg_.apply(p);
  const auto d = field_.at_native(q.x, q.y);
  return to_src0_.apply({q.x + d.x, q.y + d.y});
}

ordered_json rounded(const ordered_json& j) {
  if (j.is_number_float()) return round_sig9(j.get<double>());
  if (j.is_array()) {
    ordered_json out = ordered_json::array();
    for (const auto& v : j) out.push_back(rounded(v));
    return out;
  }
  if (j.is_object()) {
    ordered_json out = ordered_json::object();
    for (const auto& [k, v] : j.items()) out[k] = rounded(v);
    return out;
  }
  return j;
}

namespace {

ordered_json affine_json(const AffineTransform& t) {
  return {{"matrix", {{t.m[0], t.m[1], t.m[2]}, {t.m[3], t.m[4], t.m[5]}}}};
}

ordered_json size_json(Size2 s) { return ordered_json::array({s.width, s.height}); }

}  // namespace

ordered_json initial_alignment_report(const InitialAlignmentResult& r) {
  ordered_json j;
  if (r.winner) {
    const CandidateResult& w = r.candidates[*r.winner];
    j["winner"] = {{"scale", w.scale}, {"angle", w.angle}, {"match_count", w.match_count}};
  } else {
    j["winner"] = nullptr;
  }
  j["candidates"] = ordered_json::array();
  bool any_fallback = false;
  for (const CandidateResult& c : r.candidates) {
    ordered_json cj;
    cj["scale"] = c.scale;
    cj["angle"] = c.angle;
    cj["match_count"] = c.match_count;
    cj["mean_inlier_error"] = c.mean_inlier_error;
    cj["backend"] = c.backend_id;
    cj["affine_at_scale"] = affine_json(c.affine_at_scale);
    if (c.adapter_fallback) cj["adapter_fallback"] = true;
    if (!c.reason.empty()) cj["reason"] = c.reason;
    any_fallback = any_fallback || c.adapter_fallback;
    j["candidates"].push_back(std::move(cj));
  }
  j["fallback_identity"] = r.fallback_identity;
  j["classical_fallback"] = any_fallback;
  j["affine"] = affine_json(r.affine);
  return j;
}

ordered_json pair_report(const PairRegistration& r) {
  ordered_json j;
  const auto frame = [](const PreparedImage& p) {
    return ordered_json{{"level0_size", size_json(p.level0_size)},
                        {"level", p.level.index},
                        {"level_warning", p.level.warning},
                        {"registration_size", size_json({p.plane.width(), p.plane.height()})}};
  };
  j["source"] = frame(r.inputs.source);
  j["target"] = frame(r.inputs.target);
  j["initial_alignment"] = initial_alignment_report(r.initial);
  ordered_json n;
  n["level_sizes"] = ordered_json::array();
  for (Size2 s : r.nonrigid.level_sizes) n["level_sizes"].push_back(size_json(s));
  n["objective_traces"] = r.nonrigid.per_level_objective_trace;
  n["folding_ratio"] = r.nonrigid.folding_ratio;
  j["nonrigid"] = std::move(n);
  return rounded(j);
}

}  // namespace gigareg
