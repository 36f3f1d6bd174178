#pragma once

// End-to-end plumbing: pyramid level selection, preprocessing, pair
// registration, full-resolution tiled warping and the JSON artifacts that
// tie the stages together.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gigareg/initial_alignment.hpp"
#include "gigareg/io.hpp"
#include "gigareg/nonrigid.hpp"

namespace gigareg {

struct WarpOptions {
  int tile_size = 1024;
  int min_side = 1024;  // lower output levels stop once the max side is at most this
  int threads = 1;
};

struct PipelineConfig {
  int desired_registration_side = 2048;
  InitialAlignmentConfig initial;
  NonrigidConfig nonrigid;
  ClaheParams clahe;
  WarpOptions warp;
  std::filesystem::path output_dir;

  void validate() const;
};

// Absent keys keep their defaults; unknown keys are rejected
// (InvalidArgument) so typos do not silently fall back.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
nlohmann::ordered_json pipeline_config_to_json(const PipelineConfig& cfg);

struct LevelSelection {
  int index = 0;
  bool warning = false;  // no level reaches the desired side
};

// Smallest level whose max side is at least desired_side.
LevelSelection select_pyramid_level(const std::vector<PyramidLevel>& levels, int desired_side);
LevelSelection select_pyramid_level(const PyramidImage& p, int desired_side);

struct PreparedImage {
  ImagePlane plane;
  LevelSelection level;
  Size2 level0_size;
};

// Level selection, tile assembly, grayscale, one anti-aliased resample to
// desired_side, CLAHE.
PreparedImage load_and_preprocess(const PyramidImage& img, int desired_side, const ClaheParams& clahe);

struct PreparedPair {
  PreparedImage source;
  PreparedImage target;
};

PreparedPair load_and_preprocess_pair(const PyramidImage& src, const PyramidImage& tgt,
                                      const PipelineConfig& cfg);

struct PairRegistration {
  PreparedPair inputs;
  InitialAlignmentResult initial;
  RegistrationResult nonrigid;
};

// Affine and field live on the registration grids of the prepared planes.
PairRegistration register_pair(const PyramidImage& src, const PyramidImage& tgt, const PipelineConfig& cfg);

// Maps a target level-0 pixel to the source level-0 frame. The registration
// grids are recovered from the level-0 sizes and the field size.
class PairMapping {
 public:
  PairMapping(const AffineTransform& affine, const DisplacementField& field, Size2 source_level0,
              Size2 target_level0);

  Point2 operator()(Point2 target_level0) const;

 private:
  AffineTransform to_reg_;    // target level 0 -> target registration grid
  AffineTransform to_src0_;   // target registration grid -> source level 0 (affine included)
  BSplineField field_;
};

// Source registration grid implied by a field on the target registration
// grid: both images were resized to the same max side.
Size2 source_registration_size(Size2 source_level0, const DisplacementField& field);

// Renders the source, mapped into the target frame, at an output resolution
// whose max side is out_side. Values are 8-bit-scaled RGB before
// quantization, three per pixel.
class FullResWarper {
 public:
  FullResWarper(const PyramidImage& src, const DisplacementField& field, const AffineTransform& affine,
                int out_side);

  Size2 output_size() const { return out_; }
  int source_level() const { return level_.index; }
  bool clamped() const { return clamped_; }

  // Reads only the part of the source level the rectangle maps to.
  std::vector<double> render(int x0, int y0, int w, int h) const;
  // Reference path: the whole source level in memory.
  std::vector<double> render_monolithic() const;

 private:
  std::vector<Point2> source_coords(int x0, int y0, int w, int h) const;

  const PyramidImage& src_;
  BSplineField field_;
  Size2 out_;
  LevelSelection level_;
  Size2 level_size_;
  AffineTransform out_to_src_;  // applied after adding the displacement
  bool clamped_ = false;
};

RgbImage quantize_rgb(const std::vector<double>& values, int w, int h);

// Writes the warped source as a pyramid directory: level 0 at out_side, then
// halvings (2 x 2 box average) until the max side is at most min_side.
// out_side is clamped to the source level-0 max side. Returns the level-0
// output size.
Size2 full_res_warp(const PyramidImage& src, const DisplacementField& field, const AffineTransform& affine,
                    int out_side, const std::filesystem::path& out_dir, const WarpOptions& options = {});

nlohmann::ordered_json initial_alignment_report(const InitialAlignmentResult& r);
nlohmann::ordered_json pair_report(const PairRegistration& r);

// Recursively rounds floating-point numbers to 9 significant digits.
nlohmann::ordered_json rounded(const nlohmann::ordered_json& j);

}  // namespace gigareg
