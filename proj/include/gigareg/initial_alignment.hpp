#pragma once

// Multi-scale, multi-angle candidate search for the initial affine. Each
// candidate rotates the resized source, matches it against the resized
// target and fits an affine; the candidate with the most matches wins.

#include <optional>
#include <string>
#include <vector>

#include "gigareg/features.hpp"
#include "gigareg/geometry.hpp"
#include "gigareg/image.hpp"

namespace gigareg {

enum class MatcherBackend { Classical, Adapter };

struct InitialAlignmentConfig {
  std::vector<int> scales{256, 362, 512, 724, 1024, 1448, 2048, 2896};
  double angle_step = 30.0;
  int min_matches = 8;
  MatcherBackend backend = MatcherBackend::Classical;
  std::string adapter_cmd;
  AdapterOptions adapter;
  int max_keypoints = 1024;
  double ratio = 0.8;
  RansacParams ransac;
  DetectorParams detector;
  int threads = 1;

  void validate() const;
  std::vector<double> angles() const;
};

struct CandidateResult {
  int scale = 0;
  double angle = 0.0;
  int match_count = 0;
  // Target grid -> source grid at this scale.
  AffineTransform affine_at_scale;
  double mean_inlier_error = 0.0;
  Size2 target_size;
  Size2 source_size;
  std::string backend_id;
  std::string reason;        // why match_count is 0, empty otherwise
  bool adapter_fallback = false;
};

struct InitialAlignmentResult {
  AffineTransform affine;  // on the input grids
  std::vector<CandidateResult> candidates;
  std::optional<std::size_t> winner;
  bool fallback_identity = false;
};

CandidateResult evaluate_candidate(const ImagePlane& src, const ImagePlane& tgt, int scale, double angle,
                                   const InitialAlignmentConfig& cfg);

InitialAlignmentResult run_initial_alignment(const ImagePlane& src, const ImagePlane& tgt,
                                             const InitialAlignmentConfig& cfg);

// Winner selection: most matches, then lower mean inlier error, larger
// scale, smaller angle. nullopt when no candidate reaches min_matches.
std::optional<std::size_t> select_winner(const std::vector<CandidateResult>& candidates, int min_matches);

}  // namespace gigareg
