#pragma once

// Keypoint detection, description, matching and robust affine consensus.
// Two backends produce MatchSets: the built-in difference-of-Gaussians
// detector with gradient-histogram descriptors, and an external matcher
// reached through a subprocess protocol.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gigareg/geometry.hpp"
#include "gigareg/image.hpp"

namespace gigareg {

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double scale = 0.0;
  double score = 0.0;
};

// Unit L2 norm.
struct Descriptor {
  std::vector<float> values;
};

struct Feature {
  Keypoint keypoint;
  Descriptor descriptor;
};

inline constexpr int kDescriptorDim = 128;

struct DetectorParams {
  int octaves = 3;
  int scales_per_octave = 3;
  double contrast_threshold = 0.01;
  double edge_ratio = 10.0;
  double sigma0 = 1.6;
  // Upright descriptors by default: like the learned extractors the search
  // pipeline was designed around, they are not rotation invariant, and the
  // multi-angle search supplies the rotation.
  bool rotation_invariant = false;
};

// At most max_keypoints features, strongest response first. Planes smaller
// than 32 x 32 yield no features.
std::vector<Feature> detect_and_describe(const ImagePlane& p, int max_keypoints,
                                         const DetectorParams& params = {});

struct DescriptorMatch {
  int index_a = 0;
  int index_b = 0;
  double confidence = 0.0;
  friend bool operator==(const DescriptorMatch&, const DescriptorMatch&) = default;
};

// Mutual nearest neighbours passing the ratio test in both directions;
// confidence = 1 - (larger of the two distance ratios). A descriptor with no
// second neighbour passes with ratio 0.
std::vector<DescriptorMatch> match_descriptors(std::span<const Descriptor> a,
                                               std::span<const Descriptor> b, double ratio = 0.8);

struct Match {
  Keypoint source;
  Keypoint target;
  double confidence = 0.0;
};

struct MatchSet {
  std::vector<Match> matches;
  int descriptor_dim = 0;
  std::string backend_id;

  std::size_t size() const noexcept { return matches.size(); }
};

MatchSet classical_match(const std::vector<Feature>& source, const std::vector<Feature>& target,
                         double ratio = 0.8);

// Least-squares affine with A * target_k ~= source_k (backward convention).
// Throws InsufficientMatches below 3 matches and DegenerateConfiguration
// when the normal equations are singular.
AffineTransform estimate_affine_least_squares(const MatchSet& ms);
AffineTransform estimate_affine_least_squares(std::span<const Point2> from, std::span<const Point2> to);

struct RansacParams {
  double inlier_tol = 5.0;
  int iterations = 2000;
  std::uint64_t seed = 42;
};

struct RobustAffine {
  AffineTransform affine;
  std::vector<std::size_t> inliers;  // indices into the input MatchSet
  double mean_inlier_error = 0.0;    // of the refit affine over the inliers
};

RobustAffine robust_affine(const MatchSet& ms, const RansacParams& params = {});

struct AdapterOptions {
  int max_keypoints = 1024;
  std::chrono::milliseconds timeout{120000};
  // Directory for the exchanged images; defaults to $GIGAREG_TMP, then the
  // system temporary directory.
  std::filesystem::path temp_dir;
};

// Runs `/bin/sh -c adapter_cmd`, sends the request document on stdin and
// parses the reply from stdout. Throws AdapterFailure on nonzero exit,
// timeout, malformed or invalid replies.
MatchSet external_match(const std::string& adapter_cmd, const ImagePlane& src, const ImagePlane& tgt,
                        const AdapterOptions& options = {});

}  // namespace gigareg
