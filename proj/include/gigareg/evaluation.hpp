#pragma once

// Landmark-based accuracy metrics. Registration results map target-frame
// points into the source frame; TRE compares those mapped target landmarks
// with the source landmarks.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gigareg/geometry.hpp"

namespace gigareg {

enum class LengthUnit { Pixels, Micrometers, Millimeters };

LengthUnit parse_length_unit(const std::string& name);

// Points are always stored in pixels; load_landmarks converts.
struct LandmarkSet {
  std::vector<std::string> ids;
  std::vector<Point2> points;

  std::size_t size() const noexcept { return points.size(); }
};

// CSV with header `id,x,y`. spacing is micrometers per pixel and is required
// for physical units.
LandmarkSet parse_landmarks(std::istream& in, LengthUnit units, std::optional<double> spacing);
LandmarkSet load_landmarks(const std::filesystem::path& path, LengthUnit units,
                           std::optional<double> spacing);
void write_landmarks(const std::filesystem::path& path, const LandmarkSet& set);

// Per-landmark Euclidean distance times spacing (micrometers per pixel).
std::vector<double> tre(const LandmarkSet& warped_source, const LandmarkSet& target,
                        double spacing = 1.0);

// Distances divided by the image diagonal.
std::vector<double> rtre(std::span<const double> distances_px, int image_w, int image_h);

// Even-length medians are the mean of the two central values.
double median(std::vector<double> values);
double mean(std::span<const double> values);

struct PairEvaluation {
  std::vector<double> tre_per_landmark;  // micrometers (pixels when spacing is 1)
  double median_tre = 0.0;
  double average_tre = 0.0;
  std::vector<double> rtre_per_landmark;
  double median_rtre = 0.0;
  double average_rtre = 0.0;
};

PairEvaluation evaluate_pair(std::span<const double> distances_px, double spacing, int image_w,
                             int image_h);

struct DatasetSummary {
  double med_med = 0.0;  // median over pairs of per-pair medians
  double med_avg = 0.0;  // median of per-pair averages
  double avg_med = 0.0;  // average of per-pair medians
  double avg_avg = 0.0;  // average of per-pair averages
  std::size_t pairs = 0;
};

enum class Quantity { Tre, Rtre };

DatasetSummary aggregate(std::span<const PairEvaluation> per_pair, Quantity quantity = Quantity::Rtre);

// Fraction of pairs whose median TRE decreased.
double robustness(std::span<const std::vector<double>> initial_tre,
                  std::span<const std::vector<double>> final_tre);

}  // namespace gigareg
