#include "gigareg/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gigareg/error.hpp"

namespace gigareg {
namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& text, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::MalformedCsv,
                "line " + std::to_string(line_no) + ": not a number: '" + text + "'");
  }
}

}  // namespace

LengthUnit parse_length_unit(const std::string& name) {
  if (name == "px" || name == "pixels") return LengthUnit::Pixels;
  if (name == "um" || name == "micrometers") return LengthUnit::Micrometers;
  if (name == "mm" || name == "millimeters") return LengthUnit::Millimeters;
  throw Error(ErrorKind::InvalidArgument, "unknown length unit '" + name + "'");
}

LandmarkSet parse_landmarks(std::istream& in, LengthUnit units, std::optional<double> spacing) {
  double to_px = 1.0;
  if (units != LengthUnit::Pixels) {
    if (!spacing || !(*spacing > 0.0))
      throw Error(ErrorKind::MissingSpacing, "physical landmark units require a pixel spacing");
    to_px = (units == LengthUnit::Millimeters ? 1000.0 : 1.0) / *spacing;
  }

  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  LandmarkSet set;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (!header_seen) {
      if (cells.size() != 3 || cells[0] != "id" || cells[1] != "x" || cells[2] != "y")
        throw Error(ErrorKind::MalformedCsv, "expected header 'id,x,y'");
      header_seen = true;
      continue;
    }
    if (cells.size() != 3)
      throw Error(ErrorKind::MalformedCsv, "line " + std::to_string(line_no) + ": expected 3 fields");
    set.ids.push_back(cells[0]);
    set.points.push_back({parse_number(cells[1], line_no) * to_px, parse_number(cells[2], line_no) * to_px});
  }
  if (!header_seen) throw Error(ErrorKind::MalformedCsv, "missing header");
  if (set.points.empty()) throw Error(ErrorKind::MalformedCsv, "no landmarks");
  return set;
}

LandmarkSet load_landmarks(const std::filesystem::path& path, LengthUnit units,
                           std::optional<double> spacing) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::UnreadableInput, "cannot open " + path.string());
  return parse_landmarks(in, units, spacing);
}

void write_landmarks(const std::filesystem::path& path, const LandmarkSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::OutputWriteFailure, "cannot write " + path.string());
  out << "id,x,y\n";
  char buf[96];
  for (std::size_t i = 0; i < set.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g", set.points[i].x, set.points[i].y);
    out << set.ids[i] << ',' << buf << '\n';
  }
  if (!out) throw Error(ErrorKind::OutputWriteFailure, "cannot write " + path.string());
}

std::vector<double> tre(const LandmarkSet& warped_source, const LandmarkSet& target, double spacing) {
  if (warped_source.size() != target.size())
    throw Error(ErrorKind::LandmarkMismatch, "landmark sets differ in length");
  if (warped_source.ids != target.ids)
    throw Error(ErrorKind::LandmarkMismatch, "landmark ids do not correspond");
  std::vector<double> d(target.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double dx = warped_source.points[i].x - target.points[i].x;
    const double dy = warped_source.points[i].y - target.points[i].y;
    d[i] = std::hypot(dx, dy) * spacing;
  }
  return d;
}

std::vector<double> rtre(std::span<const double> distances_px, int image_w, int image_h) {
  if (image_w < 1 || image_h < 1) throw Error(ErrorKind::InvalidArgument, "image size must be positive");
  const double diag = std::hypot(static_cast<double>(image_w), static_cast<double>(image_h));
  std::vector<double> r(distances_px.begin(), distances_px.end());
  for (double& v : r) v /= diag;
  return r;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::EmptyInput, "median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::EmptyInput, "mean of an empty list");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

PairEvaluation evaluate_pair(std::span<const double> distances_px, double spacing, int image_w,
                             int image_h) {
  PairEvaluation e;
  e.tre_per_landmark.assign(distances_px.begin(), distances_px.end());
  for (double& v : e.tre_per_landmark) v *= spacing;
  e.median_tre = median(e.tre_per_landmark);
  e.average_tre = mean(e.tre_per_landmark);
  e.rtre_per_landmark = rtre(distances_px, image_w, image_h);
  e.median_rtre = median(e.rtre_per_landmark);
  e.average_rtre = mean(e.rtre_per_landmark);
  return e;
}

DatasetSummary aggregate(std::span<const PairEvaluation> per_pair, Quantity quantity) {
  if (per_pair.empty()) throw Error(ErrorKind::EmptyInput, "no pairs to aggregate");
  std::vector<double> medians, averages;
  for (const PairEvaluation& p : per_pair) {
    medians.push_back(quantity == Quantity::Rtre ? p.median_rtre : p.median_tre);
    averages.push_back(quantity == Quantity::Rtre ? p.average_rtre : p.average_tre);
  }
  // Sorted summation keeps the aggregates independent of pair order.
  std::sort(medians.begin(), medians.end());
  std::sort(averages.begin(), averages.end());
  DatasetSummary s;
  s.pairs = per_pair.size();
  s.med_med = median(medians);
  s.med_avg = median(averages);
  s.avg_med = mean(medians);
  s.avg_avg = mean(averages);
  return s;
}

double robustness(std::span<const std::vector<double>> initial_tre,
                  std::span<const std::vector<double>> final_tre) {
  if (initial_tre.size() != final_tre.size())
    throw Error(ErrorKind::LandmarkMismatch, "initial and final pair counts differ");
  if (initial_tre.empty()) throw Error(ErrorKind::EmptyInput, "no pairs");
  std::size_t improved = 0;
  for (std::size_t i = 0; i < initial_tre.size(); ++i)
    if (median(final_tre[i]) < median(initial_tre[i])) ++improved;
  return static_cast<double>(improved) / static_cast<double>(initial_tre.size());
}

}  // namespace gigareg
