#pragma once

// Batch runs over a manifest of image pairs, as driven by the command-line
// tool.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gigareg/evaluation.hpp"
#include "gigareg/pipeline.hpp"
#include "gigareg/synth.hpp"

namespace gigareg {

struct ManifestPair {
  std::string id;
  std::filesystem::path source;
  std::filesystem::path target;
  std::optional<std::filesystem::path> source_landmarks;
  std::optional<std::filesystem::path> target_landmarks;
  LengthUnit units = LengthUnit::Pixels;
  std::optional<double> spacing;  // micrometers per level-0 pixel
};

// {"output_root": "...", "config": "...", "pairs": [{"id", "source", "target",
//   "source_landmarks", "target_landmarks", "units", "spacing"}]}
// Relative paths are resolved against the manifest's directory.
struct RunManifest {
  std::vector<ManifestPair> pairs;
  std::optional<std::filesystem::path> config;
  std::filesystem::path output_root;
};

RunManifest load_manifest(const std::filesystem::path& path);

struct BatchOptions {
  int jobs = 1;
  std::ostream* log = nullptr;
};

// Writes <output_root>/<id>/{affine.json, field.bin, report.json} per pair
// and <output_root>/run_report.json. Returns 0 when every pair produced its
// outputs, 1 otherwise.
int run_register(const RunManifest& manifest, const PipelineConfig& cfg, const BatchOptions& options = {});

struct PairOutcome {
  std::string id;
  PairEvaluation before;
  PairEvaluation after;
};

// Maps target landmarks through each pair's stored transform and compares
// them with the source landmarks. Pairs without landmarks or outputs are
// reported as errors. Writes the report to out_json and returns the exit
// code (1 if any pair failed).
int run_evaluate(const RunManifest& manifest, const std::filesystem::path& out_json, std::ostream* log = nullptr);

// source.png, target.png, truth_affine.json, truth_field.bin,
// landmarks_src.csv, landmarks_tgt.csv
void write_synthetic_case(const SyntheticCase& c, const std::filesystem::path& dir);

}  // namespace gigareg
