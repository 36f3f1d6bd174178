// gigareg command-line tool: register, warp, evaluate, synth.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "gigareg/batch.hpp"
#include "gigareg/error.hpp"

namespace fs = std::filesystem;
using namespace gigareg;

namespace {

PipelineConfig resolve_config(const RunManifest& m, const std::string& config_flag) {
  if (!config_flag.empty()) return load_pipeline_config(config_flag);
  if (m.config) return load_pipeline_config(*m.config);
  return PipelineConfig{};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gigapixel histology registration: initial alignment, nonrigid refinement, tiled warping"};
  app.require_subcommand(1);

  std::string manifest_path, config_path, adapter;
  int jobs = 1;
  std::optional<std::uint64_t> seed;

  auto* reg = app.add_subcommand("register", "Register every pair of a manifest");
  reg->add_option("manifest", manifest_path, "Run manifest (JSON)")->required()->check(CLI::ExistingFile);
  reg->add_option("--config", config_path, "Pipeline config (JSON)")->check(CLI::ExistingFile);
  reg->add_option("--jobs", jobs, "Pairs processed concurrently")->check(CLI::PositiveNumber);
  reg->add_option("--adapter", adapter, "External matcher command (run with /bin/sh -c)");
  reg->add_option("--seed", seed, "RANSAC seed");

  std::string source, affine_path, field_path, out_dir;
  int level_side = 0;
  int tile_size = 1024;
  auto* warp = app.add_subcommand("warp", "Warp a source image at full resolution");
  warp->add_option("--source", source, "Source image or pyramid directory")->required();
  warp->add_option("--affine", affine_path, "affine.json")->required();
  warp->add_option("--field", field_path, "field.bin")->required();
  warp->add_option("--out", out_dir, "Output pyramid directory")->required();
  warp->add_option("--level-side", level_side, "Max side of the output level 0")->required()->check(CLI::PositiveNumber);
  warp->add_option("--tile-size", tile_size, "Output tile size")->check(CLI::Range(16, 1 << 16));
  warp->add_option("--jobs", jobs, "Tiles processed concurrently")->check(CLI::PositiveNumber);

  std::string eval_out;
  auto* eval = app.add_subcommand("evaluate", "Landmark TRE of registered pairs");
  eval->add_option("manifest", manifest_path, "Run manifest with landmark files")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", eval_out, "Report path (default <output_root>/evaluation.json)");

  std::string synth_out;
  int count = 1, size = 512, blobs = 3;
  double rot = 0.0, deform = 10.0;
  auto* synth = app.add_subcommand("synth", "Write synthetic benchmark cases and a manifest");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", seed, "Seed of the first case");
  synth->add_option("--count", count, "Number of cases")->check(CLI::PositiveNumber);
  synth->add_option("--size", size, "Image side")->check(CLI::Range(256, 16384));
  synth->add_option("--rot", rot, "Rotation in degrees");
  synth->add_option("--deform", deform, "Maximum deformation in pixels")->check(CLI::NonNegativeNumber);
  synth->add_option("--blobs", blobs, "Number of deformation bumps")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*reg) {
      const RunManifest m = load_manifest(manifest_path);
      PipelineConfig cfg = resolve_config(m, config_path);
      if (!adapter.empty()) {
        cfg.initial.backend = MatcherBackend::Adapter;
        cfg.initial.adapter_cmd = adapter;
      }
      if (seed) cfg.initial.ransac.seed = *seed;
      return run_register(m, cfg, {jobs, &std::cerr});
    }
    if (*warp) {
      const PyramidImage src = PyramidImage::open(source);
      const DisplacementField field = read_field(field_path);
      const AffineTransform affine = read_affine(affine_path);
      const int max0 = std::max(src.levels()[0].width, src.levels()[0].height);
      if (level_side > max0)
        std::cerr << "warning: level side " << level_side << " exceeds source level 0; clamped to " << max0 << '\n';
      WarpOptions options;
      options.tile_size = tile_size;
      options.threads = jobs;
      const Size2 out = full_res_warp(src, field, affine, level_side, out_dir, options);
      std::cerr << "wrote " << out.width << " x " << out.height << " pyramid to " << out_dir << '\n';
      return 0;
    }
    if (*eval) {
      const RunManifest m = load_manifest(manifest_path);
      const fs::path out = eval_out.empty() ? m.output_root / "evaluation.json" : fs::path(eval_out);
      return run_evaluate(m, out, &std::cerr);
    }
    if (*synth) {
      const std::uint64_t first = seed.value_or(1);
      nlohmann::ordered_json manifest;
      manifest["output_root"] = "registration";
      manifest["pairs"] = nlohmann::ordered_json::array();
      for (int i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "case_%03d", i);
        const SyntheticCase c = generate_case(first + i, size, rot, deform, blobs);
        write_synthetic_case(c, fs::path(synth_out) / name);
        const std::string d = name;
        manifest["pairs"].push_back({{"id", d},
                                     {"source", d + "/source.png"},
                                     {"target", d + "/target.png"},
                                     {"source_landmarks", d + "/landmarks_src.csv"},
                                     {"target_landmarks", d + "/landmarks_tgt.csv"},
                                     {"units", "px"}});
      }
      write_file(fs::path(synth_out) / "manifest.json", manifest.dump(2) + "\n");
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
