#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include "gigareg/batch.hpp"
#include "gigareg/error.hpp"

namespace gigareg {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

Size2 size_from(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

ordered_json eval_json(const PairEvaluation& e) {
  return {{"median_tre", e.median_tre},
          {"average_tre", e.average_tre},
          {"median_rtre", e.median_rtre},
          {"average_rtre", e.average_rtre}};
}

ordered_json summary_json(const DatasetSummary& s) {
  return {{"med_med", s.med_med}, {"med_avg", s.med_avg}, {"avg_med", s.avg_med}, {"avg_avg", s.avg_avg},
          {"pairs", s.pairs}};
}

void log_line(std::ostream* log, std::mutex& mu, const std::string& line) {
  if (!log) return;
  std::lock_guard<std::mutex> lock(mu);
  *log << line << '\n';
  log->flush();
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

RunManifest load_manifest(const fs::path& path) {
  RunManifest m;
  const fs::path base = path.parent_path();
  try {
    const json j = json::parse(read_text_file(path));
    m.output_root = resolve(base, j.value("output_root", std::string("gigareg_out")));
    if (j.contains("config")) m.config = resolve(base, j.at("config").get<std::string>());
    std::set<std::string> ids;
    int index = 0;
    for (const json& p : j.at("pairs")) {
      ManifestPair mp;
      mp.id = p.contains("id") ? p.at("id").get<std::string>() : "pair_" + std::to_string(index);
      mp.source = resolve(base, p.at("source").get<std::string>());
      mp.target = resolve(base, p.at("target").get<std::string>());
      if (p.contains("source_landmarks"))
        mp.source_landmarks = resolve(base, p.at("source_landmarks").get<std::string>());
      if (p.contains("target_landmarks"))
        mp.target_landmarks = resolve(base, p.at("target_landmarks").get<std::string>());
      if (p.contains("units")) mp.units = parse_length_unit(p.at("units").get<std::string>());
      if (p.contains("spacing")) mp.spacing = p.at("spacing").get<double>();
      if (!ids.insert(mp.id).second) throw Error(ErrorKind::InvalidArgument, "duplicate pair id " + mp.id);
      if (mp.id.empty() || mp.id.find('/') != std::string::npos || mp.id == "." || mp.id == "..")
        throw Error(ErrorKind::InvalidArgument, "invalid pair id '" + mp.id + "'");
      m.pairs.push_back(std::move(mp));
      ++index;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, path.string() + ": " + e.what());
  }
  return m;
}

int run_register(const RunManifest& manifest, const PipelineConfig& cfg, const BatchOptions& options) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(manifest.output_root, ec);
  if (ec) throw Error(ErrorKind::OutputWriteFailure, manifest.output_root.string() + ": " + ec.message());

  std::vector<ordered_json> entries(manifest.pairs.size());
  std::vector<char> ok(manifest.pairs.size(), 0);
  std::mutex log_mu;
  parallel_for(manifest.pairs.size(), options.jobs, [&](std::size_t i) {
    const ManifestPair& p = manifest.pairs[i];
    ordered_json e;
    e["id"] = p.id;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const PyramidImage src = PyramidImage::open(p.source);
      const PyramidImage tgt = PyramidImage::open(p.target);
      const PairRegistration r = register_pair(src, tgt, cfg);
      const fs::path dir = manifest.output_root / p.id;
      fs::create_directories(dir, ec);
      write_affine(dir / "affine.json", r.initial.affine);
      write_field(dir / "field.bin", r.nonrigid.field);
      ordered_json report;
      report["id"] = p.id;
      report["source_path"] = p.source.string();
      report["target_path"] = p.target.string();
      const ordered_json details = pair_report(r);
      for (const auto& [k, v] : details.items()) report[k] = v;
      write_file(dir / "report.json", report.dump(2) + "\n");
      e["status"] = "ok";
      e["fallback_identity"] = r.initial.fallback_identity;
      e["classical_fallback"] = report["initial_alignment"]["classical_fallback"];
      e["folding_ratio"] = round_sig9(r.nonrigid.folding_ratio);
      ok[i] = 1;
    } catch (const std::exception& ex) {
      e["status"] = "error";
      e["error"] = ex.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[64];
    std::snprintf(buf, sizeof buf, " (%.1f s)", secs);
    log_line(options.log, log_mu,
             "[" + p.id + "] " + e["status"].get<std::string>() +
                 (e.contains("error") ? ": " + e["error"].get<std::string>() : std::string()) + buf);
    entries[i] = std::move(e);
  });

  ordered_json run;
  run["config"] = rounded(pipeline_config_to_json(cfg));
  run["pairs"] = entries;
  const bool all_ok = std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
  run["status"] = all_ok ? "ok" : "partial_failure";
  write_file(manifest.output_root / "run_report.json", run.dump(2) + "\n");
  return all_ok ? 0 : 1;
}

int run_evaluate(const RunManifest& manifest, const fs::path& out_json, std::ostream* log) {
  std::vector<PairEvaluation> before;
  std::vector<PairEvaluation> after;
  std::vector<std::vector<double>> tre_before;
  std::vector<std::vector<double>> tre_after;
  ordered_json pairs = ordered_json::array();
  bool all_ok = true;
  for (const ManifestPair& p : manifest.pairs) {
    ordered_json e;
    e["id"] = p.id;
    try {
      if (!p.source_landmarks || !p.target_landmarks)
        throw Error(ErrorKind::InvalidArgument, "pair has no landmark files");
      const fs::path dir = manifest.output_root / p.id;
      const json report = json::parse(read_text_file(dir / "report.json"));
      const Size2 s0 = size_from(report.at("source").at("level0_size"));
      const Size2 t0 = size_from(report.at("target").at("level0_size"));
      const PairMapping map(read_affine(dir / "affine.json"), read_field(dir / "field.bin"), s0, t0);
      const LandmarkSet src = load_landmarks(*p.source_landmarks, p.units, p.spacing);
      const LandmarkSet tgt = load_landmarks(*p.target_landmarks, p.units, p.spacing);
      LandmarkSet mapped = tgt;
      for (Point2& q : mapped.points) q = map(q);
      const double spacing = p.spacing.value_or(1.0);
      const std::vector<double> d0 = tre(tgt, src, 1.0);
      const std::vector<double> d1 = tre(mapped, src, 1.0);
      const PairEvaluation eb = evaluate_pair(d0, spacing, t0.width, t0.height);
      const PairEvaluation ea = evaluate_pair(d1, spacing, t0.width, t0.height);
      e["status"] = "ok";
      e["tre_units"] = p.spacing ? "um" : "px";
      e["before"] = eval_json(eb);
      e["after"] = eval_json(ea);
      e["tre_per_landmark"] = ea.tre_per_landmark;
      before.push_back(eb);
      after.push_back(ea);
      tre_before.push_back(eb.tre_per_landmark);
      tre_after.push_back(ea.tre_per_landmark);
      if (log) *log << "[" << p.id << "] median TRE " << eb.median_tre << " -> " << ea.median_tre << '\n';
    } catch (const std::exception& ex) {
      all_ok = false;
      e["status"] = "error";
      e["error"] = ex.what();
      if (log) *log << "[" << p.id << "] error: " << ex.what() << '\n';
    }
    pairs.push_back(std::move(e));
  }
  ordered_json out;
  out["pairs"] = std::move(pairs);
  if (!after.empty()) {
    out["aggregate"] = {
        {"before", {{"tre", summary_json(aggregate(before, Quantity::Tre))},
                    {"rtre", summary_json(aggregate(before, Quantity::Rtre))}}},
        {"after", {{"tre", summary_json(aggregate(after, Quantity::Tre))},
                   {"rtre", summary_json(aggregate(after, Quantity::Rtre))}}}};
    out["robustness"] = robustness(tre_before, tre_after);
  }
  write_file(out_json, rounded(out).dump(2) + "\n");
  return all_ok ? 0 : 1;
}

void write_synthetic_case(const SyntheticCase& c, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::OutputWriteFailure, dir.string() + ": " + ec.message());
  write_png(dir / "source.png", c.source);
  write_png(dir / "target.png", c.target);
  write_affine(dir / "truth_affine.json", c.true_affine);
  write_field(dir / "truth_field.bin", c.true_field);
  write_landmarks(dir / "landmarks_src.csv", c.landmarks_source);
  write_landmarks(dir / "landmarks_tgt.csv", c.landmarks_target);
}

}  // namespace gigareg
