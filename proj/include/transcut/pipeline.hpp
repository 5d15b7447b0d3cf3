#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "transcut/energy.hpp"
#include "transcut/errors.hpp"
#include "transcut/eval.hpp"
#include "transcut/features.hpp"
#include "transcut/flo_io.hpp"
#include "transcut/flow.hpp"
#include "transcut/lightfield.hpp"
#include "transcut/maxflow.hpp"
#include "transcut/png_io.hpp"

namespace transcut {

enum class ViewSelector { All, Corners5, Uniform9 };
enum class FlowSource { Builtin, Import };

inline ViewSelector parse_view_selector(const std::string& s) {
  if (s == "all") return ViewSelector::All;
  if (s == "corners5") return ViewSelector::Corners5;
  if (s == "uniform9") return ViewSelector::Uniform9;
  throw ConfigError("unknown view selector '" + s + "' (expected all, corners5 or uniform9)");
}

inline const char* to_string(ViewSelector v) {
  switch (v) {
    case ViewSelector::Corners5: return "corners5";
    case ViewSelector::Uniform9: return "uniform9";
    default: return "all";
  }
}

struct PipelineConfig {
  EnergyParams energy;
  FlowParams flow;
  TextureParams texture;
  double baseline_th = 5.0;  ///< threshold of the LF-linearity baseline
  FlowSource flow_source = FlowSource::Builtin;
  std::filesystem::path flow_dir;        ///< import directory
  std::filesystem::path flow_cache_dir;  ///< builtin cache; empty = <out>/flow_cache
  ViewSelector views = ViewSelector::All;
  int threads = 1;

  void validate() const {
    try {
      energy.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (flow.levels < 1 || flow.search_radius < 1 || flow.patch_radius < 1)
      throw ConfigError("flow parameters must be positive");
    if (texture.window_radius < 1 || !(texture.grad_threshold >= 0.0)) throw ConfigError("bad texture parameters");
    if (!std::isfinite(baseline_th)) throw ConfigError("baseline_th must be finite");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (flow_source == FlowSource::Import && flow_dir.empty()) throw ConfigError("flow_source=import needs flow_dir");
  }
};

/// Applies one key=value setting; throws ConfigError on unknown keys or bad values.
inline void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  auto real = [&]() {
    auto v = detail::parse_number<double>(value);
    if (!v) throw ConfigError("bad number for " + key + ": '" + value + "'");
    return *v;
  };
  auto integer = [&]() {
    auto v = detail::parse_number<int>(value);
    if (!v) throw ConfigError("bad integer for " + key + ": '" + value + "'");
    return *v;
  };
  if (key == "alpha") cfg.energy.alpha = real();
  else if (key == "beta") cfg.energy.beta = real();
  else if (key == "gamma") cfg.energy.gamma = real();
  else if (key == "sig_a") cfg.energy.a = real();
  else if (key == "sig_b") cfg.energy.b = real();
  else if (key == "tau") cfg.energy.tau = real();
  else if (key == "baseline_th") cfg.baseline_th = real();
  else if (key == "texture_thresh") cfg.texture.grad_threshold = real();
  else if (key == "texture_radius") cfg.texture.window_radius = integer();
  else if (key == "flow_levels") cfg.flow.levels = integer();
  else if (key == "flow_search_radius") cfg.flow.search_radius = integer();
  else if (key == "flow_patch_radius") cfg.flow.patch_radius = integer();
  else if (key == "flow_dir") cfg.flow_dir = value;
  else if (key == "flow_cache_dir") cfg.flow_cache_dir = value;
  else if (key == "views") cfg.views = parse_view_selector(value);
  else if (key == "threads") cfg.threads = integer();
  else if (key == "flow_source") {
    if (value == "builtin") cfg.flow_source = FlowSource::Builtin;
    else if (value == "import") cfg.flow_source = FlowSource::Import;
    else throw ConfigError("flow_source must be builtin or import");
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

/// key=value config; '#' starts a comment.
inline PipelineConfig parse_config(std::istream& in, PipelineConfig cfg = {}) {
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = detail::trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    try {
      apply_setting(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in);
}

// ---------------------------------------------------------------------------
// Viewpoint subsets
// ---------------------------------------------------------------------------

/// Grid cells kept by a selector, center included.
inline std::vector<GridCell> selected_cells(const LightField& lf, ViewSelector sel) {
  if (sel == ViewSelector::All) return lf.cells;
  const int rows = lf.grid_rows, cols = lf.grid_cols;
  const GridCell c = lf.center_cell();
  if (rows < 3 || cols < 3 || rows % 2 == 0 || cols % 2 == 0 || c.row != rows / 2 || c.col != cols / 2)
    throw ConfigError(std::string("view selector ") + to_string(sel) + " needs an odd grid of at least 3x3 centered on (0,0)");
  std::vector<GridCell> cells;
  if (sel == ViewSelector::Corners5) {
    cells = {{0, 0}, {0, cols - 1}, c, {rows - 1, 0}, {rows - 1, cols - 1}};
  } else {
    for (int r : {0, c.row, rows - 1})
      for (int col : {0, c.col, cols - 1}) cells.push_back({r, col});
  }
  for (const auto& cell : cells)
    if (std::find(lf.cells.begin(), lf.cells.end(), cell) == lf.cells.end())
      throw ConfigError(std::string("view selector ") + to_string(sel) + " needs a view the light field lacks");
  return cells;
}

struct ViewSubset {
  LightField lf;
  std::vector<FlowPair> flows;
  std::vector<OcclusionDetector> detectors;
};

/// Keeps the selected views (and their flows when given) and rebuilds the
/// occlusion detectors over the remaining cells.
inline ViewSubset subset_views(const LightField& lf, const std::vector<FlowPair>& flows, ViewSelector sel) {
  const auto keep = selected_cells(lf, sel);
  auto kept = [&](const GridCell& c) { return std::find(keep.begin(), keep.end(), c) != keep.end(); };
  ViewSubset out;
  out.lf.grid_rows = lf.grid_rows;
  out.lf.grid_cols = lf.grid_cols;
  for (std::size_t i = 0; i < lf.size(); ++i) {
    if (!kept(lf.cells[i])) continue;
    if (i == lf.center_index) out.lf.center_index = out.lf.views.size();
    out.lf.views.push_back(lf.views[i]);
    out.lf.viewpoints.push_back(lf.viewpoints[i]);
    out.lf.cells.push_back(lf.cells[i]);
  }
  if (out.lf.size() < 5) throw ConfigError("view subset leaves fewer than 4 non-central views");
  for (const auto& p : flows)
    if (kept(p.cell)) out.flows.push_back(p);
  out.detectors = make_detectors(lf.grid_rows, lf.grid_cols, lf.center_cell(), out.lf.cells);
  return out;
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

struct FeatureMaps {
  Mask texture;
  ScalarMap e;
  ScalarMap e_tilde;
  ConsistencyVolume cv;
  OcclusionResponse occ;
};

inline FeatureMaps compute_features(const Image& center, const std::vector<FlowPair>& flows,
                                    const std::vector<OcclusionDetector>& detectors, const PipelineConfig& cfg) {
  FeatureMaps f;
  f.texture = texture_mask(center, cfg.texture);
  f.e = linearity_map(flows, center.width, center.height, cfg.threads);
  f.e_tilde = scale_linearity(f.e, cfg.energy.a, cfg.energy.b);
  f.cv = consistency_volume(flows, cfg.energy.tau, cfg.threads);
  f.occ = occlusion_response(f.cv, detectors, cfg.threads);
  return f;
}

struct Segmentation {
  FeatureMaps features;
  RegionalTerms regional;
  BoundaryTerm boundary;
  Mask mask;
  Mask baseline;
  double energy = 0.0;
  double flow_value = 0.0;
};

inline Segmentation run_segmentation(const Image& center, const std::vector<FlowPair>& flows,
                                     const std::vector<OcclusionDetector>& detectors, const PipelineConfig& cfg) {
  cfg.validate();
  Segmentation s;
  s.features = compute_features(center, flows, detectors, cfg);
  s.regional = regional_terms(s.features.e_tilde, s.features.occ, s.features.texture, cfg.energy.beta);
  s.boundary = boundary_term(boundary_weights(s.features.occ), cfg.energy.gamma);
  const SegGraph g = build_graph(s.regional, s.boundary, cfg.energy.alpha);
  SegmentationCut cut = solve_segmentation(g);
  s.mask = std::move(cut.labeling);
  s.flow_value = cut.flow_value;
  s.energy = energy_of(s.mask, g);
  s.baseline = threshold_baseline(s.features.e, cfg.baseline_th, s.features.texture);
  return s;
}

/// In-memory pipeline over a full light field and its flows.
inline Segmentation run_pipeline(const LightField& lf, const std::vector<FlowPair>& flows, const PipelineConfig& cfg) {
  const ViewSubset sub = subset_views(lf, flows, cfg.views);
  return run_segmentation(sub.lf.center(), sub.flows, sub.detectors, cfg);
}

// ---------------------------------------------------------------------------
// Flow acquisition with content-hash cache
// ---------------------------------------------------------------------------

namespace detail {

struct Fnv1a {
  std::uint64_t h = 0xcbf29ce484222325ull;
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) h = (h ^ b[i]) * 0x100000001b3ull;
  }
  template <typename T>
  void value(const T& v) {
    bytes(&v, sizeof v);
  }
};

}  // namespace detail

/// Hash of the light-field content and flow parameters keying the cache.
inline std::string flow_cache_key(const LightField& lf, const FlowParams& p) {
  detail::Fnv1a h;
  h.value(lf.grid_rows);
  h.value(lf.grid_cols);
  for (std::size_t i = 0; i < lf.size(); ++i) {
    h.value(lf.cells[i].row);
    h.value(lf.cells[i].col);
    h.value(lf.viewpoints[i].s);
    h.value(lf.viewpoints[i].t);
    h.value(lf.views[i].width);
    h.value(lf.views[i].height);
    h.bytes(lf.views[i].data.data(), lf.views[i].data.size() * sizeof(float));
  }
  h.value(p.levels);
  h.value(p.search_radius);
  h.value(p.patch_radius);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h.h));
  return buf;
}

/// Imported flows, or builtin flows read from / written to the cache.
inline std::vector<FlowPair> obtain_flows(const LightField& lf, const PipelineConfig& cfg,
                                          const std::filesystem::path& cache_root, bool* cache_hit = nullptr) {
  if (cache_hit) *cache_hit = false;
  if (cfg.flow_source == FlowSource::Import) return load_flow_dir(cfg.flow_dir, lf);
  if (cache_root.empty()) return compute_flows(lf, cfg.flow, cfg.threads);
  const auto dir = cache_root / flow_cache_key(lf, cfg.flow);
  if (std::filesystem::exists(dir / "complete")) {
    if (cache_hit) *cache_hit = true;
    return load_flow_dir(dir, lf);
  }
  auto flows = compute_flows(lf, cfg.flow, cfg.threads);
  write_flow_dir(flows, lf, dir);
  std::ofstream(dir / "complete") << "ok\n";
  return flows;
}

// ---------------------------------------------------------------------------
// Directory-level operations
// ---------------------------------------------------------------------------

/// theta~ quantized to 8 gray levels (k * 255 / 7 for theta = 45 k).
inline void write_theta_map(const Grid<int>& theta, const std::filesystem::path& path) {
  std::vector<std::uint8_t> px(theta.size());
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<std::uint8_t>((theta.data[i] / 45) * 255 / 7);
  write_png_gray(path, theta.width, theta.height, px);
}

inline void write_features(const FeatureMaps& f, const std::filesystem::path& out) {
  write_scalar_map(f.e, out / "E.png");
  write_scalar_map(f.e_tilde, out / "E_tilde.png");
  write_scalar_map(f.occ.o_max, out / "occ.png");
  write_theta_map(f.occ.theta_map, out / "theta.png");
  write_mask(f.texture, out / "texture.png");
}

struct RunReport {
  std::size_t views = 0;
  bool flow_cache_hit = false;
  double ms_load = 0, ms_flow = 0, ms_features = 0, ms_cut = 0;
};

namespace detail {

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double lap() {
    const auto t1 = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    t0 = t1;
    return ms;
  }
};

struct Prepared {
  ViewSubset subset;
  RunReport report;
};

inline Prepared prepare(const std::filesystem::path& lf_dir, const PipelineConfig& cfg,
                        const std::filesystem::path& out_dir) {
  cfg.validate();
  Stopwatch sw;
  Prepared p;
  const LightField full = load_lightfield(lf_dir);
  p.subset = subset_views(full, {}, cfg.views);
  p.report.ms_load = sw.lap();
  const auto cache = cfg.flow_cache_dir.empty() ? out_dir / "flow_cache" : cfg.flow_cache_dir;
  p.subset.flows = obtain_flows(p.subset.lf, cfg, cache, &p.report.flow_cache_hit);
  p.report.ms_flow = sw.lap();
  p.report.views = p.subset.lf.size();
  return p;
}

}  // namespace detail

/// Full pipeline from a light-field directory. Writes mask.png, baseline.png,
/// E.png, E_tilde.png, occ.png, theta.png, texture.png and run.txt.
inline Segmentation segment(const std::filesystem::path& lf_dir, const PipelineConfig& cfg,
                            const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto prep = detail::prepare(lf_dir, cfg, out_dir);
  detail::Stopwatch sw;
  Segmentation s = run_segmentation(prep.subset.lf.center(), prep.subset.flows, prep.subset.detectors, cfg);
  prep.report.ms_cut = sw.lap();

  write_mask(s.mask, out_dir / "mask.png");
  write_mask(s.baseline, out_dir / "baseline.png");
  write_features(s.features, out_dir);

  std::ofstream run(out_dir / "run.txt");
  run.precision(17);
  run << "views=" << prep.report.views << "\nselector=" << to_string(cfg.views)
      << "\nflow_source=" << (cfg.flow_source == FlowSource::Import ? "import" : "builtin")
      << "\nflow_cache_hit=" << prep.report.flow_cache_hit << "\nwidth=" << s.mask.width << "\nheight=" << s.mask.height
      << "\nforeground_pixels=" << count_ones(s.mask) << "\nbaseline_pixels=" << count_ones(s.baseline)
      << "\ntextured_pixels=" << count_ones(s.features.texture) << "\nenergy=" << s.energy
      << "\nflow_value=" << s.flow_value << "\nms_load=" << prep.report.ms_load << "\nms_flow=" << prep.report.ms_flow
      << "\nms_solve=" << prep.report.ms_cut << "\n";
  return s;
}

/// Feature stages only; writes E.png, E_tilde.png, occ.png, theta.png, texture.png.
inline FeatureMaps features_dump(const std::filesystem::path& lf_dir, const PipelineConfig& cfg,
                                 const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto prep = detail::prepare(lf_dir, cfg, out_dir);
  FeatureMaps f = compute_features(prep.subset.lf.center(), prep.subset.flows, prep.subset.detectors, cfg);
  write_features(f, out_dir);
  return f;
}

}  // namespace transcut
