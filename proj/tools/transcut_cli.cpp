#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "transcut/transcut.hpp"

namespace fs = std::filesystem;
using namespace transcut;

namespace {

struct Overrides {
  std::optional<double> alpha, beta, gamma, sig_a, sig_b, tau, texture_thresh, baseline_th;
  std::optional<int> flow_levels, flow_search_radius, flow_patch_radius;
  std::optional<std::string> views, flow_dir, flow_cache_dir;
};

void add_pipeline_options(CLI::App* app, Overrides& o) {
  app->add_option("--alpha", o.alpha, "region/boundary balance");
  app->add_option("--beta", o.beta, "background cost scale");
  app->add_option("--gamma", o.gamma, "boundary attenuation rate");
  app->add_option("--sig-a", o.sig_a, "sigmoid steepness");
  app->add_option("--sig-b", o.sig_b, "sigmoid shift");
  app->add_option("--tau", o.tau, "forward-backward tolerance (px)");
  app->add_option("--texture-thresh", o.texture_thresh, "texture gradient threshold");
  app->add_option("--baseline-th", o.baseline_th, "threshold of the linearity baseline");
  app->add_option("--flow-levels", o.flow_levels, "pyramid levels of the builtin matcher");
  app->add_option("--flow-search", o.flow_search_radius, "search radius per level (px)");
  app->add_option("--flow-patch", o.flow_patch_radius, "patch radius (px)");
  app->add_option("--views", o.views, "view subset: all, corners5, uniform9");
  app->add_option("--flow-dir", o.flow_dir, "import .flo files from this directory");
  app->add_option("--flow-cache", o.flow_cache_dir, "builtin flow cache directory");
}

PipelineConfig build_config(const std::string& config_path, int threads, const Overrides& o) {
  PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_config(config_path);
  auto set = [&](const char* key, const auto& opt) {
    if (!opt) return;
    std::ostringstream ss;
    ss.precision(17);
    ss << *opt;
    apply_setting(cfg, key, ss.str());
  };
  set("alpha", o.alpha);
  set("beta", o.beta);
  set("gamma", o.gamma);
  set("sig_a", o.sig_a);
  set("sig_b", o.sig_b);
  set("tau", o.tau);
  set("texture_thresh", o.texture_thresh);
  set("baseline_th", o.baseline_th);
  set("flow_levels", o.flow_levels);
  set("flow_search_radius", o.flow_search_radius);
  set("flow_patch_radius", o.flow_patch_radius);
  set("views", o.views);
  set("flow_cache_dir", o.flow_cache_dir);
  if (o.flow_dir) {
    cfg.flow_dir = *o.flow_dir;
    cfg.flow_source = FlowSource::Import;
  }
  if (threads > 0) cfg.threads = threads;
  cfg.validate();
  return cfg;
}

/// Scenes of a batch directory: every subdirectory holding gt_mask.png.
/// mask.png scores as "transcut", baseline.png as "threshold", pred_<m>.png as m.
std::vector<SceneMethods> collect_batch(const fs::path& root) {
  if (!fs::is_directory(root)) throw ConfigError("batch directory " + root.string() + " does not exist");
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory() && fs::exists(e.path() / "gt_mask.png")) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw ConfigError("no scenes with gt_mask.png under " + root.string());
  std::vector<SceneMethods> scenes;
  for (const auto& d : dirs) {
    SceneMethods sm{d.filename().string(), read_mask(d / "gt_mask.png"), {}};
    std::map<std::string, fs::path> found;
    for (const auto& e : fs::directory_iterator(d)) {
      const std::string name = e.path().filename().string();
      if (name == "mask.png") found["transcut"] = e.path();
      else if (name == "baseline.png") found["threshold"] = e.path();
      else if (name.rfind("pred_", 0) == 0 && e.path().extension() == ".png")
        found[name.substr(5, name.size() - 9)] = e.path();
    }
    for (const auto& [method, path] : found) sm.methods.emplace_back(method, read_mask(path));
    scenes.push_back(std::move(sm));
  }
  return scenes;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transparent-object segmentation in light fields"};
  app.require_subcommand(1);
  std::string config_path;
  int threads = 0;
  bool verbose = false;
  app.add_option("--config", config_path, "key=value configuration file");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--verbose,-v", verbose, "print progress to stderr");

  Overrides seg_o, feat_o, flow_o;
  std::string lf_dir, out_dir;

  auto* seg = app.add_subcommand("segment", "segment the transparent region of a light field");
  seg->add_option("lightfield", lf_dir, "light-field directory")->required();
  seg->add_option("out", out_dir, "output directory")->required();
  add_pipeline_options(seg, seg_o);

  auto* feat = app.add_subcommand("features", "write linearity and occlusion maps only");
  feat->add_option("lightfield", lf_dir, "light-field directory")->required();
  feat->add_option("out", out_dir, "output directory")->required();
  add_pipeline_options(feat, feat_o);

  auto* flow = app.add_subcommand("flow", "compute builtin flows and write .flo files");
  flow->add_option("lightfield", lf_dir, "light-field directory")->required();
  flow->add_option("out", out_dir, "output directory")->required();
  add_pipeline_options(flow, flow_o);

  std::string spec_path;
  std::optional<std::uint64_t> seed;
  bool emit_flows = false;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic light field with ground truth");
  synth_cmd->add_option("--spec", spec_path, "scene spec file (key=value); default is the reference scene");
  synth_cmd->add_option("--out", out_dir, "output directory")->required();
  synth_cmd->add_option("--seed", seed, "override the spec seed");
  synth_cmd->add_flag("--emit-flows", emit_flows, "also write exact flows to <out>/flows");

  std::string pred_path, gt_path, batch_dir, csv_path;
  bool micro = false;
  auto* eval_cmd = app.add_subcommand("eval", "precision, recall and F-measure of masks");
  auto* pred_opt = eval_cmd->add_option("--pred", pred_path, "predicted mask");
  auto* gt_opt = eval_cmd->add_option("--gt", gt_path, "ground-truth mask");
  auto* batch_opt = eval_cmd->add_option("--batch", batch_dir, "directory of scene subdirectories");
  eval_cmd->add_option("--csv", csv_path, "also write CSV here ('-' for stdout)");
  eval_cmd->add_flag("--micro", micro, "pool counts instead of averaging per scene");
  pred_opt->needs(gt_opt);
  gt_opt->needs(pred_opt);
  batch_opt->excludes(pred_opt)->excludes(gt_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    auto log = [&](const std::string& msg) {
      if (verbose) std::cerr << msg << "\n";
    };

    if (*seg) {
      const auto cfg = build_config(config_path, threads, seg_o);
      const auto s = segment(lf_dir, cfg, out_dir);
      log("foreground pixels: " + std::to_string(count_ones(s.mask)) + ", energy " + std::to_string(s.energy));
      std::cout << "wrote " << (fs::path(out_dir) / "mask.png").string() << "\n";
    } else if (*feat) {
      const auto cfg = build_config(config_path, threads, feat_o);
      features_dump(lf_dir, cfg, out_dir);
      std::cout << "wrote features to " << out_dir << "\n";
    } else if (*flow) {
      auto cfg = build_config(config_path, threads, flow_o);
      const LightField full = load_lightfield(lf_dir);
      const auto sub = subset_views(full, {}, cfg.views);
      log("computing flows for " + std::to_string(sub.lf.size() - 1) + " views");
      const auto flows = cfg.flow_source == FlowSource::Import ? load_flow_dir(cfg.flow_dir, sub.lf)
                                                               : compute_flows(sub.lf, cfg.flow, cfg.threads);
      write_flow_dir(flows, sub.lf, out_dir);
      std::cout << "wrote " << 2 * flows.size() << " flow files to " << out_dir << "\n";
    } else if (*synth_cmd) {
      synth::SceneSpec spec = spec_path.empty() ? synth::reference_scene(1) : synth::load_scene_spec(spec_path);
      if (seed) spec.seed = *seed;
      spec.validate();
      const auto scene = synth::generate(spec);
      synth::emit(scene, out_dir, emit_flows);
      std::ofstream(fs::path(out_dir) / "scene.txt") << [&] {
        std::ostringstream ss;
        synth::write_scene_spec(ss, spec);
        return ss.str();
      }();
      log("gt pixels: " + std::to_string(count_ones(scene.gt_mask)));
      std::cout << "wrote scene to " << out_dir << "\n";
    } else if (*eval_cmd) {
      if (batch_dir.empty() && pred_path.empty()) throw ConfigError("eval needs --pred/--gt or --batch");
      Report report;
      if (!batch_dir.empty()) {
        report = compare_report(collect_batch(batch_dir), micro ? Averaging::Micro : Averaging::Macro);
      } else {
        std::string scene = fs::path(pred_path).parent_path().filename().string();
        report = compare_report({{"pred", read_mask(pred_path)}}, read_mask(gt_path), scene.empty() ? "scene" : scene);
      }
      std::cout << format_table(report);
      if (csv_path == "-") std::cout << format_csv(report);
      else if (!csv_path.empty()) std::ofstream(csv_path) << format_csv(report);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
