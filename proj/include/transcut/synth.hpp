#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "transcut/errors.hpp"
#include "transcut/flo_io.hpp"
#include "transcut/flow.hpp"
#include "transcut/image.hpp"
#include "transcut/lightfield.hpp"
#include "transcut/png_io.hpp"

namespace transcut::synth {

struct Shape {
  enum class Kind { Disk, Rect };
  Kind kind = Kind::Disk;
  double cx = 0, cy = 0, radius = 0;  // disk
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // rect, [x0, x1) x [y0, y1)

  static Shape disk(double cx, double cy, double r) { return {Kind::Disk, cx, cy, r, 0, 0, 0, 0}; }
  static Shape rect(double x0, double y0, double x1, double y1) { return {Kind::Rect, 0, 0, 0, x0, y0, x1, y1}; }

  bool contains(double x, double y) const {
    if (kind == Kind::Disk) return (x - cx) * (x - cx) + (y - cy) * (y - cy) <= radius * radius;
    return x >= x0 && x < x1 && y >= y0 && y < y1;
  }
  double center_x() const { return kind == Kind::Disk ? cx : 0.5 * (x0 + x1); }
  double center_y() const { return kind == Kind::Disk ? cy : 0.5 * (y0 + y1); }
  /// Distance from the center to the farthest boundary point.
  double extent() const { return kind == Kind::Disk ? radius : 0.5 * std::hypot(x1 - x0, y1 - y0); }
  bool inside_image(int w, int h) const {
    if (kind == Kind::Disk) return radius > 0 && cx - radius >= 0 && cy - radius >= 0 && cx + radius <= w - 1 && cy + radius <= h - 1;
    return x0 < x1 && y0 < y1 && x0 >= 0 && y0 >= 0 && x1 <= w && y1 <= h;
  }
};

/// Refractive region: displacement d s + kappa s r + kappa2 s^2 per axis
/// (with the viewpoint sign convention of layer_shift), r = normalized
/// radial offset from the region center.
struct TransparentRegion {
  Shape shape;
  double disparity = 2.0;
  double kappa = 0.0;
  double kappa2 = 2.0;
};

struct Occluder {
  Shape shape;
  double disparity = 1.0;
};

struct SceneSpec {
  int width = 128;
  int height = 128;
  int grid_rows = 5;
  int grid_cols = 5;
  double bg_disparity = -9.0;
  double texture_cell = 3.0;  ///< finest value-noise lattice spacing in px
  std::optional<TransparentRegion> region;
  std::vector<Occluder> occluders;
  double flow_noise = 0.0;  ///< sigma of Gaussian noise added to exact flows
  std::uint64_t seed = 1;

  void validate() const {
    if (width <= 0 || height <= 0) throw ConfigError("scene: width and height must be positive");
    if (grid_rows <= 0 || grid_cols <= 0 || grid_rows % 2 == 0 || grid_cols % 2 == 0)
      throw ConfigError("scene: grid dimensions must be odd and positive");
    if (!std::isfinite(bg_disparity) || !(texture_cell > 0.0) || !(flow_noise >= 0.0))
      throw ConfigError("scene: bad background, texture or noise parameter");
    if (region) {
      if (!std::isfinite(region->disparity) || !std::isfinite(region->kappa) || !std::isfinite(region->kappa2))
        throw ConfigError("scene: region parameters must be finite");
      if (!region->shape.inside_image(width, height)) throw ConfigError("scene: transparent region exceeds image bounds");
    }
    for (const auto& o : occluders) {
      if (!std::isfinite(o.disparity) || !(o.disparity > bg_disparity))
        throw ConfigError("scene: occluder disparity must exceed the background disparity");
      if (!o.shape.inside_image(width, height)) throw ConfigError("scene: occluder exceeds image bounds");
    }
  }
};

struct SynthScene {
  LightField lightfield;
  Mask gt_mask;
  std::vector<FlowPair> exact_flows;  ///< one per non-central view, light-field order
  std::vector<Mask> occlusion_gt;     ///< center pixels whose correspondence is hidden in that view
  std::vector<Mask> out_of_frame;     ///< center pixels whose correspondence leaves the image
};

/// Image displacement of a layer with disparity d seen from viewpoint (s, t).
/// Viewpoint axes point right and up, image axes right and down, so content
/// moves against the camera: (-d s, +d t). Larger disparity = nearer.
inline std::pair<double, double> layer_shift(double d, const Viewpoint& vp) { return {-d * vp.s, d * vp.t}; }

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline double lattice(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
  const std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(ix) * 0x9E3779B97F4A7C15ull ^
                                                       static_cast<std::uint64_t>(iy) * 0xC2B2AE3D27D4EB4Full));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline double smooth(double f) { return f * f * (3.0 - 2.0 * f); }

}  // namespace detail

/// Seeded multi-octave value noise defined on the whole plane, in [20, 235].
class ValueNoise {
 public:
  ValueNoise(std::uint64_t seed, double cell) : seed_(seed), cell_(cell) {}

  double operator()(double x, double y) const {
    static constexpr double kScales[3] = {1.0, 2.5, 6.0};
    static constexpr double kWeights[3] = {0.5, 0.3, 0.2};
    double v = 0.0;
    for (int o = 0; o < 3; ++o) v += kWeights[o] * octave(seed_ + static_cast<std::uint64_t>(o) * 7919u, x / (cell_ * kScales[o]), y / (cell_ * kScales[o]));
    return 20.0 + 215.0 * v;
  }

 private:
  static double octave(std::uint64_t seed, double x, double y) {
    const double fx = std::floor(x), fy = std::floor(y);
    const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
    const double tx = detail::smooth(x - fx), ty = detail::smooth(y - fy);
    const double a = detail::lattice(seed, ix, iy), b = detail::lattice(seed, ix + 1, iy);
    const double c = detail::lattice(seed, ix, iy + 1), d = detail::lattice(seed, ix + 1, iy + 1);
    return (1 - ty) * ((1 - tx) * a + tx * b) + ty * ((1 - tx) * c + tx * d);
  }

  std::uint64_t seed_;
  double cell_;
};

/// Scene renderer: layer visibility, exact correspondences and intensities.
class SceneModel {
 public:
  explicit SceneModel(const SceneSpec& spec) : spec_(spec), background_(detail::splitmix64(spec.seed), spec.texture_cell) {
    spec_.validate();
    for (std::size_t i = 0; i < spec.occluders.size(); ++i)
      occluder_tex_.emplace_back(detail::splitmix64(spec.seed + 1000003ull * (i + 1)), spec.texture_cell);
  }

  /// Layer ids: -1 background, -2 transparent region, k >= 0 occluder k.
  static constexpr int kBackground = -1;
  static constexpr int kTransparent = -2;

  /// Front-most layer at image point (x, y) of view vp.
  int visible_layer(double x, double y, const Viewpoint& vp) const {
    int best = kBackground;
    double best_d = spec_.bg_disparity;
    if (spec_.region) {
      const auto [sx, sy] = layer_shift(spec_.region->disparity, vp);
      if (spec_.region->shape.contains(x - sx, y - sy) && spec_.region->disparity > best_d) {
        best = kTransparent;
        best_d = spec_.region->disparity;
      }
    }
    for (std::size_t i = 0; i < spec_.occluders.size(); ++i) {
      const auto& o = spec_.occluders[i];
      const auto [sx, sy] = layer_shift(o.disparity, vp);
      if (o.shape.contains(x - sx, y - sy) && o.disparity > best_d) {
        best = static_cast<int>(i);
        best_d = o.disparity;
      }
    }
    return best;
  }

  /// Displacement of the transparent-region point seen at center pixel (u, v).
  std::pair<double, double> refracted_shift(double u, double v, const Viewpoint& vp) const {
    const auto& reg = *spec_.region;
    const double r = std::hypot(u - reg.shape.center_x(), v - reg.shape.center_y()) / reg.shape.extent();
    const auto [sx, sy] = layer_shift(reg.disparity + reg.kappa * r, vp);
    return {sx + reg.kappa2 * vp.s * vp.s, sy + reg.kappa2 * vp.t * vp.t};
  }

  /// Center point p with p + refracted_shift(p) = (x, y), by fixed-point iteration.
  std::pair<double, double> refracted_source(double x, double y, const Viewpoint& vp) const {
    double u = x, v = y;
    for (int it = 0; it < 64; ++it) {
      const auto [dx, dy] = refracted_shift(u, v, vp);
      const double nu = x - dx, nv = y - dy;
      const bool done = std::abs(nu - u) < 1e-12 && std::abs(nv - v) < 1e-12;
      u = nu;
      v = nv;
      if (done) break;
    }
    return {u, v};
  }

  /// Displacement of the surface point seen at center pixel (u, v) into view vp.
  std::pair<double, double> forward_shift(int layer, double u, double v, const Viewpoint& vp) const {
    if (layer == kBackground) return layer_shift(spec_.bg_disparity, vp);
    if (layer == kTransparent) return refracted_shift(u, v, vp);
    return layer_shift(spec_.occluders[static_cast<std::size_t>(layer)].disparity, vp);
  }

  /// Displacement from view pixel (x, y) back to the center view.
  std::pair<double, double> backward_shift(double x, double y, const Viewpoint& vp) const {
    const int layer = visible_layer(x, y, vp);
    if (layer == kTransparent) {
      const auto [u, v] = refracted_source(x, y, vp);
      return {u - x, v - y};
    }
    const auto [sx, sy] = forward_shift(layer, x, y, vp);
    return {-sx, -sy};
  }

  double intensity(double x, double y, const Viewpoint& vp) const {
    const int layer = visible_layer(x, y, vp);
    if (layer == kTransparent) {
      const auto [u, v] = refracted_source(x, y, vp);
      return background_(u, v);
    }
    const auto [sx, sy] = forward_shift(layer, x, y, vp);
    if (layer == kBackground) return background_(x - sx, y - sy);
    return occluder_tex_[static_cast<std::size_t>(layer)](x - sx, y - sy);
  }

  const SceneSpec& spec() const { return spec_; }

 private:
  SceneSpec spec_;
  ValueNoise background_;
  std::vector<ValueNoise> occluder_tex_;
};

inline SynthScene generate(const SceneSpec& spec) {
  const SceneModel model(spec);
  const int w = spec.width, h = spec.height;
  const GridCell center{spec.grid_rows / 2, spec.grid_cols / 2};
  const Viewpoint origin{};

  SynthScene scene;
  LightField& lf = scene.lightfield;
  lf.grid_rows = spec.grid_rows;
  lf.grid_cols = spec.grid_cols;
  for (int r = 0; r < spec.grid_rows; ++r)
    for (int c = 0; c < spec.grid_cols; ++c) {
      const Viewpoint vp{static_cast<double>(c - center.col), static_cast<double>(r - center.row)};
      Image img(w, h);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) img(x, y) = static_cast<float>(std::lround(model.intensity(x, y, vp)));
      if (vp.is_center()) lf.center_index = lf.views.size();
      lf.views.push_back(std::move(img));
      lf.viewpoints.push_back(vp);
      lf.cells.push_back({r, c});
    }

  Grid<int> center_layer(w, h);
  scene.gt_mask = Mask(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      center_layer(x, y) = model.visible_layer(x, y, origin);
      scene.gt_mask(x, y) = center_layer(x, y) == SceneModel::kTransparent;
    }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.flow_noise > 0.0 ? spec.flow_noise : 1.0);
  for (std::size_t i = 0; i < lf.size(); ++i) {
    if (i == lf.center_index) continue;
    const Viewpoint vp = lf.viewpoints[i];
    FlowPair pair{vp, lf.cells[i], FlowField(w, h), FlowField(w, h)};
    Mask occluded(w, h), outside(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int layer = center_layer(x, y);
        const auto [fu, fv] = model.forward_shift(layer, x, y, vp);
        pair.forward.du(x, y) = static_cast<float>(fu);
        pair.forward.dv(x, y) = static_cast<float>(fv);
        const auto [bu, bv] = model.backward_shift(x, y, vp);
        pair.backward.du(x, y) = static_cast<float>(bu);
        pair.backward.dv(x, y) = static_cast<float>(bv);

        const double px = x + fu, py = y + fv;
        if (px < 0 || py < 0 || px > w - 1 || py > h - 1) {
          outside(x, y) = 1;
          continue;
        }
        const double qx = std::round(px), qy = std::round(py);
        const int seen = model.visible_layer(qx, qy, vp);
        if (seen != layer) {
          occluded(x, y) = 1;
        } else if (layer == SceneModel::kTransparent) {
          const auto [su, sv] = model.refracted_source(qx, qy, vp);
          occluded(x, y) = std::hypot(su - x, sv - y) > 1.0;
        }
      }
    if (spec.flow_noise > 0.0) {
      for (auto* f : {&pair.forward, &pair.backward})
        for (auto* g : {&f->du, &f->dv})
          for (auto& v : g->data) v = static_cast<float>(v + noise(rng));
    }
    scene.exact_flows.push_back(std::move(pair));
    scene.occlusion_gt.push_back(std::move(occluded));
    scene.out_of_frame.push_back(std::move(outside));
  }
  return scene;
}

/// Writes the light-field directory, gt_mask.png and optionally flows/*.flo.
inline void emit(const SynthScene& scene, const std::filesystem::path& dir, bool emit_flows) {
  save_lightfield(scene.lightfield, dir);
  write_mask(scene.gt_mask, dir / "gt_mask.png");
  if (emit_flows) write_flow_dir(scene.exact_flows, scene.lightfield, dir / "flows");
}

// ---------------------------------------------------------------------------
// Scene spec files (key=value)
// ---------------------------------------------------------------------------

namespace detail {

inline Shape parse_shape(std::istringstream& ss, const std::string& kind, int line) {
  auto need = [&](double& v) {
    if (!(ss >> v)) throw ConfigError("scene spec line " + std::to_string(line) + ": missing shape coordinate");
  };
  if (kind == "disk") {
    double cx, cy, r;
    need(cx), need(cy), need(r);
    return Shape::disk(cx, cy, r);
  }
  if (kind == "rect") {
    double x0, y0, x1, y1;
    need(x0), need(y0), need(x1), need(y1);
    return Shape::rect(x0, y0, x1, y1);
  }
  throw ConfigError("scene spec line " + std::to_string(line) + ": unknown shape '" + kind + "'");
}

inline std::string shape_string(const Shape& s) {
  std::ostringstream ss;
  ss.precision(17);
  if (s.kind == Shape::Kind::Disk)
    ss << "disk " << s.cx << " " << s.cy << " " << s.radius;
  else
    ss << "rect " << s.x0 << " " << s.y0 << " " << s.x1 << " " << s.y1;
  return ss.str();
}

}  // namespace detail

/// Keys: width, height, grid_rows, grid_cols, background.disparity,
/// texture.cell, region (none | disk cx cy r | rect x0 y0 x1 y1),
/// region.disparity, region.kappa, region.kappa2, occluder (shape followed by
/// its disparity; repeatable), noise, seed.
inline SceneSpec parse_scene_spec(std::istream& in) {
  SceneSpec spec;
  TransparentRegion region;
  bool has_region = false;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = transcut::detail::trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("scene spec line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = transcut::detail::trim(line.substr(0, eq));
    const std::string value = transcut::detail::trim(line.substr(eq + 1));
    auto number = [&]() {
      auto v = transcut::detail::parse_number<double>(value);
      if (!v) throw ConfigError("scene spec line " + std::to_string(line_no) + ": bad number for " + key);
      return *v;
    };
    auto integer = [&]() {
      auto v = transcut::detail::parse_number<long long>(value);
      if (!v) throw ConfigError("scene spec line " + std::to_string(line_no) + ": bad integer for " + key);
      return *v;
    };
    if (key == "width") spec.width = static_cast<int>(integer());
    else if (key == "height") spec.height = static_cast<int>(integer());
    else if (key == "grid_rows") spec.grid_rows = static_cast<int>(integer());
    else if (key == "grid_cols") spec.grid_cols = static_cast<int>(integer());
    else if (key == "background.disparity") spec.bg_disparity = number();
    else if (key == "texture.cell") spec.texture_cell = number();
    else if (key == "noise") spec.flow_noise = number();
    else if (key == "seed") spec.seed = static_cast<std::uint64_t>(integer());
    else if (key == "region.disparity") region.disparity = number();
    else if (key == "region.kappa") region.kappa = number();
    else if (key == "region.kappa2") region.kappa2 = number();
    else if (key == "region") {
      std::istringstream ss(value);
      std::string kind;
      ss >> kind;
      if (kind == "none") {
        has_region = false;
      } else {
        region.shape = detail::parse_shape(ss, kind, line_no);
        has_region = true;
      }
    } else if (key == "occluder") {
      std::istringstream ss(value);
      std::string kind;
      ss >> kind;
      Occluder o;
      o.shape = detail::parse_shape(ss, kind, line_no);
      if (!(ss >> o.disparity)) throw ConfigError("scene spec line " + std::to_string(line_no) + ": occluder needs a disparity");
      spec.occluders.push_back(o);
    } else {
      throw ConfigError("scene spec line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (has_region) spec.region = region;
  spec.validate();
  return spec;
}

inline void write_scene_spec(std::ostream& out, const SceneSpec& spec) {
  out.precision(17);
  out << "width=" << spec.width << "\nheight=" << spec.height << "\ngrid_rows=" << spec.grid_rows
      << "\ngrid_cols=" << spec.grid_cols << "\nbackground.disparity=" << spec.bg_disparity
      << "\ntexture.cell=" << spec.texture_cell << "\n";
  if (spec.region) {
    out << "region=" << detail::shape_string(spec.region->shape) << "\nregion.disparity=" << spec.region->disparity
        << "\nregion.kappa=" << spec.region->kappa << "\nregion.kappa2=" << spec.region->kappa2 << "\n";
  } else {
    out << "region=none\n";
  }
  for (const auto& o : spec.occluders) out << "occluder=" << detail::shape_string(o.shape) << " " << o.disparity << "\n";
  out << "noise=" << spec.flow_noise << "\nseed=" << spec.seed << "\n";
}

inline SceneSpec load_scene_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scene spec " + path.string());
  return parse_scene_spec(in);
}

/// The reference test scene: a refractive disk beside one square occluder in
/// front of a far textured background, 5x5 views at 128x128. The seed jitters
/// the disk placement and radius and drives textures and noise.
inline SceneSpec reference_scene(std::uint64_t seed, double noise = 0.0) {
  SceneSpec spec;
  std::mt19937_64 rng(seed * 0x2545F4914F6CDD1Dull + 17);
  std::uniform_int_distribution<int> jitter(-4, 4);
  std::uniform_int_distribution<int> radius(17, 22);
  TransparentRegion region;
  region.shape = Shape::disk(42 + jitter(rng), 64 + jitter(rng), radius(rng));
  spec.region = region;
  spec.occluders.push_back({Shape::rect(88, 40, 112, 88), 1.0});
  spec.flow_noise = noise;
  spec.seed = seed;
  return spec;
}

}  // namespace transcut::synth
