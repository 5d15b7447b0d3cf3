#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "transcut/image.hpp"
#include "transcut/lightfield.hpp"
#include "transcut/parallel.hpp"

namespace transcut {

/// Dense displacement field in pixels. Values are stored as float32 so that
/// in-memory flows and their .flo serialization are bit-identical.
struct FlowField {
  Grid<float> du;
  Grid<float> dv;
  /// Number of entries flagged unknown (NaN or |x| > 1e9) at load time.
  std::size_t unknown_count = 0;

  FlowField() = default;
  FlowField(int w, int h) : du(w, h, 0.0f), dv(w, h, 0.0f) {}

  int width() const { return du.width; }
  int height() const { return du.height; }

  friend bool operator==(const FlowField&, const FlowField&) = default;
};

inline bool is_unknown_flow(float v) { return !std::isfinite(v) || std::abs(v) > 1e9f; }

/// Forward (center -> view) and backward (view -> center) flows for one viewpoint.
struct FlowPair {
  Viewpoint viewpoint;
  GridCell cell;
  FlowField forward;
  FlowField backward;
};

struct FlowParams {
  int levels = 3;
  int search_radius = 16;
  int patch_radius = 4;
};

struct TextureParams {
  int window_radius = 4;
  double grad_threshold = 16.0;
};

/// Bilinear interpolation of (du, dv) at (x, y); coordinates clamp to the border.
inline std::pair<double, double> sample_flow(const FlowField& flow, double x, double y) {
  const int w = flow.width(), h = flow.height();
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0, fy = y - y0;
  auto lerp2 = [&](const Grid<float>& g) {
    const double top = (1.0 - fx) * g(x0, y0) + fx * g(x1, y0);
    const double bot = (1.0 - fx) * g(x0, y1) + fx * g(x1, y1);
    return (1.0 - fy) * top + fy * bot;
  };
  if (fx == 0.0 && fy == 0.0) return {flow.du(x0, y0), flow.dv(x0, y0)};
  return {lerp2(flow.du), lerp2(flow.dv)};
}

namespace detail {

inline Image downsample2(const Image& src) {
  Image out((src.width + 1) / 2, (src.height + 1) / 2);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      out(x, y) = 0.25f * (src.clamped(2 * x, 2 * y) + src.clamped(2 * x + 1, 2 * y) + src.clamped(2 * x, 2 * y + 1) +
                           src.clamped(2 * x + 1, 2 * y + 1));
  return out;
}

struct IntFlow {
  Grid<int> dx, dy;
};

/// Patch SSD of src around (x, y) against dst displaced by (ddx, ddy).
inline double patch_ssd(const Image& src, const Image& dst, int x, int y, int ddx, int ddy, int r) {
  double total = 0.0;
  for (int ox = -r; ox <= r; ++ox) {
    double col = 0.0;
    for (int oy = -r; oy <= r; ++oy) {
      const double d = static_cast<double>(src.clamped(x + ox, y + oy)) - dst.clamped(x + ox + ddx, y + oy + ddy);
      col += d * d;
    }
    total += col;
  }
  return total;
}

/// A zero-cost optimum is an exact match and stays on the integer grid.
inline double parabolic_offset(double cm, double c0, double cp) {
  const double denom = cm - 2.0 * c0 + cp;
  if (c0 <= 0.0 || !(denom > 0.0)) return 0.0;
  return std::clamp(0.5 * (cm - cp) / denom, -0.5, 0.5);
}

/// One pyramid level: per pixel, the integer displacement within
/// init +- radius with the lowest patch SSD, among targets inside the image. Ties prefer the candidate
/// closest to init, then the smallest (dy, dx). Each row is processed
/// independently with column sums shared along the row and a sliding
/// window over them.
inline IntFlow match_level(const Image& src, const Image& dst, const IntFlow& init, int radius, int r, int threads) {
  const int w = src.width, h = src.height;
  IntFlow best{Grid<int>(w, h), Grid<int>(w, h)};
  parallel_rows(h, threads, [&](int y0, int y1) {
    std::vector<double> cost(static_cast<std::size_t>(w));
    std::vector<long> dist(static_cast<std::size_t>(w));
    std::vector<double> colsum(static_cast<std::size_t>(w + 2 * r));
    for (int y = y0; y < y1; ++y) {
      std::fill(cost.begin(), cost.end(), std::numeric_limits<double>::infinity());
      std::fill(dist.begin(), dist.end(), std::numeric_limits<long>::max());
      int lo_x = init.dx(0, y), hi_x = lo_x, lo_y = init.dy(0, y), hi_y = lo_y;
      for (int x = 1; x < w; ++x) {
        lo_x = std::min(lo_x, init.dx(x, y));
        hi_x = std::max(hi_x, init.dx(x, y));
        lo_y = std::min(lo_y, init.dy(x, y));
        hi_y = std::max(hi_y, init.dy(x, y));
      }
      for (int ddy = lo_y - radius; ddy <= hi_y + radius; ++ddy)
        for (int ddx = lo_x - radius; ddx <= hi_x + radius; ++ddx) {
          if (y + ddy < 0 || y + ddy >= h) continue;
          auto needs = [&](int x) {
            return std::abs(ddx - init.dx(x, y)) <= radius && std::abs(ddy - init.dy(x, y)) <= radius &&
                   x + ddx >= 0 && x + ddx < w;
          };
          int xa = 0;
          while (xa < w && !needs(xa)) ++xa;
          if (xa == w) continue;
          int xb = w - 1;
          while (!needs(xb)) --xb;
          for (int c = xa - r; c <= xb + r; ++c) {
            double col = 0.0;
            for (int oy = -r; oy <= r; ++oy) {
              const double d = static_cast<double>(src.clamped(c, y + oy)) - dst.clamped(c + ddx, y + oy + ddy);
              col += d * d;
            }
            colsum[static_cast<std::size_t>(c - xa + r)] = col;
          }
          double total = 0.0;
          for (int k = 0; k < 2 * r + 1; ++k) total += colsum[static_cast<std::size_t>(k)];
          for (int x = xa; x <= xb; ++x) {
            if (x > xa)
              total += colsum[static_cast<std::size_t>(x - xa + 2 * r)] - colsum[static_cast<std::size_t>(x - xa - 1)];
            if (!needs(x)) continue;
            const int ex = ddx - init.dx(x, y), ey = ddy - init.dy(x, y);
            const long d2 = static_cast<long>(ex) * ex + static_cast<long>(ey) * ey;
            const auto i = static_cast<std::size_t>(x);
            if (total < cost[i] || (total == cost[i] && d2 < dist[i])) {
              cost[i] = total;
              dist[i] = d2;
              best.dx(x, y) = ddx;
              best.dy(x, y) = ddy;
            }
          }
        }
    }
  });
  return best;
}

}  // namespace detail

/// Coarse-to-fine SSD block matching from src to dst: flow(x, y) is the
/// displacement d such that src(x, y) corresponds to dst((x, y) + d).
/// Each level searches +-search_radius around the upsampled coarser estimate;
/// the finest level is refined by per-axis parabolic interpolation of the
/// SSD surface, clamped to +-0.5 px. Borders are replicate-padded.
inline FlowField compute_flow(const Image& src, const Image& dst, const FlowParams& params, int threads = 1) {
  require_same_shape(src, dst, "compute_flow");
  if (params.levels < 1 || params.search_radius < 1 || params.patch_radius < 1)
    throw std::invalid_argument("compute_flow: parameters must be positive");
  const int diameter = 2 * params.patch_radius + 1;
  if (src.width < diameter || src.height < diameter)
    throw std::invalid_argument("compute_flow: image smaller than the patch diameter");

  std::vector<Image> src_pyr{src}, dst_pyr{dst};
  while (static_cast<int>(src_pyr.size()) < params.levels) {
    Image s = detail::downsample2(src_pyr.back());
    if (s.width < diameter || s.height < diameter) break;
    dst_pyr.push_back(detail::downsample2(dst_pyr.back()));
    src_pyr.push_back(std::move(s));
  }

  detail::IntFlow current;
  for (int level = static_cast<int>(src_pyr.size()) - 1; level >= 0; --level) {
    const Image& s = src_pyr[static_cast<std::size_t>(level)];
    const Image& d = dst_pyr[static_cast<std::size_t>(level)];
    detail::IntFlow init{Grid<int>(s.width, s.height, 0), Grid<int>(s.width, s.height, 0)};
    if (!current.dx.empty()) {
      for (int y = 0; y < s.height; ++y)
        for (int x = 0; x < s.width; ++x) {
          init.dx(x, y) = 2 * current.dx.clamped(x / 2, y / 2);
          init.dy(x, y) = 2 * current.dy.clamped(x / 2, y / 2);
        }
    }
    current = detail::match_level(s, d, init, params.search_radius, params.patch_radius, threads);
  }

  const int r = params.patch_radius;
  FlowField out(src.width, src.height);
  parallel_rows(src.height, threads, [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y)
      for (int x = 0; x < src.width; ++x) {
        const int bx = current.dx(x, y), by = current.dy(x, y);
        const double c0 = detail::patch_ssd(src, dst, x, y, bx, by, r);
        const double ox = detail::parabolic_offset(detail::patch_ssd(src, dst, x, y, bx - 1, by, r), c0,
                                                   detail::patch_ssd(src, dst, x, y, bx + 1, by, r));
        const double oy = detail::parabolic_offset(detail::patch_ssd(src, dst, x, y, bx, by - 1, r), c0,
                                                   detail::patch_ssd(src, dst, x, y, bx, by + 1, r));
        out.du(x, y) = static_cast<float>(bx + ox);
        out.dv(x, y) = static_cast<float>(by + oy);
      }
  });
  return out;
}

/// Largest displacement magnitude compute_flow can report on one axis.
inline double max_flow_reach(const FlowParams& p) {
  return p.search_radius * static_cast<double>((1 << p.levels) - 1) + 0.5;
}

/// 1 where the window mean of the squared horizontal forward difference
/// reaches grad_threshold (textured), 0 where it falls below (textureless).
inline Mask texture_mask(const Image& img, const TextureParams& params) {
  if (params.window_radius < 1) throw std::invalid_argument("texture_mask: window_radius must be >= 1");
  const int w = img.width, h = img.height, r = params.window_radius;
  Grid<double> g2(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double d = static_cast<double>(img.clamped(x + 1, y)) - img(x, y);
      g2(x, y) = d * d;
    }
  const double area = static_cast<double>((2 * r + 1) * (2 * r + 1));
  Mask out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double sum = 0.0;
      for (int oy = -r; oy <= r; ++oy)
        for (int ox = -r; ox <= r; ++ox) sum += g2.clamped(x + ox, y + oy);
      out(x, y) = sum / area < params.grad_threshold ? 0 : 1;
    }
  return out;
}

/// Builtin flows for every non-center view of a light field.
inline std::vector<FlowPair> compute_flows(const LightField& lf, const FlowParams& params, int threads = 1) {
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < lf.size(); ++i)
    if (i != lf.center_index) others.push_back(i);
  std::vector<FlowPair> pairs(others.size());
  const int outer = std::min<int>(threads, static_cast<int>(others.size()));
  const int inner = std::max(1, threads / std::max(outer, 1));
  parallel_for(static_cast<int>(others.size()), outer, [&](int k) {
    const std::size_t i = others[static_cast<std::size_t>(k)];
    FlowPair& p = pairs[static_cast<std::size_t>(k)];
    p.viewpoint = lf.viewpoints[i];
    p.cell = lf.cells[i];
    p.forward = compute_flow(lf.center(), lf.views[i], params, inner);
    p.backward = compute_flow(lf.views[i], lf.center(), params, inner);
  });
  return pairs;
}

}  // namespace transcut
