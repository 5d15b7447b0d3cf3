#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "transcut/flow.hpp"
#include "transcut/image.hpp"
#include "transcut/jacobi.hpp"
#include "transcut/lightfield.hpp"
#include "transcut/parallel.hpp"

namespace transcut {

// ---------------------------------------------------------------------------
// Light-field linearity
// ---------------------------------------------------------------------------

struct LfdSample {
  double s = 0.0;
  double t = 0.0;
  double du = 0.0;
  double dv = 0.0;
};

/// Per-pixel set of (s, t, du, dv) correspondence offsets, one per
/// non-central view. The central view's row is identically zero and is omitted.
struct LFD {
  std::vector<LfdSample> samples;
};

struct HyperplaneFit {
  std::array<double, 4> normal{0.0, 0.0, 1.0, 0.0};
  /// Smallest eigenvalue of A^T A, clamped at zero.
  double residual = 0.0;
};

inline LFD build_lfd(const std::vector<FlowPair>& flows, int u, int v) {
  LFD lfd;
  lfd.samples.reserve(flows.size());
  for (const auto& p : flows)
    lfd.samples.push_back({p.viewpoint.s, p.viewpoint.t, p.forward.du(u, v), p.forward.dv(u, v)});
  return lfd;
}

inline SquareMatrix<4> normal_matrix(const LFD& lfd) {
  SquareMatrix<4> m{};
  for (const auto& smp : lfd.samples) {
    const std::array<double, 4> row{smp.s, smp.t, smp.du, smp.dv};
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) m[i][j] += row[i] * row[j];
  }
  return m;
}

/// Least-squares hyperplane n1 s + n2 t + n3 du + n4 dv = 0 through the
/// origin: n is the eigenvector of A^T A with the smallest eigenvalue, and
/// that eigenvalue is the fit residual. An all-zero LFD returns residual 0
/// and normal (0, 0, 1, 0).
inline constexpr double kResidualFloor = 1e-13;

inline HyperplaneFit fit_hyperplane(const LFD& lfd) {
  if (lfd.samples.size() < 3) throw std::invalid_argument("fit_hyperplane: need at least 3 samples");
  const SquareMatrix<4> m = normal_matrix(lfd);
  HyperplaneFit fit;
  bool all_zero = true;
  for (const auto& row : m)
    for (double v : row) all_zero = all_zero && v == 0.0;
  if (all_zero) return fit;

  const auto eig = jacobi_eigen<4>(m);
  std::size_t k = 0;
  for (std::size_t i = 1; i < 4; ++i)
    if (eig.values[i] < eig.values[k]) k = i;
  double norm = 0.0;
  for (std::size_t r = 0; r < 4; ++r) norm += eig.vectors[r][k] * eig.vectors[r][k];
  norm = std::sqrt(norm);
  for (std::size_t r = 0; r < 4; ++r) fit.normal[r] = eig.vectors[r][k] / norm;
  // Eigenvalues are only accurate to about eps * trace; below that the LFD
  // is an exact hyperplane.
  const double trace = m[0][0] + m[1][1] + m[2][2] + m[3][3];
  fit.residual = eig.values[k] <= kResidualFloor * trace ? 0.0 : eig.values[k];
  return fit;
}

/// E(u, v) for every pixel. Samples whose forward flow is flagged unknown are
/// dropped; pixels left with fewer than 3 samples get E = 0.
inline ScalarMap linearity_map(const std::vector<FlowPair>& flows, int width, int height, int threads = 1) {
  for (const auto& p : flows)
    if (p.forward.width() != width || p.forward.height() != height)
      throw std::invalid_argument("linearity_map: flow size differs from image size");
  ScalarMap e(width, height, 0.0);
  parallel_rows(height, threads, [&](int y0, int y1) {
    LFD lfd;
    for (int v = y0; v < y1; ++v)
      for (int u = 0; u < width; ++u) {
        lfd.samples.clear();
        for (const auto& p : flows) {
          const float du = p.forward.du(u, v), dv = p.forward.dv(u, v);
          if (is_unknown_flow(du) || is_unknown_flow(dv)) continue;
          lfd.samples.push_back({p.viewpoint.s, p.viewpoint.t, du, dv});
        }
        if (lfd.samples.size() >= 3) e(u, v) = fit_hyperplane(lfd).residual;
      }
  });
  return e;
}

inline ScalarMap linearity_map(const std::vector<FlowPair>& flows, const LightField& lf, int threads = 1) {
  return linearity_map(flows, lf.width(), lf.height(), threads);
}

// ---------------------------------------------------------------------------
// Forward-backward consistency
// ---------------------------------------------------------------------------

/// Distance between (u, v) and the point reached by following the forward
/// flow to the other view and the (bilinearly sampled) backward flow back.
inline double fb_error(const FlowPair& pair, int u, int v) {
  const double px = u + static_cast<double>(pair.forward.du(u, v));
  const double py = v + static_cast<double>(pair.forward.dv(u, v));
  const auto [bu, bv] = sample_flow(pair.backward, px, py);
  return std::hypot(px + bu - u, py + bv - v);
}

/// Binary LF-consistency c(s, t, u, v), one plane per non-central view:
/// 0 where the forward-backward error is below tau, 1 otherwise.
struct ConsistencyVolume {
  int width = 0;
  int height = 0;
  std::vector<GridCell> cells;
  std::vector<Mask> planes;
};

inline ConsistencyVolume consistency_volume(const std::vector<FlowPair>& flows, double tau, int threads = 1) {
  if (!(tau > 0.0)) throw std::invalid_argument("consistency_volume: tau must be positive");
  ConsistencyVolume cv;
  if (flows.empty()) return cv;
  cv.width = flows.front().forward.width();
  cv.height = flows.front().forward.height();
  for (const auto& p : flows) {
    cv.cells.push_back(p.cell);
    cv.planes.emplace_back(cv.width, cv.height);
  }
  parallel_rows(cv.height, threads, [&](int y0, int y1) {
    for (std::size_t k = 0; k < flows.size(); ++k)
      for (int v = y0; v < y1; ++v)
        for (int u = 0; u < cv.width; ++u) cv.planes[k](u, v) = fb_error(flows[k], u, v) < tau ? 0 : 1;
  });
  return cv;
}

// ---------------------------------------------------------------------------
// Occlusion detectors
// ---------------------------------------------------------------------------

inline constexpr std::array<int, 8> kDetectorAngles{0, 45, 90, 135, 180, 225, 270, 315};

/// Integer direction (ds, dt) for theta in multiples of 45 degrees; theta = 0
/// points to +s, theta = 90 to +t.
inline std::pair<int, int> direction_of(int theta) {
  switch (((theta % 360) + 360) % 360) {
    case 0: return {1, 0};
    case 45: return {1, 1};
    case 90: return {0, 1};
    case 135: return {-1, 1};
    case 180: return {-1, 0};
    case 225: return {-1, -1};
    case 270: return {0, -1};
    case 315: return {1, -1};
    default: throw std::invalid_argument("direction_of: theta must be a multiple of 45");
  }
}

/// Directional template over the viewpoint grid. Non-zero cells are the views
/// strictly on the theta side of the center, {(s,t) : s cos + t sin > 0};
/// each carries weight gain / k for k such cells.
struct OcclusionDetector {
  int theta = 0;
  int grid_rows = 0;
  int grid_cols = 0;
  std::vector<std::uint8_t> support;  ///< row-major grid_rows x grid_cols
  int support_size = 0;
  double gain = 1.0;

  bool in_support(GridCell c) const {
    return c.row >= 0 && c.col >= 0 && c.row < grid_rows && c.col < grid_cols &&
           support[static_cast<std::size_t>(c.row * grid_cols + c.col)] != 0;
  }
  double weight(GridCell c) const { return in_support(c) ? gain / support_size : 0.0; }
  std::vector<double> weights() const {
    std::vector<double> w(support.size(), 0.0);
    for (int r = 0; r < grid_rows; ++r)
      for (int c = 0; c < grid_cols; ++c) w[static_cast<std::size_t>(r * grid_cols + c)] = weight({r, c});
    return w;
  }
  /// Sum over cells of bit * weight, evaluated as gain * (active support cells) / k.
  template <typename BitAt>
  double response(const std::vector<GridCell>& cells, BitAt&& bit) const {
    if (support_size == 0) return 0.0;
    int active = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) active += (bit(i) != 0) && in_support(cells[i]);
    return gain * static_cast<double>(active) / static_cast<double>(support_size);
  }
};

/// Detectors for the 8 directions over the given (non-central) cells.
inline std::vector<OcclusionDetector> make_detectors(int grid_rows, int grid_cols, GridCell center,
                                                     const std::vector<GridCell>& cells) {
  std::vector<OcclusionDetector> out;
  for (int theta : kDetectorAngles) {
    const auto [dx, dy] = direction_of(theta);
    OcclusionDetector d;
    d.theta = theta;
    d.grid_rows = grid_rows;
    d.grid_cols = grid_cols;
    d.support.assign(static_cast<std::size_t>(grid_rows * grid_cols), 0);
    for (const auto& c : cells) {
      if (c == center) continue;
      const int ds = c.col - center.col, dt = c.row - center.row;
      if (ds * dx + dt * dy > 0) {
        auto& cell = d.support[static_cast<std::size_t>(c.row * grid_cols + c.col)];
        if (!cell) ++d.support_size;
        cell = 1;
      }
    }
    out.push_back(std::move(d));
  }
  return out;
}

/// Detectors for a full grid; both dimensions must be odd.
inline std::vector<OcclusionDetector> make_detectors(int grid_rows, int grid_cols) {
  if (grid_rows <= 0 || grid_cols <= 0 || grid_rows % 2 == 0 || grid_cols % 2 == 0)
    throw std::invalid_argument("make_detectors: grid dimensions must be odd");
  std::vector<GridCell> cells;
  for (int r = 0; r < grid_rows; ++r)
    for (int c = 0; c < grid_cols; ++c) cells.push_back({r, c});
  return make_detectors(grid_rows, grid_cols, {grid_rows / 2, grid_cols / 2}, cells);
}

struct OcclusionResponse {
  ScalarMap o_max;      ///< O(u, v, theta~)
  Grid<int> theta_map;  ///< theta~(u, v) in degrees
};

/// O(u, v, theta) for a single detector.
inline ScalarMap detector_response(const ConsistencyVolume& cv, const OcclusionDetector& det) {
  ScalarMap out(cv.width, cv.height, 0.0);
  for (int v = 0; v < cv.height; ++v)
    for (int u = 0; u < cv.width; ++u)
      out(u, v) = det.response(cv.cells, [&](std::size_t k) { return cv.planes[k](u, v); });
  return out;
}

/// Strongest detector response per pixel; ties go to the smallest theta.
inline OcclusionResponse occlusion_response(const ConsistencyVolume& cv, const std::vector<OcclusionDetector>& detectors,
                                            int threads = 1) {
  if (detectors.empty()) throw std::invalid_argument("occlusion_response: no detectors");
  for (const auto& c : cv.cells)
    if (c.row >= detectors.front().grid_rows || c.col >= detectors.front().grid_cols)
      throw std::invalid_argument("occlusion_response: detector grid does not cover the consistency volume");
  std::vector<const OcclusionDetector*> order;
  for (const auto& d : detectors) order.push_back(&d);
  std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->theta < b->theta; });

  OcclusionResponse out{ScalarMap(cv.width, cv.height, 0.0), Grid<int>(cv.width, cv.height, order.front()->theta)};
  parallel_rows(cv.height, threads, [&](int y0, int y1) {
    for (int v = y0; v < y1; ++v)
      for (int u = 0; u < cv.width; ++u) {
        auto bit = [&](std::size_t k) { return cv.planes[k](u, v); };
        double best = -1.0;
        int best_theta = order.front()->theta;
        for (const auto* d : order) {
          const double o = d->response(cv.cells, bit);
          if (o > best) {
            best = o;
            best_theta = d->theta;
          }
        }
        out.o_max(u, v) = best;
        out.theta_map(u, v) = best_theta;
      }
  });
  return out;
}

}  // namespace transcut
