#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "transcut/features.hpp"
#include "transcut/image.hpp"

namespace transcut {

/// Energy weights. Defaults are the values tuned for a 5x5 camera array.
struct EnergyParams {
  double alpha = 70.0;  ///< region / boundary balance
  double beta = 4.5;    ///< scale of the background cost R(0)
  double gamma = 4.5;   ///< boundary attenuation rate
  double a = 0.5;       ///< sigmoid steepness
  double b = 5.0;       ///< sigmoid shift (linearity threshold)
  double tau = 8.0;     ///< forward-backward tolerance in pixels

  void validate() const {
    for (double v : {alpha, beta, gamma, a, b, tau})
      if (!std::isfinite(v)) throw std::invalid_argument("EnergyParams: values must be finite");
    if (!(alpha > 0.0) || !(gamma > 0.0) || !(a > 0.0)) throw std::invalid_argument("EnergyParams: alpha, gamma, a must be > 0");
    if (!(tau > 0.0)) throw std::invalid_argument("EnergyParams: tau must be > 0");
    if (!(beta >= 0.0)) throw std::invalid_argument("EnergyParams: beta must be >= 0");
  }
};

/// 1 / (1 + exp(-a (phi - b))), without overflow for large |a (phi - b)|.
inline double sigmoid(double phi, double a, double b) {
  const double z = a * (phi - b);
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline ScalarMap scale_linearity(const ScalarMap& e, double a, double b) {
  ScalarMap out(e.width, e.height);
  for (std::size_t i = 0; i < e.size(); ++i) out.data[i] = sigmoid(e.data[i], a, b);
  return out;
}

struct RegionalTerms {
  ScalarMap r0;  ///< cost of labeling a pixel background
  ScalarMap r1;  ///< cost of labeling a pixel foreground
};

/// Textured pixels: R0 = beta E~ (1 - O~), R1 = E~ O~ + (1 - E~).
/// Textureless pixels are forced to background: R0 = 0, R1 = beta.
inline RegionalTerms regional_terms(const ScalarMap& e_tilde, const OcclusionResponse& occ, const Mask& texture,
                                    double beta) {
  require_same_shape(e_tilde, occ.o_max, "regional_terms");
  require_same_shape(e_tilde, texture, "regional_terms");
  RegionalTerms rt{ScalarMap(e_tilde.width, e_tilde.height), ScalarMap(e_tilde.width, e_tilde.height)};
  for (std::size_t i = 0; i < e_tilde.size(); ++i) {
    if (!texture.data[i]) {
      rt.r0.data[i] = 0.0;
      rt.r1.data[i] = beta;
      continue;
    }
    const double e = e_tilde.data[i], o = occ.o_max.data[i];
    rt.r0.data[i] = beta * e * (1.0 - o);
    rt.r1.data[i] = e * o + (1.0 - e);
  }
  return rt;
}

/// Neighbor slots of a pixel: q1 right (theta 0), q2 up (90), q3 left (180),
/// q4 down (270). Image v grows downward.
enum Neighbor : int { kRight = 0, kUp = 1, kLeft = 2, kDown = 3 };

/// Directed edge weights w_{p,q} for the 4 neighbors of every pixel.
struct DirectedWeights {
  int width = 0;
  int height = 0;
  std::vector<std::array<double, 4>> w;

  const std::array<double, 4>& at(int x, int y) const { return w[static_cast<std::size_t>(y) * width + x]; }
};

/// Axis directions put O~ on the single neighbor along theta~; diagonals
/// split O~ / sqrt(2) over the two adjacent axis neighbors.
inline std::array<double, 4> edge_weights_for(int theta, double o) {
  std::array<double, 4> w{0.0, 0.0, 0.0, 0.0};
  const double half = o / std::sqrt(2.0);
  switch (((theta % 360) + 360) % 360) {
    case 0: w[kRight] = o; break;
    case 45: w[kRight] = w[kUp] = half; break;
    case 90: w[kUp] = o; break;
    case 135: w[kUp] = w[kLeft] = half; break;
    case 180: w[kLeft] = o; break;
    case 225: w[kLeft] = w[kDown] = half; break;
    case 270: w[kDown] = o; break;
    case 315: w[kDown] = w[kRight] = half; break;
    default: throw std::invalid_argument("edge_weights_for: theta must be a multiple of 45");
  }
  return w;
}

inline DirectedWeights boundary_weights(const OcclusionResponse& occ) {
  DirectedWeights dw{occ.o_max.width, occ.o_max.height, {}};
  dw.w.resize(occ.o_max.size());
  for (std::size_t i = 0; i < dw.w.size(); ++i) dw.w[i] = edge_weights_for(occ.theta_map.data[i], occ.o_max.data[i]);
  return dw;
}

/// Undirected boundary penalties B_{p,q} = exp(-gamma (w_pq + w_qp)) for the
/// edge to the right neighbor and the edge to the lower neighbor of each
/// pixel. Slots without a neighbor hold 0.
struct BoundaryTerm {
  ScalarMap right;
  ScalarMap down;
};

inline BoundaryTerm boundary_term(const DirectedWeights& dw, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("boundary_term: gamma must be > 0");
  BoundaryTerm bt{ScalarMap(dw.width, dw.height, 0.0), ScalarMap(dw.width, dw.height, 0.0)};
  for (int y = 0; y < dw.height; ++y)
    for (int x = 0; x < dw.width; ++x) {
      if (x + 1 < dw.width) bt.right(x, y) = std::exp(-gamma * (dw.at(x, y)[kRight] + dw.at(x + 1, y)[kLeft]));
      if (y + 1 < dw.height) bt.down(x, y) = std::exp(-gamma * (dw.at(x, y)[kDown] + dw.at(x, y + 1)[kUp]));
    }
  return bt;
}

/// Terminal and neighborhood capacities of the segmentation graph. A pixel
/// on the source side of the minimum cut is labeled foreground (1).
struct SegGraph {
  int width = 0;
  int height = 0;
  ScalarMap cap_src;  ///< source -> p, paid when p is background
  ScalarMap cap_snk;  ///< p -> sink, paid when p is foreground
  ScalarMap n_right;  ///< alpha * B to the right neighbor
  ScalarMap n_down;   ///< alpha * B to the lower neighbor
};

inline SegGraph build_graph(const RegionalTerms& rt, const BoundaryTerm& bt, double alpha) {
  require_same_shape(rt.r0, rt.r1, "build_graph");
  require_same_shape(rt.r0, bt.right, "build_graph");
  require_same_shape(rt.r0, bt.down, "build_graph");
  SegGraph g{rt.r0.width, rt.r0.height, rt.r0, rt.r1, bt.right, bt.down};
  for (auto* m : {&g.n_right, &g.n_down})
    for (auto& v : m->data) v *= alpha;
  for (const auto* m : {&g.cap_src, &g.cap_snk, &g.n_right, &g.n_down})
    for (double v : m->data)
      if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("build_graph: capacities must be finite and >= 0");
  return g;
}

/// E(l) = sum_p R_{l_p}(p) + alpha sum_{(p,q)} B_{p,q} [l_p != l_q], each
/// undirected 4-neighbor edge counted once.
inline double energy_of(const Mask& labeling, const RegionalTerms& rt, const BoundaryTerm& bt, double alpha) {
  require_same_shape(labeling, rt.r0, "energy_of");
  double region = 0.0, boundary = 0.0;
  for (int y = 0; y < labeling.height; ++y)
    for (int x = 0; x < labeling.width; ++x) {
      const bool fg = labeling(x, y) != 0;
      region += fg ? rt.r1(x, y) : rt.r0(x, y);
      if (x + 1 < labeling.width && fg != (labeling(x + 1, y) != 0)) boundary += bt.right(x, y);
      if (y + 1 < labeling.height && fg != (labeling(x, y + 1) != 0)) boundary += bt.down(x, y);
    }
  return region + alpha * boundary;
}

/// Same energy read directly off a SegGraph (n-links already include alpha).
inline double energy_of(const Mask& labeling, const SegGraph& g) {
  require_same_shape(labeling, g.cap_src, "energy_of");
  double total = 0.0;
  for (int y = 0; y < labeling.height; ++y)
    for (int x = 0; x < labeling.width; ++x) {
      const bool fg = labeling(x, y) != 0;
      total += fg ? g.cap_snk(x, y) : g.cap_src(x, y);
      if (x + 1 < labeling.width && fg != (labeling(x + 1, y) != 0)) total += g.n_right(x, y);
      if (y + 1 < labeling.height && fg != (labeling(x, y + 1) != 0)) total += g.n_down(x, y);
    }
  return total;
}

}  // namespace transcut
