#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

#include "transcut/energy.hpp"
#include "transcut/image.hpp"

namespace transcut {

/// Directed network with paired forward/reverse arcs and real capacities.
class FlowNetwork {
 public:
  struct Arc {
    int to;
    int rev;  ///< index of the paired arc
    double capacity;
    double residual;
  };

  FlowNetwork(int nodes, int source, int sink) : adjacency_(static_cast<std::size_t>(nodes)), source_(source), sink_(sink) {
    if (nodes < 2 || source < 0 || sink < 0 || source >= nodes || sink >= nodes || source == sink)
      throw std::invalid_argument("FlowNetwork: bad node configuration");
  }

  /// Adds from -> to with capacity and the paired to -> from arc with
  /// reverse_capacity. Returns the index of the forward arc.
  int add_arc(int from, int to, double capacity, double reverse_capacity = 0.0) {
    if (from < 0 || to < 0 || from >= node_count() || to >= node_count() || from == to)
      throw std::invalid_argument("FlowNetwork::add_arc: bad endpoints");
    if (!(capacity >= 0.0) || !(reverse_capacity >= 0.0) || !std::isfinite(capacity) || !std::isfinite(reverse_capacity))
      throw std::invalid_argument("FlowNetwork::add_arc: capacities must be finite and >= 0");
    const int a = static_cast<int>(arcs_.size());
    arcs_.push_back({to, a + 1, capacity, capacity});
    arcs_.push_back({from, a, reverse_capacity, reverse_capacity});
    adjacency_[static_cast<std::size_t>(from)].push_back(a);
    adjacency_[static_cast<std::size_t>(to)].push_back(a + 1);
    return a;
  }

  int node_count() const { return static_cast<int>(adjacency_.size()); }
  int source() const { return source_; }
  int sink() const { return sink_; }
  const std::vector<Arc>& arcs() const { return arcs_; }
  const std::vector<int>& arcs_from(int node) const { return adjacency_[static_cast<std::size_t>(node)]; }
  /// Net flow pushed along an arc (negative on the reverse side of a used pair).
  double flow(int arc) const { return arcs_[static_cast<std::size_t>(arc)].capacity - arcs_[static_cast<std::size_t>(arc)].residual; }

 private:
  friend struct MaxFlowSolver;
  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> adjacency_;
  int source_;
  int sink_;
};

struct MaxFlowResult {
  double value = 0.0;
  std::vector<std::uint8_t> source_side;  ///< 1 for nodes reachable from the source in the residual graph
};

/// Residuals at or below this are treated as saturated.
inline constexpr double kResidualEpsilon = 1e-12;

/// Dinic's algorithm: BFS level graphs with blocking flows found by
/// iterative DFS over current-arc pointers.
struct MaxFlowSolver {
  static MaxFlowResult run(FlowNetwork& net) {
    const int n = net.node_count();
    const int s = net.source(), t = net.sink();
    auto& arcs = net.arcs_;
    std::vector<int> level(static_cast<std::size_t>(n));
    std::vector<std::size_t> next(static_cast<std::size_t>(n));
    std::vector<int> path;
    MaxFlowResult result;

    auto bfs = [&] {
      std::fill(level.begin(), level.end(), -1);
      std::queue<int> q;
      level[static_cast<std::size_t>(s)] = 0;
      q.push(s);
      while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (int a : net.arcs_from(u)) {
          const auto& arc = arcs[static_cast<std::size_t>(a)];
          if (arc.residual > kResidualEpsilon && level[static_cast<std::size_t>(arc.to)] < 0) {
            level[static_cast<std::size_t>(arc.to)] = level[static_cast<std::size_t>(u)] + 1;
            q.push(arc.to);
          }
        }
      }
      return level[static_cast<std::size_t>(t)] >= 0;
    };

    while (bfs()) {
      std::fill(next.begin(), next.end(), 0);
      path.clear();
      int u = s;
      while (true) {
        if (u == t) {
          double bottleneck = std::numeric_limits<double>::infinity();
          for (int a : path) bottleneck = std::min(bottleneck, arcs[static_cast<std::size_t>(a)].residual);
          for (int a : path) {
            auto& arc = arcs[static_cast<std::size_t>(a)];
            arc.residual -= bottleneck;
            arcs[static_cast<std::size_t>(arc.rev)].residual += bottleneck;
          }
          result.value += bottleneck;
          path.clear();
          u = s;
          continue;
        }
        const auto& out = net.arcs_from(u);
        auto& it = next[static_cast<std::size_t>(u)];
        bool advanced = false;
        for (; it < out.size(); ++it) {
          const auto& arc = arcs[static_cast<std::size_t>(out[it])];
          if (arc.residual > kResidualEpsilon &&
              level[static_cast<std::size_t>(arc.to)] == level[static_cast<std::size_t>(u)] + 1) {
            path.push_back(out[it]);
            u = arc.to;
            advanced = true;
            break;
          }
        }
        if (advanced) continue;
        level[static_cast<std::size_t>(u)] = -1;  // dead end for this phase
        if (path.empty()) break;
        const int back = path.back();
        path.pop_back();
        u = arcs[static_cast<std::size_t>(arcs[static_cast<std::size_t>(back)].rev)].to;
        ++next[static_cast<std::size_t>(u)];
      }
    }

    result.source_side.assign(static_cast<std::size_t>(n), 0);
    std::queue<int> q;
    result.source_side[static_cast<std::size_t>(s)] = 1;
    q.push(s);
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (int a : net.arcs_from(v)) {
        const auto& arc = arcs[static_cast<std::size_t>(a)];
        if (arc.residual > kResidualEpsilon && !result.source_side[static_cast<std::size_t>(arc.to)]) {
          result.source_side[static_cast<std::size_t>(arc.to)] = 1;
          q.push(arc.to);
        }
      }
    }
    return result;
  }
};

/// Maximum s-t flow; source_side is the minimum cut's source set.
inline MaxFlowResult max_flow(FlowNetwork& net) { return MaxFlowSolver::run(net); }

/// Capacity of the cut (S, V \ S) in the original network.
inline double cut_capacity(const FlowNetwork& net, const std::vector<std::uint8_t>& source_side) {
  double total = 0.0;
  for (int u = 0; u < net.node_count(); ++u) {
    if (!source_side[static_cast<std::size_t>(u)]) continue;
    for (int a : net.arcs_from(u)) {
      const auto& arc = net.arcs()[static_cast<std::size_t>(a)];
      if (!source_side[static_cast<std::size_t>(arc.to)]) total += arc.capacity;
    }
  }
  return total;
}

/// Pixel p is node y * width + x; the source and sink follow the pixels.
inline FlowNetwork to_network(const SegGraph& g) {
  const int n = g.width * g.height;
  FlowNetwork net(n + 2, n, n + 1);
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) {
      const int p = y * g.width + x;
      net.add_arc(net.source(), p, g.cap_src(x, y));
      net.add_arc(p, net.sink(), g.cap_snk(x, y));
      if (x + 1 < g.width) net.add_arc(p, p + 1, g.n_right(x, y), g.n_right(x, y));
      if (y + 1 < g.height) net.add_arc(p, p + g.width, g.n_down(x, y), g.n_down(x, y));
    }
  return net;
}

struct SegmentationCut {
  Mask labeling;  ///< 1 = foreground (source side)
  double flow_value = 0.0;
};

inline SegmentationCut solve_segmentation(const SegGraph& g) {
  FlowNetwork net = to_network(g);
  const MaxFlowResult r = max_flow(net);
  SegmentationCut cut{Mask(g.width, g.height), r.value};
  for (std::size_t i = 0; i < cut.labeling.size(); ++i) cut.labeling.data[i] = r.source_side[i];
  return cut;
}

}  // namespace transcut
