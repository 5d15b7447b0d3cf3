#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "transcut/transcut.hpp"

namespace testing_support {

namespace fs = std::filesystem;

/// Fresh, empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("transcut_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Random grid graph with all capacities uniform in [0, 10].
inline transcut::SegGraph random_graph(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> cap(0.0, 10.0);
  transcut::SegGraph g{w, h, transcut::ScalarMap(w, h), transcut::ScalarMap(w, h), transcut::ScalarMap(w, h),
                       transcut::ScalarMap(w, h)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      g.cap_src(x, y) = cap(rng);
      g.cap_snk(x, y) = cap(rng);
      g.n_right(x, y) = x + 1 < w ? cap(rng) : 0.0;
      g.n_down(x, y) = y + 1 < h ? cap(rng) : 0.0;
    }
  return g;
}

/// Minimum of the labeling energy by enumerating every labeling.
inline double exhaustive_min_energy(const transcut::SegGraph& g) {
  const int n = g.width * g.height;
  double best = std::numeric_limits<double>::infinity();
  transcut::Mask m(g.width, g.height);
  for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
    for (int i = 0; i < n; ++i) m.data[static_cast<std::size_t>(i)] = (bits >> i) & 1u;
    double e = 0.0;
    for (int y = 0; y < g.height; ++y)
      for (int x = 0; x < g.width; ++x) {
        const bool fg = m(x, y) != 0;
        e += fg ? g.cap_snk(x, y) : g.cap_src(x, y);
        if (x + 1 < g.width && fg != (m(x + 1, y) != 0)) e += g.n_right(x, y);
        if (y + 1 < g.height && fg != (m(x, y + 1) != 0)) e += g.n_down(x, y);
      }
    best = std::min(best, e);
  }
  return best;
}

/// Value-noise texture with strong horizontal gradients.
inline transcut::Image noise_texture(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  transcut::Image coarse(w / 2 + 2, h / 2 + 2);
  for (auto& v : coarse.data) v = static_cast<float>(u(rng));
  transcut::Image img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double fx = x * 0.5, fy = y * 0.5;
      const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
      const double ax = fx - x0, ay = fy - y0;
      img(x, y) = static_cast<float>((1 - ax) * (1 - ay) * coarse(x0, y0) + ax * (1 - ay) * coarse(x0 + 1, y0) +
                                     (1 - ax) * ay * coarse(x0, y0 + 1) + ax * ay * coarse(x0 + 1, y0 + 1));
    }
  return img;
}

/// Flows for a fronto-parallel plane of disparity d on a rows x cols grid:
/// forward (d s, d t), backward the negation.
inline std::vector<transcut::FlowPair> plane_flows(int rows, int cols, int w, int h, double d) {
  std::vector<transcut::FlowPair> out;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const transcut::Viewpoint vp{static_cast<double>(c - cols / 2), static_cast<double>(r - rows / 2)};
      if (vp.is_center()) continue;
      transcut::FlowPair p{vp, {r, c}, transcut::FlowField(w, h), transcut::FlowField(w, h)};
      for (std::size_t i = 0; i < p.forward.du.size(); ++i) {
        p.forward.du.data[i] = static_cast<float>(d * vp.s);
        p.forward.dv.data[i] = static_cast<float>(d * vp.t);
        p.backward.du.data[i] = static_cast<float>(-d * vp.s);
        p.backward.dv.data[i] = static_cast<float>(-d * vp.t);
      }
      out.push_back(std::move(p));
    }
  return out;
}

}  // namespace testing_support
