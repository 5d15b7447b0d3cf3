#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "support.hpp"

using namespace transcut;
using testing_support::plane_flows;

namespace {

LFD grid_lfd(int n, const std::function<std::array<double, 2>(double, double)>& delta) {
  LFD lfd;
  for (int t = -n / 2; t <= n / 2; ++t)
    for (int s = -n / 2; s <= n / 2; ++s) {
      if (s == 0 && t == 0) continue;
      const auto d = delta(s, t);
      lfd.samples.push_back({double(s), double(t), d[0], d[1]});
    }
  return lfd;
}

/// Smallest eigenvalue of A^T A by the characteristic polynomial: the
/// Faddeev-LeVerrier coefficients followed by bisection on [0, trace].
double char_poly_min_root(const SquareMatrix<4>& a) {
  using M = SquareMatrix<4>;
  auto mul = [](const M& x, const M& y) {
    M r{};
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k) r[i][j] += x[i][k] * y[k][j];
    return r;
  };
  std::array<double, 5> c{};  // p(x) = x^4 + c1 x^3 + c2 x^2 + c3 x + c4
  c[0] = 1.0;
  M mk{};
  for (int i = 0; i < 4; ++i) mk[i][i] = 1.0;
  for (int k = 1; k <= 4; ++k) {
    M am = mul(a, mk);
    double tr = 0.0;
    for (int i = 0; i < 4; ++i) tr += am[i][i];
    c[k] = -tr / k;
    mk = am;
    for (int i = 0; i < 4; ++i) mk[i][i] += c[k];
  }
  auto p = [&](double x) { return (((x + c[1]) * x + c[2]) * x + c[3]) * x + c[4]; };
  double trace = a[0][0] + a[1][1] + a[2][2] + a[3][3];
  // p alternates sign across the (nonnegative) eigenvalues; scan for the
  // first sign change then bisect.
  const int steps = 200000;
  double lo = 0.0, hi = 0.0;
  const double s0 = p(0.0);
  if (s0 == 0.0) return 0.0;
  for (int i = 1; i <= steps; ++i) {
    hi = trace * i / steps;
    if ((p(hi) > 0) != (s0 > 0)) break;
    lo = hi;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    ((p(mid) > 0) == (s0 > 0) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Smallest eigenvalue by power iteration on (lambda_max I - A).
double power_min_eigen(const SquareMatrix<4>& a) {
  auto power = [](const SquareMatrix<4>& m) {
    std::array<double, 4> v{1.0, 0.7, 0.3, 0.1}, w{};
    double lambda = 0.0;
    for (int it = 0; it < 200000; ++it) {
      for (int i = 0; i < 4; ++i) {
        w[i] = 0.0;
        for (int j = 0; j < 4; ++j) w[i] += m[i][j] * v[j];
      }
      double norm = 0.0;
      for (double x : w) norm += x * x;
      norm = std::sqrt(norm);
      for (int i = 0; i < 4; ++i) w[i] /= norm;
      const double prev = lambda;
      lambda = norm;
      v = w;
      if (std::abs(lambda - prev) < 1e-13 * lambda) break;
    }
    return lambda;
  };
  const double lmax = power(a);
  SquareMatrix<4> shifted{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) shifted[i][j] = (i == j ? lmax : 0.0) - a[i][j];
  return lmax - power(shifted);
}

SquareMatrix<4> assemble_ata(const LFD& lfd) {
  SquareMatrix<4> m{};
  for (const auto& s : lfd.samples) {
    const double row[4] = {s.s, s.t, s.du, s.dv};
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) m[i][j] += row[i] * row[j];
  }
  return m;
}

ConsistencyVolume volume_5x5(int w, int h, const std::function<std::uint8_t(int ds, int dt, int u, int v)>& bit) {
  ConsistencyVolume cv{w, h, {}, {}};
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 5; ++c) {
      if (r == 2 && c == 2) continue;
      cv.cells.push_back({r, c});
      Mask m(w, h);
      for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u) m(u, v) = bit(c - 2, r - 2, u, v);
      cv.planes.push_back(m);
    }
  return cv;
}

}  // namespace

TEST(Features, BuildLfdSamplesForwardFlow) {
  auto flows = plane_flows(5, 5, 4, 4, 2.5);
  const LFD lfd = build_lfd(flows, 1, 2);
  ASSERT_EQ(lfd.samples.size(), 24u);
  for (const auto& s : lfd.samples) {
    EXPECT_EQ(s.du, 2.5 * s.s);
    EXPECT_EQ(s.dv, 2.5 * s.t);
  }
  const LFD zero = build_lfd(plane_flows(3, 3, 2, 2, 0.0), 0, 0);
  for (const auto& s : zero.samples) EXPECT_EQ(s.du, 0.0);
}

TEST(Features, PlaneLfdHasZeroResidual) {
  for (double d : {-9.0, -1.0, 0.5, 3.0, 7.25}) {
    const auto fit = fit_hyperplane(grid_lfd(5, [&](double s, double t) { return std::array{d * s, d * t}; }));
    EXPECT_LE(fit.residual, 1e-9) << d;
    double norm = 0.0;
    for (double x : fit.normal) norm += x * x;
    EXPECT_NEAR(norm, 1.0, 1e-9);
  }
}

TEST(Features, ZeroDeltaLfdIsOrthogonalToViewAxes) {
  const auto fit = fit_hyperplane(grid_lfd(5, [](double, double) { return std::array{0.0, 0.0}; }));
  EXPECT_LE(fit.residual, 1e-12);
  EXPECT_NEAR(fit.normal[0], 0.0, 1e-12);
  EXPECT_NEAR(fit.normal[1], 0.0, 1e-12);
}

TEST(Features, AllZeroLfdUsesConventionalNormal) {
  LFD lfd;
  lfd.samples.assign(4, {});
  const auto fit = fit_hyperplane(lfd);
  EXPECT_EQ(fit.residual, 0.0);
  EXPECT_EQ(fit.normal, (std::array<double, 4>{0, 0, 1, 0}));
  lfd.samples.resize(2);
  EXPECT_THROW(fit_hyperplane(lfd), std::invalid_argument);
}

TEST(Features, QuadraticLfdMatchesIndependentEigenOracles) {
  const LFD lfd = grid_lfd(5, [](double s, double t) { return std::array{s + 0.5 * s * s, t + 0.5 * t * t}; });
  const auto ata = assemble_ata(lfd);
  const double poly = char_poly_min_root(ata);
  const double power = power_min_eigen(ata);
  const double fit = fit_hyperplane(lfd).residual;
  EXPECT_NEAR(poly, power, 1e-6);
  EXPECT_NEAR(fit, poly, 1e-8);
  EXPECT_NEAR(fit, 7.990148739382624, 1e-8);  // frozen from the oracles above
}

TEST(Features, RandomCoplanarLfdsHaveZeroResidual) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> coef(-5.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = coef(rng), b = coef(rng), c = coef(rng), d = coef(rng);
    const auto fit =
        fit_hyperplane(grid_lfd(5, [&](double s, double t) { return std::array{a * s + b * t, c * s + d * t}; }));
    EXPECT_LE(fit.residual, 1e-9) << trial;
  }
}

TEST(Features, ResidualScalesWithinSquaredFactor) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::array<double, 2>> noise(24);
    for (auto& e : noise) e = {n(rng), n(rng)};
    for (double k : {-3.0, 0.25, 0.5, 2.0, 10.0}) {
      int i = 0, j = 0;
      const LFD base = grid_lfd(5, [&](double s, double t) { return std::array{s + noise[i][0], t + noise[i++][1]}; });
      const LFD scaled = grid_lfd(5, [&](double s, double t) {
        return std::array{k * (s + noise[j][0]), k * (t + noise[j++][1])};
      });
      const double r0 = fit_hyperplane(base).residual, r1 = fit_hyperplane(scaled).residual;
      const double lo = std::min(1.0, k * k), hi = std::max(1.0, k * k);
      EXPECT_GE(r1, lo * r0 * (1 - 1e-9));
      EXPECT_LE(r1, hi * r0 * (1 + 1e-9));
    }
  }
  const LFD plane = grid_lfd(5, [](double s, double t) { return std::array{3 * s, 3 * t}; });
  LFD scaled = plane;
  for (auto& s : scaled.samples) s.du *= 7, s.dv *= 7;
  EXPECT_EQ(fit_hyperplane(plane).residual, 0.0);
  EXPECT_EQ(fit_hyperplane(scaled).residual, 0.0);
}

TEST(Features, LinearityMapMatchesPerPixelFit) {
  auto flows = plane_flows(5, 5, 6, 5, -2.0);
  for (auto& p : flows)
    for (int v = 0; v < 5; ++v)
      for (int u = 0; u < 6; ++u) {
        p.forward.du(u, v) += static_cast<float>(0.1 * u * p.viewpoint.s * p.viewpoint.s);
        p.forward.dv(u, v) += static_cast<float>(0.1 * u * p.viewpoint.t * p.viewpoint.t);
      }
  const ScalarMap e = linearity_map(flows, 6, 5);
  for (int v = 0; v < 5; ++v)
    for (int u = 0; u < 6; ++u) EXPECT_EQ(e(u, v), fit_hyperplane(build_lfd(flows, u, v)).residual);
  EXPECT_EQ(e(0, 0), 0.0);
  EXPECT_GT(e(5, 0), 0.0);
  EXPECT_EQ(e, linearity_map(flows, 6, 5, 4));
  const ScalarMap plane = linearity_map(plane_flows(5, 5, 6, 5, 4.0), 6, 5);
  EXPECT_LE(*std::max_element(plane.data.begin(), plane.data.end()), 1e-9);
}

TEST(Features, LinearityMapSkipsUnknownSamples) {
  auto flows = plane_flows(3, 3, 2, 1, 1.0);
  flows[0].forward.du(0, 0) = std::numeric_limits<float>::quiet_NaN();
  flows[1].forward.du(0, 0) = 100.0f;  // two off-plane samples break the fit
  flows[2].forward.dv(0, 0) = -50.0f;
  const ScalarMap e = linearity_map(flows, 2, 1);
  EXPECT_GT(e(0, 0), 0.0);
  for (std::size_t k = 0; k < 6; ++k) flows[k].forward.dv(1, 0) = 2e9f;
  EXPECT_EQ(linearity_map(flows, 2, 1)(1, 0), 0.0);  // 2 samples left
}

TEST(Features, FbErrorArithmetic) {
  FlowPair rigid{{1, 0}, {2, 3}, FlowField(8, 8), FlowField(8, 8)};
  for (auto& v : rigid.forward.du.data) v = 2.0f;
  for (auto& v : rigid.backward.du.data) v = -2.0f;
  EXPECT_EQ(fb_error(rigid, 3, 3), 0.0);

  FlowPair p{{1, 0}, {2, 3}, FlowField(8, 8), FlowField(8, 8)};
  p.forward.du(1, 1) = 3.0f;
  for (auto& v : p.backward.du.data) v = -1.0f;
  EXPECT_DOUBLE_EQ(fb_error(p, 1, 1), 2.0);
}

TEST(Features, ConsistencyThresholdIsInclusive) {
  auto make = [](float fwd) {
    FlowPair p{{1, 0}, {2, 3}, FlowField(2, 1), FlowField(2, 1)};
    p.forward.du(0, 0) = fwd;
    return std::vector<FlowPair>{p};
  };
  EXPECT_EQ(consistency_volume(make(7.9f), 8.0).planes[0](0, 0), 0);
  EXPECT_EQ(consistency_volume(make(8.0f), 8.0).planes[0](0, 0), 1);
  const auto zero = consistency_volume(plane_flows(5, 5, 3, 3, 0.0), 8.0);
  EXPECT_EQ(zero.planes.size(), 24u);
  for (const auto& pl : zero.planes) EXPECT_EQ(count_ones(pl), 0u);
  EXPECT_THROW(consistency_volume(make(1.0f), 0.0), std::invalid_argument);
}

TEST(Features, DetectorCountsAndWeights5x5) {
  const auto dets = make_detectors(5, 5);
  ASSERT_EQ(dets.size(), 8u);
  for (const auto& d : dets) {
    // Independent enumeration of the strict half-plane.
    const double rad = d.theta * M_PI / 180.0;
    int expected = 0;
    for (int t = -2; t <= 2; ++t)
      for (int s = -2; s <= 2; ++s) expected += s * std::cos(rad) + t * std::sin(rad) > 1e-9;
    EXPECT_EQ(d.support_size, expected) << d.theta;
    EXPECT_EQ(d.support_size, 10) << d.theta;
    EXPECT_EQ(d.weight({2, 2}), 0.0);
    double sum = 0.0;
    for (double w : d.weights()) {
      EXPECT_TRUE(w == 0.0 || w == 1.0 / d.support_size);
      sum += w;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  EXPECT_EQ(dets[0].weight({0, 3}), 0.1);  // s = 1 > 0
  EXPECT_EQ(dets[0].weight({4, 2}), 0.0);  // s = 0
  EXPECT_EQ(dets[1].weight({1, 4}), 0.1);  // s + t = 1
  EXPECT_EQ(dets[1].weight({0, 4}), 0.0);  // s + t = 0
}

TEST(Features, DetectorPointSymmetry) {
  for (int n : {3, 5, 7}) {
    const auto dets = make_detectors(n, n);
    for (int k = 0; k < 4; ++k) {
      const auto w0 = dets[k].weights(), w1 = dets[k + 4].weights();
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) EXPECT_EQ(w0[r * n + c], w1[(n - 1 - r) * n + (n - 1 - c)]);
    }
  }
  EXPECT_THROW(make_detectors(4, 5), std::invalid_argument);
}

TEST(Features, OcclusionResponseTrivialVolumes) {
  const auto dets = make_detectors(5, 5);
  const auto zero = occlusion_response(volume_5x5(3, 2, [](int, int, int, int) { return 0; }), dets);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(zero.o_max.data[i], 0.0);
    EXPECT_EQ(zero.theta_map.data[i], 0);
  }
  const auto ones = occlusion_response(volume_5x5(3, 2, [](int, int, int, int) { return 1; }), dets);
  for (double o : ones.o_max.data) EXPECT_EQ(o, 1.0);
}

TEST(Features, HalfPlanePatternGivesPlantedDirection) {
  const auto dets = make_detectors(5, 5);
  const auto cv = volume_5x5(4, 4, [](int ds, int, int, int) { return ds > 0; });
  const auto occ = occlusion_response(cv, dets);
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_EQ(occ.theta_map.data[i], 0);
    EXPECT_EQ(occ.o_max.data[i], 1.0);
  }
  EXPECT_EQ(detector_response(cv, dets[4])(0, 0), 0.0);
}

TEST(Features, OcclusionResponseIsMonotoneInBits) {
  std::mt19937_64 rng(5);
  std::bernoulli_distribution coin(0.3);
  const auto dets = make_detectors(5, 5);
  auto cv = volume_5x5(6, 6, [&](int, int, int, int) { return coin(rng); });
  std::vector<ScalarMap> before;
  for (const auto& d : dets) before.push_back(detector_response(cv, d));
  for (int flips = 0; flips < 40; ++flips) {
    auto& plane = cv.planes[rng() % cv.planes.size()];
    plane.data[rng() % plane.size()] = 1;
    for (std::size_t k = 0; k < dets.size(); ++k) {
      const ScalarMap after = detector_response(cv, dets[k]);
      for (std::size_t i = 0; i < after.size(); ++i) EXPECT_GE(after.data[i], before[k].data[i]);
      before[k] = after;
    }
  }
}

TEST(Features, ThetaMapInvariantToCommonGain) {
  std::mt19937_64 rng(6);
  std::bernoulli_distribution coin(0.4);
  const auto cv = volume_5x5(8, 8, [&](int, int, int, int) { return coin(rng); });
  auto dets = make_detectors(5, 5);
  const auto base = occlusion_response(cv, dets);
  for (auto& d : dets) d.gain = 3.7;
  const auto scaled = occlusion_response(cv, dets);
  EXPECT_EQ(base.theta_map, scaled.theta_map);
  for (std::size_t i = 0; i < base.o_max.size(); ++i) EXPECT_NEAR(scaled.o_max.data[i], 3.7 * base.o_max.data[i], 1e-12);
  EXPECT_EQ(base.theta_map, occlusion_response(cv, make_detectors(5, 5), 3).theta_map);
}
