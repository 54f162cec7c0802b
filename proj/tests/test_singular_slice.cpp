#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cuspidal/differential.hpp"
#include "cuspidal/geometry.hpp"
#include "cuspidal/kinematics.hpp"
#include "cuspidal/singular_slice.hpp"

using namespace cuspidal;
using geometry::Configuration;
using geometry::ManipulatorGeometry;
using geometry::SliceCoords;

namespace {

ManipulatorGeometry reference() {
  return ManipulatorGeometry::create(15.91, 0, 10, 17.04, 16.54, 20.84);
}

// The six cusp slice coordinates of the reference geometry at rho1 = 14.98,
// refined to full precision (degrees).
struct CuspRow {
  double alpha_deg, theta1_deg, rho2, rho3;
};
constexpr CuspRow kCusps[6] = {
    {-122.89676, 114.05034, 31.276126, 16.178450},
    {-2.59985, 177.32847, 13.851460, 6.260100},
    {-0.59856, 15.46809, 16.027671, 29.566714},
    {50.67856, -69.12938, 0.845282, 3.777916},
    {57.48141, 133.77365, 30.449131, 26.619161},
    {170.37695, -10.65216, 17.988547, 26.446183}};

Configuration random_consistent(const ManipulatorGeometry& g,
                                std::mt19937& rng) {
  std::uniform_real_distribution<double> ang(-M_PI, M_PI);
  std::uniform_real_distribution<double> rad(2.0, 2.0 * g.scale());
  for (;;) {
    double phi = ang(rng), r = rad(rng);
    geometry::PlatformPose p{{r * std::cos(phi), r * std::sin(phi)},
                             ang(rng)};
    auto cfg = geometry::inverse_kinematics(g, p);
    if (cfg.L[1] > 0.5 && cfg.L[2] > 0.5) return cfg;
  }
}

}  // namespace

TEST_CASE("task-space singularity residual closed forms") {
  auto g = reference();
  // Parallel legs: all angle differences vanish.
  for (double phi : {-2.1, 0.0, 0.4, 3.0})
    CHECK(std::abs(singular_slice::singularity_residual_task(g, phi, phi,
                                                             phi)) == 0.0);
  // theta = (0, pi/2, pi/2): A2x*1*0 + (A3x*1 - A3y*0)*1 with s31 = 0,
  // s12 = -1 -> A2x - A3x = 15.91.
  double r = singular_slice::singularity_residual_task(g, 0, M_PI / 2,
                                                       M_PI / 2);
  CHECK(std::abs(r - 15.91) <= 1e-12);
}

TEST_CASE("task residual zero set matches det(J_theta)") {
  auto g = reference();
  std::mt19937 rng(7);
  // det(J_theta) = K * rho1*rho2*rho3 * residual for a fixed geometric
  // constant K: the ratio must be identical on all consistent configurations.
  double k0 = 0;
  for (int i = 0; i < 200; ++i) {
    auto cfg = random_consistent(g, rng);
    double res = singular_slice::singularity_residual_task(
        g, cfg.theta[0], cfg.theta[1], cfg.theta[2]);
    double det = differential::jacobian_theta(g, cfg).determinant();
    double prod = cfg.L[0] * cfg.L[1] * cfg.L[2];
    if (std::abs(res) * prod < 1e-6) continue;
    double k = det / (prod * res);
    if (k0 == 0) k0 = k;
    CHECK(k == doctest::Approx(k0).epsilon(1e-9));
  }
  CHECK(k0 != 0);
}

TEST_CASE("legs_concurrent cases") {
  auto g = reference();
  // Parallel legs meet at infinity.
  geometry::PlatformPose p{{4.0, 9.0}, 0.3};
  auto cfg = geometry::inverse_kinematics(g, p);
  Configuration par = cfg;
  par.theta = {0.7, 0.7, 0.7};
  CHECK(singular_slice::legs_concurrent(g, par));
  // Generic consistent configurations are not singular.
  std::mt19937 rng(13);
  int concurrent = 0;
  for (int i = 0; i < 100; ++i)
    if (singular_slice::legs_concurrent(g, random_consistent(g, rng)))
      ++concurrent;
  CHECK(concurrent == 0);
  // Every traced vertex is a concurrent configuration.
  auto curves = singular_slice::trace_slice_curves(g, 14.98, 256);
  int checked = 0;
  for (const auto& b : curves.branches)
    for (size_t i = 0; i < b.size(); i += 7) {
      SliceCoords s{14.98, b[i].alpha, b[i].theta1};
      CHECK(singular_slice::legs_concurrent(
          g, geometry::config_from_slice(g, s), 1e-5));
      ++checked;
    }
  CHECK(checked >= 50);
}

TEST_CASE("slice residual agrees with the task form and vanishes at cusps") {
  auto g = reference();
  for (const auto& c : kCusps) {
    SliceCoords s{14.98, c.alpha_deg * M_PI / 180, c.theta1_deg * M_PI / 180};
    double r = singular_slice::singularity_residual_slice(g, s) /
               singular_slice::slice_residual_scale(g, s.rho1);
    CHECK(std::abs(r) <= 1e-8);
  }
  // Identity check on random slice coordinates with valid rod lengths.
  std::mt19937 rng(19);
  std::uniform_real_distribution<double> ang(-M_PI, M_PI);
  std::uniform_real_distribution<double> rad(2.0, 2.0 * g.scale());
  int done = 0;
  while (done < 200) {
    SliceCoords s{rad(rng), ang(rng), ang(rng)};
    auto [r2, r3] = geometry::slice_rhos(g, s);
    if (r2 < 0.5 || r3 < 0.5) continue;
    auto cfg = geometry::config_from_slice(g, s);
    double task = singular_slice::singularity_residual_task(
        g, cfg.theta[0], cfg.theta[1], cfg.theta[2]);
    double slice = singular_slice::singularity_residual_slice(g, s);
    // Slice form = task form scaled by rho2 * rho3.
    CHECK(std::abs(slice - r2 * r3 * task) <=
          1e-9 * (std::abs(slice) + r2 * r3 * std::abs(task) + 1));
    ++done;
  }
}

TEST_CASE("traced curves pass near all six cusp joint coordinates") {
  auto g = reference();
  auto curves = singular_slice::trace_slice_curves(g, 14.98, 1024);
  REQUIRE(!curves.branches.empty());
  for (const auto& c : kCusps) {
    double best = 1e30;
    for (const auto& b : curves.branches)
      for (const auto& v : b)
        best = std::min(best, std::hypot(v.rho2 - c.rho2, v.rho3 - c.rho3));
    CHECK(best <= 0.15);
  }
}

TEST_CASE("traced vertices satisfy all three singularity characterizations") {
  auto g = reference();
  for (double rho1 : {14.98, 17.0}) {
    auto curves = singular_slice::trace_slice_curves(g, rho1, 512);
    REQUIRE(!curves.branches.empty());
    int checked = 0, dk_checked = 0;
    std::mt19937 rng(29);
    for (const auto& b : curves.branches) {
      for (size_t i = 0; i < b.size(); i += 5) {
        const auto& v = b[i];
        CHECK(v.residual <= 1e-7);
        CHECK(v.rho2 >= 0);
        CHECK(v.rho3 >= 0);
        SliceCoords s{rho1, v.alpha, v.theta1};
        auto cfg = geometry::config_from_slice(g, s);
        double det = differential::jacobian_theta(g, cfg).determinant();
        CHECK(std::abs(det) / differential::det_normalization(g, cfg) <= 1e-6);
        CHECK(singular_slice::legs_concurrent(g, cfg, 1e-5));
        ++checked;
        if (dk_checked < 55 && i % 15 == 0) {
          auto set = kinematics::direct_kinematics(g, {rho1, v.rho2, v.rho3});
          auto clusters = kinematics::cluster_solutions(
              g, set.poses, 20 * kinematics::default_eps_cluster(g));
          size_t largest = 0;
          for (const auto& c : clusters) largest = std::max(largest, c.size());
          CHECK(largest >= 2);
          ++dk_checked;
        }
      }
    }
    CHECK(checked >= 50);
    CHECK(dk_checked >= 50);
  }
}

TEST_CASE("resolution doubling converges") {
  auto g = reference();
  auto lo = singular_slice::trace_slice_curves(g, 17.0, 512);
  auto hi = singular_slice::trace_slice_curves(g, 17.0, 1024);
  REQUIRE(!lo.branches.empty());
  REQUIRE(!hi.branches.empty());
  // Every low-resolution vertex must lie within one coarse grid spacing of
  // the refined curve (distance to the polyline, in (alpha, theta1)).
  double spacing = 2 * M_PI / 512;
  auto seg_dist = [](double px, double py, double ax, double ay, double bx,
                     double by) {
    double vx = bx - ax, vy = by - ay;
    double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(px - (ax + t * vx), py - (ay + t * vy));
  };
  for (const auto& b : lo.branches) {
    for (size_t i = 0; i < b.size(); i += 3) {
      // Branch ends sit at folds tangent to the scan direction, where the
      // endpoint converges like sqrt(spacing); interior vertices converge
      // linearly.
      bool interior = i >= 2 && i + 2 < b.size();
      double bound = interior ? spacing : std::sqrt(spacing);
      double best = 1e30;
      for (const auto& hb : hi.branches) {
        for (size_t j = 0; j + 1 < hb.size(); ++j) {
          // Unwrap the query point onto the segment's angle sheet.
          double pa = b[i].alpha, pt = b[i].theta1;
          pa = hb[j].alpha + geometry::angle_dist(pa, hb[j].alpha) *
                                 (geometry::wrap_angle(pa - hb[j].alpha) < 0
                                      ? -1.0
                                      : 1.0);
          pt = hb[j].theta1 + geometry::angle_dist(pt, hb[j].theta1) *
                                  (geometry::wrap_angle(pt - hb[j].theta1) < 0
                                       ? -1.0
                                       : 1.0);
          best = std::min(best, seg_dist(pa, pt, hb[j].alpha, hb[j].theta1,
                                         hb[j + 1].alpha, hb[j + 1].theta1));
        }
        if (hb.size() == 1)
          best = std::min(
              best, std::hypot(geometry::angle_dist(hb[0].alpha, b[i].alpha),
                               geometry::angle_dist(hb[0].theta1, b[i].theta1)));
      }
      CHECK(best <= bound);
    }
  }
}

TEST_CASE("region labeling") {
  auto g = reference();
  auto c17 = singular_slice::trace_slice_curves(g, 17.0, 512);
  auto m17 = singular_slice::label_regions(g, 17.0, 64, 40, 40, &c17);
  bool has6 = false;
  std::array<bool, 7> seen{};
  for (int i3 = 0; i3 < m17.n3; ++i3)
    for (int i2 = 0; i2 < m17.n2; ++i2) {
      int c = m17.at(i2, i3);
      if (c == 6) has6 = true;
      if (c >= 0) {
        REQUIRE(c <= 6);
        CHECK(c % 2 == 0);
        seen[static_cast<size_t>(c)] = true;
      }
    }
  CHECK(has6);
  CHECK(seen[0]);
  CHECK(seen[2]);
  CHECK(seen[4]);

  auto c31 = singular_slice::trace_slice_curves(g, 31.0, 512);
  auto m31 = singular_slice::label_regions(g, 31.0, 64, 60, 60, &c31);
  int max31 = 0;
  bool has4 = false, has2 = false;
  for (int c : m31.counts) {
    max31 = std::max(max31, c);
    if (c == 4) has4 = true;
    if (c == 2) has2 = true;
  }
  CHECK(max31 == 4);
  CHECK(has4);
  CHECK(has2);

  // Cells whose center exceeds the reach bound are voids.
  auto far = singular_slice::label_regions(g, 17.0, 8, 500, 500, nullptr);
  double reach2 = 17.0 + g.d1 + std::hypot(g.A2x, 0.0);
  double reach3 = 17.0 + g.d3 + std::hypot(g.A3x, g.A3y);
  int nonzero = 0, beyond = 0;
  for (int i3 = 0; i3 < far.n3; ++i3)
    for (int i2 = 0; i2 < far.n2; ++i2) {
      double r2 = far.rho2_min + (i2 + 0.5) * (far.rho2_max - far.rho2_min) /
                                     far.n2;
      double r3 = far.rho3_min + (i3 + 0.5) * (far.rho3_max - far.rho3_min) /
                                     far.n3;
      if (r2 < reach2 && r3 < reach3) continue;
      ++beyond;
      if (far.at(i2, i3) > 0) ++nonzero;
    }
  CHECK(beyond >= 60);
  CHECK(nonzero == 0);
}

TEST_CASE("adjacent non-boundary cells across a branch differ by two") {
  auto g = reference();
  auto curves = singular_slice::trace_slice_curves(g, 17.0, 1024);
  auto map = singular_slice::label_regions(g, 17.0, 96, 40, 40, &curves);
  // Directly adjacent labeled cells agree (crossings get a boundary flag);
  // labeled cells separated by a single boundary cell differ by an even
  // count, by exactly 2 when one branch passes through.
  int jumps = 0, bad = 0, odd = 0;
  for (int i3 = 0; i3 < map.n3; ++i3) {
    for (int i2 = 0; i2 + 1 < map.n2; ++i2) {
      int a = map.at(i2, i3), b = map.at(i2 + 1, i3);
      if (a >= 0 && b >= 0 && a != b) ++bad;
    }
    // Labeled cells separated by a short run of boundary cells (a single
    // branch band can span a few cells of flagging).
    for (int i2 = 0; i2 < map.n2; ++i2) {
      int a = map.at(i2, i3);
      if (a < 0) continue;
      int j = i2 + 1, run = 0;
      while (j < map.n2 && map.at(j, i3) < 0) ++j, ++run;
      if (j >= map.n2 || run == 0 || run > 3) continue;
      int b = map.at(j, i3);
      int d = std::abs(a - b);
      if (d % 2 != 0) ++odd;
      if (d == 2) ++jumps;
    }
  }
  CHECK(bad == 0);
  CHECK(odd == 0);
  CHECK(jumps > 0);
}
