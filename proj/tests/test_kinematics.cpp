#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "cuspidal/geometry.hpp"
#include "cuspidal/kinematics.hpp"
#include "cuspidal/singular_slice.hpp"

using namespace cuspidal;
using geometry::ManipulatorGeometry;
using geometry::PlatformPose;
using kinematics::DKSolution;
using kinematics::DKSolutionSet;

namespace {

ManipulatorGeometry reference() {
  return ManipulatorGeometry::create(15.91, 0, 10, 17.04, 16.54, 20.84);
}

ManipulatorGeometry flat() {
  return ManipulatorGeometry::create(3, 1.1, 2.7, 1.3, 0.9, 0.4);
}

PlatformPose random_pose(const ManipulatorGeometry& g, std::mt19937& rng) {
  std::uniform_real_distribution<double> ang(-M_PI, M_PI);
  std::uniform_real_distribution<double> rad(2.0, 2.5 * g.scale());
  for (;;) {
    double phi = ang(rng);
    double r = rad(rng);
    PlatformPose p{{r * std::cos(phi), r * std::sin(phi)}, ang(rng)};
    auto cfg = geometry::inverse_kinematics(g, p);
    if (cfg.L[1] > 0.5 && cfg.L[2] > 0.5) return p;
  }
}

// Whether the set contains the pose up to a wrap-aware tolerance.
bool contains_pose(const ManipulatorGeometry& g, const DKSolutionSet& set,
                   const PlatformPose& p, double tol) {
  for (const auto& s : set.poses)
    if (kinematics::pose_distance(g, s.pose, p) <= tol) return true;
  return false;
}

}  // namespace

TEST_CASE("IK/DK round trip recovers the generating pose") {
  std::mt19937 rng(11);
  for (const auto& g : {reference(), flat()}) {
    double tol = 1e-6 * g.scale();
    for (int i = 0; i < 500; ++i) {
      PlatformPose p = random_pose(g, rng);
      auto cfg = geometry::inverse_kinematics(g, p);
      auto set = kinematics::direct_kinematics(g, cfg.L);
      REQUIRE(!set.poses.empty());
      CHECK(contains_pose(g, set, p, tol));
    }
  }
}

TEST_CASE("solution count never exceeds six and residuals stay polished") {
  std::mt19937 rng(23);
  for (const auto& g : {reference(), flat()}) {
    std::uniform_real_distribution<double> len(0.0, 3.0 * g.scale());
    for (int i = 0; i < 10000; ++i) {
      std::array<double, 3> L{len(rng), len(rng), len(rng)};
      auto set = kinematics::direct_kinematics(g, L);
      REQUIRE(set.poses.size() <= 6);
      for (const auto& s : set.poses) {
        CHECK(s.residual <= 1e-9);
        geometry::Configuration cfg =
            geometry::inverse_kinematics(g, s.pose);
        CHECK(geometry::is_consistent(g, cfg));
      }
      size_t clustered = 0;
      for (const auto& c : set.clusters) clustered += c.size();
      CHECK(clustered == set.poses.size());
    }
  }
}

TEST_CASE("unreachable rod lengths yield an empty set") {
  auto g = reference();
  // rho2 far beyond any reachable B2 given rho1.
  auto set = kinematics::direct_kinematics(g, {5.0, 200.0, 10.0});
  CHECK(set.poses.empty());
  CHECK(kinematics::count_assembly_modes(g, {5.0, 200.0, 10.0}) == 0);
  // All three rods too short to span the base.
  auto set2 = kinematics::direct_kinematics(g, {0.01, 0.01, 0.01});
  CHECK(set2.poses.empty());
}

TEST_CASE("solution count is even off the singular set") {
  std::mt19937 rng(37);
  for (const auto& g : {reference(), flat()}) {
    std::uniform_real_distribution<double> len(0.0, 3.0 * g.scale());
    int odd = 0;
    for (int i = 0; i < 2000; ++i) {
      std::array<double, 3> L{len(rng), len(rng), len(rng)};
      auto set = kinematics::direct_kinematics(g, L);
      bool coincident = false;
      for (const auto& c : set.clusters) coincident |= c.size() > 1;
      if (!coincident && set.poses.size() % 2 != 0) ++odd;
    }
    CHECK(odd == 0);
  }
}

TEST_CASE("cluster_solutions basics") {
  auto g = reference();
  PlatformPose p{{3.0, 4.0}, 0.7};
  std::vector<DKSolution> same(3, DKSolution{p, 0.1, 0});
  auto clusters = kinematics::cluster_solutions(g, same, 1e-6);
  REQUIRE(clusters.size() == 1);
  CHECK(clusters[0].size() == 3);

  std::vector<DKSolution> apart{
      {{{0.0, 1.0}, 0.0}, 0, 0}, {{{5.0, 1.0}, 0.0}, 0, 0},
      {{{0.0, 1.0}, 2.0}, 0, 0}};
  clusters = kinematics::cluster_solutions(g, apart, 1e-6);
  CHECK(clusters.size() == 3);
  for (const auto& c : clusters) CHECK(c.size() == 1);
}

namespace {

// Largest cluster size over an eps sweep (triple roots recovered from
// rounded joint coordinates are only approximately coincident).
size_t best_cluster(const ManipulatorGeometry& g, const DKSolutionSet& set) {
  size_t big = 0;
  for (double m : {1.0, 3.0, 10.0, 30.0, 100.0}) {
    auto cl = kinematics::cluster_solutions(
        g, set.poses, m * kinematics::default_eps_cluster(g));
    for (const auto& c : cl) big = std::max(big, c.size());
  }
  return big;
}

}  // namespace

TEST_CASE("joint coordinates of a cusp give a multiplicity-3 cluster") {
  auto g = reference();
  auto set = kinematics::direct_kinematics(g, {14.98, 13.851460, 6.260100});
  CHECK(best_cluster(g, set) >= 3);

  // At a worse-conditioned cusp the rounding of the rod lengths can push two
  // members of the triple complex; a perturbation of the size of the
  // rounding must restore the coincident triple.
  bool found = false;
  for (double rel : {0.0, 1e-6, 1e-5, 1e-4}) {
    double d = rel * g.scale();
    for (auto [dx, dy] : {std::pair{0.0, 0.0}, {1.0, 0.0}, {-1.0, 0.0},
                          {0.0, 1.0}, {0.0, -1.0}}) {
      auto s = kinematics::direct_kinematics(
          g, {14.98, 0.845282 + d * dx, 3.777916 + d * dy});
      if (best_cluster(g, s) >= 3) found = true;
    }
    if (found) break;
  }
  CHECK(found);
}

TEST_CASE("points on a traced singular curve have a coincident pair") {
  auto g = reference();
  auto curves = singular_slice::trace_slice_curves(g, 14.98, 512);
  REQUIRE(!curves.branches.empty());
  std::mt19937 rng(51);
  int checked = 0;
  for (const auto& branch : curves.branches) {
    if (branch.size() < 8) continue;
    std::uniform_int_distribution<size_t> pick(0, branch.size() - 1);
    for (int k = 0; k < 3; ++k) {
      const auto& v = branch[pick(rng)];
      auto set = kinematics::direct_kinematics(
          g, {14.98, v.rho2, v.rho3});
      double eps = 20 * kinematics::default_eps_cluster(g);
      auto clusters =
          kinematics::cluster_solutions(g, set.poses, eps);
      size_t largest = 0;
      for (const auto& c : clusters) largest = std::max(largest, c.size());
      CHECK(largest >= 2);
      ++checked;
    }
  }
  CHECK(checked >= 6);
}

TEST_CASE("crossing a singular curve changes the count by two") {
  auto g = reference();
  auto curves = singular_slice::trace_slice_curves(g, 17.0, 1024);
  REQUIRE(!curves.branches.empty());
  // Pick interior vertices of long branches and step along the curve normal
  // in (rho2, rho3); skip steps that land too close to another branch.
  int tested = 0;
  for (const auto& branch : curves.branches) {
    if (branch.size() < 40) continue;
    for (size_t i = branch.size() / 3; i < branch.size() && tested < 6;
         i += branch.size() / 3) {
      const auto& a = branch[i - 1];
      const auto& b = branch[i + 1 < branch.size() ? i + 1 : i];
      double tx = b.rho2 - a.rho2, ty = b.rho3 - a.rho3;
      double tn = std::hypot(tx, ty);
      if (tn < 1e-12) continue;
      double nx = -ty / tn, ny = tx / tn;
      const auto& v = branch[i];
      double step = 0.05;
      int cp = kinematics::count_assembly_modes(
          g, {17.0, v.rho2 + step * nx, v.rho3 + step * ny});
      int cm = kinematics::count_assembly_modes(
          g, {17.0, v.rho2 - step * nx, v.rho3 - step * ny});
      // Generic crossing: counts differ by exactly two (tangential or
      // multi-branch steps may coincide; require the difference be 0 or 2).
      CHECK(std::abs(cp - cm) <= 2);
      if (std::abs(cp - cm) == 2) ++tested;
    }
  }
  CHECK(tested >= 3);
}

TEST_CASE("six-solution sample agrees with a dense residual grid search") {
  auto g = reference();
  auto curves = singular_slice::trace_slice_curves(g, 17.0, 1024);
  auto map = singular_slice::label_regions(g, 17.0, 96, 40, 40, &curves);
  // Find a labeled six-solution cell and take its center.
  double r2 = -1, r3 = -1;
  for (int i3 = 0; i3 < map.n3 && r2 < 0; ++i3)
    for (int i2 = 0; i2 < map.n2 && r2 < 0; ++i2)
      if (map.at(i2, i3) == 6) {
        r2 = map.rho2_min + (i2 + 0.5) * (map.rho2_max - map.rho2_min) / map.n2;
        r3 = map.rho3_min + (i3 + 0.5) * (map.rho3_max - map.rho3_min) / map.n3;
      }
  REQUIRE(r2 > 0);
  std::array<double, 3> L{17.0, r2, r3};
  auto set = kinematics::direct_kinematics(g, L);
  CHECK(set.clusters.size() == 6);

  // Independent check: scan a dense (alpha, theta1) grid for sign-consistent
  // minima of the coupling residuals, refine by damped Newton, and count
  // distinct solutions.
  const int N = 400;
  std::vector<std::array<double, 2>> found;
  for (int ia = 0; ia < N; ++ia) {
    for (int it = 0; it < N; ++it) {
      double al = -M_PI + 2 * M_PI * (ia + 0.5) / N;
      double th = -M_PI + 2 * M_PI * (it + 0.5) / N;
      auto r = kinematics::coupling_residuals(g, L, al, th);
      double s = std::hypot(r[0], r[1]);
      if (s > 2.0 * g.scale()) continue;
      // Newton refinement with finite-difference Jacobian.
      bool ok = false;
      for (int iter = 0; iter < 60; ++iter) {
        auto f = kinematics::coupling_residuals(g, L, al, th);
        if (std::abs(f[0]) < 1e-10 && std::abs(f[1]) < 1e-10) {
          ok = true;
          break;
        }
        double h = 1e-7;
        auto fa = kinematics::coupling_residuals(g, L, al + h, th);
        auto ft = kinematics::coupling_residuals(g, L, al, th + h);
        double j00 = (fa[0] - f[0]) / h, j01 = (ft[0] - f[0]) / h;
        double j10 = (fa[1] - f[1]) / h, j11 = (ft[1] - f[1]) / h;
        double det = j00 * j11 - j01 * j10;
        if (std::abs(det) < 1e-14) break;
        double da = (f[0] * j11 - f[1] * j01) / det;
        double dt = (f[1] * j00 - f[0] * j10) / det;
        if (std::abs(da) > 0.5 || std::abs(dt) > 0.5) break;
        al -= da;
        th -= dt;
      }
      if (!ok) continue;
      al = geometry::wrap_angle(al);
      th = geometry::wrap_angle(th);
      bool dup = false;
      for (const auto& q : found)
        if (geometry::angle_dist(q[0], al) < 1e-4 &&
            geometry::angle_dist(q[1], th) < 1e-4)
          dup = true;
      if (!dup) found.push_back({al, th});
    }
  }
  CHECK(found.size() == 6);
}
