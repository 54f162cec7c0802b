#pragma once

#include <vector>

#include "cuspidal/geometry.hpp"

// Direct kinematics (all assembly modes), solution clustering and
// assembly-mode counting.
namespace cuspidal::kinematics {

struct DKSolution {
  geometry::PlatformPose pose;
  double theta1 = 0;
  double residual = 0;  // max normalized constraint residual after polish
};

struct DKSolutionSet {
  std::vector<DKSolution> poses;
  // Partition of pose indices by coincidence within eps_cluster.
  std::vector<std::vector<int>> clusters;
  int diagnostics_dropped = 0;  // unpolishable candidates excluded
};

// Distance used for clustering: max(|db1|, d1 * wrap-aware |dalpha|).
double pose_distance(const geometry::ManipulatorGeometry& geom,
                     const geometry::PlatformPose& a,
                     const geometry::PlatformPose& b);

double default_eps_cluster(const geometry::ManipulatorGeometry& geom);

// All real assembly modes for rod lengths L, via tan-half substitution and
// resultant elimination to a sextic in tan(alpha/2), with pole checks and
// Newton polishing. Clusters are computed with the default eps.
DKSolutionSet direct_kinematics(const geometry::ManipulatorGeometry& geom,
                                const std::array<double, 3>& L);

std::vector<std::vector<int>> cluster_solutions(
    const geometry::ManipulatorGeometry& geom,
    const std::vector<DKSolution>& poses, double eps_cluster);

// Number of multiplicity-collapsed clusters.
int count_assembly_modes(const geometry::ManipulatorGeometry& geom,
                         const std::array<double, 3>& L);

// Residuals of the two coupling constraints at (alpha, theta1) for fixed L;
// exposed for polishing and for the numeric cusp oracle.
std::array<double, 2> coupling_residuals(
    const geometry::ManipulatorGeometry& geom, const std::array<double, 3>& L,
    double alpha, double theta1);

}  // namespace cuspidal::kinematics
