#pragma once

#include <string>
#include <vector>

#include "cuspidal/geometry.hpp"

// Singularity condition evaluation, singular-curve tracing in a rho1-slice,
// mapping to (rho2, rho3) and assembly-mode region labeling.
namespace cuspidal::singular_slice {

struct CurveVertex {
  double alpha = 0, theta1 = 0;
  double rho2 = 0, rho3 = 0;
  double residual = 0;  // normalized slice-form singularity residual
};

struct SingularCurveSet {
  double rho1 = 0;
  std::vector<std::vector<CurveVertex>> branches;
};

struct RegionMap {
  double rho1 = 0;
  double rho2_min = 0, rho2_max = 0, rho3_min = 0, rho3_max = 0;
  int n2 = 0, n3 = 0;
  std::vector<int> counts;       // row-major [i3 * n2 + i2], -1 = boundary
  int at(int i2, int i3) const { return counts[static_cast<size_t>(i3 * n2 + i2)]; }
};

// Task-space singularity expression in the three leg angles.
double singularity_residual_task(const geometry::ManipulatorGeometry& geom,
                                 double theta1, double theta2, double theta3);

// Whether the three leg axes meet in a common (possibly infinite) point.
bool legs_concurrent(const geometry::ManipulatorGeometry& geom,
                     const geometry::Configuration& config, double tol = 1e-8);

// Slice form with the rho2, rho3 denominators cleared (polynomial, no
// division); zero set equals the task form's on valid slice points.
double singularity_residual_slice(const geometry::ManipulatorGeometry& geom,
                                  const geometry::SliceCoords& slice);

// Scale used to normalize the slice residual.
double slice_residual_scale(const geometry::ManipulatorGeometry& geom,
                            double rho1);

// All theta1 roots of the slice residual at fixed alpha, refined by Newton.
std::vector<double> theta1_roots_at_alpha(
    const geometry::ManipulatorGeometry& geom, double rho1, double alpha);

SingularCurveSet trace_slice_curves(const geometry::ManipulatorGeometry& geom,
                                    double rho1, int resolution = 1024);

RegionMap label_regions(const geometry::ManipulatorGeometry& geom, double rho1,
                        int grid, double rho2_max, double rho3_max,
                        const SingularCurveSet* curves = nullptr);

void write_slice_csv(const SingularCurveSet& curves, const std::string& path);
void write_slice_svg(const SingularCurveSet& curves, const std::string& path,
                     const std::vector<std::pair<double, double>>& cusp_points = {});
void write_region_csv(const RegionMap& map, const std::string& path);

}  // namespace cuspidal::singular_slice
