#pragma once

#include <string>
#include <vector>

#include "cuspidal/cusp.hpp"
#include "cuspidal/singular_slice.hpp"

// Sweep rho1 over a range, aggregate per-slice singular curves and cusp
// counts, and export the joint-space singularity surface.
namespace cuspidal::surface {

struct SurfaceSweep {
  std::vector<double> rho1_samples;
  std::vector<singular_slice::SingularCurveSet> slices;
  std::vector<int> cusp_counts;
  // Smallest sampled rho1 after which the cusp count is constant to the end
  // of the range (requires >= 5 consecutive constant samples); negative when
  // no stabilization was observed.
  double stabilization_threshold = -1;
};

SurfaceSweep sweep(const geometry::ManipulatorGeometry& geom, double rho1_min,
                   double rho1_max, int steps,
                   cusp::Mode cusp_mode = cusp::Mode::numeric,
                   int trace_resolution = 1024,
                   int cusp_resolution = 4096);

// Text mesh with `v` vertex records lifted to (rho1, rho2, rho3), `l`
// polyline records per branch, and `f` triangle records between adjacent
// slices where branch correspondence is unambiguous.
void export_mesh(const SurfaceSweep& sweep, const std::string& path);

void write_sweep_csv(const SurfaceSweep& sweep, const std::string& path);

}  // namespace cuspidal::surface
