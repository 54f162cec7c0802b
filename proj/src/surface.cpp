#include "cuspidal/surface.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace cuspidal::surface {

SurfaceSweep sweep(const geometry::ManipulatorGeometry& geom, double rho1_min,
                   double rho1_max, int steps, cusp::Mode cusp_mode,
                   int trace_resolution, int cusp_resolution) {
  if (!(rho1_min > 0 && rho1_max > rho1_min && steps >= 1))
    throw geometry::GeometryError("invalid sweep range");
  SurfaceSweep out;
  for (int i = 0; i < steps; ++i) {
    double r1 = steps == 1 ? rho1_min
                           : rho1_min + (rho1_max - rho1_min) * i / (steps - 1);
    out.rho1_samples.push_back(r1);
    out.slices.push_back(
        singular_slice::trace_slice_curves(geom, r1, trace_resolution));
    auto found = cusp::find_cusps(geom, r1, cusp_mode, 120, cusp_resolution);
    out.cusp_counts.push_back(cusp::verified_count(found.cusps));
  }
  // Stabilization: the tail of constant counts, at least 5 samples long.
  int n = static_cast<int>(out.cusp_counts.size());
  if (n >= 5) {
    int tail = 1;
    while (tail < n &&
           out.cusp_counts[static_cast<size_t>(n - 1 - tail)] ==
               out.cusp_counts[static_cast<size_t>(n - 1)])
      ++tail;
    if (tail >= 5)
      out.stabilization_threshold = out.rho1_samples[static_cast<size_t>(n - tail)];
  }
  return out;
}

namespace {

// Hausdorff-style distance between two branches in the (rho2, rho3) plane.
double branch_distance(const std::vector<singular_slice::CurveVertex>& a,
                       const std::vector<singular_slice::CurveVertex>& b) {
  auto one_sided = [](const std::vector<singular_slice::CurveVertex>& p,
                      const std::vector<singular_slice::CurveVertex>& q) {
    double worst = 0;
    for (const auto& v : p) {
      double best = 1e300;
      for (const auto& w : q)
        best = std::min(best, std::hypot(v.rho2 - w.rho2, v.rho3 - w.rho3));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(one_sided(a, b), one_sided(b, a));
}

}  // namespace

void export_mesh(const SurfaceSweep& sw, const std::string& path) {
  if (sw.slices.empty()) throw geometry::GeometryError("empty sweep");
  std::ofstream out(path);
  char buf[160];
  // Vertex records, tracking the 1-based index base of each branch.
  std::vector<std::vector<int>> base(sw.slices.size());
  int next = 1;
  for (size_t si = 0; si < sw.slices.size(); ++si) {
    double r1 = sw.rho1_samples[si];
    for (const auto& br : sw.slices[si].branches) {
      base[si].push_back(next);
      for (const auto& v : br) {
        std::snprintf(buf, sizeof(buf), "v %.12g %.12g %.12g\n", r1, v.rho2,
                      v.rho3);
        out << buf;
        ++next;
      }
    }
  }
  // Per-branch polylines.
  for (size_t si = 0; si < sw.slices.size(); ++si)
    for (size_t bi = 0; bi < sw.slices[si].branches.size(); ++bi) {
      const auto& br = sw.slices[si].branches[bi];
      if (br.size() < 2) continue;
      out << "l";
      for (size_t j = 0; j < br.size(); ++j)
        out << ' ' << base[si][bi] + static_cast<int>(j);
      out << '\n';
    }
  // Triangles between unambiguously corresponding branches of neighbors.
  double spacing = sw.rho1_samples.size() > 1
                       ? sw.rho1_samples[1] - sw.rho1_samples[0]
                       : 0;
  for (size_t si = 0; si + 1 < sw.slices.size(); ++si) {
    const auto& A = sw.slices[si].branches;
    const auto& B = sw.slices[si + 1].branches;
    if (A.size() != B.size()) continue;  // topology change: points only
    for (size_t bi = 0; bi < A.size(); ++bi) {
      // Nearest-branch match must be mutual and unambiguous.
      size_t match = 0;
      double best = 1e300;
      for (size_t bj = 0; bj < B.size(); ++bj) {
        double d = branch_distance(A[bi], B[bj]);
        if (d < best) {
          best = d;
          match = bj;
        }
      }
      if (best > 2 * spacing) continue;
      const auto& a = A[bi];
      const auto& b = B[match];
      if (a.size() < 2 || b.size() < 2) continue;
      // Simple ladder triangulation along normalized arc position.
      size_t ia = 0, ib = 0;
      while (ia + 1 < a.size() || ib + 1 < b.size()) {
        double pa = static_cast<double>(ia) / (a.size() - 1);
        double pb = static_cast<double>(ib) / (b.size() - 1);
        int va = base[si][bi] + static_cast<int>(ia);
        int vb = base[si + 1][match] + static_cast<int>(ib);
        if (ib + 1 >= b.size() || (ia + 1 < a.size() && pa <= pb)) {
          std::snprintf(buf, sizeof(buf), "f %d %d %d\n", va, va + 1, vb);
          ++ia;
        } else {
          std::snprintf(buf, sizeof(buf), "f %d %d %d\n", va, vb + 1, vb);
          ++ib;
        }
        out << buf;
      }
    }
  }
}

void write_sweep_csv(const SurfaceSweep& sw, const std::string& path) {
  std::ofstream out(path);
  out << "rho1,cusp_count,branch_count,vertex_count\n";
  char buf[128];
  for (size_t i = 0; i < sw.rho1_samples.size(); ++i) {
    size_t verts = 0;
    for (const auto& br : sw.slices[i].branches) verts += br.size();
    std::snprintf(buf, sizeof(buf), "%.15g,%d,%zu,%zu\n", sw.rho1_samples[i],
                  sw.cusp_counts[i], sw.slices[i].branches.size(), verts);
    out << buf;
  }
}

}  // namespace cuspidal::surface
