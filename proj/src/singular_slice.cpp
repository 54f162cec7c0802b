#include "cuspidal/singular_slice.hpp"

#include "cuspidal/kinematics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace cuspidal::singular_slice {

using geometry::angle_dist;
using geometry::wrap_angle;

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

double singularity_residual_task(const geometry::ManipulatorGeometry& g,
                                 double theta1, double theta2, double theta3) {
  double s2 = std::sin(theta2), s3 = std::sin(theta3), c3 = std::cos(theta3);
  double s31 = std::sin(theta3 - theta1);
  double s12 = std::sin(theta1 - theta2);
  return g.A2x * s2 * s31 + (g.A3x * s3 - g.A3y * c3) * s12;
}

bool legs_concurrent(const geometry::ManipulatorGeometry& g,
                     const geometry::Configuration& cfg, double tol) {
  // Line through anchor A_i with direction (c_i, s_i) in homogeneous
  // coordinates (a, b, c): a x + b y + c = 0.
  double rows[3][3];
  const double ax[3] = {0, g.A2x, g.A3x};
  const double ay[3] = {0, 0, g.A3y};
  for (int i = 0; i < 3; ++i) {
    double c = std::cos(cfg.theta[static_cast<size_t>(i)]);
    double s = std::sin(cfg.theta[static_cast<size_t>(i)]);
    rows[i][0] = s;
    rows[i][1] = -c;
    rows[i][2] = c * ay[i] - s * ax[i];
  }
  double det = rows[0][0] * (rows[1][1] * rows[2][2] - rows[1][2] * rows[2][1]) -
               rows[0][1] * (rows[1][0] * rows[2][2] - rows[1][2] * rows[2][0]) +
               rows[0][2] * (rows[1][0] * rows[2][1] - rows[1][1] * rows[2][0]);
  double scale = std::max(1.0, g.scale());
  return std::abs(det) <= tol * scale;
}

namespace {

struct SliceN {
  double nc2, ns2, nc3, ns3, c1, s1;
};

SliceN slice_numerators(const geometry::ManipulatorGeometry& g, double rho1,
                        double alpha, double theta1) {
  SliceN n;
  n.c1 = std::cos(theta1);
  n.s1 = std::sin(theta1);
  n.nc2 = -g.A2x + rho1 * n.c1 + g.d1 * std::cos(alpha);
  n.ns2 = rho1 * n.s1 + g.d1 * std::sin(alpha);
  n.nc3 = -g.A3x + rho1 * n.c1 + g.d3 * std::cos(alpha + g.beta);
  n.ns3 = -g.A3y + rho1 * n.s1 + g.d3 * std::sin(alpha + g.beta);
  return n;
}

double f1_value(const geometry::ManipulatorGeometry& g, double rho1,
                double alpha, double theta1) {
  SliceN n = slice_numerators(g, rho1, alpha, theta1);
  return g.A2x * n.ns2 * (n.ns3 * n.c1 - n.nc3 * n.s1) +
         (g.A3x * n.ns3 - g.A3y * n.nc3) * (n.s1 * n.nc2 - n.c1 * n.ns2);
}

}  // namespace

double singularity_residual_slice(const geometry::ManipulatorGeometry& g,
                                  const geometry::SliceCoords& slice) {
  auto [r2, r3] = slice_rhos(g, slice);
  if (r2 <= 0 || r3 <= 0)
    throw geometry::GeometryError("slice residual undefined at zero rod length");
  return f1_value(g, slice.rho1, slice.alpha, slice.theta1);
}

double slice_residual_scale(const geometry::ManipulatorGeometry& g,
                            double rho1) {
  double m = rho1 + g.d1 + g.d3 + g.scale();
  double a = std::max({g.A2x, std::abs(g.A3x) + g.A3y, 1e-300});
  return a * m * m;
}

std::vector<double> theta1_roots_at_alpha(
    const geometry::ManipulatorGeometry& g, double rho1, double alpha) {
  // f(theta1) is a trigonometric polynomial of degree 3: recover its Fourier
  // coefficients from 8 uniform samples, then read roots off the unit circle.
  constexpr int N = 8;
  std::array<double, N> f{};
  for (int j = 0; j < N; ++j)
    f[static_cast<size_t>(j)] = f1_value(g, rho1, alpha, 2 * kPi * j / N);
  std::array<std::complex<double>, 7> c{};  // m = -3..3 at index m+3
  for (int m = -3; m <= 3; ++m) {
    std::complex<double> acc = 0;
    for (int j = 0; j < N; ++j)
      acc += f[static_cast<size_t>(j)] *
             std::polar(1.0, -2 * kPi * m * j / N);
    c[static_cast<size_t>(m + 3)] = acc / double(N);
  }
  double cmax = 0;
  for (const auto& v : c) cmax = std::max(cmax, std::abs(v));
  std::vector<double> roots;
  if (cmax < 1e-14 * slice_residual_scale(g, rho1)) return roots;
  // P(z) = sum c_m z^{m+3}; roots of f on |z| = 1.
  int deg = 6;
  while (deg > 0 && std::abs(c[static_cast<size_t>(deg)]) < 1e-14 * cmax) --deg;
  int lo = 0;
  while (lo < deg && std::abs(c[static_cast<size_t>(lo)]) < 1e-14 * cmax) ++lo;
  int n = deg - lo;
  if (n <= 0) return roots;
  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    C(i, n - 1) = -c[static_cast<size_t>(lo + i)] / c[static_cast<size_t>(deg)];
  for (int i = 1; i < n; ++i) C(i, i - 1) = 1.0;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C, false);
  double fscale = slice_residual_scale(g, rho1);
  for (int i = 0; i < n; ++i) {
    std::complex<double> z = es.eigenvalues()(i);
    if (std::abs(std::abs(z) - 1.0) > 1e-3) continue;
    double th = std::arg(z);
    // Newton refinement on the real function.
    for (int it = 0; it < 12; ++it) {
      double v = f1_value(g, rho1, alpha, th);
      double h = 1e-7;
      double d = (f1_value(g, rho1, alpha, th + h) -
                  f1_value(g, rho1, alpha, th - h)) /
                 (2 * h);
      if (std::abs(d) < 1e-300) break;
      double step = v / d;
      if (std::abs(step) > 0.1) step = step > 0 ? 0.1 : -0.1;
      th -= step;
      if (std::abs(step) < 1e-14) break;
    }
    if (std::abs(f1_value(g, rho1, alpha, th)) > 1e-9 * fscale) continue;
    th = wrap_angle(th);
    bool dup = false;
    for (double r : roots)
      if (angle_dist(r, th) < 1e-7) dup = true;
    if (!dup) roots.push_back(th);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

SingularCurveSet trace_slice_curves(const geometry::ManipulatorGeometry& g,
                                    double rho1, int resolution) {
  SingularCurveSet out;
  out.rho1 = rho1;
  if (resolution < 64) resolution = 64;
  double da = 2 * kPi / resolution;
  double link_tol = std::max(0.05, 8 * da);
  double fscale = slice_residual_scale(g, rho1);

  struct Open {
    std::vector<CurveVertex> verts;
    int last_col = -1;
  };
  std::vector<Open> open, closed;
  for (int i = 0; i < resolution; ++i) {
    double alpha = -kPi + (i + 0.5) * da;
    std::vector<double> roots = theta1_roots_at_alpha(g, rho1, alpha);
    std::vector<CurveVertex> verts;
    for (double th : roots) {
      CurveVertex v;
      v.alpha = alpha;
      v.theta1 = th;
      auto [r2, r3] = slice_rhos(g, {rho1, alpha, th});
      v.rho2 = r2;
      v.rho3 = r3;
      v.residual = std::abs(f1_value(g, rho1, alpha, th)) / fscale;
      verts.push_back(v);
    }
    // Greedy nearest assignment to open branches.
    std::vector<int> assigned(verts.size(), -1);
    std::vector<bool> taken(open.size(), false);
    struct Pair {
      double d;
      int v, b;
    };
    std::vector<Pair> pairs;
    for (size_t vi = 0; vi < verts.size(); ++vi)
      for (size_t bi = 0; bi < open.size(); ++bi) {
        if (i - open[bi].last_col > 2) continue;
        double d = angle_dist(verts[vi].theta1, open[bi].verts.back().theta1);
        if (d <= link_tol) pairs.push_back({d, static_cast<int>(vi),
                                            static_cast<int>(bi)});
      }
    std::sort(pairs.begin(), pairs.end(),
              [](const Pair& a, const Pair& b) { return a.d < b.d; });
    for (const Pair& p : pairs) {
      if (assigned[static_cast<size_t>(p.v)] >= 0 ||
          taken[static_cast<size_t>(p.b)])
        continue;
      assigned[static_cast<size_t>(p.v)] = p.b;
      taken[static_cast<size_t>(p.b)] = true;
      open[static_cast<size_t>(p.b)].verts.push_back(
          verts[static_cast<size_t>(p.v)]);
      open[static_cast<size_t>(p.b)].last_col = i;
    }
    for (size_t vi = 0; vi < verts.size(); ++vi)
      if (assigned[vi] < 0) {
        Open nb;
        nb.verts.push_back(verts[vi]);
        nb.last_col = i;
        open.push_back(std::move(nb));
      }
    // Retire stale branches.
    std::vector<Open> still;
    for (auto& b : open) {
      if (i - b.last_col > 2)
        closed.push_back(std::move(b));
      else
        still.push_back(std::move(b));
    }
    open = std::move(still);
  }
  for (auto& b : open) closed.push_back(std::move(b));

  // Endpoint stitching: merge branches whose ends meet (handles folds in
  // alpha and the wrap at alpha = +-pi).
  auto end_close = [&](const CurveVertex& a, const CurveVertex& b) {
    return angle_dist(a.alpha, b.alpha) <= 2.5 * da &&
           angle_dist(a.theta1, b.theta1) <= link_tol;
  };
  bool merged = true;
  while (merged) {
    merged = false;
    for (size_t i = 0; i < closed.size() && !merged; ++i)
      for (size_t j = i + 1; j < closed.size() && !merged; ++j) {
        auto& A = closed[i].verts;
        auto& B = closed[j].verts;
        if (A.empty() || B.empty()) continue;
        if (end_close(A.back(), B.front())) {
          A.insert(A.end(), B.begin(), B.end());
        } else if (end_close(A.back(), B.back())) {
          A.insert(A.end(), B.rbegin(), B.rend());
        } else if (end_close(A.front(), B.back())) {
          A.insert(A.begin(), B.begin(), B.end());
        } else if (end_close(A.front(), B.front())) {
          A.insert(A.begin(), B.rbegin(), B.rend());
        } else {
          continue;
        }
        closed.erase(closed.begin() + static_cast<long>(j));
        merged = true;
      }
  }

  for (auto& b : closed)
    if (!b.verts.empty()) out.branches.push_back(std::move(b.verts));
  std::sort(out.branches.begin(), out.branches.end(),
            [](const std::vector<CurveVertex>& a,
               const std::vector<CurveVertex>& b) {
              auto key = [](const std::vector<CurveVertex>& v) {
                double ma = 1e300, mt = 1e300;
                for (const auto& x : v) {
                  ma = std::min(ma, x.alpha);
                  mt = std::min(mt, x.theta1);
                }
                return std::make_pair(ma, mt);
              };
              return key(a) < key(b);
            });
  return out;
}

RegionMap label_regions(const geometry::ManipulatorGeometry& g, double rho1,
                        int grid, double rho2_max, double rho3_max,
                        const SingularCurveSet* curves) {
  RegionMap m;
  m.rho1 = rho1;
  m.rho2_max = rho2_max;
  m.rho3_max = rho3_max;
  m.n2 = m.n3 = grid;
  m.counts.assign(static_cast<size_t>(grid) * static_cast<size_t>(grid), 0);
  double h2 = rho2_max / grid, h3 = rho3_max / grid;
  for (int i3 = 0; i3 < grid; ++i3)
    for (int i2 = 0; i2 < grid; ++i2) {
      double r2 = (i2 + 0.5) * h2, r3 = (i3 + 0.5) * h3;
      bool boundary = false;
      if (curves)
        for (const auto& br : curves->branches) {
          for (const auto& v : br)
            if (std::abs(v.rho2 - r2) <= h2 && std::abs(v.rho3 - r3) <= h3) {
              boundary = true;
              break;
            }
          if (boundary) break;
        }
      int count = boundary
                      ? -1
                      : kinematics::count_assembly_modes(g, {rho1, r2, r3});
      m.counts[static_cast<size_t>(i3 * grid + i2)] = count;
    }
  return m;
}

void write_slice_csv(const SingularCurveSet& curves, const std::string& path) {
  std::ofstream out(path);
  out << "alpha_rad,theta1_rad,rho2,rho3,branch_id,residual\n";
  char buf[256];
  int id = 0;
  for (const auto& br : curves.branches) {
    for (const auto& v : br) {
      std::snprintf(buf, sizeof(buf), "%.15g,%.15g,%.15g,%.15g,%d,%.6g\n",
                    v.alpha, v.theta1, v.rho2, v.rho3, id, v.residual);
      out << buf;
    }
    ++id;
  }
}

void write_slice_svg(const SingularCurveSet& curves, const std::string& path,
                     const std::vector<std::pair<double, double>>& cusps) {
  double mx = 1e-9, my = 1e-9;
  for (const auto& br : curves.branches)
    for (const auto& v : br) {
      mx = std::max(mx, v.rho2);
      my = std::max(my, v.rho3);
    }
  mx *= 1.05;
  my *= 1.05;
  const double W = 800, H = 800, M = 60;
  auto X = [&](double r2) { return M + r2 / mx * (W - 2 * M); };
  auto Y = [&](double r3) { return H - M - r3 / my * (H - 2 * M); };
  std::ofstream out(path);
  char buf[128];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << M << "\" y1=\"" << H - M << "\" x2=\"" << W - M
      << "\" y2=\"" << H - M << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << M << "\" y1=\"" << H - M << "\" x2=\"" << M
      << "\" y2=\"" << M << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << W - M + 10 << "\" y=\"" << H - M + 5
      << "\" font-size=\"16\">rho2</text>\n";
  out << "<text x=\"" << M - 40 << "\" y=\"" << M - 10
      << "\" font-size=\"16\">rho3</text>\n";
  for (const auto& br : curves.branches) {
    out << "<polyline fill=\"none\" stroke=\"blue\" stroke-width=\"1\" "
           "points=\"";
    for (const auto& v : br) {
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", X(v.rho2), Y(v.rho3));
      out << buf;
    }
    out << "\"/>\n";
  }
  for (const auto& [r2, r3] : cusps) {
    std::snprintf(buf, sizeof(buf),
                  "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"6\" fill=\"none\" "
                  "stroke=\"red\" stroke-width=\"1.5\"/>\n",
                  X(r2), Y(r3));
    out << buf;
  }
  out << "</svg>\n";
}

void write_region_csv(const RegionMap& m, const std::string& path) {
  std::ofstream out(path);
  out << "rho2,rho3,count\n";
  char buf[128];
  double h2 = m.rho2_max / m.n2, h3 = m.rho3_max / m.n3;
  for (int i3 = 0; i3 < m.n3; ++i3)
    for (int i2 = 0; i2 < m.n2; ++i2) {
      std::snprintf(buf, sizeof(buf), "%.15g,%.15g,%d\n", (i2 + 0.5) * h2,
                    (i3 + 0.5) * h3, m.at(i2, i3));
      out << buf;
    }
}

}  // namespace cuspidal::singular_slice
