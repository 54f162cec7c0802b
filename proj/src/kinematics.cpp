#include "cuspidal/kinematics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <numbers>

namespace cuspidal::kinematics {

using geometry::wrap_angle;

namespace {

constexpr double kPi = std::numbers::pi;

struct Coupling {
  // G = K - 2 ax (r1 c1 + dd cos(alpha + phase)) - 2 ay (r1 s1 + dd
  // sin(alpha + phase)) + 2 r1 dd cos(theta1 - alpha - phase)
  double K, ax, ay, dd, phase, r1;
  double eval(double alpha, double theta1) const {
    double ap = alpha + phase;
    return K - 2 * ax * (r1 * std::cos(theta1) + dd * std::cos(ap)) -
           2 * ay * (r1 * std::sin(theta1) + dd * std::sin(ap)) +
           2 * r1 * dd * std::cos(theta1 - ap);
  }
  double d_theta1(double alpha, double theta1) const {
    double ap = alpha + phase;
    return 2 * ax * r1 * std::sin(theta1) - 2 * ay * r1 * std::cos(theta1) -
           2 * r1 * dd * std::sin(theta1 - ap);
  }
  double d_alpha(double alpha, double theta1) const {
    double ap = alpha + phase;
    return 2 * ax * dd * std::sin(ap) - 2 * ay * dd * std::cos(ap) +
           2 * r1 * dd * std::sin(theta1 - ap);
  }
};

std::pair<Coupling, Coupling> make_coupling(
    const geometry::ManipulatorGeometry& g, const std::array<double, 3>& L) {
  Coupling g2{g.A2x * g.A2x + L[0] * L[0] + g.d1 * g.d1 - L[1] * L[1],
              g.A2x,
              0,
              g.d1,
              0,
              L[0]};
  Coupling g3{g.A3x * g.A3x + g.A3y * g.A3y + L[0] * L[0] + g.d3 * g.d3 -
                  L[2] * L[2],
              g.A3x,
              g.A3y,
              g.d3,
              g.beta,
              L[0]};
  return {g2, g3};
}

using Quad = std::array<std::array<double, 3>, 3>;  // [i][j] * t^i * t1^j

// Coefficient grids of the two cleared coupling constraints, biquadratic in
// (t = tan(alpha/2), t1 = tan(theta1/2)).
std::pair<Quad, Quad> biquadratics(const geometry::ManipulatorGeometry& g,
                                   const std::array<double, 3>& L) {
  double r1 = L[0];
  double cb = std::cos(g.beta), sb = std::sin(g.beta);
  auto accum = [](Quad& q, double c, int which) {
    // which: 0 -> (1+t1^2)(1+t^2), 1 -> (1-t1^2)(1+t^2), 2 -> t1 (1+t^2),
    // 3 -> (1-t^2)(1+t1^2), 4 -> t (1+t1^2),
    // 5 -> cos-cos: (1-t1^2)(1-t^2) + 4 t t1, 6 -> sin-diff: 2t1(1-t^2) -
    // 2t(1-t1^2)
    switch (which) {
      case 0:
        q[0][0] += c; q[0][2] += c; q[2][0] += c; q[2][2] += c;
        break;
      case 1:
        q[0][0] += c; q[0][2] -= c; q[2][0] += c; q[2][2] -= c;
        break;
      case 2:
        q[0][1] += c; q[2][1] += c;
        break;
      case 3:
        q[0][0] += c; q[0][2] += c; q[2][0] -= c; q[2][2] -= c;
        break;
      case 4:
        q[1][0] += c; q[1][2] += c;
        break;
      case 5:
        q[0][0] += c; q[0][2] -= c; q[2][0] -= c; q[2][2] += c;
        q[1][1] += 4 * c;
        break;
      case 6:
        q[0][1] += 2 * c; q[2][1] -= 2 * c;
        q[1][0] -= 2 * c; q[1][2] += 2 * c;
        break;
    }
  };
  Quad q2{}, q3{};
  double K2 = g.A2x * g.A2x + r1 * r1 + g.d1 * g.d1 - L[1] * L[1];
  accum(q2, K2, 0);
  accum(q2, -2 * g.A2x * r1, 1);
  accum(q2, -2 * g.A2x * g.d1, 3);
  accum(q2, 2 * r1 * g.d1, 5);
  double K3 = g.A3x * g.A3x + g.A3y * g.A3y + r1 * r1 + g.d3 * g.d3 -
              L[2] * L[2];
  accum(q3, K3, 0);
  accum(q3, -2 * g.A3x * r1, 1);
  accum(q3, -2 * g.A3y * r1 * 2, 2);  // -2 A3y r1 * 2 t1 (1+t^2)
  accum(q3, -2 * g.A3x * g.d3 * cb, 3);
  accum(q3, -2 * g.A3x * g.d3 * -sb * 2, 4);  // cos(a+b): -2t sb term
  accum(q3, -2 * g.A3y * g.d3 * cb * 2, 4);   // sin(a+b): 2t cb term
  accum(q3, -2 * g.A3y * g.d3 * sb, 3);       // sin(a+b): (1-t^2) sb term
  accum(q3, 2 * r1 * g.d3 * cb, 5);
  accum(q3, 2 * r1 * g.d3 * sb, 6);
  return {q2, q3};
}

// Resultant in t1 of two quadratics a t1^2 + b t1 + c with polynomial
// coefficients in t: (a1 c2 - a2 c1)^2 - (a1 b2 - a2 b1)(b1 c2 - b2 c1).
std::vector<double> resultant_t(const Quad& q2, const Quad& q3) {
  auto col = [](const Quad& q, int j) {
    return std::array<double, 3>{q[0][static_cast<size_t>(j)],
                                 q[1][static_cast<size_t>(j)],
                                 q[2][static_cast<size_t>(j)]};
  };
  auto mul = [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
    std::array<double, 5> r{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        r[static_cast<size_t>(i + j)] +=
            a[static_cast<size_t>(i)] * b[static_cast<size_t>(j)];
    return r;
  };
  auto sub = [](std::array<double, 5> a, const std::array<double, 5>& b) {
    for (int i = 0; i < 5; ++i) a[static_cast<size_t>(i)] -= b[static_cast<size_t>(i)];
    return a;
  };
  auto a1 = col(q2, 2), b1 = col(q2, 1), c1 = col(q2, 0);
  auto a2 = col(q3, 2), b2 = col(q3, 1), c2 = col(q3, 0);
  auto ac = sub(mul(a1, c2), mul(a2, c1));
  auto ab = sub(mul(a1, b2), mul(a2, b1));
  auto bc = sub(mul(b1, c2), mul(b2, c1));
  std::vector<double> res(9, 0.0);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      double v = ac[static_cast<size_t>(i)] * ac[static_cast<size_t>(j)] -
                 ab[static_cast<size_t>(i)] * bc[static_cast<size_t>(j)];
      res[static_cast<size_t>(i + j)] += v;
    }
  return res;
}

// Exact-in-structure division by (1 + t^2); remainder discarded.
std::vector<double> strip_one_plus_t2(const std::vector<double>& p) {
  if (p.size() < 3) return p;
  std::vector<double> q(p.size() - 2, 0.0);
  std::vector<double> r = p;
  for (size_t sh = q.size(); sh-- > 0;) {
    double c = r[sh + 2];
    q[sh] = c;
    r[sh + 2] -= c;
    r[sh] -= c;
  }
  return q;
}

std::vector<std::complex<double>> poly_roots(std::vector<double> p) {
  double mx = 0;
  for (double c : p) mx = std::max(mx, std::abs(c));
  if (mx == 0) return {};
  while (p.size() > 1 && std::abs(p.back()) < 1e-13 * mx) p.pop_back();
  int n = static_cast<int>(p.size()) - 1;
  if (n < 1) return {};
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    C(i, n - 1) = -p[static_cast<size_t>(i)] / p[static_cast<size_t>(n)];
  for (int i = 1; i < n; ++i) C(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(C, false);
  std::vector<std::complex<double>> roots;
  for (int i = 0; i < n; ++i) roots.push_back(es.eigenvalues()(i));
  return roots;
}

// Both circle-circle intersection seeds for theta1 at fixed alpha: B1 lies
// on the circle (origin, r1) and on (A2 - d1 e(alpha), rho2); a tangent or
// near-miss is clamped to the closest-approach point.
std::vector<double> theta1_seeds(const geometry::ManipulatorGeometry& g,
                                 const std::array<double, 3>& L,
                                 double alpha) {
  double cx = g.A2x - g.d1 * std::cos(alpha);
  double cy = -g.d1 * std::sin(alpha);
  double d = std::hypot(cx, cy);
  double r1 = L[0], r2 = L[1];
  std::vector<double> out;
  if (d < 1e-12) {
    if (std::abs(r1 - r2) < 1e-6 * std::max(1.0, r1))
      for (int i = 0; i < 4; ++i) out.push_back(i * kPi / 2 - kPi / 2);
    return out;
  }
  double a = (r1 * r1 - r2 * r2 + d * d) / (2 * d);
  double h2 = r1 * r1 - a * a;
  double h = h2 > 0 ? std::sqrt(h2) : 0.0;
  double px = a * cx / d, py = a * cy / d;
  double ox = -cy / d * h, oy = cx / d * h;
  out.push_back(std::atan2(py + oy, px + ox));
  if (h > 0) out.push_back(std::atan2(py - oy, px - ox));
  return out;
}

struct Candidate {
  double alpha, theta1, imag;
};

}  // namespace

std::array<double, 2> coupling_residuals(
    const geometry::ManipulatorGeometry& geom, const std::array<double, 3>& L,
    double alpha, double theta1) {
  auto [g2, g3] = make_coupling(geom, L);
  return {g2.eval(alpha, theta1), g3.eval(alpha, theta1)};
}

double pose_distance(const geometry::ManipulatorGeometry& geom,
                     const geometry::PlatformPose& a,
                     const geometry::PlatformPose& b) {
  double db = norm(a.b1 - b.b1);
  double da = geom.d1 * geometry::angle_dist(a.alpha, b.alpha);
  return std::max(db, da);
}

double default_eps_cluster(const geometry::ManipulatorGeometry& geom) {
  return 1e-4 * (geom.d1 + geom.d2 + geom.d3) / 3.0;
}

std::vector<std::vector<int>> cluster_solutions(
    const geometry::ManipulatorGeometry& geom,
    const std::vector<DKSolution>& poses, double eps_cluster) {
  int n = static_cast<int>(poses.size());
  std::vector<int> parent(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) parent[static_cast<size_t>(i)] = i;
  std::function<int(int)> find = [&](int x) {
    while (parent[static_cast<size_t>(x)] != x) x = parent[static_cast<size_t>(x)];
    return x;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (pose_distance(geom, poses[static_cast<size_t>(i)].pose,
                        poses[static_cast<size_t>(j)].pose) <= eps_cluster)
        parent[static_cast<size_t>(find(i))] = find(j);
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < n; ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<int>> out;
  for (auto& [root, members] : groups) out.push_back(members);
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a[0] < b[0]; });
  return out;
}

DKSolutionSet direct_kinematics(const geometry::ManipulatorGeometry& geom,
                                const std::array<double, 3>& L) {
  DKSolutionSet out;
  double scale = std::max({geom.scale(), L[0], L[1], L[2], 1.0});
  double res_norm = scale * scale;
  if (L[0] <= 1e-12 * scale) {
    // B1 pinned at the origin: solve the two constraints in alpha only.
    // Handled by the generic path with r1 = tiny; fall through.
  }
  auto [g2, g3] = make_coupling(geom, L);
  auto [q2, q3] = biquadratics(geom, L);
  std::vector<double> res = resultant_t(q2, q3);
  std::vector<double> sextic = strip_one_plus_t2(res);

  std::vector<Candidate> cands;
  for (const auto& z : poly_roots(sextic)) {
    double t = z.real();
    if (std::abs(z) > 1e8) continue;  // pole root, handled below
    double imag_alpha = 2 * std::abs(z.imag()) / (1 + std::norm(z));
    if (imag_alpha > 2e-3) continue;
    double alpha = 2 * std::atan(t);
    // Pick the coupling seed with the least combined residual.
    double best = std::numeric_limits<double>::infinity();
    double best_theta = 0;
    for (double th : theta1_seeds(geom, L, alpha)) {
      double r = std::abs(g2.eval(alpha, th)) + std::abs(g3.eval(alpha, th));
      if (r < best) {
        best = r;
        best_theta = th;
      }
    }
    if (!std::isfinite(best)) continue;
    cands.push_back({alpha, best_theta, imag_alpha});
  }
  // Pole alpha = pi (t at infinity), unless a finite root already sits there.
  bool pole_covered = false;
  for (const Candidate& c : cands)
    if (geometry::angle_dist(c.alpha, kPi) < 1e-6) pole_covered = true;
  if (!pole_covered)
    for (double th : theta1_seeds(geom, L, kPi)) {
      double r2 = g2.eval(kPi, th), r3 = g3.eval(kPi, th);
      if (std::abs(r2) < 1e-7 * res_norm && std::abs(r3) < 1e-7 * res_norm)
        cands.push_back({kPi, th, 0.0});
    }

  std::vector<DKSolution> polished;
  for (const Candidate& c : cands) {
    double a = c.alpha, th = c.theta1;
    bool ok = false;
    for (int it = 0; it < 50; ++it) {
      double f1 = g2.eval(a, th), f2 = g3.eval(a, th);
      if (std::abs(f1) < 1e-12 * res_norm && std::abs(f2) < 1e-12 * res_norm) {
        ok = true;
        break;
      }
      double j11 = g2.d_alpha(a, th), j12 = g2.d_theta1(a, th);
      double j21 = g3.d_alpha(a, th), j22 = g3.d_theta1(a, th);
      double det = j11 * j22 - j12 * j21;
      double da, dth;
      if (std::abs(det) > 1e-14 * res_norm * res_norm) {
        da = -(f1 * j22 - f2 * j12) / det;
        dth = -(j11 * f2 - j21 * f1) / det;
      } else {
        // Gradient step on the squared residual near folds.
        double gx = 2 * (f1 * j11 + f2 * j21), gy = 2 * (f1 * j12 + f2 * j22);
        double gn = gx * gx + gy * gy;
        if (gn < 1e-300) break;
        double s = (f1 * f1 + f2 * f2) / gn;
        da = -s * gx;
        dth = -s * gy;
      }
      double lim = 0.5;
      double step = std::max(std::abs(da), std::abs(dth));
      if (step > lim) {
        da *= lim / step;
        dth *= lim / step;
      }
      a += da;
      th += dth;
    }
    if (!ok) {
      // Tolerate slightly looser convergence at tangential (fold) points.
      double f1 = g2.eval(a, th), f2 = g3.eval(a, th);
      if (std::abs(f1) < 1e-9 * res_norm && std::abs(f2) < 1e-9 * res_norm)
        ok = true;
    }
    double moved = std::max(geometry::angle_dist(a, c.alpha),
                            geometry::angle_dist(th, c.theta1));
    // Near-multiple roots let Newton slide along the tangential valley, so
    // the floor must exceed the worst observed slide at a triple root.
    double guard = std::max(1e-3, 100 * c.imag);
    if (!ok || moved > guard) {
      ++out.diagnostics_dropped;
      continue;
    }
    DKSolution s;
    s.pose.b1 = {L[0] * std::cos(th), L[0] * std::sin(th)};
    s.pose.alpha = wrap_angle(a);
    s.theta1 = wrap_angle(th);
    double f1 = g2.eval(a, th), f2 = g3.eval(a, th);
    s.residual = std::max(std::abs(f1), std::abs(f2)) / res_norm;
    polished.push_back(s);
  }
  out.poses = std::move(polished);
  out.clusters = cluster_solutions(geom, out.poses, default_eps_cluster(geom));
  return out;
}

int count_assembly_modes(const geometry::ManipulatorGeometry& geom,
                         const std::array<double, 3>& L) {
  return static_cast<int>(direct_kinematics(geom, L).clusters.size());
}

}  // namespace cuspidal::kinematics
