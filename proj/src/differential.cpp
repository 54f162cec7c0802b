#include "cuspidal/differential.hpp"

#include <cmath>

namespace cuspidal::differential {

namespace {

struct Trig {
  double r1, r2, r3;
  double c1, s1, c2, s2, c3, s3;
  double s12, s23, s13, c12, c23, c13;
  explicit Trig(const geometry::Configuration& cfg) {
    r1 = cfg.L[0];
    r2 = cfg.L[1];
    r3 = cfg.L[2];
    c1 = std::cos(cfg.theta[0]);
    s1 = std::sin(cfg.theta[0]);
    c2 = std::cos(cfg.theta[1]);
    s2 = std::sin(cfg.theta[1]);
    c3 = std::cos(cfg.theta[2]);
    s3 = std::sin(cfg.theta[2]);
    s12 = std::sin(cfg.theta[0] - cfg.theta[1]);
    s23 = std::sin(cfg.theta[1] - cfg.theta[2]);
    s13 = std::sin(cfg.theta[0] - cfg.theta[2]);
    c12 = std::cos(cfg.theta[0] - cfg.theta[1]);
    c23 = std::cos(cfg.theta[1] - cfg.theta[2]);
    c13 = std::cos(cfg.theta[0] - cfg.theta[2]);
  }
};

}  // namespace

Mat3 jacobian_theta(const geometry::ManipulatorGeometry& g,
                    const geometry::Configuration& cfg) {
  Trig t(cfg);
  Mat3 J = Mat3::Zero();
  J(0, 0) = 2 * t.r1 * (g.A2x * t.s1 + t.r2 * t.s12);
  J(0, 1) = 2 * t.r2 * (-g.A2x * t.s2 - t.r1 * t.s12);
  J(1, 1) = 2 * t.r2 * (-(g.A2x - g.A3x) * t.s2 - g.A3y * t.c2 + t.r3 * t.s23);
  J(1, 2) = 2 * t.r3 * ((g.A2x - g.A3x) * t.s3 + g.A3y * t.c3 - t.r2 * t.s23);
  J(2, 0) = 2 * t.r1 * (g.A3x * t.s1 - g.A3y * t.c1 + t.r3 * t.s13);
  J(2, 2) = 2 * t.r3 * (-g.A3x * t.s3 + g.A3y * t.c3 - t.r1 * t.s13);
  return J;
}

Mat3 jacobian_rho(const geometry::ManipulatorGeometry& g,
                  const geometry::Configuration& cfg) {
  Trig t(cfg);
  Mat3 J = Mat3::Zero();
  J(0, 0) = 2 * (t.r1 - g.A2x * t.c1 - t.r2 * t.c12);
  J(0, 1) = 2 * (t.r2 + g.A2x * t.c2 - t.r1 * t.c12);
  J(1, 1) = 2 * ((g.A2x - g.A3x) * t.c2 - g.A3y * t.s2 + t.r2 - t.r3 * t.c23);
  J(1, 2) = 2 * ((g.A3x - g.A2x) * t.c3 + g.A3y * t.s3 + t.r3 - t.r2 * t.c23);
  J(2, 0) = 2 * (t.r1 - g.A3x * t.c1 - g.A3y * t.s1 - t.r3 * t.c13);
  J(2, 2) = 2 * (g.A3x * t.c3 + g.A3y * t.s3 + t.r3 - t.r1 * t.c13);
  return J;
}

HessianTriple hessians_theta(const geometry::ManipulatorGeometry& g,
                             const geometry::Configuration& cfg) {
  Trig t(cfg);
  HessianTriple H;
  H.H1 = Mat3::Zero();
  H.H2 = Mat3::Zero();
  H.H3 = Mat3::Zero();
  H.H1(0, 0) = 2 * t.r1 * (g.A2x * t.c1 + t.r2 * t.c12);
  H.H1(0, 1) = H.H1(1, 0) = -2 * t.r1 * t.r2 * t.c12;
  H.H1(1, 1) = 2 * t.r2 * (t.r1 * t.c12 - g.A2x * t.c2);
  H.H2(1, 1) =
      2 * t.r2 * (-(g.A2x - g.A3x) * t.c2 + g.A3y * t.s2 + t.r3 * t.c23);
  H.H2(1, 2) = H.H2(2, 1) = -2 * t.r2 * t.r3 * t.c23;
  H.H2(2, 2) =
      2 * t.r3 * ((g.A2x - g.A3x) * t.c3 - g.A3y * t.s3 + t.r2 * t.c23);
  H.H3(0, 0) = 2 * t.r1 * (g.A3x * t.c1 + g.A3y * t.s1 + t.r3 * t.c13);
  H.H3(0, 2) = H.H3(2, 0) = -2 * t.r1 * t.r3 * t.c13;
  H.H3(2, 2) = 2 * t.r3 * (t.r1 * t.c13 - g.A3x * t.c3 - g.A3y * t.s3);
  return H;
}

KFactors adjoint_k_factors(const geometry::ManipulatorGeometry& g,
                           const geometry::Configuration& cfg) {
  Mat3 J = jacobian_theta(g, cfg);
  KFactors r;
  double k1 = J(1, 1), k2 = J(2, 2), k3 = J(1, 2), k4 = J(2, 0), k5 = J(0, 1),
         k6 = J(0, 0);
  r.k = {k1, k2, k3, k4, k5, k6};
  r.adjoint << k1 * k2, -k2 * k5, k3 * k5,  //
      k3 * k4, k2 * k6, -k3 * k6,           //
      -k1 * k4, k4 * k5, k1 * k6;
  return r;
}

KernelPair kernel_vectors(const geometry::ManipulatorGeometry& g,
                          const geometry::Configuration& cfg,
                          double tol_kernel) {
  KFactors kf = adjoint_k_factors(g, cfg);
  KernelPair out;
  out.k = kf.k;
  const Mat3& A = kf.adjoint;
  double scale = A.cwiseAbs().maxCoeff();
  int best_row = 0, best_col = 0;
  double best_row_norm = -1, best_col_norm = -1;
  for (int i = 0; i < 3; ++i) {
    double rn = A.row(i).norm(), cn = A.col(i).norm();
    if (rn > best_row_norm) {
      best_row_norm = rn;
      best_row = i;
    }
    if (cn > best_col_norm) {
      best_col_norm = cn;
      best_col = i;
    }
  }
  Mat3 J = jacobian_theta(g, cfg);
  double jscale = std::max(J.cwiseAbs().maxCoeff(), 1e-300);
  if (scale <= tol_kernel * jscale * jscale) {
    // Adjoint numerically zero: rank(J) <= 1; fall back to singular vectors.
    Eigen::JacobiSVD<Mat3> svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
    out.u = svd.matrixU().col(2);
    out.v = svd.matrixV().col(2);
    out.svd_fallback = true;
    return out;
  }
  out.row_index = best_row;
  out.col_index = best_col;
  out.u = A.row(best_row).transpose();
  out.v = A.col(best_col);
  out.u.normalize();
  out.v.normalize();
  return out;
}

double cusp_condition(const geometry::ManipulatorGeometry& g,
                      const geometry::Configuration& cfg) {
  KernelPair kp = kernel_vectors(g, cfg);
  HessianTriple H = hessians_theta(g, cfg);
  Mat3 M = kp.u(0) * H.H1 + kp.u(1) * H.H2 + kp.u(2) * H.H3;
  double hmax = std::max({H.H1.cwiseAbs().maxCoeff(), H.H2.cwiseAbs().maxCoeff(),
                          H.H3.cwiseAbs().maxCoeff(), 1e-300});
  return kp.v.dot(M * kp.v) / hmax;
}

double det_normalization(const geometry::ManipulatorGeometry& g,
                         const geometry::Configuration& cfg) {
  double amax = std::max({g.A2x, g.A3x, g.A3y});
  double n = 8 * cfg.L[0] * cfg.L[1] * cfg.L[2] * amax * amax;
  return std::max(n, 1e-300);
}

}  // namespace cuspidal::differential
