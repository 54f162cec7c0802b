#pragma once

#include <Eigen/Dense>

#include "cuspidal/geometry.hpp"

// First- and second-order constraint derivatives, adjoint/kernel machinery
// and the cusp existence condition.
namespace cuspidal::differential {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

struct HessianTriple {
  Mat3 H1, H2, H3;
};

struct KFactors {
  std::array<double, 6> k{};  // k1..k6
  Mat3 adjoint;
};

struct KernelPair {
  std::array<double, 6> k{};
  Vec3 u, v;  // unit left/right kernel vectors
  int row_index = -1, col_index = -1;
  bool svd_fallback = false;  // adjoint rank-deficient, kernel from SVD
};

Mat3 jacobian_theta(const geometry::ManipulatorGeometry& geom,
                    const geometry::Configuration& config);
Mat3 jacobian_rho(const geometry::ManipulatorGeometry& geom,
                  const geometry::Configuration& config);
HessianTriple hessians_theta(const geometry::ManipulatorGeometry& geom,
                             const geometry::Configuration& config);
KFactors adjoint_k_factors(const geometry::ManipulatorGeometry& geom,
                           const geometry::Configuration& config);
KernelPair kernel_vectors(const geometry::ManipulatorGeometry& geom,
                          const geometry::Configuration& config,
                          double tol_kernel = 1e-9);

// v^T [u1 H1 + u2 H2 + u3 H3] v normalized by max_i |H_i|_inf so the value
// is invariant under sign/scale of u, v and unit-free.
double cusp_condition(const geometry::ManipulatorGeometry& geom,
                      const geometry::Configuration& config);

// Unit-free determinant normalization: 8 rho1 rho2 rho3 max(A2x,A3x,A3y)^2.
double det_normalization(const geometry::ManipulatorGeometry& geom,
                         const geometry::Configuration& config);

}  // namespace cuspidal::differential
