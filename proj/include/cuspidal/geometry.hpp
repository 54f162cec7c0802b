#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "cuspidal/polyalg.hpp"

// Manipulator parametrization, platform vertex coordinates, constraint
// residuals, inverse kinematics and slice-coordinate conversions.
namespace cuspidal::geometry {

struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Vec2 {
  double x = 0, y = 0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

// Wrap to (-pi, pi].
double wrap_angle(double a);
// Wrap-aware distance between two angles.
double angle_dist(double a, double b);

// Interior platform angle at B1 and the platform altitude from B3 onto
// the line B1B2. A flat platform with the middle side equal to the sum of
// the others (beta = 0) is admitted; beta = pi is rejected.
std::pair<double, double> derive_platform_angle(double d1, double d2,
                                                double d3);

struct ManipulatorGeometry {
  // Base anchors A1 = (0,0), A2 = (A2x, 0), A3 = (A3x, A3y).
  double A2x = 0, A3x = 0, A3y = 0;
  // Platform sides |B1B2|, |B2B3|, |B3B1|.
  double d1 = 0, d2 = 0, d3 = 0;
  // Derived: interior angle at B1 and platform altitude.
  double beta = 0, h = 0;

  // Exact mirrors for the elimination pipeline (shortest-decimal reading
  // of the inputs); cos beta is exactly rational, h = sqrt(hsq).
  polyalg::Rat rA2x, rA3x, rA3y, rd1, rd2, rd3, rcos_beta, rhsq;

  static ManipulatorGeometry create(double A2x, double A3x, double A3y,
                                    double d1, double d2, double d3);
  static ManipulatorGeometry from_json_file(const std::string& path);
  static ManipulatorGeometry from_json_text(const std::string& text);

  double scale() const { return std::max({A2x, std::abs(A3x), A3y, d1, d2, d3}); }
};

struct Configuration {
  std::array<double, 3> L{};      // rho1, rho2, rho3
  std::array<double, 3> theta{};  // theta1..theta3, each in (-pi, pi]
};

struct PlatformPose {
  Vec2 b1;
  double alpha = 0;  // orientation of B1B2, in (-pi, pi]
};

struct SliceCoords {
  double rho1 = 0;
  double alpha = 0;
  double theta1 = 0;
};

std::array<Vec2, 3> platform_points(const ManipulatorGeometry& geom,
                                    const Configuration& config);

std::array<double, 3> constraint_residuals(const ManipulatorGeometry& geom,
                                           const Configuration& config);

// Scale-free consistency check, tol relative to max(d_i^2).
bool is_consistent(const ManipulatorGeometry& geom, const Configuration& config,
                   double tol = 1e-8);

Configuration inverse_kinematics(const ManipulatorGeometry& geom,
                                 const PlatformPose& pose);

// (rho2, rho3) induced by the slice coordinates.
std::pair<double, double> slice_rhos(const ManipulatorGeometry& geom,
                                     const SliceCoords& slice);

Configuration config_from_slice(const ManipulatorGeometry& geom,
                                const SliceCoords& slice);

// Pose of the configuration implied by slice coordinates.
PlatformPose pose_from_slice(const SliceCoords& slice);

}  // namespace cuspidal::geometry
