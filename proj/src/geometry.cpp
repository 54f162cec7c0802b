#include "cuspidal/geometry.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <numbers>

namespace cuspidal::geometry {

using polyalg::Rat;

double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  a = std::fmod(a, 2 * pi);
  if (a <= -pi) a += 2 * pi;
  if (a > pi) a -= 2 * pi;
  return a;
}

double angle_dist(double a, double b) { return std::abs(wrap_angle(a - b)); }

std::pair<double, double> derive_platform_angle(double d1, double d2,
                                                double d3) {
  if (!(d1 > 0 && d2 > 0 && d3 > 0))
    throw GeometryError("platform sides must be positive");
  double cb = (d1 * d1 + d3 * d3 - d2 * d2) / (2 * d1 * d3);
  if (cb > 1 + 1e-12) throw GeometryError("side lengths violate the triangle inequality");
  if (cb <= -1 + 1e-12) throw GeometryError("degenerate flat platform (beta = pi)");
  if (cb > 1) cb = 1;
  double beta = std::acos(cb);
  double h = d3 * std::sin(beta);
  return {beta, h};
}

ManipulatorGeometry ManipulatorGeometry::create(double A2x, double A3x,
                                                double A3y, double d1,
                                                double d2, double d3) {
  if (!(A2x > 0)) throw GeometryError("A2x must be positive");
  ManipulatorGeometry g;
  g.A2x = A2x;
  g.A3x = A3x;
  g.A3y = A3y;
  g.d1 = d1;
  g.d2 = d2;
  g.d3 = d3;
  std::tie(g.beta, g.h) = derive_platform_angle(d1, d2, d3);
  g.rA2x = polyalg::rat_from_double(A2x);
  g.rA3x = polyalg::rat_from_double(A3x);
  g.rA3y = polyalg::rat_from_double(A3y);
  g.rd1 = polyalg::rat_from_double(d1);
  g.rd2 = polyalg::rat_from_double(d2);
  g.rd3 = polyalg::rat_from_double(d3);
  Rat cb = (g.rd1 * g.rd1 + g.rd3 * g.rd3 - g.rd2 * g.rd2) / (2 * g.rd1 * g.rd3);
  if (cb > 1) cb = 1;  // exact flat platform; rounding above is fp-only
  g.rcos_beta = cb;
  g.rhsq = g.rd3 * g.rd3 * (1 - cb * cb);
  return g;
}

ManipulatorGeometry ManipulatorGeometry::from_json_text(
    const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  const char* keys[] = {"A2x", "A3x", "A3y", "d1", "d2", "d3"};
  if (!j.is_object() || j.size() != 6)
    throw GeometryError("geometry file must hold exactly the six base keys");
  for (const char* k : keys)
    if (!j.contains(k) || !j[k].is_number())
      throw GeometryError(std::string("geometry file missing numeric key ") + k);
  return create(j["A2x"].get<double>(), j["A3x"].get<double>(),
                j["A3y"].get<double>(), j["d1"].get<double>(),
                j["d2"].get<double>(), j["d3"].get<double>());
}

ManipulatorGeometry ManipulatorGeometry::from_json_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GeometryError("cannot open geometry file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::array<Vec2, 3> platform_points(const ManipulatorGeometry& geom,
                                    const Configuration& config) {
  const auto& L = config.L;
  const auto& th = config.theta;
  Vec2 b1{L[0] * std::cos(th[0]), L[0] * std::sin(th[0])};
  Vec2 b2{geom.A2x + L[1] * std::cos(th[1]), L[1] * std::sin(th[1])};
  Vec2 b3{geom.A3x + L[2] * std::cos(th[2]), geom.A3y + L[2] * std::sin(th[2])};
  return {b1, b2, b3};
}

std::array<double, 3> constraint_residuals(const ManipulatorGeometry& geom,
                                           const Configuration& config) {
  auto [b1, b2, b3] = platform_points(geom, config);
  return {dot(b2 - b1, b2 - b1) - geom.d1 * geom.d1,
          dot(b3 - b2, b3 - b2) - geom.d2 * geom.d2,
          dot(b1 - b3, b1 - b3) - geom.d3 * geom.d3};
}

bool is_consistent(const ManipulatorGeometry& geom, const Configuration& config,
                   double tol) {
  double scale = std::max({geom.d1 * geom.d1, geom.d2 * geom.d2,
                           geom.d3 * geom.d3});
  auto g = constraint_residuals(geom, config);
  return std::max({std::abs(g[0]), std::abs(g[1]), std::abs(g[2])}) <=
         tol * scale;
}

Configuration inverse_kinematics(const ManipulatorGeometry& geom,
                                 const PlatformPose& pose) {
  Vec2 b1 = pose.b1;
  Vec2 b2 = b1 + Vec2{geom.d1 * std::cos(pose.alpha),
                      geom.d1 * std::sin(pose.alpha)};
  Vec2 b3 = b1 + Vec2{geom.d3 * std::cos(pose.alpha + geom.beta),
                      geom.d3 * std::sin(pose.alpha + geom.beta)};
  Vec2 a1{0, 0}, a2{geom.A2x, 0}, a3{geom.A3x, geom.A3y};
  std::array<Vec2, 3> rods{b1 - a1, b2 - a2, b3 - a3};
  Configuration c;
  for (int i = 0; i < 3; ++i) {
    double r = norm(rods[static_cast<size_t>(i)]);
    if (r <= 1e-12 * std::max(1.0, geom.scale()))
      throw GeometryError("platform vertex coincides with its base anchor");
    c.L[static_cast<size_t>(i)] = r;
    c.theta[static_cast<size_t>(i)] =
        std::atan2(rods[static_cast<size_t>(i)].y, rods[static_cast<size_t>(i)].x);
  }
  return c;
}

std::pair<double, double> slice_rhos(const ManipulatorGeometry& geom,
                                     const SliceCoords& slice) {
  double c1 = std::cos(slice.theta1), s1 = std::sin(slice.theta1);
  double nc2 = -geom.A2x + slice.rho1 * c1 + geom.d1 * std::cos(slice.alpha);
  double ns2 = slice.rho1 * s1 + geom.d1 * std::sin(slice.alpha);
  double nc3 = -geom.A3x + slice.rho1 * c1 +
               geom.d3 * std::cos(slice.alpha + geom.beta);
  double ns3 = -geom.A3y + slice.rho1 * s1 +
               geom.d3 * std::sin(slice.alpha + geom.beta);
  return {std::hypot(nc2, ns2), std::hypot(nc3, ns3)};
}

Configuration config_from_slice(const ManipulatorGeometry& geom,
                                const SliceCoords& slice) {
  double c1 = std::cos(slice.theta1), s1 = std::sin(slice.theta1);
  double nc2 = -geom.A2x + slice.rho1 * c1 + geom.d1 * std::cos(slice.alpha);
  double ns2 = slice.rho1 * s1 + geom.d1 * std::sin(slice.alpha);
  double nc3 = -geom.A3x + slice.rho1 * c1 +
               geom.d3 * std::cos(slice.alpha + geom.beta);
  double ns3 = -geom.A3y + slice.rho1 * s1 +
               geom.d3 * std::sin(slice.alpha + geom.beta);
  double rho2 = std::hypot(nc2, ns2);
  double rho3 = std::hypot(nc3, ns3);
  if (rho2 <= 0 || rho3 <= 0)
    throw GeometryError("slice point maps to a zero rod length");
  Configuration c;
  c.L = {slice.rho1, rho2, rho3};
  c.theta = {wrap_angle(slice.theta1), std::atan2(ns2, nc2),
             std::atan2(ns3, nc3)};
  return c;
}

PlatformPose pose_from_slice(const SliceCoords& slice) {
  PlatformPose p;
  p.b1 = {slice.rho1 * std::cos(slice.theta1),
          slice.rho1 * std::sin(slice.theta1)};
  p.alpha = wrap_angle(slice.alpha);
  return p;
}

}  // namespace cuspidal::geometry
