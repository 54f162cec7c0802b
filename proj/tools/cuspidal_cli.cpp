#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>

#include "cuspidal/cusp.hpp"
#include "cuspidal/geometry.hpp"
#include "cuspidal/kinematics.hpp"
#include "cuspidal/singular_slice.hpp"
#include "cuspidal/surface.hpp"

namespace {

using namespace cuspidal;

constexpr double kDeg = 180.0 / std::numbers::pi;

geometry::ManipulatorGeometry load_geometry(const std::string& path) {
  return geometry::ManipulatorGeometry::from_json_file(path);
}

nlohmann::ordered_json pose_json(const geometry::ManipulatorGeometry& geom,
                                 const kinematics::DKSolution& s) {
  nlohmann::ordered_json j;
  j["b1"] = {s.pose.b1.x, s.pose.b1.y};
  j["alpha_deg"] = s.pose.alpha * kDeg;
  j["theta1_deg"] = s.theta1 * kDeg;
  j["residual"] = s.residual;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Singular curves and cusp points of planar 3-RPR manipulators"};
  app.require_subcommand(1);

  std::string geometry_path;
  int digits = 120;
  app.add_option("--geometry,-g", geometry_path, "geometry JSON file")
      ->required();
  app.add_option("--digits", digits, "working precision for the exact path");

  // slice
  auto* slice = app.add_subcommand("slice", "trace singular curves in a slice");
  double rho1 = 0;
  int resolution = 1024;
  std::string out_path, svg_path;
  slice->add_option("--rho1", rho1)->required();
  slice->add_option("--resolution", resolution);
  slice->add_option("--out", out_path)->required();
  slice->add_option("--svg", svg_path);

  // cusps
  auto* cusps = app.add_subcommand("cusps", "find cusp points in a slice");
  std::string mode = "algebraic";
  double c_rho1 = 0;
  std::string c_out;
  int c_resolution = 4096;
  cusps->add_option("--rho1", c_rho1)->required();
  cusps->add_option("--mode", mode)
      ->check(CLI::IsMember({"algebraic", "full_resultant", "numeric"}));
  cusps->add_option("--out", c_out)->required();
  cusps->add_option("--resolution", c_resolution);

  // dk
  auto* dk = app.add_subcommand("dk", "direct kinematics at rod lengths");
  std::vector<double> lengths;
  dk->add_option("--lengths", lengths, "rho1 rho2 rho3")->expected(3);

  // ik
  auto* ik = app.add_subcommand("ik", "inverse kinematics of a pose");
  std::vector<double> pose_in;
  ik->add_option("--pose", pose_in, "x y alpha_deg")->expected(3);

  // regions
  auto* regions = app.add_subcommand("regions", "assembly-mode region map");
  double r_rho1 = 0;
  int grid = 32;
  std::vector<double> bounds;
  std::string r_out;
  regions->add_option("--rho1", r_rho1)->required();
  regions->add_option("--grid", grid);
  regions->add_option("--bounds", bounds, "rho2_max rho3_max")->expected(2);
  regions->add_option("--out", r_out)->required();

  // surface
  auto* surf = app.add_subcommand("surface", "sweep rho1 and export the surface");
  std::vector<double> range;
  int steps = 50;
  std::string s_out;
  surf->add_option("--rho1-range", range, "min max")->expected(2)->required();
  surf->add_option("--steps", steps);
  surf->add_option("--out", s_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    geometry::ManipulatorGeometry geom = load_geometry(geometry_path);

    if (*slice) {
      if (!(rho1 > 0)) {
        std::cerr << "rho1 must be positive\n";
        return 2;
      }
      auto curves = singular_slice::trace_slice_curves(geom, rho1, resolution);
      singular_slice::write_slice_csv(curves, out_path);
      if (!svg_path.empty())
        singular_slice::write_slice_svg(curves, svg_path);
      size_t verts = 0;
      for (const auto& b : curves.branches) verts += b.size();
      std::cout << "branches " << curves.branches.size() << " vertices "
                << verts << "\n";
    } else if (*cusps) {
      if (!(c_rho1 > 0)) {
        std::cerr << "rho1 must be positive\n";
        return 2;
      }
      cusp::Mode m = mode == "numeric"
                         ? cusp::Mode::numeric
                         : (mode == "full_resultant" ? cusp::Mode::full_resultant
                                                     : cusp::Mode::algebraic);
      auto result = cusp::find_cusps(geom, c_rho1, m, digits, c_resolution);
      cusp::write_cusp_json(result, c_out);
      std::cout << cusp::verified_count(result.cusps) << "\n";
    } else if (*dk) {
      if (lengths.size() != 3 || lengths[0] < 0 || lengths[1] < 0 ||
          lengths[2] < 0) {
        std::cerr << "need three non-negative rod lengths\n";
        return 2;
      }
      auto set = kinematics::direct_kinematics(
          geom, {lengths[0], lengths[1], lengths[2]});
      nlohmann::ordered_json j;
      j["poses"] = nlohmann::ordered_json::array();
      for (const auto& s : set.poses) j["poses"].push_back(pose_json(geom, s));
      j["clusters"] = set.clusters;
      std::cout << j.dump(2) << "\n";
    } else if (*ik) {
      if (pose_in.size() != 3) {
        std::cerr << "need x y alpha_deg\n";
        return 2;
      }
      geometry::PlatformPose p;
      p.b1 = {pose_in[0], pose_in[1]};
      p.alpha = pose_in[2] / kDeg;
      auto cfg = geometry::inverse_kinematics(geom, p);
      nlohmann::ordered_json j;
      j["L"] = cfg.L;
      j["theta_deg"] = {cfg.theta[0] * kDeg, cfg.theta[1] * kDeg,
                        cfg.theta[2] * kDeg};
      std::cout << j.dump(2) << "\n";
    } else if (*regions) {
      if (!(r_rho1 > 0) || grid < 1) {
        std::cerr << "invalid rho1 or grid\n";
        return 2;
      }
      double b2, b3;
      auto curves = singular_slice::trace_slice_curves(geom, r_rho1, 512);
      if (bounds.size() == 2) {
        b2 = bounds[0];
        b3 = bounds[1];
      } else {
        double m2 = 0, m3 = 0;
        for (const auto& br : curves.branches)
          for (const auto& v : br) {
            m2 = std::max(m2, v.rho2);
            m3 = std::max(m3, v.rho3);
          }
        b2 = 1.2 * std::max(m2, 1.0);
        b3 = 1.2 * std::max(m3, 1.0);
      }
      auto map = singular_slice::label_regions(geom, r_rho1, grid, b2, b3,
                                               &curves);
      singular_slice::write_region_csv(map, r_out);
      std::cout << "cells " << map.counts.size() << "\n";
    } else if (*surf) {
      if (range.size() != 2 || !(range[0] > 0) || !(range[1] > range[0]) ||
          steps < 1) {
        std::cerr << "invalid rho1 range or steps\n";
        return 2;
      }
      auto sw = surface::sweep(geom, range[0], range[1], steps);
      surface::export_mesh(sw, s_out);
      surface::write_sweep_csv(sw, s_out + ".csv");
      std::cout << "stabilization_threshold " << sw.stabilization_threshold
                << "\n";
    }
  } catch (const geometry::GeometryError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const polyalg::PolyError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
