#pragma once

#include <string>
#include <vector>

#include "cuspidal/geometry.hpp"
#include "cuspidal/polyalg.hpp"
#include "cuspidal/singular_slice.hpp"

// The cusp-detection pipeline: exact slice polynomials, resultant
// elimination and factoring, back-substitution, triple-coincidence
// verification, plus an independent numeric oracle.
namespace cuspidal::cusp {

enum class Mode { algebraic, full_resultant, numeric };

struct CuspPoint {
  double alpha = 0, theta1 = 0;
  double rho2 = 0, rho3 = 0, rho1 = 0;
  bool verified = false;
  double cluster_gap = 0;
  std::string source;  // "algebraic" | "numeric"
};

struct EliminationTrace {
  int f1_deg_t = -1, f1_deg_t1 = -1;
  int e1_deg_t = -1, e1_deg_t1 = -1;
  int resultant_degree = -1;
  std::vector<std::pair<int, int>> factor_degrees;  // (degree, multiplicity)
  int q_degree = -1;       // -1 when no multiplicity-one degree-24 factor
  bool used_q = false;     // candidates came from Q, not the full square-free part
  int candidate_count = 0, filtered_count = 0, verified_count = 0;
  int q_audit_checked = 0, q_audit_violations = 0;
};

// Exact slice polynomials over Q(w), w^2 = d3^2 (1 - cos^2 beta): w is the
// platform altitude, kept symbolic through the construction.
struct ExactSlice {
  polyalg::QuadField field;
  polyalg::BPoly F1, E1;
  ExactSlice(const geometry::ManipulatorGeometry& geom,
             const polyalg::Rat& rho1);
};

polyalg::BPoly build_F1(const geometry::ManipulatorGeometry& geom,
                        const polyalg::Rat& rho1,
                        const polyalg::QuadField& field);
polyalg::BPoly build_E1(const geometry::ManipulatorGeometry& geom,
                        const polyalg::Rat& rho1,
                        const polyalg::QuadField& field);

// Numeric mirror of the rationalized cusp condition (cleared numerators),
// normalized to be unit-free; zero exactly at the E1 zero set.
double e1_numeric(const geometry::ManipulatorGeometry& geom, double rho1,
                  double alpha, double theta1);
// Numeric slice residual normalized by slice_residual_scale.
double f1_numeric(const geometry::ManipulatorGeometry& geom, double rho1,
                  double alpha, double theta1);

struct VerifyResult {
  bool verified = false;
  double cluster_gap = 0;
};

VerifyResult verify_triple_coincidence(
    const geometry::ManipulatorGeometry& geom, double alpha, double theta1,
    double rho1);

struct FindResult {
  std::vector<CuspPoint> cusps;  // sorted by (alpha, theta1)
  EliminationTrace trace;
};

FindResult find_cusps(const geometry::ManipulatorGeometry& geom, double rho1,
                      Mode mode = Mode::algebraic, int digits = 120,
                      int numeric_resolution = 4096);

std::vector<CuspPoint> find_cusps_numeric(
    const geometry::ManipulatorGeometry& geom, double rho1,
    int resolution = 4096);

int verified_count(const std::vector<CuspPoint>& cusps);

void write_cusp_json(const FindResult& result, const std::string& path);
std::string cusp_json_text(const FindResult& result);

}  // namespace cuspidal::cusp
