#include "cuspidal/cusp.hpp"

#include "cuspidal/kinematics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

namespace cuspidal::cusp {

using geometry::angle_dist;
using geometry::wrap_angle;
using polyalg::BPoly;
using polyalg::Ext;
using polyalg::QuadField;
using polyalg::Rat;
using polyalg::TrigPoly;
using polyalg::UPoly;

namespace {

constexpr double kPi = std::numbers::pi;

// ------------------------- trigonometric polynomial arithmetic over Q(w)

TrigPoly tconst(const Ext& c) { return {{{{0, 0, 0, 0}}, c}}; }

TrigPoly tmono(int sa, int ca, int s1, int c1, const Ext& c) {
  return {{{{sa, ca, s1, c1}}, c}};
}

TrigPoly tadd(const QuadField& k, const TrigPoly& a, const TrigPoly& b) {
  TrigPoly r = a;
  for (const auto& [m, c] : b) {
    auto it = r.find(m);
    if (it == r.end())
      r.emplace(m, c);
    else {
      it->second = k.add(it->second, c);
      if (k.is_zero(it->second)) r.erase(it);
    }
  }
  return r;
}

TrigPoly tsub(const QuadField& k, const TrigPoly& a, const TrigPoly& b) {
  TrigPoly nb;
  for (const auto& [m, c] : b) nb.emplace(m, k.neg(c));
  return tadd(k, a, nb);
}

TrigPoly tmul(const QuadField& k, const TrigPoly& a, const TrigPoly& b) {
  TrigPoly r;
  for (const auto& [ma, ca] : a)
    for (const auto& [mb, cb] : b) {
      std::array<int, 4> m{ma[0] + mb[0], ma[1] + mb[1], ma[2] + mb[2],
                           ma[3] + mb[3]};
      Ext p = k.mul(ca, cb);
      auto it = r.find(m);
      if (it == r.end())
        r.emplace(m, p);
      else {
        it->second = k.add(it->second, p);
        if (k.is_zero(it->second)) r.erase(it);
      }
    }
  return r;
}

TrigPoly tscale(const QuadField& k, const TrigPoly& a, const Ext& s) {
  TrigPoly r;
  for (const auto& [m, c] : a) {
    Ext p = k.mul(c, s);
    if (!k.is_zero(p)) r.emplace(m, p);
  }
  return r;
}

struct SliceSymbols {
  TrigPoly Nc2, Ns2, Nc3, Ns3, s1, c1;
};

SliceSymbols slice_symbols(const geometry::ManipulatorGeometry& g,
                           const Rat& rho1, const QuadField& k) {
  Ext eA2x(g.rA2x), eA3x(g.rA3x), eA3y(g.rA3y), ed1(g.rd1), er1(rho1);
  Ext d3cb(g.rd3 * g.rcos_beta);
  Ext w = k.degenerate() ? Ext() : Ext(Rat(0), Rat(1));  // d3 sin beta
  SliceSymbols s;
  s.s1 = tmono(0, 0, 1, 0, Ext(Rat(1)));
  s.c1 = tmono(0, 0, 0, 1, Ext(Rat(1)));
  s.Nc2 = tadd(k, tadd(k, tconst(k.neg(eA2x)), tmono(0, 0, 0, 1, er1)),
               tmono(0, 1, 0, 0, ed1));
  s.Ns2 = tadd(k, tmono(0, 0, 1, 0, er1), tmono(1, 0, 0, 0, ed1));
  s.Nc3 = tadd(k, tadd(k, tconst(k.neg(eA3x)), tmono(0, 0, 0, 1, er1)),
               tadd(k, tmono(0, 1, 0, 0, d3cb), tmono(1, 0, 0, 0, k.neg(w))));
  s.Ns3 = tadd(k, tadd(k, tconst(k.neg(eA3y)), tmono(0, 0, 1, 0, er1)),
               tadd(k, tmono(1, 0, 0, 0, d3cb), tmono(0, 1, 0, 0, w)));
  return s;
}

TrigPoly f1_trig(const geometry::ManipulatorGeometry& g, const Rat& rho1,
                 const QuadField& k) {
  SliceSymbols s = slice_symbols(g, rho1, k);
  Ext eA2x(g.rA2x), eA3x(g.rA3x), eA3y(g.rA3y);
  TrigPoly term1 = tscale(
      k,
      tmul(k, s.Ns2,
           tsub(k, tmul(k, s.Ns3, s.c1), tmul(k, s.Nc3, s.s1))),
      eA2x);
  TrigPoly lever =
      tsub(k, tscale(k, s.Ns3, eA3x), tscale(k, s.Nc3, eA3y));
  TrigPoly term2 = tmul(
      k, lever, tsub(k, tmul(k, s.s1, s.Nc2), tmul(k, s.c1, s.Ns2)));
  return tadd(k, term1, term2);
}

TrigPoly e1_trig(const geometry::ManipulatorGeometry& g, const Rat& rho1,
                 const QuadField& k) {
  SliceSymbols s = slice_symbols(g, rho1, k);
  Ext eA2x(g.rA2x), eA3x(g.rA3x), eA3y(g.rA3y), er1(rho1);
  Ext two(Rat(2)), mtwo(Rat(-2));
  auto sc = [&](const TrigPoly& p, const Ext& c) { return tscale(k, p, c); };
  auto ad = [&](const TrigPoly& a, const TrigPoly& b) { return tadd(k, a, b); };
  auto su = [&](const TrigPoly& a, const TrigPoly& b) { return tsub(k, a, b); };
  auto mu = [&](const TrigPoly& a, const TrigPoly& b) { return tmul(k, a, b); };

  TrigPoly cross = su(mu(s.Ns2, s.Nc3), mu(s.Nc2, s.Ns3));
  TrigPoly w13 = su(mu(s.s1, s.Nc3), mu(s.c1, s.Ns3));
  TrigPoly w12 = su(mu(s.s1, s.Nc2), mu(s.c1, s.Ns2));
  Ext dax(g.rA3x - g.rA2x);

  TrigPoly k1 = sc(ad(ad(sc(s.Ns2, dax), cross), sc(s.Nc2, k.neg(eA3y))), two);
  TrigPoly k2 = sc(ad(ad(sc(w13, er1), sc(s.Ns3, eA3x)), sc(s.Nc3, k.neg(eA3y))),
                   mtwo);
  TrigPoly k3 = sc(ad(ad(sc(s.Ns3, dax), cross), sc(s.Nc3, k.neg(eA3y))), mtwo);
  TrigPoly k4 = sc(ad(w13, ad(sc(s.s1, eA3x), sc(s.c1, k.neg(eA3y)))),
                   k.mul(two, er1));
  TrigPoly k5 = sc(ad(sc(w12, er1), sc(s.Ns2, eA2x)), mtwo);
  TrigPoly k6 = sc(ad(w12, sc(s.s1, eA2x)), k.mul(two, er1));

  TrigPoly C21 = ad(mu(s.Nc2, s.c1), mu(s.Ns2, s.s1));
  TrigPoly C23 = ad(mu(s.Nc2, s.Nc3), mu(s.Ns2, s.Ns3));
  TrigPoly C31 = ad(mu(s.Nc3, s.c1), mu(s.Ns3, s.s1));
  Ext dax23(g.rA2x - g.rA3x);

  TrigPoly h1_11 = sc(ad(sc(s.c1, eA2x), C21), k.mul(two, er1));
  TrigPoly h1_12 = sc(C21, k.mul(mtwo, er1));
  TrigPoly h1_22 = sc(su(sc(s.Nc2, eA2x), sc(C21, er1)), mtwo);
  TrigPoly h2_22 =
      sc(su(su(sc(s.Nc2, dax23), C23), sc(s.Ns2, eA3y)), mtwo);
  TrigPoly h2_23 = sc(C23, mtwo);
  TrigPoly h2_33 =
      sc(su(ad(sc(s.Nc3, dax23), C23), sc(s.Ns3, eA3y)), two);
  TrigPoly h3_11 =
      sc(ad(ad(sc(s.c1, eA3x), C31), sc(s.s1, eA3y)), k.mul(two, er1));
  TrigPoly h3_13 = sc(C31, k.mul(mtwo, er1));
  TrigPoly h3_33 =
      sc(su(sc(C31, er1), ad(sc(s.Nc3, eA3x), sc(s.Ns3, eA3y))), two);

  TrigPoly u1 = mu(k1, k2);
  TrigPoly u2 = sc(mu(k2, k5), Ext(Rat(-1)));
  TrigPoly u3 = mu(k3, k5);
  TrigPoly v1 = mu(k1, k2);
  TrigPoly v2 = mu(k3, k4);
  TrigPoly v3 = sc(mu(k1, k4), Ext(Rat(-1)));

  TrigPoly M11 = ad(mu(u1, h1_11), mu(u3, h3_11));
  TrigPoly M12 = mu(u1, h1_12);
  TrigPoly M13 = mu(u3, h3_13);
  TrigPoly M22 = ad(mu(u1, h1_22), mu(u2, h2_22));
  TrigPoly M23 = mu(u2, h2_23);
  TrigPoly M33 = ad(mu(u2, h2_33), mu(u3, h3_33));

  TrigPoly e = mu(mu(v1, v1), M11);
  e = ad(e, mu(mu(v2, v2), M22));
  e = ad(e, mu(mu(v3, v3), M33));
  TrigPoly off = mu(mu(v1, v2), M12);
  off = ad(off, mu(mu(v1, v3), M13));
  off = ad(off, mu(mu(v2, v3), M23));
  return ad(e, sc(off, two));
}

// Derivative with respect to alpha (which = 0) or theta1 (which = 1).
TrigPoly tdiff(const QuadField& k, const TrigPoly& a, int which) {
  int si = which == 0 ? 0 : 2, ci = si + 1;
  TrigPoly r;
  auto accum = [&](std::array<int, 4> m, const Ext& c) {
    if (k.is_zero(c)) return;
    auto it = r.find(m);
    if (it == r.end())
      r.emplace(m, c);
    else {
      it->second = k.add(it->second, c);
      if (k.is_zero(it->second)) r.erase(it);
    }
  };
  for (const auto& [m, c] : a) {
    if (m[si] > 0) {
      auto n = m;
      --n[si];
      ++n[ci];
      accum(n, k.mul(c, Ext(Rat(m[si]))));
    }
    if (m[ci] > 0) {
      auto n = m;
      ++n[si];
      --n[ci];
      accum(n, k.neg(k.mul(c, Ext(Rat(m[ci])))));
    }
  }
  return r;
}

// Second-order coincidence condition for collinear platforms. With B3 on
// the line B1B2 the rigidity constraints become tangent and the full-pose
// condition vanishes along the entire singular curve, carrying no cusp
// information. The reduced system in (alpha, theta1) stays non-degenerate:
// with P2, P3 the squared lengths of legs 2 and 3, u the left and v the
// right kernel of D(P2, P3), the condition is u . D^2(P2, P3)[v, v].
TrigPoly e1_collinear_trig(const geometry::ManipulatorGeometry& g,
                           const Rat& rho1, const QuadField& k) {
  SliceSymbols s = slice_symbols(g, rho1, k);
  auto ad = [&](const TrigPoly& a, const TrigPoly& b) { return tadd(k, a, b); };
  auto mu = [&](const TrigPoly& a, const TrigPoly& b) { return tmul(k, a, b); };
  auto sc = [&](const TrigPoly& p, const Ext& c) { return tscale(k, p, c); };
  TrigPoly P2 = ad(mu(s.Nc2, s.Nc2), mu(s.Ns2, s.Ns2));
  TrigPoly P3 = ad(mu(s.Nc3, s.Nc3), mu(s.Ns3, s.Ns3));
  TrigPoly P2a = tdiff(k, P2, 0), P2t = tdiff(k, P2, 1);
  TrigPoly P3a = tdiff(k, P3, 0);
  TrigPoly v1 = P2t, v2 = sc(P2a, Ext(Rat(-1)));
  TrigPoly u1 = P3a, u2 = sc(P2a, Ext(Rat(-1)));
  auto second = [&](const TrigPoly& P) {
    TrigPoly Pa = tdiff(k, P, 0), Pt = tdiff(k, P, 1);
    TrigPoly q = mu(mu(v1, v1), tdiff(k, Pa, 0));
    q = ad(q, sc(mu(mu(v1, v2), tdiff(k, Pa, 1)), Ext(Rat(2))));
    return ad(q, mu(mu(v2, v2), tdiff(k, Pt, 1)));
  };
  return ad(mu(u1, second(P2)), mu(u2, second(P3)));
}

bool is_collinear(const geometry::ManipulatorGeometry& g) {
  return g.rhsq == 0;
}

// ------------------------------------------------ numeric E1 evaluation

struct NumericSlice {
  double nc2, ns2, nc3, ns3, c1, s1;
};

NumericSlice slice_num(const geometry::ManipulatorGeometry& g, double rho1,
                       double alpha, double theta1) {
  NumericSlice n;
  n.c1 = std::cos(theta1);
  n.s1 = std::sin(theta1);
  n.nc2 = -g.A2x + rho1 * n.c1 + g.d1 * std::cos(alpha);
  n.ns2 = rho1 * n.s1 + g.d1 * std::sin(alpha);
  n.nc3 = -g.A3x + rho1 * n.c1 + g.d3 * std::cos(alpha + g.beta);
  n.ns3 = -g.A3y + rho1 * n.s1 + g.d3 * std::sin(alpha + g.beta);
  return n;
}

// Numeric mirror of e1_collinear_trig, normalized to be unit-free.
double e1_collinear_numeric(const geometry::ManipulatorGeometry& g,
                            double rho1, double alpha, double theta1) {
  NumericSlice n = slice_num(g, rho1, alpha, theta1);
  double ca = std::cos(alpha), sa = std::sin(alpha);
  double cb = std::cos(alpha + g.beta), sb = std::sin(alpha + g.beta);
  // Leg components split as f(theta1) + g(alpha); mixed partials vanish.
  double c2a_a = -g.d1 * sa, s2a_a = g.d1 * ca;
  double c2a_t = -rho1 * n.s1, s2a_t = rho1 * n.c1;
  double c3a_a = -g.d3 * sb, s3a_a = g.d3 * cb;
  double P2a = 2 * (n.nc2 * c2a_a + n.ns2 * s2a_a);
  double P2t = 2 * (n.nc2 * c2a_t + n.ns2 * s2a_t);
  double P3a = 2 * (n.nc3 * c3a_a + n.ns3 * s3a_a);
  double P2aa = 2 * (c2a_a * c2a_a + s2a_a * s2a_a - n.nc2 * g.d1 * ca -
                     n.ns2 * g.d1 * sa);
  double P2at = 2 * (c2a_a * c2a_t + s2a_a * s2a_t);
  double P2tt = 2 * (c2a_t * c2a_t + s2a_t * s2a_t - n.nc2 * rho1 * n.c1 -
                     n.ns2 * rho1 * n.s1);
  double P3aa = 2 * (c3a_a * c3a_a + s3a_a * s3a_a - n.nc3 * g.d3 * cb -
                     n.ns3 * g.d3 * sb);
  double P3at = 2 * (c3a_a * c2a_t + s3a_a * s2a_t);
  double P3tt = 2 * (c2a_t * c2a_t + s2a_t * s2a_t - n.nc3 * rho1 * n.c1 -
                     n.ns3 * rho1 * n.s1);
  double v1 = P2t, v2 = -P2a;
  double u1 = P3a, u2 = -P2a;
  double q2 = v1 * v1 * P2aa + 2 * v1 * v2 * P2at + v2 * v2 * P2tt;
  double q3 = v1 * v1 * P3aa + 2 * v1 * v2 * P3at + v2 * v2 * P3tt;
  double e = u1 * q2 + u2 * q3;
  double un = std::max({std::abs(u1), std::abs(u2), 1e-300});
  double vn = std::max({v1 * v1, v2 * v2, 1e-300});
  double hn = std::max({std::abs(P2aa), std::abs(P2at), std::abs(P2tt),
                        std::abs(P3aa), std::abs(P3at), std::abs(P3tt),
                        1e-300});
  return e / (un * vn * hn);
}

}  // namespace

double f1_numeric(const geometry::ManipulatorGeometry& g, double rho1,
                  double alpha, double theta1) {
  NumericSlice n = slice_num(g, rho1, alpha, theta1);
  double v = g.A2x * n.ns2 * (n.ns3 * n.c1 - n.nc3 * n.s1) +
             (g.A3x * n.ns3 - g.A3y * n.nc3) * (n.s1 * n.nc2 - n.c1 * n.ns2);
  return v / singular_slice::slice_residual_scale(g, rho1);
}

double e1_numeric(const geometry::ManipulatorGeometry& g, double rho1,
                  double alpha, double theta1) {
  if (is_collinear(g)) return e1_collinear_numeric(g, rho1, alpha, theta1);
  NumericSlice n = slice_num(g, rho1, alpha, theta1);
  double r1 = rho1;
  double cross = n.ns2 * n.nc3 - n.nc2 * n.ns3;
  double w13 = n.s1 * n.nc3 - n.c1 * n.ns3;
  double w12 = n.s1 * n.nc2 - n.c1 * n.ns2;
  double k1 = 2 * ((g.A3x - g.A2x) * n.ns2 + cross - g.A3y * n.nc2);
  double k2 = -2 * (r1 * w13 + g.A3x * n.ns3 - g.A3y * n.nc3);
  double k3 = -2 * ((g.A3x - g.A2x) * n.ns3 + cross - g.A3y * n.nc3);
  double k4 = 2 * r1 * (w13 + g.A3x * n.s1 - g.A3y * n.c1);
  double k5 = -2 * (r1 * w12 + g.A2x * n.ns2);
  double k6 = 2 * r1 * (w12 + g.A2x * n.s1);
  (void)k6;
  double C21 = n.nc2 * n.c1 + n.ns2 * n.s1;
  double C23 = n.nc2 * n.nc3 + n.ns2 * n.ns3;
  double C31 = n.nc3 * n.c1 + n.ns3 * n.s1;
  double h1_11 = 2 * r1 * (g.A2x * n.c1 + C21);
  double h1_12 = -2 * r1 * C21;
  double h1_22 = -2 * (g.A2x * n.nc2 - r1 * C21);
  double h2_22 = -2 * ((g.A2x - g.A3x) * n.nc2 - C23 - g.A3y * n.ns2);
  double h2_23 = -2 * C23;
  double h2_33 = 2 * ((g.A2x - g.A3x) * n.nc3 + C23 - g.A3y * n.ns3);
  double h3_11 = 2 * r1 * (g.A3x * n.c1 + C31 + g.A3y * n.s1);
  double h3_13 = -2 * r1 * C31;
  double h3_33 = 2 * (r1 * C31 - g.A3x * n.nc3 - g.A3y * n.ns3);
  double u1 = k1 * k2, u2 = -k2 * k5, u3 = k3 * k5;
  double v1 = k1 * k2, v2 = k3 * k4, v3 = -k1 * k4;
  double M11 = u1 * h1_11 + u3 * h3_11;
  double M12 = u1 * h1_12;
  double M13 = u3 * h3_13;
  double M22 = u1 * h1_22 + u2 * h2_22;
  double M23 = u2 * h2_23;
  double M33 = u2 * h2_33 + u3 * h3_33;
  double e = v1 * v1 * M11 + v2 * v2 * M22 + v3 * v3 * M33 +
             2 * (v1 * v2 * M12 + v1 * v3 * M13 + v2 * v3 * M23);
  double un = std::max({std::abs(u1), std::abs(u2), std::abs(u3), 1e-300});
  double vn = std::max({std::abs(v1), std::abs(v2), std::abs(v3), 1e-300});
  double hn = std::max({std::abs(h1_11), std::abs(h1_22), std::abs(h2_22),
                        std::abs(h2_33), std::abs(h3_11), std::abs(h3_33),
                        std::abs(h1_12), std::abs(h2_23), std::abs(h3_13),
                        1e-300});
  return e / (un * vn * hn);
}

// ---------------------------------------------------------- exact slice

polyalg::BPoly build_F1(const geometry::ManipulatorGeometry& g,
                        const Rat& rho1, const QuadField& k) {
  return polyalg::tan_half_substitute(k, f1_trig(g, rho1, k));
}

polyalg::BPoly build_E1(const geometry::ManipulatorGeometry& g,
                        const Rat& rho1, const QuadField& k) {
  return polyalg::tan_half_substitute(
      k, is_collinear(g) ? e1_collinear_trig(g, rho1, k)
                         : e1_trig(g, rho1, k));
}

ExactSlice::ExactSlice(const geometry::ManipulatorGeometry& g, const Rat& rho1)
    : field(g.rhsq),
      F1(build_F1(g, rho1, field)),
      E1(build_E1(g, rho1, field)) {}

// -------------------------------------------------------- verification

VerifyResult verify_triple_coincidence(
    const geometry::ManipulatorGeometry& g, double alpha, double theta1,
    double rho1) {
  VerifyResult out;
  auto [r2, r3] = geometry::slice_rhos(g, {rho1, alpha, theta1});
  if (!(r2 > 0 && r3 > 0)) return out;
  geometry::PlatformPose cand;
  cand.b1 = {rho1 * std::cos(theta1), rho1 * std::sin(theta1)};
  cand.alpha = wrap_angle(alpha);
  // A coalescing triple splits like the cube root of the length rounding
  // error, so near ill-conditioned cusps the three poses can spread far
  // beyond any fixed clustering radius, collapse onto one polished point,
  // or lose two members to a complex pair depending on which side of the
  // cusp locus the rounded lengths land. Test the three poses nearest the
  // candidate directly (anchored at the candidate, mutually close on the
  // manipulator scale, fourth solution well separated), retrying with tiny
  // length perturbations to land on the three-real-solutions side.
  double eps = kinematics::default_eps_cluster(g);
  double scale = g.scale();
  auto attempt = [&](double q2, double q3) -> VerifyResult {
    VerifyResult v;
    auto set = kinematics::direct_kinematics(g, {rho1, q2, q3});
    const size_t n = set.poses.size();
    if (n < 3) return v;
    auto dist = [&](size_t i, size_t j) {
      return kinematics::pose_distance(g, set.poses[i].pose, set.poses[j].pose);
    };
    size_t i0 = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; ++i) {
      double d = kinematics::pose_distance(g, set.poses[i].pose, cand);
      if (d < bd) {
        bd = d;
        i0 = i;
      }
    }
    std::vector<size_t> rest;
    for (size_t i = 0; i < n; ++i)
      if (i != i0) rest.push_back(i);
    std::sort(rest.begin(), rest.end(),
              [&](size_t a, size_t b) { return dist(i0, a) < dist(i0, b); });
    size_t j1 = rest[0], j2 = rest[1];
    double gap = std::max({dist(i0, j1), dist(i0, j2), dist(j1, j2)});
    double sep = std::numeric_limits<double>::infinity();
    for (size_t k = 2; k < rest.size(); ++k)
      for (size_t m : {i0, j1, j2}) sep = std::min(sep, dist(m, rest[k]));
    if (bd > std::max({10 * eps, 2 * gap, 0.01 * scale})) return v;
    if (gap > 0.02 * scale) return v;  // not a coalescing triple
    if (sep < 10 * gap) return v;      // fourth mode not clearly separated
    v.verified = true;
    v.cluster_gap = gap;
    return v;
  };
  for (double rel : {0.0, 1e-9, 1e-7, 1e-6, 1e-5, 1e-4}) {
    double d = rel * scale;
    for (auto [sx, sy] : std::initializer_list<std::pair<int, int>>{
             {0, 0},
             {1, 0},
             {-1, 0},
             {0, 1},
             {0, -1},
             {1, 1},
             {-1, -1},
             {1, -1},
             {-1, 1}}) {
      if (rel == 0.0 && (sx != 0 || sy != 0)) continue;
      auto v = attempt(r2 + sx * d, r3 + sy * d);
      if (v.verified) return v;
    }
  }
  return out;
}

// ----------------------------------------------------- numeric oracle

namespace {

// Damped 2D Newton on (f1_numeric, e1_numeric) with a finite-difference
// Jacobian; returns true on convergence.
bool refine_cusp_numeric(const geometry::ManipulatorGeometry& g, double rho1,
                         double& alpha, double& theta1) {
  double a = alpha, th = theta1;
  const double hfd = 1e-7;
  for (int it = 0; it < 80; ++it) {
    double f1 = f1_numeric(g, rho1, a, th);
    double f2 = e1_numeric(g, rho1, a, th);
    double j11 = (f1_numeric(g, rho1, a + hfd, th) -
                  f1_numeric(g, rho1, a - hfd, th)) /
                 (2 * hfd);
    double j12 = (f1_numeric(g, rho1, a, th + hfd) -
                  f1_numeric(g, rho1, a, th - hfd)) /
                 (2 * hfd);
    double j21 = (e1_numeric(g, rho1, a + hfd, th) -
                  e1_numeric(g, rho1, a - hfd, th)) /
                 (2 * hfd);
    double j22 = (e1_numeric(g, rho1, a, th + hfd) -
                  e1_numeric(g, rho1, a, th - hfd)) /
                 (2 * hfd);
    double det = j11 * j22 - j12 * j21;
    if (std::abs(det) < 1e-300) return false;
    double da = -(f1 * j22 - f2 * j12) / det;
    double dth = -(j11 * f2 - j21 * f1) / det;
    double step = std::max(std::abs(da), std::abs(dth));
    if (step > 0.2) {
      da *= 0.2 / step;
      dth *= 0.2 / step;
    }
    a += da;
    th += dth;
    if (step < 1e-13) break;
  }
  double f1 = std::abs(f1_numeric(g, rho1, a, th));
  double f2 = std::abs(e1_numeric(g, rho1, a, th));
  if (f1 > 1e-10 || f2 > 1e-9) return false;
  alpha = wrap_angle(a);
  theta1 = wrap_angle(th);
  return true;
}

// A resultant factor of higher multiplicity can drop a candidate within the
// verifier's perturbation tolerance of a true cusp; both then pass the
// triple-coincidence test although they name the same geometric cusp. Keep
// only the best-conditioned representative of each verified group.
void merge_verified(const geometry::ManipulatorGeometry& g, double rho1,
                    std::vector<CuspPoint>& pts, double radius = 0.03) {
  auto badness = [&](const CuspPoint& p) {
    return std::abs(e1_numeric(g, rho1, p.alpha, p.theta1)) +
           std::abs(f1_numeric(g, rho1, p.alpha, p.theta1));
  };
  for (auto& p : pts) {
    if (!p.verified) continue;
    for (auto& q : pts) {
      if (&p == &q || !q.verified) continue;
      if (angle_dist(p.alpha, q.alpha) <= radius &&
          angle_dist(p.theta1, q.theta1) <= radius &&
          badness(q) < badness(p))
        p.verified = false;
    }
  }
}

void dedupe_and_sort(std::vector<CuspPoint>& pts, double tol = 1e-6) {
  std::sort(pts.begin(), pts.end(), [](const CuspPoint& a, const CuspPoint& b) {
    return std::make_pair(a.alpha, a.theta1) < std::make_pair(b.alpha, b.theta1);
  });
  std::vector<CuspPoint> keep;
  for (const auto& p : pts) {
    bool dup = false;
    for (const auto& q : keep)
      if (angle_dist(p.alpha, q.alpha) <= tol &&
          angle_dist(p.theta1, q.theta1) <= tol)
        dup = true;
    if (!dup) keep.push_back(p);
  }
  pts = std::move(keep);
}

}  // namespace

std::vector<CuspPoint> find_cusps_numeric(
    const geometry::ManipulatorGeometry& g, double rho1, int resolution) {
  auto curves = singular_slice::trace_slice_curves(g, rho1, resolution);
  std::vector<std::pair<double, double>> seeds;
  for (const auto& br : curves.branches) {
    if (br.empty()) continue;
    seeds.emplace_back(br.front().alpha, br.front().theta1);
    seeds.emplace_back(br.back().alpha, br.back().theta1);
    for (size_t i = 1; i + 1 < br.size(); ++i) {
      // Fold of the joint-space image: the (rho2, rho3) direction reverses.
      double ux = br[i].rho2 - br[i - 1].rho2, uy = br[i].rho3 - br[i - 1].rho3;
      double vx = br[i + 1].rho2 - br[i].rho2, vy = br[i + 1].rho3 - br[i].rho3;
      if (ux * vx + uy * vy < 0) seeds.emplace_back(br[i].alpha, br[i].theta1);
    }
  }
  std::vector<CuspPoint> out;
  for (auto [a, th] : seeds) {
    if (!refine_cusp_numeric(g, rho1, a, th)) continue;
    CuspPoint p;
    p.alpha = a;
    p.theta1 = th;
    p.rho1 = rho1;
    auto [r2, r3] = geometry::slice_rhos(g, {rho1, a, th});
    p.rho2 = r2;
    p.rho3 = r3;
    p.source = "numeric";
    auto v = verify_triple_coincidence(g, a, th, rho1);
    p.verified = v.verified;
    p.cluster_gap = v.cluster_gap;
    out.push_back(p);
  }
  dedupe_and_sort(out, 1e-4);  // oracle seeds converge to ~1e-10; folds of the
                               // same cusp may differ by refinement noise
  merge_verified(g, rho1, out);
  std::vector<CuspPoint> verified;
  for (const auto& p : out)
    if (p.verified) verified.push_back(p);
  return verified;
}

// ------------------------------------------------------ algebraic path

namespace {

// Normalized double evaluation of a bivariate polynomial at tan-half values.
double eval_bpoly_normalized(const QuadField& k, const BPoly& p, double t,
                             double t1) {
  double acc = 0;
  double cmax = 0;
  int dt = p.degree_t(), dt1 = p.degree_t1();
  std::vector<std::vector<double>> grid(p.c.size());
  for (size_t i = 0; i < p.c.size(); ++i) {
    grid[i].resize(p.c[i].size());
    for (size_t j = 0; j < p.c[i].size(); ++j) {
      grid[i][j] = k.to_double(p.c[i][j]);
      cmax = std::max(cmax, std::abs(grid[i][j]));
    }
  }
  for (size_t i = p.c.size(); i-- > 0;) {
    double row = 0;
    for (size_t j = grid[i].size(); j-- > 0;) row = row * t1 + grid[i][j];
    acc = acc * t + row;
  }
  double norm = cmax * std::pow(1 + t * t, dt / 2.0) *
                std::pow(1 + t1 * t1, dt1 / 2.0);
  return acc / std::max(norm, 1e-300);
}

}  // namespace

int verified_count(const std::vector<CuspPoint>& cusps) {
  int n = 0;
  for (const auto& c : cusps)
    if (c.verified) ++n;
  return n;
}

FindResult find_cusps(const geometry::ManipulatorGeometry& g, double rho1,
                      Mode mode, int digits, int numeric_resolution) {
  FindResult out;
  if (mode == Mode::numeric) {
    out.cusps = find_cusps_numeric(g, rho1, numeric_resolution);
    out.trace.candidate_count = static_cast<int>(out.cusps.size());
    out.trace.filtered_count = out.trace.candidate_count;
    out.trace.verified_count = verified_count(out.cusps);
    return out;
  }

  Rat r1 = polyalg::rat_from_double(rho1);
  ExactSlice slice(g, r1);
  const QuadField& k = slice.field;
  out.trace.f1_deg_t = slice.F1.degree_t();
  out.trace.f1_deg_t1 = slice.F1.degree_t1();
  out.trace.e1_deg_t = slice.E1.degree_t();
  out.trace.e1_deg_t1 = slice.E1.degree_t1();

  UPoly res = polyalg::resultant(k, slice.F1, slice.E1, 0);
  if (res.empty())
    throw polyalg::PolyError(
        "elimination resultant vanished identically (common factor)");
  out.trace.resultant_degree = polyalg::degree(res);

  polyalg::FactorizationResult fac = polyalg::squarefree_factor(k, res);
  for (const auto& [f, m] : fac.factors)
    out.trace.factor_degrees.emplace_back(polyalg::degree(f), m);
  if (fac.candidate_q) out.trace.q_degree = polyalg::degree(*fac.candidate_q);

  UPoly source_poly;
  bool use_q = mode == Mode::algebraic && fac.candidate_q.has_value();
  if (use_q) {
    source_poly = *fac.candidate_q;
  } else {
    source_poly = UPoly{Ext(Rat(1))};
    for (const auto& [f, m] : fac.factors)
      source_poly = polyalg::mul(k, source_poly, f);
  }
  out.trace.used_q = use_q;

  // Real roots in t1 of the selected factor, then back-substitution into F1.
  std::vector<Rat> qsub = polyalg::substitute_w(k, source_poly, digits);
  polyalg::RootOptions ropt;
  auto t1_roots = polyalg::real_roots(qsub, ropt);

  struct Candidate {
    double alpha, theta1;
  };
  std::vector<Candidate> candidates;
  for (const auto& ri : t1_roots) {
    Rat tau = (ri.lo + ri.hi) / 2;
    UPoly ft = polyalg::eval_at_t1(k, slice.F1, Ext(tau));
    std::vector<Rat> ftsub = polyalg::substitute_w(k, ft, digits);
    if (ftsub.empty()) continue;
    if (static_cast<int>(ftsub.size()) - 1 < 1) continue;
    for (const auto& tr : polyalg::real_roots(ftsub, ropt)) {
      double t = tr.mid();
      double t1 = tau.get_d();
      candidates.push_back({2 * std::atan(t), 2 * std::atan(t1)});
    }
  }
  // Tan-half poles: scan alpha = pi and theta1 = pi directly along the
  // trigonometric residuals; candidates refined numerically below.
  {
    const int n = 2048;
    auto scan = [&](bool alpha_is_pi) {
      double prev = 0;
      bool have_prev = false;
      for (int i = 0; i <= n; ++i) {
        double x = -kPi + 2 * kPi * i / n;
        double v = alpha_is_pi ? f1_numeric(g, rho1, kPi, x)
                               : f1_numeric(g, rho1, x, kPi);
        if (have_prev && prev * v < 0) {
          double lo = -kPi + 2 * kPi * (i - 1) / n, hi = x;
          for (int it = 0; it < 60; ++it) {
            double mid = (lo + hi) / 2;
            double vm = alpha_is_pi ? f1_numeric(g, rho1, kPi, mid)
                                    : f1_numeric(g, rho1, mid, kPi);
            if (prev * vm <= 0)
              hi = mid;
            else
              lo = mid;
          }
          double root = (lo + hi) / 2;
          double a = alpha_is_pi ? kPi : root;
          double th = alpha_is_pi ? root : kPi;
          if (std::abs(e1_numeric(g, rho1, a, th)) < 1e-4 &&
              refine_cusp_numeric(g, rho1, a, th))
            candidates.push_back({a, th});
        }
        prev = v;
        have_prev = true;
      }
    };
    scan(true);
    scan(false);
  }
  out.trace.candidate_count = static_cast<int>(candidates.size());

  // Filter by the exact E1 polynomial, evaluated in doubles and normalized.
  const double tol_e1 = 1e-6;
  std::vector<Candidate> filtered;
  for (const auto& c : candidates) {
    double t = std::tan(c.alpha / 2), t1 = std::tan(c.theta1 / 2);
    double v;
    if (std::abs(t) > 1e12 || std::abs(t1) > 1e12)
      v = std::abs(e1_numeric(g, rho1, c.alpha, c.theta1));
    else
      v = std::abs(eval_bpoly_normalized(k, slice.E1, t, t1));
    if (v <= tol_e1) filtered.push_back(c);
  }
  out.trace.filtered_count = static_cast<int>(filtered.size());

  std::vector<CuspPoint> pts;
  for (const auto& c : filtered) {
    CuspPoint p;
    p.alpha = wrap_angle(c.alpha);
    p.theta1 = wrap_angle(c.theta1);
    p.rho1 = rho1;
    auto [r2, r3] = geometry::slice_rhos(g, {rho1, p.alpha, p.theta1});
    p.rho2 = r2;
    p.rho3 = r3;
    p.source = "algebraic";
    auto v = verify_triple_coincidence(g, p.alpha, p.theta1, rho1);
    p.verified = v.verified;
    p.cluster_gap = v.cluster_gap;
    pts.push_back(p);
  }
  dedupe_and_sort(pts);
  merge_verified(g, rho1, pts);
  out.trace.verified_count = verified_count(pts);

  // Conjecture audit: every verified cusp's t1 should be a root of the
  // multiplicity-one degree-24 factor when that factor exists.
  if (fac.candidate_q) {
    std::vector<Rat> qs = polyalg::substitute_w(k, *fac.candidate_q, digits);
    std::vector<double> qd(qs.size());
    double qmax = 0;
    for (size_t i = 0; i < qs.size(); ++i) {
      qd[i] = qs[i].get_d();
      qmax = std::max(qmax, std::abs(qd[i]));
    }
    for (const auto& p : pts) {
      if (!p.verified) continue;
      double t1 = std::tan(p.theta1 / 2);
      if (std::abs(t1) > 1e12) continue;
      double acc = 0;
      for (size_t i = qd.size(); i-- > 0;) acc = acc * t1 + qd[i];
      double norm = qmax * std::pow(1 + t1 * t1, (qd.size() - 1) / 2.0);
      ++out.trace.q_audit_checked;
      if (std::abs(acc / std::max(norm, 1e-300)) > 1e-8)
        ++out.trace.q_audit_violations;
    }
  }

  out.cusps = std::move(pts);
  return out;
}

// ---------------------------------------------------------------- output

std::string cusp_json_text(const FindResult& result) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  std::vector<CuspPoint> sorted = result.cusps;
  std::sort(sorted.begin(), sorted.end(),
            [](const CuspPoint& a, const CuspPoint& b) {
              return a.alpha < b.alpha;
            });
  constexpr double deg = 180.0 / kPi;
  for (const auto& c : sorted) {
    nlohmann::ordered_json j;
    j["alpha_deg"] = c.alpha * deg;
    j["theta1_deg"] = c.theta1 * deg;
    j["rho2"] = c.rho2;
    j["rho3"] = c.rho3;
    j["rho1"] = c.rho1;
    j["verified"] = c.verified;
    j["cluster_gap"] = c.cluster_gap;
    j["source"] = c.source;
    arr.push_back(j);
  }
  nlohmann::ordered_json trace;
  trace["f1_degrees"] = {result.trace.f1_deg_t, result.trace.f1_deg_t1};
  trace["e1_degrees"] = {result.trace.e1_deg_t, result.trace.e1_deg_t1};
  trace["resultant_degree"] = result.trace.resultant_degree;
  trace["factor_degrees"] = result.trace.factor_degrees;
  trace["q_degree"] = result.trace.q_degree;
  trace["used_q"] = result.trace.used_q;
  trace["candidates"] = result.trace.candidate_count;
  trace["filtered"] = result.trace.filtered_count;
  trace["verified"] = result.trace.verified_count;
  trace["q_audit_checked"] = result.trace.q_audit_checked;
  trace["q_audit_violations"] = result.trace.q_audit_violations;
  nlohmann::ordered_json root;
  root["cusps"] = arr;
  root["trace"] = trace;
  return root.dump(2) + "\n";
}

void write_cusp_json(const FindResult& result, const std::string& path) {
  std::ofstream out(path);
  out << cusp_json_text(result);
}

}  // namespace cuspidal::cusp
