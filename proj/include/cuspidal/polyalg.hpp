#pragma once

#include <gmpxx.h>

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Exact polynomial algebra for the elimination pipeline: rationals, the
// quadratic extension Q(w) carrying the platform altitude, tan-half
// rationalization, Sylvester resultants, square-free factorization and
// real-root isolation.
namespace cuspidal::polyalg {

using Rat = mpq_class;

struct PolyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exact decimal reading, e.g. "15.91" -> 1591/100. Accepts scientific
// notation.
Rat rat_from_decimal(const std::string& text);
// Shortest round-trip decimal of x, read exactly.
Rat rat_from_double(double x);

// Element a + b*w of Q(w), w = sqrt(r) for the field's fixed r >= 0.
struct Ext {
  Rat a, b;
  Ext() : a(0), b(0) {}
  Ext(Rat a_, Rat b_) : a(std::move(a_)), b(std::move(b_)) {}
  explicit Ext(const Rat& a_) : a(a_), b(0) {}
};

class QuadField {
 public:
  explicit QuadField(Rat r);

  const Rat& r() const { return r_; }
  bool degenerate() const { return degenerate_; }  // r == 0, plain rationals

  Ext add(const Ext& x, const Ext& y) const;
  Ext sub(const Ext& x, const Ext& y) const;
  Ext mul(const Ext& x, const Ext& y) const;
  Ext neg(const Ext& x) const;
  Ext inv(const Ext& x) const;
  Ext scale(const Ext& x, const Rat& q) const;
  bool is_zero(const Ext& x) const;
  bool equal(const Ext& x, const Ext& y) const;

  double to_double(const Ext& x) const;
  // Rational approximation of w = sqrt(r) accurate to 10^-digits.
  Rat w_approx(int digits) const;

 private:
  Rat r_;
  bool degenerate_;
  double w_double_;
};

// Univariate polynomial over Q(w), ascending coefficients, trimmed.
using UPoly = std::vector<Ext>;

int degree(const UPoly& p);
void trim(QuadField const& k, UPoly& p);
UPoly add(const QuadField& k, const UPoly& f, const UPoly& g);
UPoly sub(const QuadField& k, const UPoly& f, const UPoly& g);
UPoly mul(const QuadField& k, const UPoly& f, const UPoly& g);
UPoly derivative(const QuadField& k, const UPoly& f);
Ext eval(const QuadField& k, const UPoly& f, const Ext& x);
// Exact division; nullopt when f is not divisible by g.
std::optional<UPoly> try_divide(const QuadField& k, const UPoly& f,
                                const UPoly& g);

// Bivariate polynomial in (t, t1); c[i][j] multiplies t^i t1^j.
struct BPoly {
  std::vector<std::vector<Ext>> c;
  int degree_t() const;
  int degree_t1() const;
  bool is_zero() const;
};

BPoly add(const QuadField& k, const BPoly& f, const BPoly& g);
BPoly mul(const QuadField& k, const BPoly& f, const BPoly& g);
BPoly scale(const QuadField& k, const BPoly& f, const Ext& s);
BPoly swap_vars(const BPoly& f);
Ext eval_bivariate(const QuadField& k, const BPoly& p, const Ext& t,
                   const Ext& t1);
// Substitute t1 = v, returning a univariate polynomial in t.
UPoly eval_at_t1(const QuadField& k, const BPoly& p, const Ext& v);
// Exact division by (1 + t^2) or (1 + t1^2); nullopt if not divisible.
std::optional<BPoly> try_divide_one_plus_square(const QuadField& k,
                                                const BPoly& p, int var);
// Strip all (1+t^2)/(1+t1^2) factors in place; returns (p_removed, q_removed).
std::pair<int, int> strip_structural(const QuadField& k, BPoly& p);

// Trigonometric polynomial in {sin a, cos a, sin t1, cos t1}: monomial
// exponents (sa, ca, s1, c1) -> coefficient.
using TrigPoly = std::map<std::array<int, 4>, Ext>;

// Weierstrass substitution per variable with minimal denominator clearing.
BPoly tan_half_substitute(const QuadField& k, const TrigPoly& expr);

// Sylvester resultant eliminating `var` (0 = t, 1 = t1) with exact
// interpolation. An identically zero result signals a common factor and is
// returned as an empty polynomial, not an error.
UPoly resultant(const QuadField& k, const BPoly& f, const BPoly& g, int var);

struct FactorizationResult {
  // (monic square-free factor, multiplicity), sorted by multiplicity.
  std::vector<std::pair<UPoly, int>> factors;
  Ext leading;  // input = leading * prod factors[i]^mult[i]
  // The unique degree-24 multiplicity-one factor, when present.
  std::optional<UPoly> candidate_q;
};

// Square-free decomposition over Q(w) via modular images + CRT + rational
// reconstruction, verified exactly by multiplying back.
FactorizationResult squarefree_factor(const QuadField& k, const UPoly& p);

// Certified real-root enclosure [lo, hi] (lo == hi for exact roots).
struct RootInterval {
  Rat lo, hi;
  double mid() const;
};

Rat pow10(int n);  // 10^n as an exact rational, n may be negative

struct RootOptions {
  std::optional<Rat> lo, hi;  // closed interval; unset = unbounded
  Rat eps = pow10(-30);
  int degree_cap = 128;
};

// Isolates every real root of p exactly once (Descartes/VCA bisection),
// refined to width <= eps.
std::vector<RootInterval> real_roots(const std::vector<Rat>& p,
                                     const RootOptions& opt = {});

// Coefficients of p with w replaced by a rational approximation.
std::vector<Rat> substitute_w(const QuadField& k, const UPoly& p, int digits);

// Debug dump: JSON array of decimal-string coefficients (a, b parts).
std::string to_json(const QuadField& k, const UPoly& p);

}  // namespace cuspidal::polyalg
