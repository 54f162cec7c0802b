#include "cuspidal/polyalg.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <cmath>
#include <cstdint>

namespace cuspidal::polyalg {

namespace {

mpz_class pow_mpz(const mpz_class& b, unsigned long e) {
  mpz_class r;
  mpz_pow_ui(r.get_mpz_t(), b.get_mpz_t(), e);
  return r;
}

}  // namespace

Rat pow10(int n) {
  mpz_class p = pow_mpz(10, static_cast<unsigned long>(n < 0 ? -n : n));
  Rat q = n >= 0 ? Rat(p) : Rat(1, p);
  q.canonicalize();
  return q;
}

Rat rat_from_decimal(const std::string& text) {
  std::string s = text;
  int exp10 = 0;
  if (auto e = s.find_first_of("eE"); e != std::string::npos) {
    exp10 = std::stoi(s.substr(e + 1));
    s = s.substr(0, e);
  }
  bool neg = false;
  size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) neg = s[i++] == '-';
  std::string digits;
  int frac = 0;
  bool seen_dot = false, seen_digit = false;
  for (; i < s.size(); ++i) {
    if (s[i] == '.') {
      if (seen_dot) throw PolyError("bad decimal: " + text);
      seen_dot = true;
    } else if (s[i] >= '0' && s[i] <= '9') {
      digits += s[i];
      seen_digit = true;
      if (seen_dot) ++frac;
    } else {
      throw PolyError("bad decimal: " + text);
    }
  }
  if (!seen_digit) throw PolyError("bad decimal: " + text);
  mpz_class n(digits.empty() ? "0" : digits, 10);
  if (neg) n = -n;
  Rat q = Rat(n) * pow10(exp10 - frac);
  q.canonicalize();
  return q;
}

Rat rat_from_double(double x) {
  if (!std::isfinite(x)) throw PolyError("non-finite value");
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw PolyError("to_chars failed");
  return rat_from_decimal(std::string(buf, ptr));
}

// ---------------------------------------------------------------- QuadField

QuadField::QuadField(Rat r) : r_(std::move(r)) {
  if (r_ < 0) throw PolyError("negative field radicand");
  degenerate_ = r_ == 0;
  w_double_ = std::sqrt(r_.get_d());
}

Ext QuadField::add(const Ext& x, const Ext& y) const {
  return degenerate_ ? Ext(x.a + y.a) : Ext(x.a + y.a, x.b + y.b);
}
Ext QuadField::sub(const Ext& x, const Ext& y) const {
  return degenerate_ ? Ext(x.a - y.a) : Ext(x.a - y.a, x.b - y.b);
}
Ext QuadField::mul(const Ext& x, const Ext& y) const {
  if (degenerate_) return Ext(x.a * y.a);
  return Ext(x.a * y.a + x.b * y.b * r_, x.a * y.b + x.b * y.a);
}
Ext QuadField::neg(const Ext& x) const { return Ext(-x.a, -x.b); }
Ext QuadField::inv(const Ext& x) const {
  if (is_zero(x)) throw PolyError("division by zero field element");
  if (degenerate_) return Ext(1 / x.a);
  Rat d = x.a * x.a - x.b * x.b * r_;
  if (d == 0) throw PolyError("non-invertible field element");
  return Ext(x.a / d, -x.b / d);
}
Ext QuadField::scale(const Ext& x, const Rat& q) const {
  return Ext(x.a * q, degenerate_ ? Rat(0) : x.b * q);
}
bool QuadField::is_zero(const Ext& x) const {
  return x.a == 0 && (degenerate_ || x.b == 0);
}
bool QuadField::equal(const Ext& x, const Ext& y) const {
  return x.a == y.a && (degenerate_ || x.b == y.b);
}
double QuadField::to_double(const Ext& x) const {
  return x.a.get_d() + (degenerate_ ? 0.0 : x.b.get_d() * w_double_);
}

Rat QuadField::w_approx(int digits) const {
  if (degenerate_) return Rat(0);
  // sqrt(n/d) = sqrt(n*d)/d; floor-scaled integer square root.
  mpz_class scale = pow_mpz(10, static_cast<unsigned long>(digits));
  mpz_class arg = r_.get_num() * r_.get_den() * scale * scale;
  mpz_class s;
  mpz_sqrt(s.get_mpz_t(), arg.get_mpz_t());
  Rat q(s, r_.get_den() * scale);
  q.canonicalize();
  return q;
}

// -------------------------------------------------------------------- UPoly

int degree(const UPoly& p) { return static_cast<int>(p.size()) - 1; }

void trim(QuadField const& k, UPoly& p) {
  while (!p.empty() && k.is_zero(p.back())) p.pop_back();
}

UPoly add(const QuadField& k, const UPoly& f, const UPoly& g) {
  UPoly r(std::max(f.size(), g.size()));
  for (size_t i = 0; i < r.size(); ++i) {
    Ext a = i < f.size() ? f[i] : Ext();
    Ext b = i < g.size() ? g[i] : Ext();
    r[i] = k.add(a, b);
  }
  trim(k, r);
  return r;
}

UPoly sub(const QuadField& k, const UPoly& f, const UPoly& g) {
  UPoly ng(g.size());
  for (size_t i = 0; i < g.size(); ++i) ng[i] = k.neg(g[i]);
  return add(k, f, ng);
}

UPoly mul(const QuadField& k, const UPoly& f, const UPoly& g) {
  if (f.empty() || g.empty()) return {};
  UPoly r(f.size() + g.size() - 1);
  for (size_t i = 0; i < f.size(); ++i)
    for (size_t j = 0; j < g.size(); ++j)
      r[i + j] = k.add(r[i + j], k.mul(f[i], g[j]));
  trim(k, r);
  return r;
}

UPoly derivative(const QuadField& k, const UPoly& f) {
  if (f.size() <= 1) return {};
  UPoly r(f.size() - 1);
  for (size_t i = 1; i < f.size(); ++i) r[i - 1] = k.scale(f[i], Rat(i));
  trim(k, r);
  return r;
}

Ext eval(const QuadField& k, const UPoly& f, const Ext& x) {
  Ext acc;
  for (size_t i = f.size(); i-- > 0;) acc = k.add(k.mul(acc, x), f[i]);
  return acc;
}

std::optional<UPoly> try_divide(const QuadField& k, const UPoly& f,
                                const UPoly& g) {
  if (g.empty()) return std::nullopt;
  UPoly rem = f;
  trim(k, rem);
  if (rem.size() < g.size()) return rem.empty() ? std::optional<UPoly>{UPoly{}}
                                                : std::nullopt;
  UPoly q(rem.size() - g.size() + 1);
  Ext lead_inv = k.inv(g.back());
  for (size_t sh = q.size(); sh-- > 0;) {
    if (rem.size() < g.size() + sh) continue;
    if (rem.size() != g.size() + sh) continue;
    Ext c = k.mul(rem.back(), lead_inv);
    q[sh] = c;
    for (size_t i = 0; i < g.size(); ++i)
      rem[sh + i] = k.sub(rem[sh + i], k.mul(c, g[i]));
    trim(k, rem);
  }
  if (!rem.empty()) return std::nullopt;
  trim(k, q);
  return q;
}

// -------------------------------------------------------------------- BPoly

int BPoly::degree_t() const { return static_cast<int>(c.size()) - 1; }
int BPoly::degree_t1() const {
  int d = -1;
  for (const auto& row : c) d = std::max(d, static_cast<int>(row.size()) - 1);
  return d;
}
bool BPoly::is_zero() const { return c.empty(); }

namespace {

void trim_b(const QuadField& k, BPoly& p) {
  for (auto& row : p.c)
    while (!row.empty() && k.is_zero(row.back())) row.pop_back();
  while (!p.c.empty() && p.c.back().empty()) p.c.pop_back();
}

}  // namespace

BPoly add(const QuadField& k, const BPoly& f, const BPoly& g) {
  BPoly r;
  r.c.resize(std::max(f.c.size(), g.c.size()));
  for (size_t i = 0; i < r.c.size(); ++i) {
    size_t nf = i < f.c.size() ? f.c[i].size() : 0;
    size_t ng = i < g.c.size() ? g.c[i].size() : 0;
    r.c[i].resize(std::max(nf, ng));
    for (size_t j = 0; j < r.c[i].size(); ++j)
      r.c[i][j] = k.add(j < nf ? f.c[i][j] : Ext(), j < ng ? g.c[i][j] : Ext());
  }
  trim_b(k, r);
  return r;
}

BPoly mul(const QuadField& k, const BPoly& f, const BPoly& g) {
  BPoly r;
  if (f.c.empty() || g.c.empty()) return r;
  r.c.resize(f.c.size() + g.c.size() - 1);
  size_t cols = static_cast<size_t>(f.degree_t1() + g.degree_t1() + 1);
  for (auto& row : r.c) row.assign(cols, Ext());
  for (size_t i = 0; i < f.c.size(); ++i)
    for (size_t j = 0; j < f.c[i].size(); ++j) {
      if (k.is_zero(f.c[i][j])) continue;
      for (size_t p = 0; p < g.c.size(); ++p)
        for (size_t q = 0; q < g.c[p].size(); ++q)
          r.c[i + p][j + q] =
              k.add(r.c[i + p][j + q], k.mul(f.c[i][j], g.c[p][q]));
    }
  trim_b(k, r);
  return r;
}

BPoly scale(const QuadField& k, const BPoly& f, const Ext& s) {
  BPoly r = f;
  for (auto& row : r.c)
    for (auto& e : row) e = k.mul(e, s);
  trim_b(k, r);
  return r;
}

BPoly swap_vars(const BPoly& f) {
  BPoly r;
  r.c.resize(static_cast<size_t>(f.degree_t1() + 1));
  for (auto& row : r.c) row.resize(f.c.size());
  for (size_t i = 0; i < f.c.size(); ++i)
    for (size_t j = 0; j < f.c[i].size(); ++j) r.c[j][i] = f.c[i][j];
  return r;
}

Ext eval_bivariate(const QuadField& k, const BPoly& p, const Ext& t,
                   const Ext& t1) {
  Ext acc;
  for (size_t i = p.c.size(); i-- > 0;) {
    Ext row;
    for (size_t j = p.c[i].size(); j-- > 0;)
      row = k.add(k.mul(row, t1), p.c[i][j]);
    acc = k.add(k.mul(acc, t), row);
  }
  return acc;
}

UPoly eval_at_t1(const QuadField& k, const BPoly& p, const Ext& v) {
  UPoly r(p.c.size());
  for (size_t i = 0; i < p.c.size(); ++i) {
    Ext acc;
    for (size_t j = p.c[i].size(); j-- > 0;)
      acc = k.add(k.mul(acc, v), p.c[i][j]);
    r[i] = acc;
  }
  trim(k, r);
  return r;
}

std::optional<BPoly> try_divide_one_plus_square(const QuadField& k,
                                                const BPoly& p, int var) {
  if (p.is_zero()) return p;
  BPoly f = var == 0 ? p : swap_vars(p);
  // Divide by (1 + t^2): columns independent in t1; per t1-degree j, treat
  // coefficients in t as a univariate divided by 1 + x^2.
  int dt = f.degree_t();
  int dt1 = f.degree_t1();
  if (dt < 2) return std::nullopt;
  BPoly q;
  q.c.assign(static_cast<size_t>(dt - 1),
             std::vector<Ext>(static_cast<size_t>(dt1 + 1)));
  for (int j = 0; j <= dt1; ++j) {
    UPoly col(static_cast<size_t>(dt + 1));
    for (int i = 0; i <= dt; ++i)
      col[static_cast<size_t>(i)] =
          static_cast<size_t>(j) < f.c[static_cast<size_t>(i)].size()
              ? f.c[static_cast<size_t>(i)][static_cast<size_t>(j)]
              : Ext();
    UPoly div{Ext(Rat(1)), Ext(), Ext(Rat(1))};
    auto qc = try_divide(k, col, div);
    if (!qc) return std::nullopt;
    for (size_t i = 0; i < qc->size(); ++i) q.c[i][static_cast<size_t>(j)] =
        (*qc)[i];
  }
  trim_b(k, q);
  return var == 0 ? q : swap_vars(q);
}

std::pair<int, int> strip_structural(const QuadField& k, BPoly& p) {
  int np = 0, nq = 0;
  if (p.is_zero()) return {np, nq};
  while (true) {
    auto q = try_divide_one_plus_square(k, p, 0);
    if (!q) break;
    p = *q;
    ++np;
  }
  while (true) {
    auto q = try_divide_one_plus_square(k, p, 1);
    if (!q) break;
    p = *q;
    ++nq;
  }
  return {np, nq};
}

// --------------------------------------------------------------- tan-half

BPoly tan_half_substitute(const QuadField& k, const TrigPoly& expr) {
  int p = 0, q = 0;
  for (const auto& [m, c] : expr) {
    p = std::max(p, m[0] + m[1]);
    q = std::max(q, m[2] + m[3]);
  }
  auto upow = [&](const UPoly& b, int e) {
    UPoly r{Ext(Rat(1))};
    for (int i = 0; i < e; ++i) r = mul(k, r, b);
    return r;
  };
  const UPoly sin_n{Ext(), Ext(Rat(2))};                    // 2t
  const UPoly cos_n{Ext(Rat(1)), Ext(), Ext(Rat(-1))};      // 1 - t^2
  const UPoly one_p{Ext(Rat(1)), Ext(), Ext(Rat(1))};       // 1 + t^2
  BPoly out;
  for (const auto& [m, c] : expr) {
    if (k.is_zero(c)) continue;
    UPoly ta = upow(sin_n, m[0]);
    ta = mul(k, ta, upow(cos_n, m[1]));
    ta = mul(k, ta, upow(one_p, p - m[0] - m[1]));
    UPoly tb = upow(sin_n, m[2]);
    tb = mul(k, tb, upow(cos_n, m[3]));
    tb = mul(k, tb, upow(one_p, q - m[2] - m[3]));
    BPoly term;
    term.c.resize(ta.size());
    for (size_t i = 0; i < ta.size(); ++i) {
      term.c[i].resize(tb.size());
      for (size_t j = 0; j < tb.size(); ++j)
        term.c[i][j] = k.mul(c, k.mul(ta[i], tb[j]));
    }
    trim_b(k, term);
    out = add(k, out, term);
  }
  strip_structural(k, out);
  return out;
}

// --------------------------------------------------------------- resultant

namespace {

// Determinant by Gaussian elimination over Q(w).
Ext det_field(const QuadField& k, std::vector<std::vector<Ext>>& m) {
  size_t n = m.size();
  Ext det(Rat(1));
  int sign = 1;
  for (size_t i = 0; i < n; ++i) {
    size_t piv = i;
    while (piv < n && k.is_zero(m[piv][i])) ++piv;
    if (piv == n) return Ext();
    if (piv != i) {
      std::swap(m[piv], m[i]);
      sign = -sign;
    }
    det = k.mul(det, m[i][i]);
    Ext inv = k.inv(m[i][i]);
    for (size_t r = i + 1; r < n; ++r) {
      if (k.is_zero(m[r][i])) continue;
      Ext f = k.mul(m[r][i], inv);
      for (size_t c = i + 1; c < n; ++c)
        m[r][c] = k.sub(m[r][c], k.mul(f, m[i][c]));
      m[r][i] = Ext();
    }
  }
  return sign > 0 ? det : k.neg(det);
}

}  // namespace

UPoly resultant(const QuadField& k, const BPoly& fin, const BPoly& gin,
                int var) {
  // Arrange so the eliminated variable is t.
  BPoly f = var == 0 ? fin : swap_vars(fin);
  BPoly g = var == 0 ? gin : swap_vars(gin);
  if (f.is_zero() || g.is_zero()) throw PolyError("resultant of zero poly");
  int m = f.degree_t(), n = g.degree_t();
  if (m <= 0 || n <= 0)
    throw PolyError("resultant needs positive degree in eliminated variable");
  int bound = m * g.degree_t1() + n * f.degree_t1();
  int npts = bound + 1;

  auto coeff = [&](const BPoly& p, int i) {
    UPoly c;
    if (i < static_cast<int>(p.c.size())) c = p.c[static_cast<size_t>(i)];
    return c;
  };
  std::vector<UPoly> fc(static_cast<size_t>(m + 1)),
      gc(static_cast<size_t>(n + 1));
  for (int i = 0; i <= m; ++i) fc[static_cast<size_t>(i)] = coeff(f, i);
  for (int i = 0; i <= n; ++i) gc[static_cast<size_t>(i)] = coeff(g, i);

  std::vector<Rat> xs(static_cast<size_t>(npts));
  std::vector<Ext> ys(static_cast<size_t>(npts));
  size_t dim = static_cast<size_t>(m + n);
  for (int s = 0; s < npts; ++s) {
    Rat tau(s - npts / 2);
    xs[static_cast<size_t>(s)] = tau;
    std::vector<std::vector<Ext>> mat(dim, std::vector<Ext>(dim));
    auto at = [&](const std::vector<UPoly>& cs, int i) {
      Ext acc;
      const UPoly& c = cs[static_cast<size_t>(i)];
      for (size_t j = c.size(); j-- > 0;)
        acc = k.add(k.scale(acc, tau), c[j]);
      return acc;
    };
    for (int r = 0; r < n; ++r)
      for (int i = 0; i <= m; ++i)
        mat[static_cast<size_t>(r)][static_cast<size_t>(r + i)] =
            at(fc, m - i);
    for (int r = 0; r < m; ++r)
      for (int i = 0; i <= n; ++i)
        mat[static_cast<size_t>(n + r)][static_cast<size_t>(r + i)] =
            at(gc, n - i);
    ys[static_cast<size_t>(s)] = det_field(k, mat);
  }

  // Newton divided differences, then expand to the monomial basis.
  std::vector<Ext> dd = ys;
  for (int j = 1; j < npts; ++j)
    for (int i = npts - 1; i >= j; --i) {
      Ext num = k.sub(dd[static_cast<size_t>(i)], dd[static_cast<size_t>(i - 1)]);
      dd[static_cast<size_t>(i)] = k.scale(
          num, Rat(1) / (xs[static_cast<size_t>(i)] - xs[static_cast<size_t>(i - j)]));
    }
  UPoly out{dd[0]};
  UPoly basis{Ext(Rat(1))};
  for (int j = 1; j < npts; ++j) {
    UPoly lin{Ext(-xs[static_cast<size_t>(j - 1)]), Ext(Rat(1))};
    basis = mul(k, basis, lin);
    UPoly term(basis.size());
    for (size_t i = 0; i < basis.size(); ++i)
      term[i] = k.mul(dd[static_cast<size_t>(j)], basis[i]);
    out = add(k, out, term);
  }
  trim(k, out);
  return out;
}

// ------------------------------------------------- modular square-free part

namespace {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

struct Fp {
  u64 p;
  u64 add(u64 a, u64 b) const {
    u64 s = a + b;
    return s >= p || s < a ? s - p : s;
  }
  u64 sub(u64 a, u64 b) const { return a >= b ? a - b : a + p - b; }
  u64 mul(u64 a, u64 b) const { return static_cast<u64>(u128(a) * b % p); }
  u64 pw(u64 b, u64 e) const {
    u64 r = 1;
    while (e) {
      if (e & 1) r = mul(r, b);
      b = mul(b, b);
      e >>= 1;
    }
    return r;
  }
  u64 inv(u64 a) const { return pw(a, p - 2); }
};

using FpPoly = std::vector<u64>;  // ascending, trimmed

void trim_fp(FpPoly& a) {
  while (!a.empty() && a.back() == 0) a.pop_back();
}

FpPoly monic_fp(const Fp& F, FpPoly a) {
  if (a.empty()) return a;
  u64 inv = F.inv(a.back());
  for (auto& c : a) c = F.mul(c, inv);
  return a;
}

FpPoly rem_fp(const Fp& F, FpPoly a, const FpPoly& b) {
  FpPoly mb = monic_fp(F, b);
  while (a.size() >= mb.size() && !a.empty()) {
    u64 c = a.back();
    size_t sh = a.size() - mb.size();
    if (c != 0)
      for (size_t i = 0; i < mb.size(); ++i)
        a[sh + i] = F.sub(a[sh + i], F.mul(c, mb[i]));
    trim_fp(a);
  }
  return a;
}

FpPoly gcd_fp(const Fp& F, FpPoly a, FpPoly b) {
  trim_fp(a);
  trim_fp(b);
  while (!b.empty()) {
    FpPoly r = rem_fp(F, a, b);
    a = std::move(b);
    b = std::move(r);
  }
  return monic_fp(F, a);
}

FpPoly div_exact_fp(const Fp& F, FpPoly a, const FpPoly& b) {
  FpPoly q(a.size() >= b.size() ? a.size() - b.size() + 1 : 0, 0);
  u64 binv = F.inv(b.back());
  while (a.size() >= b.size() && !a.empty()) {
    u64 c = F.mul(a.back(), binv);
    size_t sh = a.size() - b.size();
    q[sh] = c;
    for (size_t i = 0; i < b.size(); ++i)
      a[sh + i] = F.sub(a[sh + i], F.mul(c, b[i]));
    trim_fp(a);
  }
  return q;
}

FpPoly deriv_fp(const Fp& F, const FpPoly& a) {
  FpPoly d;
  for (size_t i = 1; i < a.size(); ++i)
    d.push_back(F.mul(a[i], i % F.p));
  trim_fp(d);
  return d;
}

// Yun's algorithm; returns (multiplicity, monic square-free factor).
std::vector<std::pair<int, FpPoly>> yun_fp(const Fp& F, FpPoly f) {
  std::vector<std::pair<int, FpPoly>> out;
  f = monic_fp(F, f);
  FpPoly fp = deriv_fp(F, f);
  FpPoly g = gcd_fp(F, f, fp);
  if (g.size() <= 1) {
    out.emplace_back(1, f);
    return out;
  }
  FpPoly c = div_exact_fp(F, f, g);
  FpPoly w = div_exact_fp(F, fp, g);
  int i = 1;
  while (c.size() > 1) {
    FpPoly dc = deriv_fp(F, c);
    FpPoly y(std::max(w.size(), dc.size()), 0);
    for (size_t j = 0; j < y.size(); ++j)
      y[j] = F.sub(j < w.size() ? w[j] : 0, j < dc.size() ? dc[j] : 0);
    trim_fp(y);
    FpPoly a = gcd_fp(F, c, y);
    if (a.size() > 1) out.emplace_back(i, a);
    c = div_exact_fp(F, c, a);
    w = div_exact_fp(F, y, a);
    ++i;
  }
  return out;
}

u64 mod_rat(const Rat& q, u64 p) {
  mpz_class num = q.get_num() % mpz_class(p);
  if (num < 0) num += p;
  mpz_class den = q.get_den() % mpz_class(p);
  Fp F{p};
  u64 d = den.get_ui();
  if (d == 0) throw PolyError("prime divides denominator");
  return F.mul(num.get_ui(), F.inv(d));
}

// Rational reconstruction of u mod m, |n|, d <= sqrt(m/2).
std::optional<Rat> rat_reconstruct(const mpz_class& u, const mpz_class& m) {
  mpz_class a0 = m, a1 = u % m, b0 = 0, b1 = 1;
  if (a1 < 0) a1 += m;
  mpz_class bound;
  mpz_sqrt(bound.get_mpz_t(), mpz_class(m / 2).get_mpz_t());
  while (a1 > bound) {
    mpz_class q = a0 / a1;
    mpz_class t = a0 - q * a1;
    a0 = a1;
    a1 = t;
    t = b0 - q * b1;
    b0 = b1;
    b1 = t;
  }
  if (b1 == 0 || abs(b1) > bound) return std::nullopt;
  mpz_class n = a1, d = b1;
  if (d < 0) {
    n = -n;
    d = -d;
  }
  mpz_class g;
  mpz_gcd(g.get_mpz_t(), n.get_mpz_t(), d.get_mpz_t());
  if (g != 1) return std::nullopt;
  Rat r(n, d);
  r.canonicalize();
  return r;
}

struct CrtAcc {
  mpz_class value = 0, modulus = 1;
  void push(u64 residue, u64 p) {
    mpz_class pz(p);
    // value' = value + modulus * ((residue - value) * modulus^-1 mod p)
    mpz_class diff = (mpz_class(residue) - value) % pz;
    if (diff < 0) diff += pz;
    mpz_class minv;
    mpz_invert(minv.get_mpz_t(), mpz_class(modulus % pz).get_mpz_t(),
               pz.get_mpz_t());
    mpz_class k = diff * minv % pz;
    value += modulus * k;
    modulus *= pz;
  }
};

}  // namespace

FactorizationResult squarefree_factor(const QuadField& k, const UPoly& pin) {
  UPoly p = pin;
  trim(k, p);
  if (p.empty()) throw PolyError("squarefree_factor of zero polynomial");
  FactorizationResult res;
  res.leading = p.back();
  if (p.size() == 1) return res;

  // Degree pattern agreed by the majority of primes so far.
  struct Part {
    int mult;
    int deg;
    std::vector<CrtAcc> ca, cb;  // per coefficient (including leading 1)
  };
  std::vector<Part> parts;
  std::vector<std::pair<int, int>> pattern;
  std::vector<std::pair<UPoly, int>> prev;
  bool have_prev = false;

  mpz_class prime = (mpz_class(1) << 62);
  int used = 0, attempts = 0;
  const mpz_class rn = k.r().get_num(), rd = k.r().get_den();
  while (true) {
    mpz_nextprime(prime.get_mpz_t(), prime.get_mpz_t());
    if (++attempts > 4000) throw PolyError("squarefree_factor: out of primes");
    if (mpz_class(prime % 4) != 3) continue;
    u64 pp = prime.get_ui();
    Fp F{pp};
    u64 s = 0;
    if (!k.degenerate()) {
      if (mpz_class(rn % prime) == 0 || mpz_class(rd % prime) == 0) continue;
      u64 rm = F.mul(mod_rat(Rat(rn), pp), F.inv(mod_rat(Rat(rd), pp)));
      if (F.pw(rm, (pp - 1) / 2) != 1) continue;  // not a QR mod p
      s = F.pw(rm, (pp + 1) / 4);
    }
    // Reduce at w -> +s and w -> -s.
    bool bad = false;
    std::array<FpPoly, 2> img;
    for (int sg = 0; sg < 2; ++sg) {
      u64 sv = sg == 0 ? s : (s ? pp - s : 0);
      FpPoly f(p.size());
      try {
        for (size_t i = 0; i < p.size(); ++i)
          f[i] = F.add(mod_rat(p[i].a, pp),
                       k.degenerate() ? 0 : F.mul(mod_rat(p[i].b, pp), sv));
      } catch (const PolyError&) {
        bad = true;
        break;
      }
      if (f.back() == 0) {
        bad = true;
        break;
      }
      img[static_cast<size_t>(sg)] = std::move(f);
      if (k.degenerate()) {
        img[1] = img[0];
        break;
      }
    }
    if (bad) continue;
    auto y0 = yun_fp(F, img[0]);
    auto y1 = k.degenerate() ? y0 : yun_fp(F, img[1]);
    std::vector<std::pair<int, int>> pat;
    for (const auto& [m, f] : y0) pat.emplace_back(m, static_cast<int>(f.size()) - 1);
    std::vector<std::pair<int, int>> pat1;
    for (const auto& [m, f] : y1) pat1.emplace_back(m, static_cast<int>(f.size()) - 1);
    if (pat != pat1) continue;  // unlucky
    if (parts.empty()) {
      pattern = pat;
      for (const auto& [m, f] : y0) {
        Part part;
        part.mult = m;
        part.deg = static_cast<int>(f.size()) - 1;
        part.ca.resize(f.size());
        part.cb.resize(f.size());
        parts.push_back(std::move(part));
      }
    } else if (pat != pattern) {
      continue;  // unlucky prime (wrong multiplicity structure)
    }
    u64 inv2 = F.inv(2);
    u64 inv2s = k.degenerate() ? 0 : F.inv(F.mul(2, s));
    for (size_t pi = 0; pi < parts.size(); ++pi) {
      const FpPoly& gp = y0[pi].second;
      const FpPoly& gm = y1[pi].second;
      for (size_t ci = 0; ci < gp.size(); ++ci) {
        u64 av = k.degenerate() ? gp[ci] : F.mul(F.add(gp[ci], gm[ci]), inv2);
        u64 bv = k.degenerate() ? 0 : F.mul(F.sub(gp[ci], gm[ci]), inv2s);
        parts[pi].ca[ci].push(av, pp);
        parts[pi].cb[ci].push(bv, pp);
      }
    }
    ++used;
    if (used < 3) continue;

    // Attempt rational reconstruction.
    std::vector<std::pair<UPoly, int>> rec;
    bool ok = true;
    for (auto& part : parts) {
      UPoly f(part.ca.size());
      for (size_t ci = 0; ci < part.ca.size() && ok; ++ci) {
        auto a = rat_reconstruct(part.ca[ci].value, part.ca[ci].modulus);
        if (!a) {
          ok = false;
          break;
        }
        Rat b(0);
        if (!k.degenerate()) {
          auto br = rat_reconstruct(part.cb[ci].value, part.cb[ci].modulus);
          if (!br) {
            ok = false;
            break;
          }
          b = *br;
        }
        f[ci] = Ext(*a, b);
      }
      if (!ok) break;
      rec.emplace_back(std::move(f), part.mult);
    }
    if (!ok) {
      have_prev = false;
      continue;
    }
    bool stable = have_prev && rec.size() == prev.size();
    if (stable)
      for (size_t i = 0; i < rec.size() && stable; ++i) {
        if (rec[i].second != prev[i].second ||
            rec[i].first.size() != prev[i].first.size())
          stable = false;
        else
          for (size_t j = 0; j < rec[i].first.size(); ++j)
            if (!k.equal(rec[i].first[j], prev[i].first[j])) {
              stable = false;
              break;
            }
      }
    prev = rec;
    have_prev = true;
    if (!stable) continue;

    // Exact verification: leading * prod factor^mult == p.
    UPoly acc{res.leading};
    for (const auto& [f, m] : rec)
      for (int e = 0; e < m; ++e) acc = mul(k, acc, f);
    bool match = acc.size() == p.size();
    for (size_t i = 0; i < acc.size() && match; ++i)
      match = k.equal(acc[i], p[i]);
    if (!match) {
      have_prev = false;
      continue;
    }
    res.factors = std::move(rec);
    break;
  }

  std::stable_sort(res.factors.begin(), res.factors.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });
  for (const auto& [f, m] : res.factors)
    if (m == 1 && degree(f) == 24 && !res.candidate_q) res.candidate_q = f;
  return res;
}

// -------------------------------------------------------------- real roots

namespace {

using ZPoly = std::vector<mpz_class>;  // ascending

int sign_changes(const ZPoly& p) {
  int changes = 0, last = 0;
  for (const auto& c : p) {
    int s = sgn(c);
    if (s == 0) continue;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes;
}

ZPoly taylor_shift1(ZPoly p) {
  // p(x) -> p(x + 1)
  size_t n = p.size();
  for (size_t i = 1; i < n; ++i)
    for (size_t j = n - 1; j >= i; --j) p[j - 1] += p[j];
  return p;
}

ZPoly reverse_poly(const ZPoly& p) { return ZPoly(p.rbegin(), p.rend()); }

// Number of sign variations of (1+x)^n p(1/(1+x)); Descartes bound for (0,1).
int descartes01(const ZPoly& p) { return sign_changes(taylor_shift1(reverse_poly(p))); }

mpz_class eval_hom(const ZPoly& p, const mpz_class& num, const mpz_class& den) {
  // p(num/den) * den^deg via homogeneous Horner
  mpz_class acc = 0, dp = 1;
  for (size_t i = p.size(); i-- > 0;) {
    acc = acc * num + p[i] * dp;
    dp *= den;
  }
  return acc;
}

int sign_at(const ZPoly& p, const Rat& x) {
  mpz_class v = eval_hom(p, x.get_num(), x.get_den());
  return sgn(v);
}

// Recursive VCA on (lo, hi) where q is p rescaled to (0,1) on that interval.
void vca(const ZPoly& q, const Rat& lo, const Rat& hi,
         std::vector<RootInterval>& out, int depth) {
  if (depth > 256) throw PolyError("real_roots: isolation depth exceeded");
  int v = descartes01(q);
  if (v == 0) return;
  if (v == 1) {
    out.push_back({lo, hi});
    return;
  }
  // split at 1/2: q0(x) = 2^n q(x/2) on left, q1(x) = q0(x+1) on right
  size_t n = q.size();
  ZPoly q0 = q;
  for (size_t i = 0; i < n; ++i) q0[i] <<= static_cast<unsigned>(n - 1 - i);
  ZPoly q1 = taylor_shift1(q0);
  Rat mid = (lo + hi) / 2;
  if (q1[0] == 0) out.push_back({mid, mid});  // exact root at midpoint
  vca(q0, lo, mid, out, depth + 1);
  vca(q1, mid, hi, out, depth + 1);
}

// Primitive squarefree check / reduction over Z via subresultant-free route:
// single-prime probabilistic check, exact monic gcd over Q fallback.
std::vector<Rat> make_squarefree(const std::vector<Rat>& p) {
  // derivative gcd over Q with naive Euclid; fine for small test inputs and
  // a fast exit (gcd = const) for pipeline inputs checked mod a prime first.
  Fp F{(1ull << 62) - 57};  // 2^62-57 is prime
  bool checked = false;
  try {
    FpPoly fp(p.size());
    for (size_t i = 0; i < p.size(); ++i) fp[i] = mod_rat(p[i], F.p);
    trim_fp(fp);
    if (fp.size() == p.size()) {
      FpPoly g = gcd_fp(F, fp, deriv_fp(F, fp));
      if (g.size() <= 1) return p;  // certainly squarefree
      checked = true;
    }
  } catch (const PolyError&) {
  }
  (void)checked;
  // Exact monic Euclid over Q.
  auto trimq = [](std::vector<Rat>& a) {
    while (!a.empty() && a.back() == 0) a.pop_back();
  };
  auto remq = [&](std::vector<Rat> a, std::vector<Rat> b) {
    Rat inv = 1 / b.back();
    for (auto& c : b) c *= inv;
    while (a.size() >= b.size() && !a.empty()) {
      Rat c = a.back();
      size_t sh = a.size() - b.size();
      for (size_t i = 0; i < b.size(); ++i) a[sh + i] -= c * b[i];
      trimq(a);
    }
    return a;
  };
  std::vector<Rat> a = p, b;
  for (size_t i = 1; i < p.size(); ++i) b.push_back(p[i] * Rat(i));
  trimq(a);
  trimq(b);
  while (!b.empty()) {
    auto r = remq(a, b);
    a = std::move(b);
    b = std::move(r);
  }
  // a = gcd; divide p by a (exact over Q)
  Rat inv = 1 / a.back();
  for (auto& c : a) c *= inv;
  std::vector<Rat> rem = p, q(p.size() - a.size() + 1, Rat(0));
  while (rem.size() >= a.size() && !rem.empty()) {
    Rat c = rem.back();
    size_t sh = rem.size() - a.size();
    q[sh] = c;
    for (size_t i = 0; i < a.size(); ++i) rem[sh + i] -= c * a[i];
    trimq(rem);
  }
  return q;
}

}  // namespace

double RootInterval::mid() const { return Rat((lo + hi) / 2).get_d(); }

std::vector<RootInterval> real_roots(const std::vector<Rat>& pin,
                                     const RootOptions& opt) {
  std::vector<Rat> p = pin;
  while (!p.empty() && p.back() == 0) p.pop_back();
  if (p.empty()) throw PolyError("real_roots of zero polynomial");
  if (static_cast<int>(p.size()) - 1 > opt.degree_cap)
    throw PolyError("real_roots: degree cap exceeded");
  std::vector<RootInterval> out;
  // strip t^k
  size_t k0 = 0;
  while (k0 < p.size() && p[k0] == 0) ++k0;
  bool zero_root = k0 > 0;
  p.erase(p.begin(), p.begin() + static_cast<long>(k0));
  if (p.size() > 1) {
    p = make_squarefree(p);
    // to Z[x]
    mpz_class den = 1;
    for (const auto& c : p) mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), c.get_den().get_mpz_t());
    ZPoly z(p.size());
    for (size_t i = 0; i < p.size(); ++i)
      z[i] = mpz_class(p[i].get_num() * (den / p[i].get_den()));
    // Cauchy bound as power of two
    mpz_class mx = 0;
    for (const auto& c : z) mx = std::max(mx, mpz_class(abs(c)));
    mpz_class an = abs(z.back());
    mpz_class bznum = mx / an + 2;
    unsigned long bits = mpz_sizeinbase(bznum.get_mpz_t(), 2);
    mpz_class B = mpz_class(1) << (bits + 1);
    // positive side: q(x) = z(B x), isolate on (0,1) -> roots in (0,B)
    for (int side = 0; side < 2; ++side) {
      ZPoly zs = z;
      if (side == 1)
        for (size_t i = 1; i < zs.size(); i += 2) zs[i] = -zs[i];  // z(-x)
      ZPoly q = zs;
      for (size_t i = 0; i < q.size(); ++i)
        q[i] *= pow_mpz(B, static_cast<unsigned long>(i));
      std::vector<RootInterval> iso;
      vca(q, Rat(0), Rat(B), iso, 0);
      for (auto& r : iso) {
        if (side == 1) {
          std::swap(r.lo, r.hi);
          r.lo = -r.lo;
          r.hi = -r.hi;
        }
        out.push_back(r);
      }
      // refine against zs sign changes below
    }
    // Refinement by bisection to width <= eps. A root can sit exactly on an
    // endpoint (dyadic split points are reported separately); deflate such
    // roots so the interior root keeps a well-defined sign change.
    for (auto& r : out) {
      if (r.lo == r.hi) continue;
      std::vector<Rat> defl;
      auto sign_here = [&](const Rat& x) {
        if (defl.empty()) return sign_at(z, x);
        Rat acc = 0;
        for (size_t i = defl.size(); i-- > 0;) acc = acc * x + defl[i];
        return sgn(acc);
      };
      auto deflate = [&](const Rat& root) {
        if (defl.empty())
          for (const auto& c : z) defl.emplace_back(c);
        std::vector<Rat> q(defl.size() - 1);
        Rat carry = defl.back();
        for (size_t i = defl.size() - 1; i-- > 0;) {
          q[i] = carry;
          carry = defl[i] + root * carry;
        }
        defl = std::move(q);
      };
      if (sign_here(r.lo) == 0) deflate(r.lo);
      if (sign_here(r.hi) == 0) deflate(r.hi);
      int slo = sign_here(r.lo);
      while (r.hi - r.lo > opt.eps) {
        Rat mid = (r.lo + r.hi) / 2;
        int sm = sign_here(mid);
        if (sm == 0) {
          r.lo = r.hi = mid;
          break;
        }
        if (sm == slo)
          r.lo = mid;
        else
          r.hi = mid;
      }
    }
  }
  if (zero_root) out.push_back({Rat(0), Rat(0)});
  // interval filter and deterministic order
  std::vector<RootInterval> kept;
  for (auto& r : out) {
    if (opt.lo && r.hi < *opt.lo) continue;
    if (opt.hi && r.lo > *opt.hi) continue;
    kept.push_back(r);
  }
  std::sort(kept.begin(), kept.end(),
            [](const RootInterval& a, const RootInterval& b) { return a.lo < b.lo; });
  return kept;
}

std::vector<Rat> substitute_w(const QuadField& k, const UPoly& p, int digits) {
  Rat w = k.w_approx(digits);
  std::vector<Rat> out(p.size());
  for (size_t i = 0; i < p.size(); ++i)
    out[i] = p[i].a + (k.degenerate() ? Rat(0) : p[i].b * w);
  while (!out.empty() && out.back() == 0) out.pop_back();
  return out;
}

std::string to_json(const QuadField& k, const UPoly& p) {
  std::string s = "[";
  for (size_t i = 0; i < p.size(); ++i) {
    if (i) s += ",";
    s += "[\"" + p[i].a.get_str() + "\",\"" +
         (k.degenerate() ? std::string("0") : p[i].b.get_str()) + "\"]";
  }
  s += "]";
  return s;
}

}  // namespace cuspidal::polyalg
