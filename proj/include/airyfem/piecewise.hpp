#pragma once

// Fields on the barycentric split of a macro triangle. Every piece is a
// polynomial in the MACRO barycentric coordinates (l0,l1,l2); piece j lives on
// the subtriangle T_j opposite v_j. Tensor fields store Cartesian components.

#include "airyfem/geometry.hpp"
#include "airyfem/hom_poly.hpp"

#include <array>
#include <memory>
#include <vector>

namespace airyfem {

struct VecPoly {
  BaryPoly x;
  BaryPoly y;

  VecPoly& operator+=(const VecPoly& o)
  {
    x += o.x;
    y += o.y;
    return *this;
  }
  VecPoly& operator*=(const Rational& s)
  {
    x *= s;
    y *= s;
    return *this;
  }
  friend VecPoly operator+(VecPoly a, const VecPoly& b) { return a += b; }
  friend VecPoly operator-(VecPoly a, const VecPoly& b) { return a += b * Rational(-1); }
  friend VecPoly operator*(VecPoly a, const Rational& s) { return a *= s; }
  friend VecPoly operator*(const Rational& s, VecPoly a) { return a *= s; }
  friend bool operator==(const VecPoly& a, const VecPoly& b) { return a.x == b.x && a.y == b.y; }
  bool is_zero() const { return x.is_zero() && y.is_zero(); }
};

/// Symmetric 2x2 tensor of polynomials; the (2,1) entry is never stored.
struct SymPoly {
  BaryPoly xx;
  BaryPoly xy;
  BaryPoly yy;

  SymPoly& operator+=(const SymPoly& o)
  {
    xx += o.xx;
    xy += o.xy;
    yy += o.yy;
    return *this;
  }
  SymPoly& operator*=(const Rational& s)
  {
    xx *= s;
    xy *= s;
    yy *= s;
    return *this;
  }
  friend SymPoly operator+(SymPoly a, const SymPoly& b) { return a += b; }
  friend SymPoly operator-(SymPoly a, const SymPoly& b) { return a += b * Rational(-1); }
  friend SymPoly operator*(SymPoly a, const Rational& s) { return a *= s; }
  friend SymPoly operator*(const Rational& s, SymPoly a) { return a *= s; }
  friend bool operator==(const SymPoly& a, const SymPoly& b) { return a.xx == b.xx && a.xy == b.xy && a.yy == b.yy; }
  bool is_zero() const { return xx.is_zero() && xy.is_zero() && yy.is_zero(); }

  /// (sigma n) . q for constant vectors n and q.
  BaryPoly contract(const Vec2& n, const Vec2& q) const
  {
    return xx * (n.x * q.x) + xy * (n.y * q.x + n.x * q.y) + yy * (n.y * q.y);
  }

  VecPoly apply(const Vec2& n) const { return {xx * n.x + xy * n.y, xy * n.x + yy * n.y}; }
};

/// Constant symmetric tensor a (x) b + b (x) a, halved: sym(a (x) b).
struct SymConst {
  Rational xx, xy, yy;
};

inline SymConst sym_outer(const Vec2& a, const Vec2& b)
{
  return {a.x * b.x, (a.x * b.y + a.y * b.x) / 2, a.y * b.y};
}

inline SymPoly operator*(const BaryPoly& p, const SymConst& c) { return {p * c.xx, p * c.xy, p * c.yy}; }

template <class Value>
struct Piecewise {
  std::array<Value, 3> pieces;

  static Piecewise uniform(const Value& v) { return {{v, v, v}}; }

  Piecewise& operator+=(const Piecewise& o)
  {
    for (int j = 0; j < 3; ++j) pieces[j] += o.pieces[j];
    return *this;
  }
  Piecewise& operator*=(const Rational& s)
  {
    for (auto& p : pieces) p *= s;
    return *this;
  }
  friend Piecewise operator+(Piecewise a, const Piecewise& b) { return a += b; }
  friend Piecewise operator-(Piecewise a, const Piecewise& b) { return a += b * Rational(-1); }
  friend Piecewise operator*(Piecewise a, const Rational& s) { return a *= s; }
  friend Piecewise operator*(const Rational& s, Piecewise a) { return a *= s; }
  friend bool operator==(const Piecewise& a, const Piecewise& b) { return a.pieces == b.pieces; }

  bool is_zero() const
  {
    for (const auto& p : pieces)
      if (!p.is_zero()) return false;
    return true;
  }
};

using PiecewiseScalar = Piecewise<BaryPoly>;
using PiecewiseVector = Piecewise<VecPoly>;
using PiecewiseSymTensor = Piecewise<SymPoly>;

inline PiecewiseScalar operator*(const PiecewiseScalar& a, const PiecewiseScalar& b)
{
  PiecewiseScalar out;
  for (int j = 0; j < 3; ++j) out.pieces[j] = a.pieces[j] * b.pieces[j];
  return out;
}

inline PiecewiseScalar operator*(const PiecewiseScalar& a, const BaryPoly& p)
{
  return a * PiecewiseScalar::uniform(p);
}

inline PiecewiseScalar pow(const PiecewiseScalar& a, int n)
{
  PiecewiseScalar out;
  for (int j = 0; j < 3; ++j) out.pieces[j] = pow(a.pieces[j], n);
  return out;
}

inline BaryPoly lambda(int i) { return BaryPoly::variable(((i % 3) + 3) % 3); }

/// Label of the barycenter in lambda_refined and point lookups.
inline constexpr int kBarycenter = 3;

/// Hat functions of the refined mesh: piece j of lambda_i^R is l_i - l_j,
/// and the barycenter hat is 3 l_j on piece j.
inline PiecewiseScalar lambda_refined(int i)
{
  PiecewiseScalar out;
  for (int j = 0; j < 3; ++j) out.pieces[j] = i == kBarycenter ? lambda(j) * Rational(3) : lambda(i) - lambda(j);
  return out;
}

/// Chain rule: d/dv p = sum_i dp/dl_i (grad l_i . v).
inline BaryPoly directional_derivative(const BaryPoly& p, const std::array<Vec2, 3>& grads, const Vec2& v)
{
  BaryPoly out(std::max(p.degree() - 1, 0));
  for (int i = 0; i < 3; ++i) {
    Rational s = dot(grads[i], v);
    if (sgn(s) != 0) out += p.derivative(i) * s;
  }
  return out;
}

inline BaryPoly directional_derivative(const BaryPoly& p, const MacroTriangle& m, const Vec2& v)
{
  return directional_derivative(p, m.grad_lambda(), v);
}

inline const Vec2& unit_x()
{
  static const Vec2 e{1, 0};
  return e;
}
inline const Vec2& unit_y()
{
  static const Vec2 e{0, 1};
  return e;
}

inline VecPoly gradient(const BaryPoly& p, const MacroTriangle& m)
{
  return {directional_derivative(p, m, unit_x()), directional_derivative(p, m, unit_y())};
}

inline PiecewiseVector gradient(const PiecewiseScalar& v, const MacroTriangle& m)
{
  PiecewiseVector out;
  for (int j = 0; j < 3; ++j) out.pieces[j] = gradient(v.pieces[j], m);
  return out;
}

/// Rotated Hessian [[d_yy, -d_xy], [-d_xy, d_xx]].
inline SymPoly airy(const BaryPoly& p, const MacroTriangle& m)
{
  BaryPoly px = directional_derivative(p, m, unit_x());
  BaryPoly py = directional_derivative(p, m, unit_y());
  return {directional_derivative(py, m, unit_y()), -directional_derivative(px, m, unit_y()),
          directional_derivative(px, m, unit_x())};
}

inline PiecewiseSymTensor airy(const PiecewiseScalar& v, const MacroTriangle& m)
{
  PiecewiseSymTensor out;
  for (int j = 0; j < 3; ++j) out.pieces[j] = airy(v.pieces[j], m);
  return out;
}

/// Row-wise divergence.
inline VecPoly divergence(const SymPoly& s, const MacroTriangle& m)
{
  return {directional_derivative(s.xx, m, unit_x()) + directional_derivative(s.xy, m, unit_y()),
          directional_derivative(s.xy, m, unit_x()) + directional_derivative(s.yy, m, unit_y())};
}

inline PiecewiseVector divergence(const PiecewiseSymTensor& s, const MacroTriangle& m)
{
  PiecewiseVector out;
  for (int j = 0; j < 3; ++j) out.pieces[j] = divergence(s.pieces[j], m);
  return out;
}

/// Trace of a macro polynomial on the interior edge [v_i, v_c], with m0
/// attached to v_i and m1 to v_c: l_i = m0 + m1/3, l_j = m1/3 otherwise.
inline EdgePoly interior_edge_trace(const BaryPoly& p, int i)
{
  std::array<std::array<Rational, 2>, 3> forms;
  for (int n = 0; n < 3; ++n) forms[n] = {Rational(n == i ? 1 : 0), Rational(1, 3)};
  return substitute<2>(p, forms);
}

/// Pieces adjacent to the interior edge [v_i, v_c]: T_{i+1} and T_{i+2}.
inline std::array<int, 2> pieces_at_interior_edge(int i) { return {(i + 1) % 3, (i + 2) % 3}; }

/// Unnormalized normal of the interior edge [v_i, v_c].
inline Vec2 interior_edge_normal(const MacroTriangle& m, int i) { return rotate_cw(m.barycenter() - m.vertex(i)); }

/// Value jump across [v_i, v_c]: trace from T_{i+1} minus trace from T_{i+2}.
inline EdgePoly jump_value(const PiecewiseScalar& v, int i)
{
  auto [a, b] = pieces_at_interior_edge(i);
  return interior_edge_trace(v.pieces[a] - v.pieces[b], i);
}

inline std::array<EdgePoly, 2> jump_gradient(const PiecewiseScalar& v, const MacroTriangle& m, int i)
{
  auto [a, b] = pieces_at_interior_edge(i);
  BaryPoly diff = v.pieces[a] - v.pieces[b];
  return {interior_edge_trace(directional_derivative(diff, m, unit_x()), i),
          interior_edge_trace(directional_derivative(diff, m, unit_y()), i)};
}

/// Jump of sigma n (unnormalized n) across [v_i, v_c], two Cartesian components.
inline std::array<EdgePoly, 2> jump_normal_trace(const PiecewiseSymTensor& s, const MacroTriangle& m, int i)
{
  auto [a, b] = pieces_at_interior_edge(i);
  VecPoly diff = (s.pieces[a] - s.pieces[b]).apply(interior_edge_normal(m, i));
  return {interior_edge_trace(diff.x, i), interior_edge_trace(diff.y, i)};
}

inline bool is_c1(const PiecewiseScalar& v, const MacroTriangle& m)
{
  for (int i = 0; i < 3; ++i) {
    if (!jump_value(v, i).is_zero()) return false;
    auto g = jump_gradient(v, m, i);
    if (!g[0].is_zero() || !g[1].is_zero()) return false;
  }
  return true;
}

inline bool has_continuous_normal_trace(const PiecewiseSymTensor& s, const MacroTriangle& m)
{
  for (int i = 0; i < 3; ++i) {
    auto j = jump_normal_trace(s, m, i);
    if (!j[0].is_zero() || !j[1].is_zero()) return false;
  }
  return true;
}

/// Barycentric point of a vertex label (0,1,2, or kBarycenter).
inline std::array<Rational, 3> bary_point(int label)
{
  if (label == kBarycenter) return {Rational(1, 3), Rational(1, 3), Rational(1, 3)};
  std::array<Rational, 3> p{0, 0, 0};
  p[label] = 1;
  return p;
}

namespace detail {

// table[k] = integral over T_j of the k-th monomial of degree d, for |T| = 1.
inline const std::vector<Rational>& piece_moments(int j, int degree)
{
  thread_local std::array<std::vector<std::unique_ptr<const std::vector<Rational>>>, 3> cache;
  auto& slots = cache[j];
  if (slots.size() <= static_cast<std::size_t>(degree)) slots.resize(degree + 1);
  auto& slot = slots[degree];
  if (!slot) {
    std::array<std::array<Rational, 3>, 3> forms;
    forms[j] = {0, 0, Rational(1, 3)};
    forms[(j + 1) % 3] = {1, 0, Rational(1, 3)};
    forms[(j + 2) % 3] = {0, 1, Rational(1, 3)};
    std::vector<Rational> table;
    for (const auto& e : exponents<3>(degree))
      table.push_back(integrate_triangle(substitute<3>(BaryPoly::monomial(e), forms), Rational(1, 3)));
    slot = std::make_unique<const std::vector<Rational>>(std::move(table));
  }
  return *slot;
}

}  // namespace detail

/// Integral over the subtriangle T_j of a macro polynomial (macro area given).
inline Rational integrate_piece(const BaryPoly& p, int j, const Rational& macro_area)
{
  const auto& table = detail::piece_moments(j, p.degree());
  Rational sum = 0;
  for (std::size_t k = 0; k < table.size(); ++k)
    if (sgn(p.coefficients()[k]) != 0) sum += p.coefficients()[k] * table[k];
  return sum * macro_area;
}

inline Rational integrate(const PiecewiseScalar& v, const Rational& macro_area)
{
  Rational sum = 0;
  for (int j = 0; j < 3; ++j) sum += integrate_piece(v.pieces[j], j, macro_area);
  return sum;
}

inline int max_degree(const PiecewiseScalar& v)
{
  int d = 0;
  for (const auto& p : v.pieces) d = std::max(d, p.degree());
  return d;
}

inline int max_degree(const PiecewiseSymTensor& s)
{
  int d = 0;
  for (const auto& p : s.pieces) d = std::max({d, p.xx.degree(), p.xy.degree(), p.yy.degree()});
  return d;
}

/// Coefficient vector of all pieces homogenized to `degree` (used for exact ranks).
inline std::vector<Rational> flatten(const PiecewiseScalar& v, int degree)
{
  std::vector<Rational> out;
  for (const auto& p : v.pieces) {
    auto c = flatten(p, degree);
    out.insert(out.end(), c.begin(), c.end());
  }
  return out;
}

inline std::vector<Rational> flatten(const PiecewiseSymTensor& s, int degree)
{
  std::vector<Rational> out;
  for (const auto& p : s.pieces)
    for (const BaryPoly* c : {&p.xx, &p.xy, &p.yy}) {
      auto f = flatten(*c, degree);
      out.insert(out.end(), f.begin(), f.end());
    }
  return out;
}

/// Checks grad^perp(l_1^R|T_2) = 3 t_{c,0} / (2|T|) and
/// grad^perp(l_2^R|T_1) = 3 t_{0,c} / (2|T|) exactly.
inline bool rot_gradient_identity_check(const MacroTriangle& m)
{
  const Rational scale = Rational(3) / (2 * m.area());
  auto grad_perp = [&](const BaryPoly& p) {
    Vec2 g{directional_derivative(p, m, unit_x()).evaluate(bary_point(0)),
           directional_derivative(p, m, unit_y()).evaluate(bary_point(0))};
    return perp(g);
  };
  const Vec2 lhs1 = grad_perp(lambda_refined(1).pieces[2]);
  const Vec2 lhs2 = grad_perp(lambda_refined(2).pieces[1]);
  return lhs1 == m.t_c(0) * scale && lhs2 == (m.barycenter() - m.vertex(0)) * scale;
}

}  // namespace airyfem
