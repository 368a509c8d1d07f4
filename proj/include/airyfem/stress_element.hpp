#pragma once

// The enriched symmetric stress element: P_k(T;S) plus three piecewise
// polynomial, divergence-free enrichments psi_i^k on the barycentric split.

#include "airyfem/exact_linalg.hpp"
#include "airyfem/piecewise.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace airyfem {

/// Cartesian symmetric units e1(x)e1, sym(e1(x)e2), e2(x)e2 stored as (xx, xy, yy).
inline SymConst symmetric_unit(int m)
{
  switch (m) {
    case 0: return {1, 0, 0};
    case 1: return {0, 1, 0};
    case 2: return {0, 0, 1};
  }
  throw std::out_of_range("symmetric unit index must be 0, 1 or 2");
}

inline PiecewiseSymTensor build_psi(const MacroTriangle& m, int k, int i)
{
  if (k < 1) throw std::invalid_argument("psi enrichment requires k >= 1");
  const int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
  const PiecewiseScalar li = lambda_refined(i);
  const PiecewiseScalar l1 = lambda_refined(i1);
  const PiecewiseScalar l2 = lambda_refined(i2);
  const Vec2 t0 = m.t_c(i), t1 = m.t_c(i1), t2 = m.t_c(i2);

  PiecewiseSymTensor out = PiecewiseSymTensor::uniform({BaryPoly(k), BaryPoly(k), BaryPoly(k)});
  {
    const BaryPoly& a = li.pieces[i2];
    out.pieces[i2] = pow(a, k) * sym_outer(t0, t1) * Rational(2) +
                     (pow(a, k - 1) * l1.pieces[i2]) * sym_outer(t1, t1) * Rational(-k);
  }
  {
    const BaryPoly& a = li.pieces[i1];
    out.pieces[i1] = pow(a, k) * sym_outer(t0, t2) * Rational(-2) +
                     (pow(a, k - 1) * l2.pieces[i1]) * sym_outer(t2, t2) * Rational(k);
  }
  return out;
}

inline int stress_dimension(int k) { return 3 * (k + 1) * (k + 2) / 2 + 3; }

/// Bernstein monomials of P_k times the three symmetric units (multi-index
/// outer, unit inner), followed by psi_0, psi_1, psi_2.
inline std::vector<PiecewiseSymTensor> stress_shape_basis(const MacroTriangle& m, int k)
{
  std::vector<PiecewiseSymTensor> basis;
  for (const auto& a : exponents<3>(k))
    for (int u = 0; u < 3; ++u) basis.push_back(PiecewiseSymTensor::uniform(BaryPoly::monomial(a) * symmetric_unit(u)));
  for (int i = 0; i < 3; ++i) basis.push_back(build_psi(m, k, i));
  return basis;
}

enum class DivBubbleCharacterization { geometric, hu_zhang };

/// Basis of the polynomial div-bubbles of degree k (symmetric fields in P_k
/// with vanishing normal trace on the boundary).
inline std::vector<PiecewiseSymTensor> div_bubble_basis(const MacroTriangle& m, int k, DivBubbleCharacterization which)
{
  if (k < 1) throw std::invalid_argument("div bubbles require k >= 1");
  std::vector<PiecewiseSymTensor> out;
  auto edge_unit = [&](int e) {
    const Vec2& t = m.frame(e).tangent;
    return sym_outer(t, t);
  };
  const BaryPoly bT = lambda(0) * lambda(1) * lambda(2);
  if (which == DivBubbleCharacterization::geometric) {
    if (k >= 3)
      for (const auto& a : exponents<3>(k - 3))
        for (int u = 0; u < 3; ++u)
          out.push_back(PiecewiseSymTensor::uniform((bT * BaryPoly::monomial(a)) * symmetric_unit(u)));
    if (k >= 2)
      for (int e = 0; e < 3; ++e) {
        const int a = (e + 1) % 3, b = (e + 2) % 3;
        const BaryPoly be = lambda(a) * lambda(b);
        for (int p = 0; p <= k - 2; ++p)
          out.push_back(PiecewiseSymTensor::uniform((be * pow(lambda(a), p) * pow(lambda(b), k - 2 - p)) * edge_unit(e)));
      }
  } else {
    if (k >= 2)
      for (const auto& a : exponents<3>(k - 2))
        for (int e = 0; e < 3; ++e) {
          const BaryPoly be = lambda(e + 1) * lambda(e + 2);
          out.push_back(PiecewiseSymTensor::uniform((be * BaryPoly::monomial(a)) * edge_unit(e)));
        }
  }
  return out;
}

/// Edge moment r with  int_e (sigma n).(m0^(k-a) m1^a f) ds = r |e|, where n is
/// the unnormalized outward normal of e, f is n or the tangent, and m0 sits at
/// the edge start v_{e+1}.
struct StressEdgeMoment {
  int edge;
  int index;
  bool tangential;
};

/// sum_j int_{T_j} sigma : (l^alpha E_unit) dx.
struct StressInteriorMoment {
  Exponent<3> alpha;
  int unit;
};

using StressDof = std::variant<StressEdgeMoment, StressInteriorMoment>;

/// Edge moments (per edge: normal component for a = 0..k, then tangential),
/// then interior moments against P_{k-2} times the symmetric units.
inline std::vector<StressDof> stress_dofs(int k)
{
  if (k < 1) throw std::invalid_argument("stress DoFs require k >= 1");
  std::vector<StressDof> dofs;
  for (int e = 0; e < 3; ++e)
    for (bool tangential : {false, true})
      for (int a = 0; a <= k; ++a) dofs.push_back(StressEdgeMoment{e, a, tangential});
  if (k >= 2)
    for (const auto& alpha : exponents<3>(k - 2))
      for (int u = 0; u < 3; ++u) dofs.push_back(StressInteriorMoment{alpha, u});
  return dofs;
}

/// Normal trace (sigma n).f on boundary edge e in edge coordinates (m0 at v_{e+1}).
inline EdgePoly stress_edge_trace(const PiecewiseSymTensor& s, const MacroTriangle& m, int e, bool tangential)
{
  const EdgeFrame& f = m.frame(e);
  return restrict_to_edge(s.pieces[e].contract(f.normal, tangential ? f.tangent : f.normal), f.from, f.to);
}

inline Rational apply_stress_dof(const StressDof& dof, const PiecewiseSymTensor& s, const MacroTriangle& m, int k)
{
  if (const auto* em = std::get_if<StressEdgeMoment>(&dof)) {
    EdgePoly trace = stress_edge_trace(s, m, em->edge, em->tangential);
    return integrate_edge(trace * EdgePoly::monomial({k - em->index, em->index}));
  }
  const auto& im = std::get<StressInteriorMoment>(dof);
  const BaryPoly w = BaryPoly::monomial(im.alpha);
  Rational sum = 0;
  for (int j = 0; j < 3; ++j) {
    const SymPoly& p = s.pieces[j];
    const BaryPoly& comp = im.unit == 0 ? p.xx : im.unit == 1 ? p.xy : p.yy;
    sum += integrate_piece(comp * w, j, m.area()) * (im.unit == 1 ? 2 : 1);
  }
  return sum;
}

/// All DoFs of one field; edge traces are computed once per edge.
inline std::vector<Rational> apply_stress_dofs(const std::vector<StressDof>& dofs, const PiecewiseSymTensor& s,
                                               const MacroTriangle& m, int k)
{
  std::array<std::array<std::optional<EdgePoly>, 2>, 3> traces;
  std::vector<Rational> out;
  out.reserve(dofs.size());
  for (const auto& dof : dofs) {
    if (const auto* em = std::get_if<StressEdgeMoment>(&dof)) {
      auto& slot = traces[em->edge][em->tangential ? 1 : 0];
      if (!slot) slot = stress_edge_trace(s, m, em->edge, em->tangential);
      out.push_back(integrate_edge(*slot * EdgePoly::monomial({k - em->index, em->index})));
    } else {
      out.push_back(apply_stress_dof(dof, s, m, k));
    }
  }
  return out;
}

inline RationalMatrix dof_matrix(const std::vector<StressDof>& dofs, const std::vector<PiecewiseSymTensor>& basis,
                                 const MacroTriangle& m, int k)
{
  std::vector<std::vector<Rational>> cols;
  for (const auto& b : basis) cols.push_back(apply_stress_dofs(dofs, b, m, k));
  return RationalMatrix::from_columns(cols);
}

struct UnisolvenceReport {
  RationalMatrix matrix;
  Rational determinant;
  bool invertible = false;
  std::vector<Rational> kernel;  ///< a kernel vector when singular
};

inline UnisolvenceReport make_unisolvence_report(RationalMatrix matrix)
{
  UnisolvenceReport r;
  r.matrix = std::move(matrix);
  r.determinant = r.matrix.rows() == r.matrix.cols() ? determinant(r.matrix) : Rational(0);
  r.invertible = sgn(r.determinant) != 0;
  if (!r.invertible) {
    auto ker = nullspace(r.matrix);
    if (!ker.empty()) r.kernel = ker.front();
  }
  return r;
}

inline UnisolvenceReport verify_unisolvence_stress(const MacroTriangle& m, int k)
{
  return make_unisolvence_report(dof_matrix(stress_dofs(k), stress_shape_basis(m, k), m, k));
}

/// Local stress element with its DoF matrix inverted once.
class StressElement {
 public:
  StressElement(const MacroTriangle& m, int k)
      : macro_(m), k_(k), basis_(stress_shape_basis(m, k)), dofs_(stress_dofs(k))
  {
    auto inv = inverse(dof_matrix(dofs_, basis_, m, k));
    if (!inv) throw std::runtime_error("stress DoF matrix is singular for k = " + std::to_string(k));
    inverse_ = std::move(*inv);
  }

  const MacroTriangle& macro() const { return macro_; }
  int degree() const { return k_; }
  std::size_t dimension() const { return basis_.size(); }
  const std::vector<PiecewiseSymTensor>& basis() const { return basis_; }
  const std::vector<StressDof>& dofs() const { return dofs_; }
  const RationalMatrix& inverse_dof_matrix() const { return inverse_; }

  std::vector<Rational> dof_values(const PiecewiseSymTensor& s) const { return apply_stress_dofs(dofs_, s, macro_, k_); }

  /// Coefficients in the shape basis from DoF values.
  std::vector<Rational> coefficients_from_dofs(const std::vector<Rational>& values) const { return inverse_ * values; }

  std::vector<Rational> interpolate(const PiecewiseSymTensor& s) const { return coefficients_from_dofs(dof_values(s)); }

  PiecewiseSymTensor combine(const std::vector<Rational>& coeffs) const
  {
    PiecewiseSymTensor out = PiecewiseSymTensor::uniform({BaryPoly(k_), BaryPoly(k_), BaryPoly(k_)});
    for (std::size_t b = 0; b < basis_.size(); ++b)
      if (sgn(coeffs[b]) != 0) out += basis_[b] * coeffs[b];
    return out;
  }

  /// Nodal basis function: the field whose DoF vector is the unit vector e_a.
  PiecewiseSymTensor nodal_basis(std::size_t a) const { return combine(inverse_.column(a)); }

 private:
  MacroTriangle macro_;
  int k_;
  std::vector<PiecewiseSymTensor> basis_;
  std::vector<StressDof> dofs_;
  RationalMatrix inverse_;
};

/// Coefficient vector in the shape basis of Sigma_{k,psi}.
inline std::vector<Rational> interpolate_stress_local(const PiecewiseSymTensor& tau, const MacroTriangle& m, int k)
{
  return StressElement(m, k).interpolate(tau);
}

inline RationalMatrix coefficient_matrix(const std::vector<PiecewiseSymTensor>& fields)
{
  int d = 0;
  for (const auto& f : fields) d = std::max(d, max_degree(f));
  std::vector<std::vector<Rational>> cols;
  for (const auto& f : fields) cols.push_back(flatten(f, d));
  return RationalMatrix::from_columns(cols);
}

/// P_k(T;S) and the psi enrichments are linearly independent.
inline bool stress_enrichment_is_direct(const MacroTriangle& m, int k)
{
  auto basis = stress_shape_basis(m, k);
  return rank(coefficient_matrix(basis)) == basis.size();
}

/// Spanning set of B_k^div + P_1(T;S) + span{psi} + sum_e b_e P_{k-2}(e; N^e(S)),
/// with N^e(S) = span{n(x)n, sym(n(x)t)}.
inline std::vector<PiecewiseSymTensor> stress_geometric_decomposition(const MacroTriangle& m, int k)
{
  auto out = div_bubble_basis(m, k, DivBubbleCharacterization::geometric);
  for (const auto& a : exponents<3>(1))
    for (int u = 0; u < 3; ++u) out.push_back(PiecewiseSymTensor::uniform(BaryPoly::monomial(a) * symmetric_unit(u)));
  for (int i = 0; i < 3; ++i) out.push_back(build_psi(m, k, i));
  if (k >= 2)
    for (int e = 0; e < 3; ++e) {
      const EdgeFrame& f = m.frame(e);
      const int a = f.from, b = f.to;
      const BaryPoly be = lambda(a) * lambda(b);
      for (const SymConst& unit : {sym_outer(f.normal, f.normal), sym_outer(f.normal, f.tangent)})
        for (int p = 0; p <= k - 2; ++p)
          out.push_back(PiecewiseSymTensor::uniform((be * pow(lambda(a), p) * pow(lambda(b), k - 2 - p)) * unit));
    }
  return out;
}

/// Every field in the span whose edge DoFs vanish is zero at the three macro
/// vertices. Checked on the whole kernel of the edge-DoF block.
inline bool stress_vertex_argument_holds(const MacroTriangle& m, int k)
{
  StressElement el(m, k);
  std::vector<StressDof> edge_dofs;
  for (const auto& d : el.dofs())
    if (std::holds_alternative<StressEdgeMoment>(d)) edge_dofs.push_back(d);
  auto ker = nullspace(dof_matrix(edge_dofs, el.basis(), m, k));
  for (const auto& v : ker) {
    PiecewiseSymTensor s = el.combine(v);
    for (int vert = 0; vert < 3; ++vert)
      for (int piece : pieces_at_interior_edge(vert)) {
        const auto p = bary_point(vert);
        const SymPoly& q = s.pieces[piece];
        if (sgn(q.xx.evaluate(p)) != 0 || sgn(q.xy.evaluate(p)) != 0 || sgn(q.yy.evaluate(p)) != 0) return false;
      }
  }
  return true;
}

}  // namespace airyfem
