#pragma once

// Global spaces on a conforming mesh and the exact discrete complex
//   P_1 -> U_{k+2,h} --J--> Sigma_{k,h} --div--> V_{k-1,h} -> 0.
// Global numbering is vertices, then edges in mesh order, then triangles. An
// edge is oriented from its lower to its higher vertex index; edge moments use
// Bernstein indices relative to that direction, and C1 normal-derivative DoFs
// use the normal rotate_cw(v_hi - v_lo).

#include "airyfem/c1_element.hpp"
#include "airyfem/exact_linalg.hpp"
#include "airyfem/mesh.hpp"
#include "airyfem/parallel.hpp"
#include "airyfem/random.hpp"
#include "airyfem/stress_element.hpp"

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace airyfem {

enum class SpaceFamily { U, Sigma, V };

inline const char* family_name(SpaceFamily f)
{
  switch (f) {
    case SpaceFamily::U: return "U";
    case SpaceFamily::Sigma: return "Sigma";
    case SpaceFamily::V: return "V";
  }
  return "?";
}

/// Per-entity DoF counts of U_{k+2,h}, Sigma_{k,h} and V_{k-1,h}.
struct EntityCounts {
  std::size_t vertex = 0, edge = 0, triangle = 0;
};

inline EntityCounts entity_counts(SpaceFamily f, int k)
{
  switch (f) {
    case SpaceFamily::U:
      if (k < 0) throw std::invalid_argument("U space requires k >= 0");
      if (k == 0) return {3, 0, 0};
      if (k == 1) return {3, 1, 0};
      return {3, static_cast<std::size_t>(2 * k - 1), static_cast<std::size_t>(k >= 4 ? (k - 2) * (k - 3) / 2 : 0)};
    case SpaceFamily::Sigma:
      if (k < 1) throw std::invalid_argument("stress space requires k >= 1");
      return {0, static_cast<std::size_t>(2 * (k + 1)), static_cast<std::size_t>(3 * k * (k - 1) / 2)};
    case SpaceFamily::V:
      if (k < 1) throw std::invalid_argument("displacement space requires k >= 1");
      return {0, 0, static_cast<std::size_t>(k * (k + 1))};
  }
  return {};
}

inline std::size_t space_dimension(const Mesh& mesh, SpaceFamily f, int k)
{
  const EntityCounts c = entity_counts(f, k);
  return c.vertex * mesh.num_vertices() + c.edge * mesh.num_edges() + c.triangle * mesh.num_triangles();
}

/// Local DoF a of triangle t is sign[a] times global DoF index[a].
struct LocalToGlobal {
  std::vector<std::size_t> index;
  std::vector<int> sign;
  std::vector<int> local_edge;  ///< -1 unless the DoF lives on a boundary edge of t
};

class GlobalSpace {
 public:
  GlobalSpace(const Mesh& mesh, SpaceFamily family, int k)
      : family_(family), k_(k), counts_(entity_counts(family, k)), nv_(mesh.num_vertices()), ne_(mesh.num_edges()),
        dimension_(space_dimension(mesh, family, k))
  {
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) local_.push_back(build_local(mesh, t));
  }

  SpaceFamily family() const { return family_; }
  int k() const { return k_; }
  std::size_t dimension() const { return dimension_; }
  const EntityCounts& counts() const { return counts_; }
  std::size_t num_triangles() const { return local_.size(); }
  const LocalToGlobal& local(std::size_t t) const { return local_.at(t); }

  std::size_t vertex_offset(std::size_t v) const { return v * counts_.vertex; }
  std::size_t edge_offset(std::size_t e) const { return nv_ * counts_.vertex + e * counts_.edge; }
  std::size_t triangle_offset(std::size_t t) const
  {
    return nv_ * counts_.vertex + ne_ * counts_.edge + t * counts_.triangle;
  }

  /// Negative control: reverses the sign of every DoF of triangle t on its local edge.
  void flip_local_edge_sign(std::size_t t, int local_edge)
  {
    auto& l = local_.at(t);
    for (std::size_t a = 0; a < l.sign.size(); ++a)
      if (l.local_edge[a] == local_edge) l.sign[a] = -l.sign[a];
  }

 private:
  LocalToGlobal build_local(const Mesh& mesh, std::size_t t) const
  {
    LocalToGlobal l;
    const auto& ids = mesh.triangles[t];
    auto push = [&](std::size_t g, int s, int e) {
      l.index.push_back(g);
      l.sign.push_back(s);
      l.local_edge.push_back(e);
    };
    auto edge_slot = [&](int e, int index, int degree) {
      return mesh.edge_orientation(t, e) > 0 ? index : degree - index;
    };
    std::size_t interior = 0;

    if (family_ == SpaceFamily::U) {
      const std::size_t value_moments = k_ >= 2 ? k_ - 1 : 0;
      for (const auto& dof : c1_dofs(k_).functionals) {
        if (const auto* d = std::get_if<VertexValue>(&dof)) {
          push(vertex_offset(ids[d->vertex]), 1, -1);
        } else if (const auto* d = std::get_if<VertexGradient>(&dof)) {
          push(vertex_offset(ids[d->vertex]) + 1 + d->component, 1, -1);
        } else if (const auto* d = std::get_if<EdgeValueMoment>(&dof)) {
          const std::size_t ge = mesh.triangle_edges[t][d->edge];
          push(edge_offset(ge) + edge_slot(d->edge, d->index, d->degree), 1, d->edge);
        } else if (const auto* d = std::get_if<EdgeNormalMoment>(&dof)) {
          const std::size_t ge = mesh.triangle_edges[t][d->edge];
          push(edge_offset(ge) + value_moments + edge_slot(d->edge, d->index, d->degree),
               mesh.edge_orientation(t, d->edge), d->edge);
        } else if (std::holds_alternative<InteriorMoment>(dof)) {
          push(triangle_offset(t) + interior++, 1, -1);
        } else {
          throw std::logic_error("unexpected DoF type in the standard C1 DoF set");
        }
      }
    } else if (family_ == SpaceFamily::Sigma) {
      for (const auto& dof : stress_dofs(k_)) {
        if (const auto* d = std::get_if<StressEdgeMoment>(&dof)) {
          const std::size_t ge = mesh.triangle_edges[t][d->edge];
          push(edge_offset(ge) + (d->tangential ? k_ + 1 : 0) + edge_slot(d->edge, d->index, k_), 1, d->edge);
        } else {
          push(triangle_offset(t) + interior++, 1, -1);
        }
      }
    } else {
      for (std::size_t a = 0; a < counts_.triangle; ++a) push(triangle_offset(t) + a, 1, -1);
    }
    return l;
  }

  SpaceFamily family_;
  int k_;
  EntityCounts counts_;
  std::size_t nv_, ne_;
  std::size_t dimension_;
  std::vector<LocalToGlobal> local_;
};

inline GlobalSpace assemble_space(const Mesh& mesh, SpaceFamily family, int k) { return GlobalSpace(mesh, family, k); }

/// Per-triangle element data: the macro triangle and the nodal bases (the
/// shape functions dual to the local DoFs).
struct ElementBasis {
  MacroTriangle macro;
  std::vector<PiecewiseScalar> u_nodal;
  std::vector<PiecewiseSymTensor> sigma_nodal;
};

inline std::vector<MacroTriangle> macro_triangles(const Mesh& mesh)
{
  std::vector<MacroTriangle> out;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) out.emplace_back(mesh.triangle(t));
  return out;
}

/// Monomials l^alpha of degree k-1 (outer) times the components x, y (inner).
inline std::vector<Exponent<3>> v_exponents(int k) { return exponents<3>(k - 1); }

/// Exact mass matrix of the monomials l^alpha, |alpha| = d, on a triangle of the given area.
inline RationalMatrix monomial_mass_matrix(int d, const Rational& area)
{
  const auto& exps = exponents<3>(d);
  RationalMatrix m(exps.size(), exps.size());
  for (std::size_t i = 0; i < exps.size(); ++i)
    for (std::size_t j = 0; j < exps.size(); ++j)
      m(i, j) = integrate_triangle(BaryPoly::monomial(exps[i]) * BaryPoly::monomial(exps[j]), area);
  return m;
}

/// The three spaces of the complex together with the element bases. U is built
/// for every k >= 0; Sigma and V only for k >= 2. The mixed solver does not
/// need the potentials and may skip their element bases.
class DiscreteComplex {
 public:
  DiscreteComplex(Mesh mesh, int k, bool with_potentials = true)
      : mesh_(std::move(mesh)), k_(k), u_(mesh_, SpaceFamily::U, k), with_potentials_(with_potentials)
  {
    if (k >= 2) {
      sigma_.emplace(mesh_, SpaceFamily::Sigma, k);
      v_.emplace(mesh_, SpaceFamily::V, k);
    }
    elements_.resize(mesh_.num_triangles(), ElementBasis{MacroTriangle(mesh_.triangle(0)), {}, {}});
    parallel_for(mesh_.num_triangles(), [&](std::size_t t) {
      ElementBasis& el = elements_[t];
      el.macro = MacroTriangle(mesh_.triangle(t));
      if (with_potentials_) {
        C1Element c1(el.macro, k_);
        for (std::size_t a = 0; a < c1.dimension(); ++a) el.u_nodal.push_back(c1.nodal_basis(a));
      }
      if (k_ >= 2) {
        StressElement st(el.macro, k_);
        for (std::size_t a = 0; a < st.dimension(); ++a) el.sigma_nodal.push_back(st.nodal_basis(a));
      }
    });
    if (k >= 2) {
      RationalMatrix ref = monomial_mass_matrix(k - 1, 1);
      mass_inverse_reference_ = *inverse(ref);
    }
  }

  const Mesh& mesh() const { return mesh_; }
  int k() const { return k_; }
  bool has_stress() const { return sigma_.has_value(); }
  bool has_potentials() const { return with_potentials_; }
  const GlobalSpace& U() const { return u_; }
  const GlobalSpace& Sigma() const { return require(sigma_); }
  const GlobalSpace& V() const { return require(v_); }
  const ElementBasis& element(std::size_t t) const { return elements_.at(t); }
  std::size_t num_elements() const { return elements_.size(); }

  /// Inverse of the scalar P_{k-1} monomial mass matrix on a triangle of unit area.
  const RationalMatrix& mass_inverse_reference() const { return mass_inverse_reference_; }

 private:
  const GlobalSpace& require(const std::optional<GlobalSpace>& s) const
  {
    if (!s) throw std::logic_error("stress and displacement spaces require k >= 2");
    return *s;
  }

  Mesh mesh_;
  int k_;
  GlobalSpace u_;
  bool with_potentials_;
  std::optional<GlobalSpace> sigma_, v_;
  std::vector<ElementBasis> elements_;
  RationalMatrix mass_inverse_reference_;
};

// ---------------------------------------------------------------------------
// L2 projection onto V_{k-1,h}

/// Local coefficients (alpha outer, component inner) of the L2 projection of a
/// piecewise vector field onto P_{k-1}(T; R^2).
inline std::vector<Rational> project_local_V(const PiecewiseVector& f, const MacroTriangle& m,
                                             const RationalMatrix& mass_inverse_reference, int k)
{
  const auto& exps = v_exponents(k);
  const std::size_t n = exps.size();
  std::array<std::vector<Rational>, 2> rhs{std::vector<Rational>(n), std::vector<Rational>(n)};
  for (std::size_t a = 0; a < n; ++a) {
    const BaryPoly w = BaryPoly::monomial(exps[a]);
    for (int j = 0; j < 3; ++j) {
      rhs[0][a] += integrate_piece(f.pieces[j].x * w, j, m.area());
      rhs[1][a] += integrate_piece(f.pieces[j].y * w, j, m.area());
    }
  }
  std::vector<Rational> out(2 * n);
  const Rational inv_area = 1 / m.area();
  for (int c = 0; c < 2; ++c) {
    auto coeffs = mass_inverse_reference * rhs[c];
    for (std::size_t a = 0; a < n; ++a) out[2 * a + c] = coeffs[a] * inv_area;
  }
  return out;
}

/// Q_{k-1,h}: elementwise L2 projection; field(t) is the field on triangle t.
inline std::vector<Rational> project_V(const DiscreteComplex& c, const std::function<PiecewiseVector(std::size_t)>& field)
{
  const GlobalSpace& V = c.V();
  std::vector<Rational> out(V.dimension());
  std::vector<std::vector<Rational>> local(c.num_elements());
  parallel_for(c.num_elements(), [&](std::size_t t) {
    local[t] = project_local_V(field(t), c.element(t).macro, c.mass_inverse_reference(), c.k());
  });
  for (std::size_t t = 0; t < c.num_elements(); ++t)
    for (std::size_t a = 0; a < local[t].size(); ++a) out[V.local(t).index[a]] = local[t][a];
  return out;
}

/// Field of a V coefficient vector on triangle t.
inline VecPoly v_field_on(const DiscreteComplex& c, const std::vector<Rational>& coeffs, std::size_t t)
{
  const auto& exps = v_exponents(c.k());
  const auto& l = c.V().local(t);
  VecPoly out{BaryPoly(c.k() - 1), BaryPoly(c.k() - 1)};
  for (std::size_t a = 0; a < exps.size(); ++a) {
    out.x[exps[a]] += coeffs[l.index[2 * a]];
    out.y[exps[a]] += coeffs[l.index[2 * a + 1]];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Interpolation into the global spaces

namespace detail {

// Averages sign-corrected local DoF values over all elements that see a DoF.
inline std::vector<Rational> average_local_dofs(const GlobalSpace& space,
                                                const std::vector<std::vector<Rational>>& local_values)
{
  std::vector<Rational> sum(space.dimension());
  std::vector<int> count(space.dimension(), 0);
  for (std::size_t t = 0; t < local_values.size(); ++t) {
    const auto& l = space.local(t);
    for (std::size_t a = 0; a < l.index.size(); ++a) {
      sum[l.index[a]] += local_values[t][a] * l.sign[a];
      ++count[l.index[a]];
    }
  }
  for (std::size_t g = 0; g < sum.size(); ++g)
    if (count[g] > 1) sum[g] /= count[g];
  return sum;
}

}  // namespace detail

/// I^div: global Sigma DoFs of a field given per triangle.
inline std::vector<Rational> interpolate_sigma(const DiscreteComplex& c,
                                               const std::function<PiecewiseSymTensor(std::size_t)>& field)
{
  const auto dofs = stress_dofs(c.k());
  std::vector<std::vector<Rational>> local(c.num_elements());
  parallel_for(c.num_elements(),
               [&](std::size_t t) { local[t] = apply_stress_dofs(dofs, field(t), c.element(t).macro, c.k()); });
  return detail::average_local_dofs(c.Sigma(), local);
}

/// I^{H2}: global U DoFs of a potential given per triangle.
inline std::vector<Rational> interpolate_U(const DiscreteComplex& c,
                                           const std::function<PiecewiseScalar(std::size_t)>& field)
{
  const auto dofs = c1_dofs(c.k()).functionals;
  std::vector<std::vector<Rational>> local(c.num_elements());
  parallel_for(c.num_elements(), [&](std::size_t t) { local[t] = apply_c1_dofs(dofs, field(t), c.element(t).macro); });
  return detail::average_local_dofs(c.U(), local);
}

/// Lagrange interpolant of degree d on the principal lattice {alpha / d}.
inline BaryPoly lagrange_interpolant(const BaryPoly& v, int d)
{
  const auto& exps = exponents<3>(d);
  thread_local std::map<int, RationalMatrix> inverse_vandermonde;
  auto it = inverse_vandermonde.find(d);
  if (it == inverse_vandermonde.end()) {
    RationalMatrix vm(exps.size(), exps.size());
    for (std::size_t i = 0; i < exps.size(); ++i) {
      std::array<Rational, 3> p{ratio(exps[i][0], d), ratio(exps[i][1], d), ratio(exps[i][2], d)};
      for (std::size_t j = 0; j < exps.size(); ++j) vm(i, j) = BaryPoly::monomial(exps[j]).evaluate(p);
    }
    it = inverse_vandermonde.emplace(d, *inverse(vm)).first;
  }
  std::vector<Rational> values(exps.size());
  for (std::size_t i = 0; i < exps.size(); ++i)
    values[i] = v.evaluate(std::array<Rational, 3>{ratio(exps[i][0], d), ratio(exps[i][1], d),
                                                   ratio(exps[i][2], d)});
  const auto coeffs = it->second * values;
  BaryPoly out(d);
  for (std::size_t j = 0; j < exps.size(); ++j) out[exps[j]] = coeffs[j];
  return out;
}

/// Quasi-interpolant into U_{k+2,h} of a continuous piecewise polynomial v
/// (one polynomial per triangle). Vertex gradients are averages of the
/// gradients of the degree k+2 Lagrange interpolant over the triangles sharing
/// the vertex; every other DoF is applied to v and averaged over the elements
/// sharing its entity, which for normal-derivative moments on a kinked edge is
/// the mean of the two one-sided values.
inline std::vector<Rational> quasi_interpolate_H2(const DiscreteComplex& c, const std::vector<BaryPoly>& v)
{
  if (v.size() != c.num_elements()) throw std::invalid_argument("quasi_interpolate_H2: one polynomial per triangle");
  const auto dofs = c1_dofs(c.k()).functionals;
  std::vector<std::vector<Rational>> local(c.num_elements());
  parallel_for(c.num_elements(), [&](std::size_t t) {
    const MacroTriangle& m = c.element(t).macro;
    local[t] = apply_c1_dofs(dofs, PiecewiseScalar::uniform(v[t]), m);
    const VecPoly g = gradient(lagrange_interpolant(v[t], c.k() + 2), m);
    for (std::size_t a = 0; a < dofs.size(); ++a)
      if (const auto* d = std::get_if<VertexGradient>(&dofs[a]))
        local[t][a] = (d->component == 0 ? g.x : g.y).evaluate(bary_point(d->vertex));
  });
  return detail::average_local_dofs(c.U(), local);
}

/// Restriction to triangle t of the U function with the given global coefficients.
inline PiecewiseScalar u_field_on(const DiscreteComplex& c, const std::vector<Rational>& coeffs, std::size_t t)
{
  const auto& l = c.U().local(t);
  const auto& nodal = c.element(t).u_nodal;
  PiecewiseScalar out;
  for (std::size_t a = 0; a < nodal.size(); ++a) {
    const Rational w = coeffs[l.index[a]] * l.sign[a];
    if (sgn(w) != 0) out += nodal[a] * w;
  }
  return out;
}

/// Restriction to triangle t of the Sigma function with the given global coefficients.
inline PiecewiseSymTensor sigma_field_on(const DiscreteComplex& c, const std::vector<Rational>& coeffs, std::size_t t)
{
  const auto& l = c.Sigma().local(t);
  const auto& nodal = c.element(t).sigma_nodal;
  PiecewiseSymTensor out = PiecewiseSymTensor::uniform({BaryPoly(c.k()), BaryPoly(c.k()), BaryPoly(c.k())});
  for (std::size_t a = 0; a < nodal.size(); ++a) {
    const Rational w = coeffs[l.index[a]] * l.sign[a];
    if (sgn(w) != 0) out += nodal[a] * w;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Global polynomials in the physical coordinates

/// Homogeneous polynomial in (w, x, y); w = 1 on the plane.
using PlanePoly = HomPoly<3>;

struct PlaneSym {
  PlanePoly xx, xy, yy;
};

/// The same polynomial in the barycentric coordinates of m.
inline BaryPoly to_barycentric(const PlanePoly& p, const MacroTriangle& m)
{
  std::array<std::array<Rational, 3>, 3> forms;
  forms[0] = {1, 1, 1};
  forms[1] = {m.vertex(0).x, m.vertex(1).x, m.vertex(2).x};
  forms[2] = {m.vertex(0).y, m.vertex(1).y, m.vertex(2).y};
  return substitute<3>(p, forms);
}

inline SymPoly to_barycentric(const PlaneSym& s, const MacroTriangle& m)
{
  return {to_barycentric(s.xx, m), to_barycentric(s.xy, m), to_barycentric(s.yy, m)};
}

inline PlanePoly random_plane_poly(RationalRng& rng, int degree) { return random_hom_poly<3>(rng, degree); }

inline PlaneSym random_plane_sym(RationalRng& rng, int degree)
{
  return {random_plane_poly(rng, degree), random_plane_poly(rng, degree), random_plane_poly(rng, degree)};
}

// ---------------------------------------------------------------------------
// Operator matrices

/// Matrix of J: U_{k+2,h} -> Sigma_{k,h}. Each Sigma DoF row is computed from
/// every element that sees it; the rows must agree, which certifies that J
/// maps the global U space into the global Sigma space.
inline RationalMatrix assemble_J(const DiscreteComplex& c)
{
  const GlobalSpace& U = c.U();
  const GlobalSpace& S = c.Sigma();
  const auto dofs = stress_dofs(c.k());
  // rows[t][b] = sparse row of local Sigma DoF b of triangle t over global U DoFs.
  std::vector<std::vector<std::map<std::size_t, Rational>>> rows(c.num_elements());
  parallel_for(c.num_elements(), [&](std::size_t t) {
    const ElementBasis& el = c.element(t);
    const auto& lu = U.local(t);
    rows[t].assign(dofs.size(), {});
    for (std::size_t a = 0; a < el.u_nodal.size(); ++a) {
      const auto vals = apply_stress_dofs(dofs, airy(el.u_nodal[a], el.macro), el.macro, c.k());
      for (std::size_t b = 0; b < vals.size(); ++b)
        if (sgn(vals[b]) != 0) rows[t][b][lu.index[a]] += vals[b] * lu.sign[a] * S.local(t).sign[b];
    }
    for (auto& r : rows[t])
      for (auto it = r.begin(); it != r.end();) it = sgn(it->second) == 0 ? r.erase(it) : std::next(it);
  });

  RationalMatrix j(S.dimension(), U.dimension());
  std::vector<const std::map<std::size_t, Rational>*> seen(S.dimension(), nullptr);
  for (std::size_t t = 0; t < c.num_elements(); ++t) {
    const auto& ls = S.local(t);
    for (std::size_t b = 0; b < ls.index.size(); ++b) {
      const std::size_t g = ls.index[b];
      if (seen[g]) {
        if (*seen[g] != rows[t][b])
          throw std::logic_error("J matrix: Sigma DoF " + std::to_string(g) + " differs between elements");
        continue;
      }
      seen[g] = &rows[t][b];
      for (const auto& [col, val] : rows[t][b]) j(g, col) = val;
    }
  }
  return j;
}

/// Matrix of div: Sigma_{k,h} -> V_{k-1,h}, via exact L2 projection of the
/// divergence of each nodal stress basis function.
inline RationalMatrix assemble_div(const DiscreteComplex& c)
{
  const GlobalSpace& S = c.Sigma();
  const GlobalSpace& V = c.V();
  std::vector<std::vector<std::vector<Rational>>> local(c.num_elements());
  parallel_for(c.num_elements(), [&](std::size_t t) {
    const ElementBasis& el = c.element(t);
    for (const auto& s : el.sigma_nodal)
      local[t].push_back(project_local_V(divergence(s, el.macro), el.macro, c.mass_inverse_reference(), c.k()));
  });
  RationalMatrix d(V.dimension(), S.dimension());
  for (std::size_t t = 0; t < c.num_elements(); ++t) {
    const auto& ls = S.local(t);
    const auto& lv = V.local(t);
    for (std::size_t b = 0; b < ls.index.size(); ++b)
      for (std::size_t a = 0; a < lv.index.size(); ++a)
        if (sgn(local[t][b][a]) != 0) d(lv.index[a], ls.index[b]) += local[t][b][a] * ls.sign[b];
  }
  return d;
}

/// U coefficients of a global affine function a + b x + c y.
inline std::vector<Rational> affine_in_U(const DiscreteComplex& c, const Rational& a, const Rational& bx,
                                         const Rational& cy)
{
  PlanePoly p(1);
  p[{1, 0, 0}] = a;
  p[{0, 1, 0}] = bx;
  p[{0, 0, 1}] = cy;
  return interpolate_U(c, [&](std::size_t t) { return PiecewiseScalar::uniform(to_barycentric(p, c.element(t).macro)); });
}

// ---------------------------------------------------------------------------
// Verification

struct C1CheckReport {
  bool passed = true;
  std::size_t interior_edges = 0;
  std::size_t pairs_checked = 0;
  std::optional<std::size_t> witness_edge;  ///< global edge of the first nonzero jump
  std::optional<std::size_t> witness_dof;   ///< global U DoF of the first nonzero jump
  std::string witness_kind;                 ///< "value" or "normal derivative"
};

/// For each interior edge and each global U basis function touching it, the
/// value and normal-derivative traces from both sides agree exactly.
inline C1CheckReport global_c1_check(const GlobalSpace& U, const DiscreteComplex& c)
{
  const Mesh& mesh = c.mesh();
  C1CheckReport r;
  // Traces of the restriction of global DoF g to triangle t on local edge e,
  // in the global edge direction and with the global normal.
  auto traces = [&](std::size_t t, int e) {
    std::map<std::size_t, std::pair<EdgePoly, EdgePoly>> out;
    const ElementBasis& el = c.element(t);
    const auto& l = U.local(t);
    const int orient = mesh.edge_orientation(t, e);
    for (std::size_t a = 0; a < el.u_nodal.size(); ++a) {
      EdgePoly value = c1_edge_trace(el.u_nodal[a], el.macro, e) * Rational(l.sign[a]);
      EdgePoly normal = c1_normal_trace(el.u_nodal[a], el.macro, e) * Rational(l.sign[a] * orient);
      if (orient < 0) {
        value = substitute<2>(value, std::array<std::array<Rational, 2>, 2>{{{0, 1}, {1, 0}}});
        normal = substitute<2>(normal, std::array<std::array<Rational, 2>, 2>{{{0, 1}, {1, 0}}});
      }
      auto& slot = out[l.index[a]];
      slot.first += value;
      slot.second += normal;
    }
    return out;
  };

  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    if (mesh.edge_triangles[e].size() != 2) continue;
    ++r.interior_edges;
    std::array<std::map<std::size_t, std::pair<EdgePoly, EdgePoly>>, 2> side;
    for (int s = 0; s < 2; ++s) {
      const std::size_t t = mesh.edge_triangles[e][s];
      int local = 0;
      while (mesh.triangle_edges[t][local] != static_cast<int>(e)) ++local;
      side[s] = traces(t, local);
    }
    std::map<std::size_t, bool> dofs;
    for (const auto& s : side)
      for (const auto& [g, tr] : s) dofs[g] = true;
    for (const auto& [g, unused] : dofs) {
      ++r.pairs_checked;
      EdgePoly dv, dn;
      for (int s = 0; s < 2; ++s) {
        auto it = side[s].find(g);
        if (it == side[s].end()) continue;
        const Rational w = s == 0 ? 1 : -1;
        dv += it->second.first * w;
        dn += it->second.second * w;
      }
      if (r.passed && (!dv.is_zero() || !dn.is_zero())) {
        r.passed = false;
        r.witness_edge = e;
        r.witness_dof = g;
        r.witness_kind = dv.is_zero() ? "normal derivative" : "value";
      }
    }
  }
  return r;
}

inline C1CheckReport global_c1_check(const DiscreteComplex& c) { return global_c1_check(c.U(), c); }

struct ExactnessReport {
  bool refused = false;
  std::string message;
  std::size_t dim_U = 0, dim_Sigma = 0, dim_V = 0;
  std::size_t rank_J = 0, rank_div = 0;
  long alternating_sum = 0;  ///< dim U - 3 - dim Sigma + dim V
  bool rank_J_ok = false, rank_div_ok = false, kernel_matches_image = false, div_J_zero = false;
  bool passed = false;
};

/// Exact-rank certificate of exactness on a simply connected mesh:
/// rank J = dim U - 3, rank div = dim V, rank J + rank div = dim Sigma, div J = 0.
inline ExactnessReport verify_exactness(const DiscreteComplex& c)
{
  ExactnessReport r;
  if (!c.mesh().is_simply_connected()) {
    r.refused = true;
    r.message = "exactness is only certified on simply connected meshes (connected, V - E + F = 1); got V - E + F = " +
                std::to_string(c.mesh().euler_characteristic());
    return r;
  }
  if (c.k() < 2) {
    r.refused = true;
    r.message = "exactness requires k >= 2";
    return r;
  }
  const RationalMatrix j = assemble_J(c);
  const RationalMatrix d = assemble_div(c);
  r.dim_U = c.U().dimension();
  r.dim_Sigma = c.Sigma().dimension();
  r.dim_V = c.V().dimension();
  r.alternating_sum = static_cast<long>(r.dim_U) - 3 - static_cast<long>(r.dim_Sigma) + static_cast<long>(r.dim_V);
  r.rank_J = rank(j);
  r.rank_div = rank(d);
  r.div_J_zero = (d * j).is_zero();
  r.rank_J_ok = r.rank_J + 3 == r.dim_U;
  r.rank_div_ok = r.rank_div == r.dim_V;
  r.kernel_matches_image = r.div_J_zero && r.rank_J + r.rank_div == r.dim_Sigma;
  r.passed = r.rank_J_ok && r.rank_div_ok && r.kernel_matches_image && r.alternating_sum == 0;
  if (!r.passed) {
    if (!r.div_J_zero) r.message = "div J is not zero";
    else if (!r.rank_J_ok) r.message = "rank J != dim U - 3";
    else if (!r.rank_div_ok) r.message = "rank div != dim V";
    else r.message = "rank J + rank div != dim Sigma";
  }
  return r;
}

struct CommutingReport {
  int trials = 0;
  int div_identity_failures = 0;  ///< div I tau != Q div tau
  int J_identity_failures = 0;    ///< I J v != J I v
  std::string witness;
  bool passed() const { return trials > 0 && div_identity_failures == 0 && J_identity_failures == 0; }
};

/// Both commuting identities for random global polynomials: tau of degree
/// tau_degree (default k + 2) and v of degree v_degree (default k + 4).
inline CommutingReport verify_commuting(const DiscreteComplex& c, RationalRng& rng, int trials, int tau_degree = -1,
                                        int v_degree = -1)
{
  if (tau_degree < 0) tau_degree = c.k() + 2;
  if (v_degree < 0) v_degree = c.k() + 4;
  const RationalMatrix j = assemble_J(c);
  const RationalMatrix d = assemble_div(c);
  CommutingReport r;
  for (int trial = 0; trial < trials; ++trial) {
    ++r.trials;
    const PlaneSym tau = random_plane_sym(rng, tau_degree);
    std::vector<SymPoly> tau_local(c.num_elements());
    for (std::size_t t = 0; t < c.num_elements(); ++t) tau_local[t] = to_barycentric(tau, c.element(t).macro);
    const auto lhs = d * interpolate_sigma(c, [&](std::size_t t) { return PiecewiseSymTensor::uniform(tau_local[t]); });
    const auto rhs = project_V(
        c, [&](std::size_t t) { return PiecewiseVector::uniform(divergence(tau_local[t], c.element(t).macro)); });
    if (lhs != rhs) {
      ++r.div_identity_failures;
      if (r.witness.empty()) r.witness = "div identity fails in trial " + std::to_string(trial);
    }

    const PlanePoly v = random_plane_poly(rng, v_degree);
    std::vector<BaryPoly> v_local(c.num_elements());
    for (std::size_t t = 0; t < c.num_elements(); ++t) v_local[t] = to_barycentric(v, c.element(t).macro);
    const auto lhs2 = interpolate_sigma(
        c, [&](std::size_t t) { return PiecewiseSymTensor::uniform(airy(v_local[t], c.element(t).macro)); });
    const auto rhs2 = j * interpolate_U(c, [&](std::size_t t) { return PiecewiseScalar::uniform(v_local[t]); });
    if (lhs2 != rhs2) {
      ++r.J_identity_failures;
      if (r.witness.empty()) r.witness = "J identity fails in trial " + std::to_string(trial);
    }
  }
  return r;
}

}  // namespace airyfem
