#pragma once

// C1 potential elements on the barycentric split:
//   U_{k+2}(T) = P_{k+2}(T) + span{v_0, v_1, v_2}    (k >= 2)
//   U_3(T)     = P_3(T) + span{w_0, w_1, w_2}
//   U_2(T)     = P_2(T) + span{u_0, u_1, u_2}
// Normal derivatives use the unnormalized outward normal of each edge, so the
// coefficients c_{i,j} = grad(l_i).n_j below are negative for i = j.

#include "airyfem/exact_linalg.hpp"
#include "airyfem/piecewise.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace airyfem {

inline int mod3(int i) { return ((i % 3) + 3) % 3; }

/// v_i = C_T/(k+1) (l_i^R)^(k+1) (l_{i+2} - l_{i+1}); the Airy potential of psi_i^k.
inline PiecewiseScalar build_v(const MacroTriangle& m, int k, int i)
{
  if (k < 1) throw std::invalid_argument("enrichment potential requires k >= 1");
  const Rational c = m.airy_constant() / (k + 1);
  return pow(lambda_refined(i), k + 1) * (lambda(i + 2) - lambda(i + 1)) * c;
}

/// v_{i,j} for j = i+1 or i-1 (mod 3). Its normal derivative lives on e_j only.
inline PiecewiseScalar build_v_edge(const MacroTriangle& m, int k, int i, int j)
{
  i = mod3(i);
  j = mod3(j);
  if (j == i) throw std::invalid_argument("build_v_edge: j must differ from i");
  const Rational ct = m.airy_constant();
  PiecewiseScalar first = (pow(lambda_refined(i), k + 1) - PiecewiseScalar::uniform(pow(lambda(i), k + 1))) *
                          (lambda(i - 1) - lambda(i + 1)) * (ct / (k + 1));
  const BaryPoly bubble = pow(lambda(i), k) * lambda(i + 1) * lambda(i - 1) * ct;
  const Rational sign = j == mod3(i + 1) ? -1 : 1;
  return first + PiecewiseScalar::uniform(bubble * sign);
}

/// (v_{i+1,i} - v_{i-1,i}) / (4 C_T c_{i,i}) at k = 1. Its normal derivative is
/// b_{e_i} on e_i but (c_{j,j} / (4 c_{i,i})) b_{e_j} on the other two edges,
/// because at k = 1 the bubble term of v_{i,j} has a nonzero normal derivative.
inline PiecewiseScalar build_w_unbalanced(const MacroTriangle& m, int i)
{
  const Rational scale = 1 / (4 * m.airy_constant() * m.c(i, i));
  return (build_v_edge(m, 1, i + 1, i) - build_v_edge(m, 1, i - 1, i)) * scale;
}

/// w_i = (v_{i+1,i} - v_{i-1,i} - C_T b_T) / (3 C_T c_{i,i}), so that
/// d_n w_i = delta_ij b_{e_i} on every boundary edge e_j.
inline PiecewiseScalar build_w(const MacroTriangle& m, int i)
{
  const Rational ct = m.airy_constant();
  const BaryPoly bT = lambda(0) * lambda(1) * lambda(2) * ct;
  const Rational scale = 1 / (3 * ct * m.c(i, i));
  return (build_v_edge(m, 1, i + 1, i) - build_v_edge(m, 1, i - 1, i) - PiecewiseScalar::uniform(bT)) * scale;
}

/// s_i = l_{i+1} l_{i+2} (l_{i+1} - l_{i+2}).
inline BaryPoly build_s(int i)
{
  return lambda(i + 1) * lambda(i + 2) * (lambda(i + 1) - lambda(i + 2));
}

/// u_i = s_i - 3(c_{i+1,i} - c_{i+2,i}) w_i - c_{i+1,i+1} w_{i+1} + c_{i+2,i+2} w_{i+2}.
inline PiecewiseScalar build_u(const MacroTriangle& m, int i)
{
  const int i1 = mod3(i + 1), i2 = mod3(i + 2);
  return PiecewiseScalar::uniform(build_s(i)) - build_w(m, i) * (3 * (m.c(i1, i) - m.c(i2, i))) -
         build_w(m, i1) * m.c(i1, i1) + build_w(m, i2) * m.c(i2, i2);
}

inline int c1_dimension(int k)
{
  if (k < 0) throw std::invalid_argument("C1 element requires k >= 0");
  if (k == 0) return 9;
  if (k == 1) return 12;
  return (k + 4) * (k + 3) / 2 + 3;
}

struct C1ShapeBasis {
  int k = 0;
  std::vector<PiecewiseScalar> functions;
  std::vector<std::size_t> block_offsets;  ///< size = number of blocks + 1
  std::vector<std::string> block_names;
};

/// Block-organized basis. For k >= 2 the blocks are U0_v, U1_v, U0_e, U1_e, U0_T;
/// for k = 1 they are U0_v, U1_v, W; for k = 0 a single block P_2 + {u_i}.
inline C1ShapeBasis shape_basis_U(const MacroTriangle& m, int k)
{
  C1ShapeBasis b;
  b.k = k;
  auto open_block = [&](const char* name) {
    b.block_offsets.push_back(b.functions.size());
    b.block_names.push_back(name);
  };
  auto add = [&](const BaryPoly& p) { b.functions.push_back(PiecewiseScalar::uniform(p)); };

  if (k == 0) {
    open_block("P2+u");
    for (const auto& a : exponents<3>(2)) add(BaryPoly::monomial(a));
    for (int i = 0; i < 3; ++i) b.functions.push_back(build_u(m, i));
    b.block_offsets.push_back(b.functions.size());
    return b;
  }
  if (k < 0) throw std::invalid_argument("C1 element requires k >= 0");

  const BaryPoly bT = lambda(0) * lambda(1) * lambda(2);
  open_block("U0_v");
  for (int v = 0; v < 3; ++v) add(pow(lambda(v), k + 2));
  open_block("U1_v");
  for (int v = 0; v < 3; ++v)
    for (int o : {v + 1, v + 2}) add(pow(lambda(v), k + 1) * lambda(o));
  if (k == 1) {
    open_block("W");
    for (int i = 0; i < 3; ++i) b.functions.push_back(build_w(m, i));
  } else {
    open_block("U0_e");
    for (int e = 0; e < 3; ++e)
      for (int q = 0; q <= k - 2; ++q) add(pow(lambda(e + 1), 2 + k - 2 - q) * pow(lambda(e + 2), 2 + q));
    open_block("U1_e");
    for (int e = 0; e < 3; ++e) {
      const BaryPoly bebT = lambda(e + 1) * lambda(e + 2) * bT;
      for (int q = 0; q <= k - 3; ++q) add(bebT * pow(lambda(e + 1), k - 3 - q) * pow(lambda(e + 2), q));
      b.functions.push_back(build_v_edge(m, k, e + 1, e));
      b.functions.push_back(build_v_edge(m, k, e + 2, e));
    }
    open_block("U0_T");
    if (k >= 4)
      for (const auto& a : exponents<3>(k - 4)) add(bT * bT * BaryPoly::monomial(a));
  }
  b.block_offsets.push_back(b.functions.size());
  return b;
}

// Degrees of freedom on piecewise scalars. Edge moments return r with
// int_e (...) ds = r |e| and use the test monomial m0^(degree-index) m1^index,
// with m0 at the edge start v_{e+1}.
struct VertexValue {
  int vertex;
};
struct VertexGradient {
  int vertex;
  int component;  ///< 0 = x, 1 = y
};
/// Derivative at v_vertex along t_{vertex,toward} = v_toward - v_vertex.
struct VertexDirectional {
  int vertex;
  int toward;
};
struct EdgeValueMoment {
  int edge;
  int index;
  int degree;
};
struct EdgeNormalMoment {
  int edge;
  int index;
  int degree;
};
/// D_e(d_n v): 6/|e| int_e d_n v ds - 2 (d_n v(e(0)) + d_n v(e(1))).
struct EdgeNormalD {
  int edge;
};
struct InteriorMoment {
  Exponent<3> alpha;
};

using ScalarDof =
    std::variant<VertexValue, VertexGradient, VertexDirectional, EdgeValueMoment, EdgeNormalMoment, EdgeNormalD, InteriorMoment>;

enum class C1DofVariant { standard, modified };

struct C1DofSet {
  std::vector<ScalarDof> functionals;
  std::vector<std::size_t> block_offsets;
};

inline C1DofSet c1_dofs(int k, C1DofVariant variant = C1DofVariant::standard)
{
  if (k < 0) throw std::invalid_argument("C1 DoFs require k >= 0");
  if (variant == C1DofVariant::modified && k > 1) throw std::invalid_argument("modified C1 DoFs exist only for k = 0, 1");
  C1DofSet d;
  auto open_block = [&] { d.block_offsets.push_back(d.functionals.size()); };
  open_block();
  for (int v = 0; v < 3; ++v) d.functionals.push_back(VertexValue{v});
  if (k >= 1 || variant == C1DofVariant::modified) open_block();
  for (int v = 0; v < 3; ++v) {
    if (variant == C1DofVariant::modified) {
      d.functionals.push_back(VertexDirectional{v, mod3(v - 1)});
      d.functionals.push_back(VertexDirectional{v, mod3(v + 1)});
    } else {
      d.functionals.push_back(VertexGradient{v, 0});
      d.functionals.push_back(VertexGradient{v, 1});
    }
  }
  if (k == 1) {
    open_block();
    for (int e = 0; e < 3; ++e) {
      if (variant == C1DofVariant::modified) d.functionals.push_back(EdgeNormalD{e});
      else d.functionals.push_back(EdgeNormalMoment{e, 0, 0});
    }
  } else if (k >= 2) {
    open_block();
    for (int e = 0; e < 3; ++e)
      for (int a = 0; a <= k - 2; ++a) d.functionals.push_back(EdgeValueMoment{e, a, k - 2});
    open_block();
    for (int e = 0; e < 3; ++e)
      for (int a = 0; a <= k - 1; ++a) d.functionals.push_back(EdgeNormalMoment{e, a, k - 1});
    open_block();
    if (k >= 4)
      for (const auto& alpha : exponents<3>(k - 4)) d.functionals.push_back(InteriorMoment{alpha});
  }
  d.block_offsets.push_back(d.functionals.size());
  return d;
}

/// D_e on an edge polynomial: 6 r - 2 (q(m0 = 1) + q(m1 = 1)) where int_e q = r |e|.
inline Rational edge_functional_D(const EdgePoly& q)
{
  return 6 * integrate_edge(q) - 2 * (q.evaluate<Rational>({1, 0}) + q.evaluate<Rational>({0, 1}));
}

/// Piece of the split that contains vertex v (any piece adjacent to [v, v_c]).
inline int piece_at_vertex(int v) { return mod3(v + 1); }

/// Trace of v on boundary edge e (m0 at v_{e+1}).
inline EdgePoly c1_edge_trace(const PiecewiseScalar& v, const MacroTriangle& m, int e)
{
  return restrict_to_edge(v.pieces[e], m.frame(e).from, m.frame(e).to);
}

/// Trace of the outward (unnormalized) normal derivative on boundary edge e.
inline EdgePoly c1_normal_trace(const PiecewiseScalar& v, const MacroTriangle& m, int e)
{
  const EdgeFrame& f = m.frame(e);
  return restrict_to_edge(directional_derivative(v.pieces[e], m, f.normal), f.from, f.to);
}

inline std::vector<Rational> apply_c1_dofs(const std::vector<ScalarDof>& dofs, const PiecewiseScalar& v,
                                           const MacroTriangle& m)
{
  std::array<std::optional<EdgePoly>, 3> value_traces, normal_traces;
  std::array<std::optional<VecPoly>, 3> vertex_gradients;
  auto value_trace = [&](int e) -> const EdgePoly& {
    if (!value_traces[e]) value_traces[e] = c1_edge_trace(v, m, e);
    return *value_traces[e];
  };
  auto normal_trace = [&](int e) -> const EdgePoly& {
    if (!normal_traces[e]) normal_traces[e] = c1_normal_trace(v, m, e);
    return *normal_traces[e];
  };
  auto gradient_at = [&](int vert) -> const VecPoly& {
    if (!vertex_gradients[vert]) vertex_gradients[vert] = gradient(v.pieces[piece_at_vertex(vert)], m);
    return *vertex_gradients[vert];
  };

  std::vector<Rational> out;
  out.reserve(dofs.size());
  for (const auto& dof : dofs) {
    out.push_back(std::visit(
        [&](const auto& d) -> Rational {
          using D = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<D, VertexValue>) {
            return v.pieces[piece_at_vertex(d.vertex)].evaluate(bary_point(d.vertex));
          } else if constexpr (std::is_same_v<D, VertexGradient>) {
            const VecPoly& g = gradient_at(d.vertex);
            return (d.component == 0 ? g.x : g.y).evaluate(bary_point(d.vertex));
          } else if constexpr (std::is_same_v<D, VertexDirectional>) {
            const VecPoly& g = gradient_at(d.vertex);
            const Vec2 t = m.vertex(d.toward) - m.vertex(d.vertex);
            return g.x.evaluate(bary_point(d.vertex)) * t.x + g.y.evaluate(bary_point(d.vertex)) * t.y;
          } else if constexpr (std::is_same_v<D, EdgeValueMoment>) {
            return integrate_edge(value_trace(d.edge) * EdgePoly::monomial({d.degree - d.index, d.index}));
          } else if constexpr (std::is_same_v<D, EdgeNormalMoment>) {
            return integrate_edge(normal_trace(d.edge) * EdgePoly::monomial({d.degree - d.index, d.index}));
          } else if constexpr (std::is_same_v<D, EdgeNormalD>) {
            return edge_functional_D(normal_trace(d.edge));
          } else {
            const BaryPoly w = BaryPoly::monomial(d.alpha);
            Rational sum = 0;
            for (int j = 0; j < 3; ++j) sum += integrate_piece(v.pieces[j] * w, j, m.area());
            return sum;
          }
        },
        dof));
  }
  return out;
}

inline RationalMatrix c1_dof_matrix(const std::vector<ScalarDof>& dofs, const std::vector<PiecewiseScalar>& basis,
                                    const MacroTriangle& m)
{
  std::vector<std::vector<Rational>> cols;
  for (const auto& b : basis) cols.push_back(apply_c1_dofs(dofs, b, m));
  return RationalMatrix::from_columns(cols);
}

struct C1UnisolvenceReport {
  RationalMatrix matrix;
  Rational determinant;
  bool invertible = false;
  bool block_pattern_ok = true;        ///< blocks above the diagonal vanish
  bool diagonal_blocks_invertible = true;
  std::string failure;                 ///< first offending block, if any
};

inline C1UnisolvenceReport verify_unisolvence_c1(const MacroTriangle& m, int k)
{
  const C1ShapeBasis basis = shape_basis_U(m, k);
  const C1DofSet dofs = c1_dofs(k);
  C1UnisolvenceReport r;
  r.matrix = c1_dof_matrix(dofs.functionals, basis.functions, m);
  r.determinant = determinant(r.matrix);
  r.invertible = sgn(r.determinant) != 0;
  const std::size_t nb = basis.block_offsets.size() - 1;
  if (dofs.block_offsets.size() - 1 != nb) throw std::logic_error("C1 DoF and basis block counts differ");
  for (std::size_t row = 0; row < nb; ++row)
    for (std::size_t col = 0; col < nb; ++col) {
      RationalMatrix blk = r.matrix.block(dofs.block_offsets[row], dofs.block_offsets[row + 1],
                                          basis.block_offsets[col], basis.block_offsets[col + 1]);
      if (col > row && !blk.is_zero()) {
        r.block_pattern_ok = false;
        if (r.failure.empty())
          r.failure = "nonzero block (D" + std::to_string(row) + ", " + basis.block_names[col] + ")";
      }
      if (col == row && (blk.rows() != blk.cols() || sgn(determinant(blk)) == 0)) {
        r.diagonal_blocks_invertible = false;
        if (r.failure.empty()) r.failure = "singular diagonal block " + basis.block_names[col];
      }
    }
  return r;
}

inline bool is_c1_basis(const C1ShapeBasis& b, const MacroTriangle& m)
{
  for (const auto& f : b.functions)
    if (!is_c1(f, m)) return false;
  return true;
}

/// Boundary traces of every basis function lie in P_{k+2}(e) and normal
/// derivative traces in P_{k+1}(e).
inline bool c1_trace_degrees_ok(const C1ShapeBasis& b, const MacroTriangle& m)
{
  const int k = b.k;
  auto fits = [](const EdgePoly& q, int degree) { return true_degree(q) <= degree; };

  // The reduced space U_2 has cubic Hermite value traces and linear normal traces.
  const int value_degree = k == 0 ? 3 : k + 2;
  const int normal_degree = k == 0 ? 1 : k + 1;
  for (const auto& f : b.functions)
    for (int e = 0; e < 3; ++e) {
      if (!fits(c1_edge_trace(f, m, e), value_degree)) return false;
      if (!fits(c1_normal_trace(f, m, e), normal_degree)) return false;
    }
  return true;
}

/// Local C1 element with standard DoFs and the inverted DoF matrix.
class C1Element {
 public:
  C1Element(const MacroTriangle& m, int k) : macro_(m), k_(k), shape_(shape_basis_U(m, k)), dofs_(c1_dofs(k))
  {
    auto inv = inverse(c1_dof_matrix(dofs_.functionals, shape_.functions, m));
    if (!inv) throw std::runtime_error("C1 DoF matrix is singular for k = " + std::to_string(k));
    inverse_ = std::move(*inv);
  }

  const MacroTriangle& macro() const { return macro_; }
  int degree() const { return k_; }
  std::size_t dimension() const { return shape_.functions.size(); }
  const C1ShapeBasis& shape() const { return shape_; }
  const std::vector<PiecewiseScalar>& basis() const { return shape_.functions; }
  const std::vector<ScalarDof>& dofs() const { return dofs_.functionals; }
  const RationalMatrix& inverse_dof_matrix() const { return inverse_; }

  std::vector<Rational> dof_values(const PiecewiseScalar& v) const { return apply_c1_dofs(dofs_.functionals, v, macro_); }
  std::vector<Rational> coefficients_from_dofs(const std::vector<Rational>& values) const { return inverse_ * values; }
  std::vector<Rational> interpolate(const PiecewiseScalar& v) const { return coefficients_from_dofs(dof_values(v)); }

  PiecewiseScalar combine(const std::vector<Rational>& coeffs) const
  {
    PiecewiseScalar out;
    for (std::size_t b = 0; b < shape_.functions.size(); ++b)
      if (sgn(coeffs[b]) != 0) out += shape_.functions[b] * coeffs[b];
    return out;
  }

  PiecewiseScalar nodal_basis(std::size_t a) const { return combine(inverse_.column(a)); }

 private:
  MacroTriangle macro_;
  int k_;
  C1ShapeBasis shape_;
  C1DofSet dofs_;
  RationalMatrix inverse_;
};

inline std::vector<Rational> interpolate_c1_local(const PiecewiseScalar& v, const MacroTriangle& m, int k)
{
  return C1Element(m, k).interpolate(v);
}

enum class LowOrderSpace { U2, U3 };

/// Closed-form bases dual to the modified DoFs: vertex values, the directional
/// derivatives along t_{i,i-1} and t_{i,i+1}, and (U3 only) D_e(d_n v).
/// Functions are ordered like the functionals of c1_dofs(k, modified).
struct DualBasisLowOrder {
  LowOrderSpace space;
  std::vector<PiecewiseScalar> functions;
  std::vector<ScalarDof> functionals;
};

inline DualBasisLowOrder dual_basis_low_order(const MacroTriangle& m, LowOrderSpace space)
{
  DualBasisLowOrder d;
  d.space = space;
  const int k = space == LowOrderSpace::U3 ? 1 : 0;
  d.functionals = c1_dofs(k, C1DofVariant::modified).functionals;

  std::array<PiecewiseScalar, 3> phi_next, phi_prev, phi_vertex;  // phi^1_{i,i+1}, phi^1_{i,i-1}, phi^0_i
  if (space == LowOrderSpace::U3) {
    std::array<PiecewiseScalar, 3> w{build_w(m, 0), build_w(m, 1), build_w(m, 2)};
    for (int i = 0; i < 3; ++i) {
      const int ip = mod3(i + 1), im = mod3(i - 1);
      phi_next[i] = PiecewiseScalar::uniform(lambda(i) * lambda(i) * lambda(ip)) - w[im] * (2 * m.c(i, im));
      phi_prev[i] = PiecewiseScalar::uniform(lambda(i) * lambda(i) * lambda(im)) - w[ip] * (2 * m.c(i, ip));
      phi_vertex[i] = PiecewiseScalar::uniform(pow(lambda(i), 3)) + phi_next[i] * Rational(3) + phi_prev[i] * Rational(3);
    }
    for (int i = 0; i < 3; ++i) d.functions.push_back(phi_vertex[i]);
    for (int i = 0; i < 3; ++i) {
      d.functions.push_back(phi_prev[i]);
      d.functions.push_back(phi_next[i]);
    }
    for (int i = 0; i < 3; ++i) d.functions.push_back(w[i]);
  } else {
    std::array<PiecewiseScalar, 3> u{build_u(m, 0), build_u(m, 1), build_u(m, 2)};
    const Rational half(1, 2);
    for (int i = 0; i < 3; ++i) {
      const int ip = mod3(i + 1), im = mod3(i - 1);
      phi_next[i] = (PiecewiseScalar::uniform(lambda(i) * lambda(ip)) + u[im]) * half;
      phi_prev[i] = (PiecewiseScalar::uniform(lambda(i) * lambda(im)) - u[ip]) * half;
      phi_vertex[i] = PiecewiseScalar::uniform(lambda(i) * lambda(i)) + phi_next[i] * Rational(2) + phi_prev[i] * Rational(2);
    }
    for (int i = 0; i < 3; ++i) d.functions.push_back(phi_vertex[i]);
    for (int i = 0; i < 3; ++i) {
      d.functions.push_back(phi_prev[i]);
      d.functions.push_back(phi_next[i]);
    }
  }
  return d;
}

/// Duals of the Cartesian gradient DoFs at v_i: psi_{i,d} = sum_m phi_m (M_i)_{d,m}
/// with M_i = (t_{i,i-1} t_{i,i+1}) and phi_m the directional duals.
inline std::array<PiecewiseScalar, 2> gradient_duals(const DualBasisLowOrder& d, const MacroTriangle& m, int i)
{
  const PiecewiseScalar& phi_prev = d.functions[3 + 2 * i];
  const PiecewiseScalar& phi_next = d.functions[3 + 2 * i + 1];
  const Vec2 tp = m.vertex(i - 1) - m.vertex(i), tn = m.vertex(i + 1) - m.vertex(i);
  return {phi_prev * tp.x + phi_next * tn.x, phi_prev * tp.y + phi_next * tn.y};
}

}  // namespace airyfem
