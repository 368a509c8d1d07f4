#pragma once

// Mixed Hellinger-Reissner elasticity on Sigma_{k,h} x V_{k-1,h}:
//   (A sigma, tau) + (u, div tau) = 0      for all tau with tau n = 0 on the boundary,
//   (div sigma, v)                = (f, v) for all v,
// with pure traction data sigma n = g imposed through the boundary edge DoFs
// and the rigid motions removed from u by three Lagrange multipliers.
// Exact element bases are converted to doubles here and nowhere earlier.

#include "airyfem/global_space.hpp"
#include "airyfem/quadrature.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace airyfem {

using SymValue = std::array<double, 3>;  ///< (xx, xy, yy)
using VecValue = std::array<double, 2>;

/// Frobenius product of two symmetric tensors.
inline double frobenius(const SymValue& a, const SymValue& b) { return a[0] * b[0] + 2 * a[1] * b[1] + a[2] * b[2]; }

struct MaterialLaw {
  double lambda = 1;  ///< first Lame parameter, >= 0
  double mu = 1;      ///< shear modulus, > 0

  /// A sigma = (sigma - lambda / (2 mu + 2 lambda) tr(sigma) I) / (2 mu).
  SymValue compliance(const SymValue& s) const
  {
    const double tr = s[0] + s[2];
    const double shift = lambda / (2 * mu + 2 * lambda) * tr;
    return {(s[0] - shift) / (2 * mu), s[1] / (2 * mu), (s[2] - shift) / (2 * mu)};
  }

  SymValue stiffness(const SymValue& eps) const
  {
    const double tr = eps[0] + eps[2];
    return {2 * mu * eps[0] + lambda * tr, 2 * mu * eps[1], 2 * mu * eps[2] + lambda * tr};
  }

  void validate() const
  {
    if (!(mu > 0) || !(lambda >= 0) || !std::isfinite(mu) || !std::isfinite(lambda))
      throw std::invalid_argument("material law requires mu > 0 and lambda >= 0");
  }
};

namespace detail {

// A barycentric polynomial with double coefficients, for fast evaluation.
struct DoublePoly {
  std::vector<Exponent<3>> exps;
  std::vector<double> coeffs;

  explicit DoublePoly(const BaryPoly& p)
  {
    const auto& all = exponents<3>(p.degree());
    for (std::size_t i = 0; i < all.size(); ++i)
      if (sgn(p.coefficients()[i]) != 0) {
        exps.push_back(all[i]);
        coeffs.push_back(to_double(p.coefficients()[i]));
      }
  }

  double operator()(const std::array<double, 3>& l) const
  {
    double sum = 0;
    for (std::size_t i = 0; i < exps.size(); ++i) {
      double term = coeffs[i];
      for (int v = 0; v < 3; ++v)
        for (int p = 0; p < exps[i][v]; ++p) term *= l[v];
      sum += term;
    }
    return sum;
  }
};

inline std::vector<std::pair<double, double>> unit_interval_rule()
{
  using rule = boost::math::quadrature::gauss<double, 10>;
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < rule::abscissa().size(); ++i) {
    const double x = rule::abscissa()[i], w = rule::weights()[i];
    out.push_back({0.5 * (1 + x), 0.5 * w});
    if (x != 0) out.push_back({0.5 * (1 - x), 0.5 * w});
  }
  return out;
}

}  // namespace detail

/// Quadrature points of one macro element (all three subtriangles) with the
/// local stress and displacement bases tabulated at each point.
struct ElementTabulation {
  std::vector<VecValue> points;
  std::vector<double> weights;                     ///< include the subtriangle area
  std::vector<std::vector<SymValue>> sigma;        ///< [local basis][point]
  std::vector<std::vector<VecValue>> v;            ///< [local basis][point]
};

struct ManufacturedSolution {
  std::function<SymValue(double, double)> sigma;
  std::function<VecValue(double, double)> u;
  std::function<VecValue(double, double)> f;  ///< f = div sigma
};

/// u = rot psi = (d_y psi, -d_x psi) with psi = sin(pi x) sin(2 pi y). The
/// displacement is divergence free, so sigma = 2 mu eps(u) does not depend on
/// lambda and f = div sigma = mu Lap u = -5 pi^2 mu u.
inline ManufacturedSolution smooth_manufactured_solution(const MaterialLaw& mat)
{
  using std::numbers::pi;
  ManufacturedSolution s;
  s.u = [](double x, double y) -> VecValue {
    return {2 * pi * std::sin(pi * x) * std::cos(2 * pi * y), -pi * std::cos(pi * x) * std::sin(2 * pi * y)};
  };
  s.sigma = [mu = mat.mu](double x, double y) -> SymValue {
    const double cc = std::cos(pi * x) * std::cos(2 * pi * y);
    const double ss = std::sin(pi * x) * std::sin(2 * pi * y);
    return {2 * mu * 2 * pi * pi * cc, 2 * mu * (-1.5 * pi * pi * ss), 2 * mu * (-2 * pi * pi * cc)};
  };
  s.f = [u = s.u, mu = mat.mu](double x, double y) -> VecValue {
    const VecValue v = u(x, y);
    return {-5 * pi * pi * mu * v[0], -5 * pi * pi * mu * v[1]};
  };
  return s;
}

/// Float matrices of the mixed method on a DiscreteComplex with k >= 2.
class MixedDiscretization {
 public:
  explicit MixedDiscretization(const DiscreteComplex& c) : c_(c)
  {
    if (c.k() < 2) throw std::invalid_argument("the mixed solver requires k >= 2");
    const int k = c.k();
    const auto& rule = triangle_rule(2 * (k + 3));
    const auto v_exps = v_exponents(k);
    tab_.resize(c.num_elements());
    local_div_.resize(c.num_elements());
    parallel_for(c.num_elements(), [&](std::size_t t) {
      const ElementBasis& el = c.element(t);
      const MacroTriangle& m = el.macro;
      ElementTabulation& tab = tab_[t];
      std::vector<std::array<double, 3>> bary;
      const double sub_area = to_double(m.area()) / 3;
      for (int j = 0; j < 3; ++j)
        for (const auto& q : rule) {
          std::array<double, 3> l{q.bary[2] / 3, q.bary[2] / 3, q.bary[2] / 3};
          l[(j + 1) % 3] += q.bary[0];
          l[(j + 2) % 3] += q.bary[1];
          bary.push_back(l);
          tab.weights.push_back(q.weight * sub_area);
          double x = 0, y = 0;
          for (int i = 0; i < 3; ++i) {
            x += l[i] * to_double(m.vertex(i).x);
            y += l[i] * to_double(m.vertex(i).y);
          }
          tab.points.push_back({x, y});
        }
      for (const auto& s : el.sigma_nodal) {
        std::array<std::array<detail::DoublePoly, 3>, 3> comps{
            {{detail::DoublePoly(s.pieces[0].xx), detail::DoublePoly(s.pieces[0].xy), detail::DoublePoly(s.pieces[0].yy)},
             {detail::DoublePoly(s.pieces[1].xx), detail::DoublePoly(s.pieces[1].xy), detail::DoublePoly(s.pieces[1].yy)},
             {detail::DoublePoly(s.pieces[2].xx), detail::DoublePoly(s.pieces[2].xy), detail::DoublePoly(s.pieces[2].yy)}}};
        std::vector<SymValue> vals;
        for (std::size_t q = 0; q < bary.size(); ++q) {
          const auto& p = comps[q / rule.size()];
          vals.push_back({p[0](bary[q]), p[1](bary[q]), p[2](bary[q])});
        }
        tab.sigma.push_back(std::move(vals));
      }
      for (const auto& e : v_exps) {
        const detail::DoublePoly mono(BaryPoly::monomial(e));
        std::vector<VecValue> vx, vy;
        for (const auto& l : bary) {
          const double val = mono(l);
          vx.push_back({val, 0});
          vy.push_back({0, val});
        }
        tab.v.push_back(std::move(vx));
        tab.v.push_back(std::move(vy));
      }
      // Exact divergence of each stress basis function, projected onto P_{k-1}.
      for (const auto& s : el.sigma_nodal) {
        auto coeffs = project_local_V(divergence(s, m), m, c.mass_inverse_reference(), k);
        std::vector<double> d;
        for (const auto& q : coeffs) d.push_back(to_double(q));
        local_div_[t].push_back(std::move(d));
      }
    });

    const std::size_t ns = sigma_dim(), nv = v_dim();
    mass_v_ = Eigen::MatrixXd::Zero(nv, nv);
    div_ = Eigen::MatrixXd::Zero(nv, ns);
    gram_sigma_ = Eigen::MatrixXd::Zero(ns, ns);
    for (std::size_t t = 0; t < c.num_elements(); ++t) {
      const auto& tab = tab_[t];
      const auto& lv = c.V().local(t);
      const auto& ls = c.Sigma().local(t);
      for (std::size_t a = 0; a < tab.v.size(); ++a)
        for (std::size_t b = 0; b < tab.v.size(); ++b) {
          double sum = 0;
          for (std::size_t q = 0; q < tab.weights.size(); ++q)
            sum += tab.weights[q] * (tab.v[a][q][0] * tab.v[b][q][0] + tab.v[a][q][1] * tab.v[b][q][1]);
          mass_v_(lv.index[a], lv.index[b]) += sum;
        }
      for (std::size_t b = 0; b < ls.index.size(); ++b)
        for (std::size_t a = 0; a < lv.index.size(); ++a) div_(lv.index[a], ls.index[b]) += local_div_[t][b][a] * ls.sign[b];
      for (std::size_t a = 0; a < tab.sigma.size(); ++a)
        for (std::size_t b = 0; b < tab.sigma.size(); ++b) {
          double sum = 0;
          for (std::size_t q = 0; q < tab.weights.size(); ++q) sum += tab.weights[q] * frobenius(tab.sigma[a][q], tab.sigma[b][q]);
          gram_sigma_(ls.index[a], ls.index[b]) += sum * ls.sign[a] * ls.sign[b];
        }
    }
    for (std::size_t e = 0; e < c.mesh().num_edges(); ++e)
      if (c.mesh().is_boundary_edge(e))
        for (std::size_t i = 0; i < c.Sigma().counts().edge; ++i) boundary_.push_back(c.Sigma().edge_offset(e) + i);
    std::vector<bool> is_boundary(ns, false);
    for (auto g : boundary_) is_boundary[g] = true;
    for (std::size_t g = 0; g < ns; ++g)
      if (!is_boundary[g]) free_.push_back(g);
    build_rigid_modes();
  }

  const DiscreteComplex& complex() const { return c_; }
  int k() const { return c_.k(); }
  std::size_t sigma_dim() const { return c_.Sigma().dimension(); }
  std::size_t v_dim() const { return c_.V().dimension(); }
  const ElementTabulation& tabulation(std::size_t t) const { return tab_.at(t); }

  /// V mass matrix.
  const Eigen::MatrixXd& mass_V() const { return mass_v_; }
  /// Coefficients of div sigma in V for each Sigma basis function (exact, rounded).
  const Eigen::MatrixXd& div() const { return div_; }
  /// B = M_V div: (div sigma_b, v_a).
  Eigen::MatrixXd B() const { return mass_v_ * div_; }
  /// L2 Gram matrix of the Sigma basis (Frobenius product).
  const Eigen::MatrixXd& gram_sigma() const { return gram_sigma_; }
  /// H(div) Gram matrix.
  Eigen::MatrixXd gram_hdiv() const { return gram_sigma_ + div_.transpose() * mass_v_ * div_; }

  const std::vector<std::size_t>& boundary_dofs() const { return boundary_; }
  const std::vector<std::size_t>& free_dofs() const { return free_; }
  /// (r_i, v_a) for the rigid motions (1,0), (0,1), (-y,x).
  const Eigen::MatrixXd& rigid_moments() const { return rigid_; }
  /// V coefficients of the three rigid motions.
  const Eigen::MatrixXd& rigid_coefficients() const { return rigid_coeffs_; }

  Eigen::MatrixXd compliance_matrix(const MaterialLaw& mat) const
  {
    const std::size_t ns = sigma_dim();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(ns, ns);
    for (std::size_t t = 0; t < c_.num_elements(); ++t) {
      const auto& tab = tab_[t];
      const auto& ls = c_.Sigma().local(t);
      std::vector<std::vector<SymValue>> comp(tab.sigma.size());
      for (std::size_t b = 0; b < tab.sigma.size(); ++b)
        for (const auto& s : tab.sigma[b]) comp[b].push_back(mat.compliance(s));
      for (std::size_t p = 0; p < tab.sigma.size(); ++p)
        for (std::size_t q = 0; q < tab.sigma.size(); ++q) {
          double sum = 0;
          for (std::size_t i = 0; i < tab.weights.size(); ++i) sum += tab.weights[i] * frobenius(comp[p][i], tab.sigma[q][i]);
          a(ls.index[p], ls.index[q]) += sum * ls.sign[p] * ls.sign[q];
        }
    }
    return a;
  }

  /// (f, v_a) by quadrature.
  Eigen::VectorXd load(const std::function<VecValue(double, double)>& f) const
  {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(v_dim());
    for (std::size_t t = 0; t < c_.num_elements(); ++t) {
      const auto& tab = tab_[t];
      const auto& lv = c_.V().local(t);
      for (std::size_t q = 0; q < tab.weights.size(); ++q) {
        const VecValue fv = f(tab.points[q][0], tab.points[q][1]);
        for (std::size_t a = 0; a < tab.v.size(); ++a)
          out(lv.index[a]) += tab.weights[q] * (fv[0] * tab.v[a][q][0] + fv[1] * tab.v[a][q][1]);
      }
    }
    return out;
  }

  /// Sigma DoFs of a smooth stress field on the boundary edges (other entries zero).
  Eigen::VectorXd boundary_values(const std::function<SymValue(double, double)>& sigma) const
  {
    const Mesh& mesh = c_.mesh();
    const auto dofs = stress_dofs(k());
    const auto line = detail::unit_interval_rule();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(sigma_dim());
    for (std::size_t t = 0; t < c_.num_elements(); ++t) {
      const MacroTriangle& m = c_.element(t).macro;
      const auto& ls = c_.Sigma().local(t);
      for (std::size_t a = 0; a < dofs.size(); ++a) {
        const auto* em = std::get_if<StressEdgeMoment>(&dofs[a]);
        if (!em || !mesh.is_boundary_edge(mesh.triangle_edges[t][em->edge])) continue;
        const EdgeFrame& fr = m.frame(em->edge);
        const double x0 = to_double(m.vertex(fr.from).x), y0 = to_double(m.vertex(fr.from).y);
        const double tx = to_double(fr.tangent.x), ty = to_double(fr.tangent.y);
        const double nx = to_double(fr.normal.x), ny = to_double(fr.normal.y);
        const double fx = em->tangential ? tx : nx, fy = em->tangential ? ty : ny;
        double r = 0;
        for (auto [s, w] : line) {
          const SymValue sv = sigma(x0 + s * tx, y0 + s * ty);
          const double trace = (sv[0] * nx + sv[1] * ny) * fx + (sv[1] * nx + sv[2] * ny) * fy;
          r += w * trace * std::pow(1 - s, k() - em->index) * std::pow(s, em->index);
        }
        out(ls.index[a]) = r * ls.sign[a];
      }
    }
    return out;
  }

  /// Stress field of a coefficient vector at the quadrature points of triangle t.
  std::vector<SymValue> sigma_at_points(const Eigen::VectorXd& coeffs, std::size_t t) const
  {
    const auto& tab = tab_[t];
    const auto& ls = c_.Sigma().local(t);
    std::vector<SymValue> out(tab.weights.size(), SymValue{0, 0, 0});
    for (std::size_t b = 0; b < tab.sigma.size(); ++b) {
      const double w = coeffs(ls.index[b]) * ls.sign[b];
      if (w == 0) continue;
      for (std::size_t q = 0; q < out.size(); ++q)
        for (int i = 0; i < 3; ++i) out[q][i] += w * tab.sigma[b][q][i];
    }
    return out;
  }

  std::vector<VecValue> v_at_points(const Eigen::VectorXd& coeffs, std::size_t t) const
  {
    const auto& tab = tab_[t];
    const auto& lv = c_.V().local(t);
    std::vector<VecValue> out(tab.weights.size(), VecValue{0, 0});
    for (std::size_t a = 0; a < tab.v.size(); ++a) {
      const double w = coeffs(lv.index[a]);
      for (std::size_t q = 0; q < out.size(); ++q) {
        out[q][0] += w * tab.v[a][q][0];
        out[q][1] += w * tab.v[a][q][1];
      }
    }
    return out;
  }

  double sigma_l2_error(const Eigen::VectorXd& coeffs, const std::function<SymValue(double, double)>& exact) const
  {
    double sum = 0;
    for (std::size_t t = 0; t < c_.num_elements(); ++t) {
      const auto& tab = tab_[t];
      const auto vals = sigma_at_points(coeffs, t);
      for (std::size_t q = 0; q < vals.size(); ++q) {
        const SymValue e = exact(tab.points[q][0], tab.points[q][1]);
        const SymValue d{vals[q][0] - e[0], vals[q][1] - e[1], vals[q][2] - e[2]};
        sum += tab.weights[q] * frobenius(d, d);
      }
    }
    return std::sqrt(sum);
  }

  /// L2 error of u modulo rigid motions: the exact field's L2 projection onto
  /// the rigid motions is removed, since the discrete u is orthogonal to them.
  double u_l2_error(const Eigen::VectorXd& coeffs, const std::function<VecValue(double, double)>& exact) const
  {
    Eigen::Vector3d moments = Eigen::Vector3d::Zero();
    Eigen::Matrix3d gram = Eigen::Matrix3d::Zero();
    for (std::size_t t = 0; t < c_.num_elements(); ++t) {
      const auto& tab = tab_[t];
      for (std::size_t q = 0; q < tab.weights.size(); ++q) {
        const auto r = rigid_at(tab.points[q]);
        const VecValue e = exact(tab.points[q][0], tab.points[q][1]);
        for (int i = 0; i < 3; ++i) {
          moments(i) += tab.weights[q] * (r[i][0] * e[0] + r[i][1] * e[1]);
          for (int j = 0; j < 3; ++j) gram(i, j) += tab.weights[q] * (r[i][0] * r[j][0] + r[i][1] * r[j][1]);
        }
      }
    }
    const Eigen::Vector3d rc = gram.ldlt().solve(moments);
    double sum = 0;
    for (std::size_t t = 0; t < c_.num_elements(); ++t) {
      const auto& tab = tab_[t];
      const auto vals = v_at_points(coeffs, t);
      for (std::size_t q = 0; q < vals.size(); ++q) {
        const auto r = rigid_at(tab.points[q]);
        VecValue e = exact(tab.points[q][0], tab.points[q][1]);
        for (int i = 0; i < 3; ++i) {
          e[0] -= rc(i) * r[i][0];
          e[1] -= rc(i) * r[i][1];
        }
        const double dx = vals[q][0] - e[0], dy = vals[q][1] - e[1];
        sum += tab.weights[q] * (dx * dx + dy * dy);
      }
    }
    return std::sqrt(sum);
  }

 private:
  static std::array<VecValue, 3> rigid_at(const VecValue& p) { return {{{1, 0}, {0, 1}, {-p[1], p[0]}}}; }

  void build_rigid_modes()
  {
    rigid_ = Eigen::MatrixXd::Zero(3, v_dim());
    for (std::size_t t = 0; t < c_.num_elements(); ++t) {
      const auto& tab = tab_[t];
      const auto& lv = c_.V().local(t);
      for (std::size_t q = 0; q < tab.weights.size(); ++q) {
        const auto r = rigid_at(tab.points[q]);
        for (int i = 0; i < 3; ++i)
          for (std::size_t a = 0; a < tab.v.size(); ++a)
            rigid_(i, lv.index[a]) += tab.weights[q] * (r[i][0] * tab.v[a][q][0] + r[i][1] * tab.v[a][q][1]);
      }
    }
    rigid_coeffs_ = mass_v_.ldlt().solve(rigid_.transpose());
  }

  const DiscreteComplex& c_;
  std::vector<ElementTabulation> tab_;
  std::vector<std::vector<std::vector<double>>> local_div_;
  Eigen::MatrixXd mass_v_, div_, gram_sigma_, rigid_, rigid_coeffs_;
  std::vector<std::size_t> boundary_, free_;
};

/// Data of one mixed solve. The body force and the traction are given either
/// as functions or as discrete vectors (V coefficients of f, Sigma DoF values
/// of which only the boundary entries are read).
struct MixedProblem {
  MaterialLaw material;
  std::function<VecValue(double, double)> body_force;
  std::function<SymValue(double, double)> traction_stress;  ///< imposes sigma n = traction_stress n
  std::optional<Eigen::VectorXd> body_force_coefficients;
  std::optional<Eigen::VectorXd> boundary_dofs;
};

struct MixedSolution {
  Eigen::VectorXd sigma;
  Eigen::VectorXd u;
  Eigen::Vector3d multipliers = Eigen::Vector3d::Zero();
  double residual = 0;  ///< relative residual of the saddle-point system
  Eigen::VectorXd load;  ///< (f, v)
};

class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline MixedSolution solve_mixed(const MixedDiscretization& d, const MixedProblem& p)
{
  p.material.validate();
  const auto& fr = d.free_dofs();
  const auto& bd = d.boundary_dofs();
  const std::size_t nf = fr.size(), nv = d.v_dim();

  Eigen::VectorXd load;
  if (p.body_force_coefficients) load = d.mass_V() * *p.body_force_coefficients;
  else if (p.body_force) load = d.load(p.body_force);
  else load = Eigen::VectorXd::Zero(nv);

  Eigen::VectorXd sigma_b = Eigen::VectorXd::Zero(d.sigma_dim());
  if (p.boundary_dofs) {
    for (auto g : bd) sigma_b(g) = (*p.boundary_dofs)(g);
  } else if (p.traction_stress) {
    sigma_b = d.boundary_values(p.traction_stress);
  }

  const Eigen::MatrixXd a = d.compliance_matrix(p.material);
  const Eigen::MatrixXd b = d.B();
  const std::size_t n = nf + nv + 3;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd a_sb = a * sigma_b;
  const Eigen::VectorXd b_sb = b * sigma_b;
  for (std::size_t i = 0; i < nf; ++i) {
    for (std::size_t j = 0; j < nf; ++j) k(i, j) = a(fr[i], fr[j]);
    for (std::size_t v = 0; v < nv; ++v) {
      k(i, nf + v) = b(v, fr[i]);
      k(nf + v, i) = b(v, fr[i]);
    }
    rhs(i) = -a_sb(fr[i]);
  }
  for (std::size_t v = 0; v < nv; ++v) {
    for (int r = 0; r < 3; ++r) {
      k(nf + v, nf + nv + r) = d.rigid_moments()(r, v);
      k(nf + nv + r, nf + v) = d.rigid_moments()(r, v);
    }
    rhs(nf + v) = load(v) - b_sb(v);
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(k);
  const Eigen::VectorXd x = lu.solve(rhs);
  if (!x.allFinite()) throw SingularSystemError("mixed system is singular");

  MixedSolution s;
  s.sigma = sigma_b;
  for (std::size_t i = 0; i < nf; ++i) s.sigma(fr[i]) = x(i);
  s.u = x.segment(nf, nv);
  s.multipliers = x.tail<3>();
  const double scale = std::max(rhs.norm(), 1e-300);
  s.residual = (k * x - rhs).norm() / (rhs.norm() > 0 ? scale : 1.0);
  s.load = load;
  return s;
}

/// Relative distance between div sigma_h and Q_{k-1,h} f in the V mass norm.
inline double equilibrium_defect(const MixedDiscretization& d, const MixedSolution& s)
{
  const Eigen::VectorXd div_sigma = d.div() * s.sigma;
  const Eigen::VectorXd qf = d.mass_V().ldlt().solve(s.load);
  const Eigen::VectorXd diff = div_sigma - qf;
  const double num = std::sqrt(std::max(0.0, diff.dot(d.mass_V() * diff)));
  const double den = std::sqrt(std::max(0.0, qf.dot(d.mass_V() * qf)));
  return den > 0 ? num / den : num;
}

struct PatchTestReport {
  double sigma_relative_error = 0;
  double u_relative_error = 0;
  double residual = 0;
  double equilibrium_defect = 0;
  bool passed(double tol = 1e-10) const
  {
    return sigma_relative_error <= tol && u_relative_error <= tol && residual <= tol && equilibrium_defect <= tol;
  }
};

/// Discrete patch test: a random pair (sigma*, u*) with sigma* in Sigma_{k,h},
/// u* in V_{k-1,h} orthogonal to the rigid motions, satisfying the first
/// equation exactly; the load is f_h = Q^{-1}(B sigma*). The solver must
/// reproduce the pair.
inline PatchTestReport discrete_patch_test(const MixedDiscretization& d, const MaterialLaw& mat, std::uint64_t seed)
{
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-1, 1);
  const auto& fr = d.free_dofs();
  const std::size_t nf = fr.size();

  Eigen::VectorXd sigma = Eigen::VectorXd::Zero(d.sigma_dim());
  for (auto g : d.boundary_dofs()) sigma(g) = dist(gen);
  Eigen::VectorXd u(d.v_dim());
  for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = dist(gen);
  const Eigen::MatrixXd& z = d.rigid_coefficients();
  const Eigen::MatrixXd& r = d.rigid_moments();
  u -= z * (r * z).lu().solve(r * u);

  const Eigen::MatrixXd a = d.compliance_matrix(mat);
  const Eigen::MatrixXd b = d.B();
  Eigen::MatrixXd aff(nf, nf);
  Eigen::VectorXd rhs(nf);
  const Eigen::VectorXd a_sb = a * sigma;
  const Eigen::VectorXd bt_u = b.transpose() * u;
  for (std::size_t i = 0; i < nf; ++i) {
    for (std::size_t j = 0; j < nf; ++j) aff(i, j) = a(fr[i], fr[j]);
    rhs(i) = -a_sb(fr[i]) - bt_u(fr[i]);
  }
  const Eigen::VectorXd sf = aff.ldlt().solve(rhs);
  for (std::size_t i = 0; i < nf; ++i) sigma(fr[i]) = sf(i);

  MixedProblem p;
  p.material = mat;
  p.body_force_coefficients = d.mass_V().ldlt().solve(b * sigma);
  p.boundary_dofs = sigma;
  const MixedSolution s = solve_mixed(d, p);

  PatchTestReport rep;
  rep.sigma_relative_error = (s.sigma - sigma).norm() / sigma.norm();
  rep.u_relative_error = (s.u - u).norm() / u.norm();
  rep.residual = s.residual;
  rep.equilibrium_defect = equilibrium_defect(d, s);
  return rep;
}

struct InfSupEstimate {
  double beta = 0;
  double gram_rcond = 0;
  std::string warning;  ///< set when the H(div) Gram matrix is ill-conditioned
};

/// Smallest generalized singular value of div in the (H(div), L2) norm pair:
/// beta^2 = min eig of B H^{-1} B^T relative to M_V, on the full space Sigma_{k,h}.
inline InfSupEstimate inf_sup_estimate(const MixedDiscretization& d)
{
  InfSupEstimate out;
  const Eigen::MatrixXd h = d.gram_hdiv();
  Eigen::LLT<Eigen::MatrixXd> llt(h);
  if (llt.info() != Eigen::Success) throw SingularSystemError("H(div) Gram matrix is not positive definite");
  out.gram_rcond = llt.rcond();
  if (out.gram_rcond < 1e-12) out.warning = "ill-conditioned H(div) Gram matrix (rcond " + std::to_string(out.gram_rcond) + ")";
  const Eigen::MatrixXd b = d.B();
  Eigen::MatrixXd s = b * llt.solve(b.transpose());
  s = 0.5 * (s + s.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(s, d.mass_V(), Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw SingularSystemError("generalized eigenproblem failed");
  out.beta = std::sqrt(std::max(0.0, eig.eigenvalues().minCoeff()));
  return out;
}

struct ConvergenceRow {
  int level = 0;
  double h = 0;
  std::size_t triangles = 0;
  double err_sigma = 0;
  double err_u = 0;
  std::optional<double> order_sigma;
  std::optional<double> order_u;
};

/// Errors of the mixed solution on uniform refinements mesh0, R(mesh0), ...,
/// and observed orders from successive levels.
inline std::vector<ConvergenceRow> convergence_study(const Mesh& mesh0, int levels, int k, const MaterialLaw& mat,
                                                     const ManufacturedSolution& exact)
{
  if (levels < 1) throw std::invalid_argument("convergence study needs at least one level");
  if (2 * (k + 3) > kQuadratureMaxDegree)
    throw std::invalid_argument("quadrature degree " + std::to_string(2 * (k + 3)) + " required for k = " +
                                std::to_string(k) + " exceeds the supported maximum " +
                                std::to_string(kQuadratureMaxDegree));
  std::vector<ConvergenceRow> rows;
  Mesh mesh = mesh0;
  for (int level = 0; level < levels; ++level) {
    if (level > 0) mesh = refine_uniform(mesh);
    DiscreteComplex c(mesh, k, false);
    MixedDiscretization d(c);
    MixedProblem p;
    p.material = mat;
    p.body_force = exact.f;
    p.traction_stress = exact.sigma;
    const MixedSolution s = solve_mixed(d, p);
    ConvergenceRow row;
    row.level = level;
    row.h = mesh.max_edge_length();
    row.triangles = mesh.num_triangles();
    row.err_sigma = d.sigma_l2_error(s.sigma, exact.sigma);
    row.err_u = d.u_l2_error(s.u, exact.u);
    if (!rows.empty()) {
      const auto& prev = rows.back();
      const double ratio = std::log(prev.h / row.h);
      row.order_sigma = std::log(prev.err_sigma / row.err_sigma) / ratio;
      row.order_u = std::log(prev.err_u / row.err_u) / ratio;
    }
    rows.push_back(row);
  }
  return rows;
}

inline std::string format_double(double x)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  return buf;
}

/// CSV with header level,h,err_sigma_L2,err_u_L2,order_sigma,order_u; the
/// orders are empty on the first level.
inline std::string convergence_csv(const std::vector<ConvergenceRow>& rows)
{
  std::ostringstream out;
  out << "level,h,err_sigma_L2,err_u_L2,order_sigma,order_u\n";
  for (const auto& r : rows) {
    out << r.level << ',' << format_double(r.h) << ',' << format_double(r.err_sigma) << ',' << format_double(r.err_u)
        << ',' << (r.order_sigma ? format_double(*r.order_sigma) : "") << ','
        << (r.order_u ? format_double(*r.order_u) : "") << '\n';
  }
  return out.str();
}

}  // namespace airyfem
