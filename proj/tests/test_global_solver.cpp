#include "airyfem/global_space.hpp"
#include "airyfem/solver.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <set>

using namespace airyfem;
using airyfem::testing::random_poly;
using airyfem::testing::Rng;

namespace {

Mesh load_data_mesh(const std::string& name)
{
  std::ifstream in(std::string(AIRYFEM_DATA_DIR) + "/meshes/" + name);
  if (!in) throw std::runtime_error("missing mesh " + name);
  return load_mesh(in);
}

Mesh square8() { return refine_uniform(unit_square_mesh()); }

PlanePoly plane_monomial(int w, int x, int y, const Rational& c = 1) { return PlanePoly::monomial({w, x, y}, c); }

}  // namespace

TEST(Global, DimensionsFromEntityCounts)
{
  const Mesh tri = single_triangle_mesh();
  EXPECT_EQ(space_dimension(tri, SpaceFamily::U, 2), 18u);
  EXPECT_EQ(space_dimension(tri, SpaceFamily::Sigma, 2), 21u);
  EXPECT_EQ(space_dimension(tri, SpaceFamily::V, 2), 6u);
  const Mesh sq = unit_square_mesh();
  EXPECT_EQ(space_dimension(sq, SpaceFamily::U, 2), 27u);
  EXPECT_EQ(space_dimension(sq, SpaceFamily::Sigma, 2), 36u);
  EXPECT_EQ(space_dimension(sq, SpaceFamily::V, 2), 12u);
  EXPECT_EQ(space_dimension(sq, SpaceFamily::U, 1), 3u * 4 + 5);
  EXPECT_EQ(space_dimension(sq, SpaceFamily::U, 0), 3u * 4);
}

TEST(Global, AlternatingSumVanishesOnSimplyConnectedMeshes)
{
  for (const Mesh& m : {single_triangle_mesh(), unit_square_mesh(), square8(), refine_uniform(square8())})
    for (int k = 2; k <= 4; ++k) {
      const long sum = static_cast<long>(space_dimension(m, SpaceFamily::U, k)) - 3 -
                       static_cast<long>(space_dimension(m, SpaceFamily::Sigma, k)) +
                       static_cast<long>(space_dimension(m, SpaceFamily::V, k));
      EXPECT_EQ(sum, 0) << "k=" << k;
    }
}

TEST(Global, LocalMapsCoverEveryDofAndShareEdges)
{
  const Mesh m = square8();
  for (int k = 0; k <= 4; ++k)
    for (SpaceFamily f : {SpaceFamily::U, SpaceFamily::Sigma, SpaceFamily::V}) {
      if (k < 2 && f != SpaceFamily::U) continue;
      GlobalSpace s(m, f, k);
      std::vector<int> hits(s.dimension(), 0);
      for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        std::set<std::size_t> seen;
        for (auto g : s.local(t).index) {
          ASSERT_LT(g, s.dimension());
          EXPECT_TRUE(seen.insert(g).second) << "duplicate global DoF in one element";
          ++hits[g];
        }
      }
      for (std::size_t g = 0; g < hits.size(); ++g) EXPECT_GT(hits[g], 0) << family_name(f) << " k=" << k;
      if (f == SpaceFamily::V) continue;
      for (std::size_t e = 0; e < m.num_edges(); ++e)
        for (std::size_t i = 0; i < s.counts().edge; ++i) {
          EXPECT_EQ(hits[s.edge_offset(e) + i], static_cast<int>(m.edge_triangles[e].size()));
        }
    }
}

TEST(Global, ExactRanks)
{
  {
    DiscreteComplex c(single_triangle_mesh(), 2);
    auto r = verify_exactness(c);
    EXPECT_EQ(r.rank_J, 15u);
    EXPECT_EQ(r.rank_div, 6u);
    EXPECT_TRUE(r.passed) << r.message;
  }
  {
    DiscreteComplex c(unit_square_mesh(), 2);
    auto r = verify_exactness(c);
    EXPECT_EQ(r.rank_J, 24u);
    EXPECT_EQ(r.rank_div, 12u);
    EXPECT_TRUE(r.passed) << r.message;
  }
  {
    DiscreteComplex c(unit_square_mesh(), 3);
    auto r = verify_exactness(c);
    EXPECT_EQ(r.alternating_sum, 0);
    EXPECT_EQ(r.rank_J + r.rank_div, r.dim_Sigma);
    EXPECT_TRUE(r.passed) << r.message;
  }
}

TEST(Global, ExactnessRefusesMultiplyConnectedMesh)
{
  const Mesh ring = load_data_mesh("annulus.mesh");
  EXPECT_FALSE(ring.is_simply_connected());
  DiscreteComplex c(ring, 2);
  auto r = verify_exactness(c);
  EXPECT_TRUE(r.refused);
  EXPECT_NE(r.message.find("simply connected"), std::string::npos);
  EXPECT_FALSE(r.passed);
}

TEST(Global, DivJIsZeroAndAffineKernel)
{
  for (int k : {2, 3}) {
    DiscreteComplex c(square8(), k);
    const RationalMatrix j = assemble_J(c);
    const RationalMatrix d = assemble_div(c);
    EXPECT_TRUE((d * j).is_zero());
    for (auto [a, b, cc] : {std::array<int, 3>{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {2, -3, 5}}) {
      auto coeffs = affine_in_U(c, a, b, cc);
      for (const auto& q : j * coeffs) EXPECT_EQ(sgn(q), 0);
    }
  }
}

TEST(Global, JMapsEnrichmentPotentialOntoPsi)
{
  for (int k : {2, 3}) {
    DiscreteComplex c(single_triangle_mesh(), k);
    const MacroTriangle& m = c.element(0).macro;
    StressElement st(m, k);
    const RationalMatrix j = assemble_J(c);
    for (int i = 0; i < 3; ++i) {
      const PiecewiseScalar v = build_v(m, k, i);
      const auto sigma_dofs = j * interpolate_U(c, [&](std::size_t) { return v; });
      const auto& l = c.Sigma().local(0);
      std::vector<Rational> local(l.index.size());
      for (std::size_t a = 0; a < local.size(); ++a) local[a] = sigma_dofs[l.index[a]] * l.sign[a];
      const auto coeffs = st.coefficients_from_dofs(local);
      for (std::size_t b = 0; b < coeffs.size(); ++b)
        EXPECT_EQ(coeffs[b], b == coeffs.size() - 3 + i ? Rational(1) : Rational(0)) << "k=" << k << " i=" << i;
    }
  }
}

TEST(Global, DivIsSurjective)
{
  Rng rng(41);
  DiscreteComplex c(unit_square_mesh(), 2);
  const RationalMatrix d = assemble_div(c);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Rational> f(c.V().dimension());
    for (auto& q : f) q = rng.rational();
    auto x = solve(d, f);
    ASSERT_TRUE(x.has_value());
    EXPECT_EQ(d * *x, f);
  }
}

TEST(Global, ProjectionIsIdempotentAndReproducesPolynomials)
{
  Rng rng(42);
  DiscreteComplex c(unit_square_mesh(), 3);
  const PlanePoly px = random_plane_poly(rng, 2), py = random_plane_poly(rng, 2);
  auto poly = project_V(c, [&](std::size_t t) {
    const auto& m = c.element(t).macro;
    return PiecewiseVector::uniform({to_barycentric(px, m), to_barycentric(py, m)});
  });
  for (std::size_t t = 0; t < c.num_elements(); ++t) {
    const VecPoly f = v_field_on(c, poly, t);
    EXPECT_EQ(f.x, to_barycentric(px, c.element(t).macro));
    EXPECT_EQ(f.y, to_barycentric(py, c.element(t).macro));
  }
  const PlanePoly qx = random_plane_poly(rng, 5), qy = random_plane_poly(rng, 4);
  auto once = project_V(c, [&](std::size_t t) {
    const auto& m = c.element(t).macro;
    return PiecewiseVector::uniform({to_barycentric(qx, m), to_barycentric(qy, m)});
  });
  auto twice = project_V(c, [&](std::size_t t) { return PiecewiseVector::uniform(v_field_on(c, once, t)); });
  EXPECT_EQ(once, twice);
}

TEST(Global, C1ConformityAndNegativeControl)
{
  const Mesh m = square8();
  for (int k = 0; k <= 3; ++k) {
    DiscreteComplex c(m, k);
    auto r = global_c1_check(c);
    EXPECT_TRUE(r.passed) << "k=" << k;
    EXPECT_EQ(r.interior_edges, 8u);
    if (k >= 1) {
      GlobalSpace flipped = c.U();
      std::size_t t = 0;
      int local = 0;
      for (std::size_t e = 0; e < m.num_edges(); ++e)
        if (!m.is_boundary_edge(e)) {
          t = m.edge_triangles[e][0];
          while (m.triangle_edges[t][local] != static_cast<int>(e)) ++local;
          break;
        }
      flipped.flip_local_edge_sign(t, local);
      auto bad = global_c1_check(flipped, c);
      EXPECT_FALSE(bad.passed) << "k=" << k;
      EXPECT_TRUE(bad.witness_edge.has_value());
    }
  }
}

TEST(Global, CommutingIdentities)
{
  Rng rng(43);
  for (int k : {2, 3}) {
    DiscreteComplex c(unit_square_mesh(), k);
    auto r = verify_commuting(c, rng, 3);
    EXPECT_TRUE(r.passed()) << r.witness;
  }
}

TEST(Global, StressInterpolantReproducesPolynomials)
{
  Rng rng(44);
  DiscreteComplex c(square8(), 2);
  const PlaneSym tau = random_plane_sym(rng, 2);
  auto coeffs = interpolate_sigma(
      c, [&](std::size_t t) { return PiecewiseSymTensor::uniform(to_barycentric(tau, c.element(t).macro)); });
  for (std::size_t t = 0; t < c.num_elements(); ++t)
    EXPECT_EQ(sigma_field_on(c, coeffs, t), PiecewiseSymTensor::uniform(to_barycentric(tau, c.element(t).macro)));
}

TEST(Global, LagrangeInterpolant)
{
  Rng rng(45);
  const BaryPoly p = random_poly(rng, 4);
  EXPECT_EQ(lagrange_interpolant(p, 4), p);
  EXPECT_EQ(lagrange_interpolant(p, 6), p);
  const BaryPoly q = random_poly(rng, 5);
  const BaryPoly l = lagrange_interpolant(q, 3);
  for (const auto& a : exponents<3>(3)) {
    std::array<Rational, 3> pt{ratio(a[0], 3), ratio(a[1], 3), ratio(a[2], 3)};
    EXPECT_EQ(l.evaluate(pt), q.evaluate(pt));
  }
}

TEST(Global, QuasiInterpolant)
{
  Rng rng(46);
  DiscreteComplex c(square8(), 2);
  // A global polynomial of degree k + 2 is C1: averaging is the identity.
  const PlanePoly v = random_plane_poly(rng, 4);
  std::vector<BaryPoly> local;
  for (std::size_t t = 0; t < c.num_elements(); ++t) local.push_back(to_barycentric(v, c.element(t).macro));
  EXPECT_EQ(quasi_interpolate_H2(c, local),
            interpolate_U(c, [&](std::size_t t) { return PiecewiseScalar::uniform(local[t]); }));
  // Global affine functions are reproduced.
  PlanePoly affine(1);
  affine[{1, 0, 0}] = Rational(2, 3);
  affine[{0, 1, 0}] = -1;
  affine[{0, 0, 1}] = 4;
  std::vector<BaryPoly> aff;
  for (std::size_t t = 0; t < c.num_elements(); ++t) aff.push_back(to_barycentric(affine, c.element(t).macro));
  EXPECT_EQ(quasi_interpolate_H2(c, aff), affine_in_U(c, Rational(2, 3), -1, 4));
  // A continuous function with a kink along x = 1/2: |x - 1/2| times a quadratic.
  const PlanePoly base = plane_monomial(2, 0, 0) + plane_monomial(0, 0, 2, 3);
  const PlanePoly ramp = plane_monomial(0, 1, 0) - plane_monomial(1, 0, 0, Rational(1, 2));
  std::vector<BaryPoly> kinked;
  for (std::size_t t = 0; t < c.num_elements(); ++t) {
    const MacroTriangle& m = c.element(t).macro;
    const bool right = m.barycenter().x > Rational(1, 2);
    kinked.push_back(to_barycentric(base * ramp * Rational(right ? 1 : -1), m));
  }
  auto q = quasi_interpolate_H2(c, kinked);
  ASSERT_EQ(q.size(), c.U().dimension());
  // Vertex values are nodal.
  for (std::size_t vtx = 0; vtx < c.mesh().num_vertices(); ++vtx) {
    const auto& p = c.mesh().vertices[vtx];
    const Rational expected = (1 + 3 * p.y * p.y) * abs(p.x - Rational(1, 2));
    EXPECT_EQ(q[c.U().vertex_offset(vtx)], expected);
  }
  // The result is a single-valued C1 function.
  for (std::size_t t = 0; t < c.num_elements(); ++t) EXPECT_TRUE(is_c1(u_field_on(c, q, t), c.element(t).macro));
}

TEST(Global, SampleMeshFiles)
{
  EXPECT_EQ(load_data_mesh("triangle.mesh").num_triangles(), 1u);
  EXPECT_EQ(load_data_mesh("square2.mesh").num_triangles(), 2u);
  const Mesh m8 = load_data_mesh("square8.mesh");
  EXPECT_EQ(m8.num_triangles(), 8u);
  EXPECT_TRUE(m8.is_simply_connected());
  EXPECT_THROW(load_data_mesh("hanging_node.mesh"), MeshError);
}

TEST(Solver, ZeroDataGivesZeroSolution)
{
  DiscreteComplex c(unit_square_mesh(), 2, false);
  MixedDiscretization d(c);
  MixedProblem p;
  auto s = solve_mixed(d, p);
  EXPECT_LT(s.sigma.norm(), 1e-14);
  EXPECT_LT(s.u.norm(), 1e-14);
}

TEST(Solver, DiscretePatchTest)
{
  DiscreteComplex c(square8(), 2, false);
  MixedDiscretization d(c);
  for (std::uint64_t seed : {1, 2, 3}) {
    auto r = discrete_patch_test(d, {1, 1}, seed);
    EXPECT_TRUE(r.passed()) << r.sigma_relative_error << " " << r.u_relative_error << " " << r.residual;
  }
  DiscreteComplex c3(unit_square_mesh(), 3, false);
  MixedDiscretization d3(c3);
  EXPECT_TRUE(discrete_patch_test(d3, {2, 0.5}, 4).passed());
}

TEST(Solver, StrongEquilibriumForSmoothLoad)
{
  DiscreteComplex c(square8(), 2, false);
  MixedDiscretization d(c);
  const MaterialLaw mat{1, 1};
  auto exact = smooth_manufactured_solution(mat);
  MixedProblem p{mat, exact.f, exact.sigma, std::nullopt, std::nullopt};
  auto s = solve_mixed(d, p);
  EXPECT_LT(s.residual, 1e-10);
  EXPECT_LT(equilibrium_defect(d, s), 1e-10);
  EXPECT_LT(s.multipliers.norm(), 1e-8);
}

TEST(Solver, IndependentOfElementOrdering)
{
  const Mesh m = square8();
  auto triangles = m.triangles;
  std::reverse(triangles.begin(), triangles.end());
  for (auto& t : triangles) std::rotate(t.begin(), t.begin() + 1, t.end());
  const Mesh permuted = build_mesh(m.vertices, triangles);
  const MaterialLaw mat{1, 1};
  auto exact = smooth_manufactured_solution(mat);
  std::array<double, 2> es{}, eu{};
  int i = 0;
  for (const Mesh* mesh : {&m, &permuted}) {
    DiscreteComplex c(*mesh, 2, false);
    MixedDiscretization d(c);
    auto s = solve_mixed(d, {mat, exact.f, exact.sigma, std::nullopt, std::nullopt});
    es[i] = d.sigma_l2_error(s.sigma, exact.sigma);
    eu[i] = d.u_l2_error(s.u, exact.u);
    ++i;
  }
  EXPECT_NEAR(es[0], es[1], 1e-12 * es[0]);
  EXPECT_NEAR(eu[0], eu[1], 1e-12 * eu[0]);
}

TEST(Solver, InfSupIsPositive)
{
  DiscreteComplex c(unit_square_mesh(), 2, false);
  auto est = inf_sup_estimate(MixedDiscretization(c));
  EXPECT_GT(est.beta, 0.5);
  EXPECT_TRUE(est.warning.empty());
}

TEST(Solver, ConvergenceCsvAndQuadratureLimit)
{
  const MaterialLaw mat{1, 1};
  auto rows = convergence_study(unit_square_mesh(), 2, 2, mat, smooth_manufactured_solution(mat));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_FALSE(rows[0].order_sigma.has_value());
  EXPECT_TRUE(rows[1].order_sigma.has_value());
  EXPECT_LT(rows[1].err_sigma, rows[0].err_sigma);
  const std::string csv = convergence_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "level,h,err_sigma_L2,err_u_L2,order_sigma,order_u");
  EXPECT_NE(csv.find("\n0,1.4142135623731,"), std::string::npos) << csv;
  EXPECT_THROW(convergence_study(unit_square_mesh(), 1, 7, mat, smooth_manufactured_solution(mat)),
               std::invalid_argument);
}

TEST(Solver, RejectsInvalidMaterial)
{
  DiscreteComplex c(single_triangle_mesh(), 2, false);
  MixedDiscretization d(c);
  MixedProblem p;
  p.material = {1, 0};
  EXPECT_THROW(solve_mixed(d, p), std::invalid_argument);
}
