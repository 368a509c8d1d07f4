#include "airyfem/geometry.hpp"
#include "airyfem/hom_poly.hpp"
#include "airyfem/mesh.hpp"
#include "airyfem/quadrature.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace airyfem;
using airyfem::testing::random_poly;
using airyfem::testing::random_triangle;
using airyfem::testing::Rng;

namespace {

BaryPoly l(int i) { return BaryPoly::variable(i); }

// Inverse-transpose of the 2x2 edge matrix, computed independently.
std::array<Vec2, 3> gradients_by_inverse(const Triangle& t)
{
  Vec2 a = t.vertex(1) - t.vertex(0), b = t.vertex(2) - t.vertex(0);
  Rational det = a.x * b.y - a.y * b.x;
  // rows of inv([a b]) are grad l1 and grad l2
  Vec2 g1{b.y / det, -b.x / det};
  Vec2 g2{-a.y / det, a.x / det};
  return {-(g1 + g2), g1, g2};
}

double quadrature_integral(const BaryPoly& p, const Triangle& t)
{
  double sum = 0;
  for (const auto& q : triangle_rule(p.degree())) sum += q.weight * p.evaluate<double>(q.bary);
  return sum * to_double(t.area());
}

}  // namespace

TEST(Geometry, ReferenceGradients)
{
  Triangle t({0, 0}, {1, 0}, {0, 1});
  auto g = barycentric_gradients(t);
  EXPECT_EQ(g[0], (Vec2{-1, -1}));
  EXPECT_EQ(g[1], (Vec2{1, 0}));
  EXPECT_EQ(g[2], (Vec2{0, 1}));
}

TEST(Geometry, GradientsMatchInverseOracle)
{
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Triangle t = random_triangle(rng).canonicalized();
    auto g = barycentric_gradients(t);
    EXPECT_EQ(g, gradients_by_inverse(t));
    EXPECT_EQ(g[0] + g[1] + g[2], (Vec2{0, 0}));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        if (i == j) continue;
        EXPECT_EQ(dot(g[i], t.vertex(i) - t.vertex(j)), 1);
        const int k = 3 - i - j;
        EXPECT_EQ(dot(g[i], t.vertex(j) - t.vertex(k)), 0);
      }
    Triangle doubled(t.vertex(0) * Rational(2), t.vertex(1) * Rational(2), t.vertex(2) * Rational(2));
    auto h = barycentric_gradients(doubled);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(h[i] * Rational(2), g[i]);
  }
}

TEST(Geometry, DegenerateTriangleRejected)
{
  EXPECT_THROW(Triangle({0, 0}, {1, 1}, {2, 2}), DegenerateTriangle);
}

TEST(Geometry, BarycentricRefinement)
{
  MacroTriangle m(Triangle({0, 0}, {1, 0}, {0, 1}));
  EXPECT_EQ(m.barycenter(), (Vec2{Rational(1, 3), Rational(1, 3)}));
  EXPECT_EQ(m.subtriangle(0).vertex(0), (Vec2{1, 0}));
  EXPECT_EQ(m.subtriangle(0).vertex(1), (Vec2{0, 1}));
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    MacroTriangle r(random_triangle(rng));
    Rational total = 0;
    for (int i = 0; i < 3; ++i) {
      EXPECT_TRUE(r.subtriangle(i).is_ccw());
      EXPECT_EQ(r.subtriangle(i).area(), r.area() / 3);
      total += r.subtriangle(i).area();
    }
    EXPECT_EQ(total, r.area());
  }
}

TEST(Geometry, EdgeFramesOutward)
{
  Triangle t({0, 0}, {1, 0}, {0, 1});
  auto f = edge_frame(t, 0);
  EXPECT_EQ(f.tangent, (Vec2{-1, 1}));
  EXPECT_EQ(f.normal, (Vec2{1, 1}));
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    MacroTriangle m(random_triangle(rng));
    for (int i = 0; i < 3; ++i) EXPECT_LT(sgn(m.c(i, i)), 0);
  }
}

TEST(Geometry, FramesRotateWithTriangle)
{
  // Rotation by 90 degrees: (x,y) -> (-y,x), exact.
  auto rot = [](const Vec2& p) { return Vec2{-p.y, p.x}; };
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    Triangle t = random_triangle(rng).canonicalized();
    Triangle r(rot(t.vertex(0)), rot(t.vertex(1)), rot(t.vertex(2)));
    for (int i = 0; i < 3; ++i) {
      EXPECT_EQ(edge_frame(r, i).tangent, rot(edge_frame(t, i).tangent));
      EXPECT_EQ(edge_frame(r, i).normal, rot(edge_frame(t, i).normal));
    }
  }
}

TEST(Poly, RingOperations)
{
  EXPECT_EQ(((l(0) * l(1))[{1, 1, 0}]), 1);
  BaryPoly d = l(2) - l(1);
  BaryPoly sq = d * d;
  EXPECT_EQ((sq[{0, 2, 0}]), 1);
  EXPECT_EQ((sq[{0, 1, 1}]), -2);
  EXPECT_EQ((sq[{0, 0, 2}]), 1);
  Rng rng(1);
  BaryPoly p = random_poly(rng, 3), q = random_poly(rng, 2), r = random_poly(rng, 4);
  EXPECT_EQ((l(0) + l(1) + l(2)) * p, p);
  EXPECT_EQ((p * q) * r, p * (q * r));
  EXPECT_EQ(p * (q + r), p * q + p * r);
  EXPECT_EQ(p.homogenized(6).homogenized(6), p.homogenized(6));
}

TEST(Poly, DerivativesCommuteAndLeibniz)
{
  Rng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    Triangle t = random_triangle(rng).canonicalized();
    auto g = barycentric_gradients(t);
    Vec2 u{rng.rational(), rng.rational()}, v{rng.rational(), rng.rational()};
    BaryPoly p = random_poly(rng, 4), q = random_poly(rng, 3);
    auto d = [&](const BaryPoly& f, const Vec2& w) {
      BaryPoly out(std::max(f.degree() - 1, 0));
      for (int i = 0; i < 3; ++i) out += f.derivative(i) * dot(g[i], w);
      return out;
    };
    EXPECT_EQ(d(d(p, u), v), d(d(p, v), u));
    EXPECT_EQ(d(p * q, u), d(p, u) * q + p * d(q, u));
    EXPECT_EQ(d(l(0), t.vertex(1) - t.vertex(0)), BaryPoly::constant(-1));
  }
}

TEST(Poly, TriangleIntegration)
{
  Triangle t({0, 0}, {3, 1}, {1, 2});
  EXPECT_EQ(integrate_triangle(BaryPoly::constant(1), t.area()), t.area());
  EXPECT_EQ(integrate_triangle(l(0), t.area()), t.area() / 3);
  EXPECT_EQ(integrate_triangle(l(0) * l(1) * l(2), t.area()), t.area() / 60);
  Rng rng(4);
  for (int deg = 0; deg <= kQuadratureMaxDegree; deg += 3) {
    BaryPoly p = random_poly(rng, deg);
    double exact = to_double(integrate_triangle(p, t.area()));
    double quad = quadrature_integral(p, t);
    EXPECT_NEAR(quad, exact, 1e-12 * std::max(1.0, std::abs(exact))) << "degree " << deg;
  }
  EXPECT_NEAR(quadrature_integral(l(0), t), to_double(t.area()) / 3, 1e-14);
  EXPECT_NEAR(quadrature_integral(l(0) * l(1) * l(2), t), to_double(t.area()) / 60, 1e-14);
  EXPECT_THROW(triangle_rule(kQuadratureMaxDegree + 1), std::invalid_argument);
}

TEST(Poly, EdgeRestrictionAndIntegration)
{
  EXPECT_TRUE(restrict_to_edge(l(0) * l(1) * l(2), 1, 2).is_zero());
  EdgePoly be = restrict_to_edge(l(1) * l(2), 1, 2);
  EXPECT_EQ(be, EdgePoly::monomial({1, 1}));
  EXPECT_EQ(restrict_to_edge(l(0), 2, 0), EdgePoly::variable(1));
  EXPECT_EQ(integrate_edge(EdgePoly::constant(1)), 1);
  EXPECT_EQ(integrate_edge(EdgePoly::monomial({1, 1})), Rational(1, 6));
  EXPECT_EQ(integrate_edge(EdgePoly::monomial({2, 0})), Rational(1, 3));
  // univariate Gauss oracle for m0^a m1^b
  using rule = boost::math::quadrature::gauss<double, 10>;
  for (int a = 0; a <= 6; ++a) {
    const int b = 6 - a;
    double quad = rule::integrate([&](double s) { return std::pow(0.5 * (1 + s), a) * std::pow(0.5 * (1 - s), b); }, -1.0, 1.0) / 2;
    EXPECT_NEAR(quad, to_double(integrate_edge(EdgePoly::monomial({a, b}))), 1e-15);
  }
}

TEST(Mesh, UnitSquare)
{
  Mesh m = load_mesh_string("# unit square\n4 2\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n");
  EXPECT_EQ(m.num_vertices(), 4u);
  EXPECT_EQ(m.num_edges(), 5u);
  EXPECT_EQ(m.num_triangles(), 2u);
  int interior = 0;
  for (std::size_t e = 0; e < m.num_edges(); ++e) interior += m.is_boundary_edge(e) ? 0 : 1;
  EXPECT_EQ(interior, 1);
  EXPECT_TRUE(m.is_simply_connected());
  EXPECT_EQ(single_triangle_mesh().euler_characteristic(), 1);
}

TEST(Mesh, InteriorEdgesHaveOppositeInducedOrientation)
{
  Mesh m = refine_uniform(refine_uniform(unit_square_mesh()));
  for (std::size_t e = 0; e < m.num_edges(); ++e) {
    if (m.is_boundary_edge(e)) continue;
    int sum = 0;
    for (int t : m.edge_triangles[e])
      for (int i = 0; i < 3; ++i)
        if (m.triangle_edges[t][i] == static_cast<int>(e)) sum += m.edge_orientation(t, i);
    EXPECT_EQ(sum, 0);
  }
  EXPECT_EQ(m.num_triangles(), 32u);
  EXPECT_TRUE(m.is_simply_connected());
}

TEST(Mesh, Errors)
{
  try {
    load_mesh_string("5 3\n0 0\n2 0\n2 2\n0 2\n1 1\n0 1 2\n0 4 3\n4 2 3\n");
    FAIL() << "hanging node accepted";
  } catch (const MeshError& e) {
    EXPECT_NE(std::string(e.what()).find("nonconforming"), std::string::npos);
  }
  try {
    load_mesh_string("3 1\n0 0\n1 zero\n0 1\n0 1 2\n");
    FAIL() << "bad coordinate accepted";
  } catch (const MeshError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(load_mesh_string("3 1\n0 0\n1 1\n2 2\n0 1 2\n"), MeshError);
  // Two copies of the same triangle overlap: the shared edges are traversed twice in one direction.
  EXPECT_THROW(load_mesh_string("3 2\n0 0\n1 0\n0 1\n0 1 2\n0 1 2\n"), MeshError);
  // Clockwise input is reoriented.
  Mesh cw = load_mesh_string("3 1\n0 0\n0 1\n1 0\n0 1 2\n");
  EXPECT_TRUE(cw.triangle(0).is_ccw());
  EXPECT_EQ(parse_rational("-1.25e-1"), Rational(-1, 8));
  EXPECT_EQ(parse_rational("3/6"), Rational(1, 2));
}
