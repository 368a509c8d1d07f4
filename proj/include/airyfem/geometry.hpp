#pragma once

// Exact planar geometry: triangles, barycentric gradients, edge frames and the
// barycentric (Alfeld) split of a triangle into three subtriangles.
//
// Local conventions used throughout the library:
//   * triangles are stored counterclockwise;
//   * edge e_i is opposite vertex v_i and runs from v_{i+1} to v_{i+2};
//   * subtriangle T_i = (v_{i+1}, v_{i+2}, v_c) is opposite v_i;
//   * normals are never normalized: the edge normal is the tangent rotated
//     clockwise, n = (t_y, -t_x), which points outward for a ccw triangle.

#include "airyfem/rational.hpp"

#include <array>
#include <stdexcept>
#include <string>

namespace airyfem {

struct Vec2 {
  Rational x;
  Rational y;

  friend Vec2 operator+(const Vec2& a, const Vec2& b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(const Vec2& a, const Vec2& b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
  friend Vec2 operator*(const Rational& s, const Vec2& a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator*(const Vec2& a, const Rational& s) { return {s * a.x, s * a.y}; }
  friend Vec2 operator/(const Vec2& a, const Rational& s) { return {a.x / s, a.y / s}; }
  friend bool operator==(const Vec2& a, const Vec2& b) { return a.x == b.x && a.y == b.y; }
};

using Point2 = Vec2;

inline Rational dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline Rational cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

/// Rotation by -90 degrees, (x,y) -> (y,-x).
inline Vec2 rotate_cw(const Vec2& a) { return {a.y, -a.x}; }

/// The perpendicular operator [[0,1],[-1,0]] applied to a vector.
inline Vec2 perp(const Vec2& a) { return rotate_cw(a); }

class DegenerateTriangle : public std::invalid_argument {
 public:
  DegenerateTriangle() : std::invalid_argument("degenerate triangle (zero area)") {}
};

class Triangle {
 public:
  Triangle(Point2 a, Point2 b, Point2 c) : v_{std::move(a), std::move(b), std::move(c)}
  {
    signed_area2_ = cross(v_[1] - v_[0], v_[2] - v_[0]);
    if (sgn(signed_area2_) == 0) throw DegenerateTriangle();
  }

  const Point2& vertex(int i) const { return v_[((i % 3) + 3) % 3]; }
  const std::array<Point2, 3>& vertices() const { return v_; }
  const Rational& signed_area2() const { return signed_area2_; }
  Rational area() const { return abs(signed_area2_) / 2; }
  bool is_ccw() const { return sgn(signed_area2_) > 0; }

  /// Same triangle listed counterclockwise (swaps v1 and v2 if needed).
  Triangle canonicalized() const { return is_ccw() ? *this : Triangle(v_[0], v_[2], v_[1]); }

  /// t_{i,j} = v_j - v_i.
  Vec2 edge_vector(int i, int j) const { return vertex(j) - vertex(i); }

  Point2 barycenter() const
  {
    return {(v_[0].x + v_[1].x + v_[2].x) / 3, (v_[0].y + v_[1].y + v_[2].y) / 3};
  }

 private:
  std::array<Point2, 3> v_;
  Rational signed_area2_;
};

inline std::array<Vec2, 3> barycentric_gradients(const Triangle& t)
{
  std::array<Vec2, 3> g;
  for (int i = 0; i < 3; ++i) {
    const Point2& a = t.vertex(i + 1);
    const Point2& b = t.vertex(i + 2);
    g[i] = Vec2{a.y - b.y, b.x - a.x} / t.signed_area2();
  }
  return g;
}

struct EdgeFrame {
  int from = 0;  ///< local vertex index of the edge start, i+1
  int to = 0;    ///< local vertex index of the edge end, i+2
  Vec2 tangent;  ///< v_to - v_from (unnormalized)
  Vec2 normal;   ///< rotate_cw(tangent); outward for ccw triangles
  Rational length2;
};

inline EdgeFrame edge_frame(const Triangle& t, int i)
{
  if (i < 0 || i > 2) throw std::out_of_range("edge index must be 0, 1 or 2");
  EdgeFrame f;
  f.from = (i + 1) % 3;
  f.to = (i + 2) % 3;
  f.tangent = t.vertex(f.to) - t.vertex(f.from);
  f.normal = rotate_cw(f.tangent);
  f.length2 = dot(f.tangent, f.tangent);
  return f;
}

/// A counterclockwise triangle with its barycentric refinement and the
/// quantities every element construction needs.
class MacroTriangle {
 public:
  explicit MacroTriangle(const Triangle& t)
      : parent_(t.canonicalized()),
        barycenter_(parent_.barycenter()),
        subtriangles_{make_sub(0), make_sub(1), make_sub(2)},
        grad_lambda_(barycentric_gradients(parent_)),
        frames_{edge_frame(parent_, 0), edge_frame(parent_, 1), edge_frame(parent_, 2)}
  {
  }

  const Triangle& parent() const { return parent_; }
  const Point2& vertex(int i) const { return parent_.vertex(i); }
  const Point2& barycenter() const { return barycenter_; }
  const Triangle& subtriangle(int i) const { return subtriangles_.at(i); }
  const Vec2& grad_lambda(int i) const { return grad_lambda_.at(((i % 3) + 3) % 3); }
  const std::array<Vec2, 3>& grad_lambda() const { return grad_lambda_; }
  const EdgeFrame& frame(int i) const { return frames_.at(((i % 3) + 3) % 3); }
  Rational area() const { return parent_.area(); }

  /// C_T = 4|T|^2 / 9.
  Rational airy_constant() const
  {
    Rational a = area();
    return 4 * a * a / 9;
  }

  /// c_{i,j} = grad(lambda_i) . n_j with the unnormalized outward normal of e_j.
  Rational c(int i, int j) const { return dot(grad_lambda(i), frame(j).normal); }

  /// t_{c,i} = v_i - v_c.
  Vec2 t_c(int i) const { return vertex(i) - barycenter_; }

  /// Point of the given vertex label 0,1,2 or 3 (= barycenter).
  const Point2& point(int label) const { return label == 3 ? barycenter_ : vertex(label); }

 private:
  Triangle make_sub(int i) const { return Triangle(parent_.vertex(i + 1), parent_.vertex(i + 2), barycenter_); }

  Triangle parent_;
  Point2 barycenter_;
  std::array<Triangle, 3> subtriangles_;
  std::array<Vec2, 3> grad_lambda_;
  std::array<EdgeFrame, 3> frames_;
};

inline MacroTriangle refine_barycentric(const Triangle& t) { return MacroTriangle(t); }

}  // namespace airyfem
