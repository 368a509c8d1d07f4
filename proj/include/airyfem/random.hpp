#pragma once

// Seeded random rationals, triangles and polynomials for property checks.

#include "airyfem/geometry.hpp"
#include "airyfem/hom_poly.hpp"

#include <cstdint>
#include <random>

namespace airyfem {

class RationalRng {
 public:
  explicit RationalRng(std::uint64_t seed) : gen_(seed) {}

  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }

  /// p/q with |p| <= range and 1 <= q <= max_den.
  Rational rational(int range = 9, int max_den = 7)
  {
    Rational q(integer(-range, range), integer(1, max_den));
    q.canonicalize();
    return q;
  }

 private:
  std::mt19937_64 gen_;
};

inline Triangle random_triangle(RationalRng& rng)
{
  for (;;) {
    Point2 a{rng.rational(), rng.rational()}, b{rng.rational(), rng.rational()}, c{rng.rational(), rng.rational()};
    if (sgn(cross(b - a, c - a)) != 0) return Triangle(a, b, c);
  }
}

template <int N>
HomPoly<N> random_hom_poly(RationalRng& rng, int degree)
{
  HomPoly<N> p(degree);
  for (const auto& e : exponents<N>(degree)) p[e] = rng.rational();
  return p;
}

}  // namespace airyfem
