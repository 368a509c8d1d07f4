#pragma once

// Floating-point quadrature on triangles: a collapsed (Duffy) tensor product
// of 10-point Gauss-Legendre rules, exact for polynomials of degree <= 18.

#include <boost/math/quadrature/gauss.hpp>

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace airyfem {

struct QuadraturePoint {
  std::array<double, 3> bary;  ///< barycentric coordinates in the target triangle
  double weight;               ///< weights sum to one (multiply by the area)
};

inline constexpr int kQuadratureMaxDegree = 18;

namespace detail {

// Gauss-Legendre nodes and weights mapped to [0,1].
inline std::vector<std::pair<double, double>> gauss_unit_interval()
{
  using rule = boost::math::quadrature::gauss<double, 10>;
  std::vector<std::pair<double, double>> out;
  const auto& x = rule::abscissa();
  const auto& w = rule::weights();
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.push_back({0.5 * (1 + x[i]), 0.5 * w[i]});
    if (x[i] != 0) out.push_back({0.5 * (1 - x[i]), 0.5 * w[i]});
  }
  return out;
}

}  // namespace detail

/// Rule on the reference simplex, in barycentric coordinates.
inline const std::vector<QuadraturePoint>& triangle_rule()
{
  static const std::vector<QuadraturePoint> rule = [] {
    std::vector<QuadraturePoint> pts;
    const auto line = detail::gauss_unit_interval();
    for (auto [u, wu] : line)
      for (auto [v, wv] : line) {
        const double x = u, y = v * (1 - u);
        pts.push_back({{1 - x - y, x, y}, 2 * wu * wv * (1 - u)});
      }
    return pts;
  }();
  return rule;
}

/// Throws when the integrand degree exceeds what the rule integrates exactly.
inline const std::vector<QuadraturePoint>& triangle_rule(int degree)
{
  if (degree > kQuadratureMaxDegree)
    throw std::invalid_argument("quadrature degree " + std::to_string(degree) + " exceeds the supported maximum " +
                                std::to_string(kQuadratureMaxDegree));
  return triangle_rule();
}

}  // namespace airyfem
