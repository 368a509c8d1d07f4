#pragma once

// Homogeneous polynomials with exact rational coefficients.
//
// HomPoly<3> lives in the barycentric coordinates (l0,l1,l2) of a triangle and
// HomPoly<2> in the edge coordinates (m0,m1) of a segment. Because the
// coordinates sum to one, a polynomial of degree d is stored homogenized to
// degree d; two polynomials are equal when they agree after homogenizing both
// to the larger degree.

#include "airyfem/rational.hpp"

#include <algorithm>
#include <array>
#include <memory>
#include <numeric>
#include <type_traits>
#include <stdexcept>
#include <vector>

namespace airyfem {

template <int N>
using Exponent = std::array<int, N>;

namespace detail {

template <int N>
std::size_t exponent_index(const Exponent<N>& e)
{
  static_assert(N == 2 || N == 3);
  if constexpr (N == 2) {
    return static_cast<std::size_t>(e[1]);
  } else {
    const int s = e[1] + e[2];
    return static_cast<std::size_t>(s * (s + 1) / 2 + e[2]);
  }
}

template <int N>
std::size_t monomial_count(int degree)
{
  if (degree < 0) return 0;
  if constexpr (N == 2) return static_cast<std::size_t>(degree + 1);
  else return static_cast<std::size_t>((degree + 1) * (degree + 2) / 2);
}

template <int N>
std::vector<Exponent<N>> build_exponents(int degree)
{
  std::vector<Exponent<N>> out(monomial_count<N>(degree));
  if constexpr (N == 2) {
    for (int b = 0; b <= degree; ++b) out[b] = {degree - b, b};
  } else {
    for (int s = 0; s <= degree; ++s)
      for (int c = 0; c <= s; ++c) out[exponent_index<3>({degree - s, s - c, c})] = {degree - s, s - c, c};
  }
  return out;
}

}  // namespace detail

/// All exponents of total degree `degree`, in storage order.
template <int N>
const std::vector<Exponent<N>>& exponents(int degree)
{
  thread_local std::vector<std::unique_ptr<const std::vector<Exponent<N>>>> cache;
  if (degree < 0) throw std::invalid_argument("negative polynomial degree");
  if (cache.size() <= static_cast<std::size_t>(degree)) cache.resize(degree + 1);
  auto& slot = cache[degree];
  if (!slot) slot = std::make_unique<const std::vector<Exponent<N>>>(detail::build_exponents<N>(degree));
  return *slot;
}

template <int N>
class HomPoly {
 public:
  HomPoly() : HomPoly(0) {}
  explicit HomPoly(int degree) : degree_(degree), coeffs_(detail::monomial_count<N>(degree))
  {
    if (degree < 0) throw std::invalid_argument("negative polynomial degree");
  }

  static HomPoly constant(const Rational& c)
  {
    HomPoly p(0);
    p.coeffs_[0] = c;
    return p;
  }

  static HomPoly variable(int i)
  {
    HomPoly p(1);
    Exponent<N> e{};
    e[i] = 1;
    p[e] = 1;
    return p;
  }

  static HomPoly monomial(const Exponent<N>& e, const Rational& c = 1)
  {
    HomPoly p(std::accumulate(e.begin(), e.end(), 0));
    p[e] = c;
    return p;
  }

  int degree() const { return degree_; }
  const std::vector<Rational>& coefficients() const { return coeffs_; }

  Rational& operator[](const Exponent<N>& e) { return coeffs_[detail::exponent_index<N>(e)]; }
  const Rational& operator[](const Exponent<N>& e) const { return coeffs_[detail::exponent_index<N>(e)]; }

  bool is_zero() const
  {
    for (const auto& c : coeffs_)
      if (sgn(c) != 0) return false;
    return true;
  }

  /// Multiplies by (sum of variables)^(target - degree).
  HomPoly homogenized(int target) const
  {
    if (target < degree_) throw std::invalid_argument("cannot homogenize to a lower degree");
    HomPoly cur = *this;
    while (cur.degree_ < target) {
      HomPoly next(cur.degree_ + 1);
      const auto& exps = exponents<N>(cur.degree_);
      for (std::size_t k = 0; k < exps.size(); ++k) {
        if (sgn(cur.coeffs_[k]) == 0) continue;
        for (int i = 0; i < N; ++i) {
          Exponent<N> e = exps[k];
          ++e[i];
          next[e] += cur.coeffs_[k];
        }
      }
      cur = std::move(next);
    }
    return cur;
  }

  /// Partial derivative with respect to variable i (degree drops by one).
  HomPoly derivative(int i) const
  {
    if (degree_ == 0) return HomPoly(0);
    HomPoly out(degree_ - 1);
    const auto& exps = exponents<N>(degree_);
    for (std::size_t k = 0; k < exps.size(); ++k) {
      if (exps[k][i] == 0 || sgn(coeffs_[k]) == 0) continue;
      Exponent<N> e = exps[k];
      --e[i];
      out[e] += coeffs_[k] * exps[k][i];
    }
    return out;
  }

  template <class Scalar>
  Scalar evaluate(const std::array<Scalar, N>& point) const
  {
    Scalar sum = 0;
    const auto& exps = exponents<N>(degree_);
    for (std::size_t k = 0; k < exps.size(); ++k) {
      if (sgn(coeffs_[k]) == 0) continue;
      Scalar term = scalar_cast<Scalar>(coeffs_[k]);
      for (int i = 0; i < N; ++i)
        for (int p = 0; p < exps[k][i]; ++p) term *= point[i];
      sum += term;
    }
    return sum;
  }

  HomPoly& operator+=(const HomPoly& other)
  {
    if (other.degree_ > degree_) *this = homogenized(other.degree_);
    if (other.degree_ == degree_) {
      for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] += other.coeffs_[k];
    } else {
      HomPoly lifted = other.homogenized(degree_);
      for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] += lifted.coeffs_[k];
    }
    return *this;
  }

  HomPoly& operator-=(const HomPoly& other) { return *this += -other; }

  HomPoly& operator*=(const Rational& s)
  {
    for (auto& c : coeffs_) c *= s;
    return *this;
  }

  friend HomPoly operator+(HomPoly a, const HomPoly& b) { return a += b; }
  friend HomPoly operator-(HomPoly a, const HomPoly& b) { return a -= b; }
  friend HomPoly operator*(HomPoly a, const Rational& s) { return a *= s; }
  friend HomPoly operator*(const Rational& s, HomPoly a) { return a *= s; }

  friend HomPoly operator-(HomPoly a)
  {
    for (auto& c : a.coeffs_) c = -c;
    return a;
  }

  friend HomPoly operator*(const HomPoly& a, const HomPoly& b)
  {
    HomPoly out(a.degree_ + b.degree_);
    const auto& ea = exponents<N>(a.degree_);
    const auto& eb = exponents<N>(b.degree_);
    for (std::size_t i = 0; i < ea.size(); ++i) {
      if (sgn(a.coeffs_[i]) == 0) continue;
      for (std::size_t j = 0; j < eb.size(); ++j) {
        if (sgn(b.coeffs_[j]) == 0) continue;
        Exponent<N> e;
        for (int v = 0; v < N; ++v) e[v] = ea[i][v] + eb[j][v];
        out[e] += a.coeffs_[i] * b.coeffs_[j];
      }
    }
    return out;
  }

  HomPoly& operator*=(const HomPoly& other) { return *this = *this * other; }

  friend bool operator==(const HomPoly& a, const HomPoly& b)
  {
    if (a.degree_ == b.degree_) return a.coeffs_ == b.coeffs_;
    const int d = std::max(a.degree_, b.degree_);
    return a.homogenized(d).coeffs_ == b.homogenized(d).coeffs_;
  }

 private:
  template <class Scalar>
  static Scalar scalar_cast(const Rational& q)
  {
    if constexpr (std::is_same_v<Scalar, Rational>) return q;
    else return static_cast<Scalar>(q.get_d());
  }

  int degree_;
  std::vector<Rational> coeffs_;
};

using BaryPoly = HomPoly<3>;
using EdgePoly = HomPoly<2>;

template <int N>
HomPoly<N> pow(const HomPoly<N>& p, int n)
{
  HomPoly<N> out = HomPoly<N>::constant(1);
  for (int i = 0; i < n; ++i) out *= p;
  return out;
}

/// Substitutes each variable of p by a linear form in M new variables:
/// x_n = sum_m forms[n][m] y_m.
template <int M, int N>
HomPoly<M> substitute(const HomPoly<N>& p,
                      const std::array<std::array<Rational, std::size_t(M)>, std::size_t(N)>& forms)
{
  const int d = p.degree();
  std::array<std::vector<HomPoly<M>>, N> powers;
  for (int n = 0; n < N; ++n) {
    HomPoly<M> form(1);
    for (int m = 0; m < M; ++m) {
      Exponent<M> e{};
      e[m] = 1;
      form[e] = forms[n][m];
    }
    powers[n].push_back(HomPoly<M>::constant(1));
    for (int q = 1; q <= d; ++q) powers[n].push_back(powers[n].back() * form);
  }
  HomPoly<M> out(d);
  const auto& exps = exponents<N>(d);
  for (std::size_t k = 0; k < exps.size(); ++k) {
    const Rational& c = p.coefficients()[k];
    if (sgn(c) == 0) continue;
    HomPoly<M> term = HomPoly<M>::constant(c);
    for (int n = 0; n < N; ++n) term *= powers[n][exps[k][n]];
    out += term;
  }
  return out;
}

/// Trace of a barycentric polynomial on the face l_i = 0. The edge coordinate
/// m0 is attached to l_{from} and m1 to l_{to}, where {from,to} = {0,1,2}\{i}.
inline EdgePoly restrict_to_edge(const BaryPoly& p, int from, int to)
{
  const int opposite = 3 - from - to;
  EdgePoly out(p.degree());
  const auto& exps = exponents<3>(p.degree());
  for (std::size_t k = 0; k < exps.size(); ++k) {
    if (exps[k][opposite] != 0) continue;
    out[{exps[k][from], exps[k][to]}] += p.coefficients()[k];
  }
  return out;
}

/// Integral over a triangle of the given area: sum c_a a0! a1! a2! 2|T| / (d+2)!.
inline Rational integrate_triangle(const BaryPoly& p, const Rational& area)
{
  const int d = p.degree();
  const auto& exps = exponents<3>(d);
  Rational sum = 0;
  for (std::size_t k = 0; k < exps.size(); ++k) {
    const Rational& c = p.coefficients()[k];
    if (sgn(c) == 0) continue;
    sum += c * Rational(factorial(exps[k][0]) * factorial(exps[k][1]) * factorial(exps[k][2]));
  }
  return sum * 2 * area / Rational(factorial(d + 2));
}

/// Returns r with  integral_e q ds = r |e|,  using  m0^a m1^b -> a! b! / (a+b+1)!.
inline Rational integrate_edge(const EdgePoly& q)
{
  const int d = q.degree();
  const auto& exps = exponents<2>(d);
  Rational sum = 0;
  for (std::size_t k = 0; k < exps.size(); ++k) {
    const Rational& c = q.coefficients()[k];
    if (sgn(c) == 0) continue;
    sum += c * Rational(factorial(exps[k][0]) * factorial(exps[k][1]));
  }
  return sum / Rational(factorial(d + 1));
}

/// Coefficients of q(1 - t, t) in the power basis 1, t, ..., t^d.
inline std::vector<Rational> edge_power_coefficients(const EdgePoly& q)
{
  const int d = q.degree();
  std::vector<Rational> out(d + 1);
  for (int b = 0; b <= d; ++b) {
    const Rational& c = q.coefficients()[b];
    if (sgn(c) == 0) continue;
    // (1 - t)^(d-b) t^b
    for (int j = 0; j <= d - b; ++j) {
      Integer binom;
      mpz_bin_uiui(binom.get_mpz_t(), d - b, j);
      out[b + j] += c * Rational(binom) * (j % 2 == 0 ? 1 : -1);
    }
  }
  return out;
}

/// Degree of the edge polynomial as a function on the edge (-1 for zero).
inline int true_degree(const EdgePoly& q)
{
  auto c = edge_power_coefficients(q);
  for (int j = static_cast<int>(c.size()) - 1; j >= 0; --j)
    if (sgn(c[j]) != 0) return j;
  return -1;
}

/// Coefficients after homogenizing to `degree`, in storage order.
template <int N>
std::vector<Rational> flatten(const HomPoly<N>& p, int degree)
{
  return p.homogenized(degree).coefficients();
}

}  // namespace airyfem
