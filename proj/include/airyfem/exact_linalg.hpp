#pragma once

// Dense linear algebra over the rationals. Ranks and determinants use
// fraction-free (Bareiss) elimination on integer-scaled rows; solves and
// kernels use ordinary Gauss-Jordan elimination.

#include "airyfem/rational.hpp"

#include <cassert>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace airyfem {

class RationalMatrix {
 public:
  RationalMatrix() = default;
  RationalMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  static RationalMatrix identity(std::size_t n)
  {
    RationalMatrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) out(i, i) = 1;
    return out;
  }

  /// Builds a matrix whose columns are the given vectors (all the same length).
  static RationalMatrix from_columns(const std::vector<std::vector<Rational>>& columns)
  {
    if (columns.empty()) return {};
    RationalMatrix out(columns.front().size(), columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (columns[j].size() != out.rows_) throw std::invalid_argument("from_columns: ragged columns");
      for (std::size_t i = 0; i < out.rows_; ++i) out(i, j) = columns[j][i];
    }
    return out;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Rational& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const Rational& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::vector<Rational> column(std::size_t j) const
  {
    std::vector<Rational> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
  }

  RationalMatrix transposed() const
  {
    RationalMatrix out(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
    return out;
  }

  /// Submatrix of the half-open row range [r0,r1) and column range [c0,c1).
  RationalMatrix block(std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) const
  {
    RationalMatrix out(r1 - r0, c1 - c0);
    for (std::size_t i = r0; i < r1; ++i)
      for (std::size_t j = c0; j < c1; ++j) out(i - r0, j - c0) = (*this)(i, j);
    return out;
  }

  bool is_zero() const
  {
    for (const auto& q : data_)
      if (sgn(q) != 0) return false;
    return true;
  }

  friend bool operator==(const RationalMatrix& a, const RationalMatrix& b)
  {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

  friend RationalMatrix operator*(const RationalMatrix& a, const RationalMatrix& b)
  {
    if (a.cols_ != b.rows_) throw std::invalid_argument("matrix product: shape mismatch");
    RationalMatrix out(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t l = 0; l < a.cols_; ++l) {
        const Rational& ail = a(i, l);
        if (sgn(ail) == 0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j)
          if (sgn(b(l, j)) != 0) out(i, j) += ail * b(l, j);
      }
    return out;
  }

  friend std::vector<Rational> operator*(const RationalMatrix& a, const std::vector<Rational>& x)
  {
    if (a.cols_ != x.size()) throw std::invalid_argument("matrix-vector product: shape mismatch");
    std::vector<Rational> out(a.rows_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t j = 0; j < a.cols_; ++j)
        if (sgn(a(i, j)) != 0 && sgn(x[j]) != 0) out[i] += a(i, j) * x[j];
    return out;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Rational> data_;
};

namespace detail {

// Rows scaled by the lcm of their denominators; exact integer copy of the matrix.
inline std::vector<std::vector<Integer>> integer_rows(const RationalMatrix& a)
{
  std::vector<std::vector<Integer>> out(a.rows(), std::vector<Integer>(a.cols()));
  for (std::size_t i = 0; i < a.rows(); ++i) {
    Integer l = 1;
    for (std::size_t j = 0; j < a.cols(); ++j) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), a(i, j).get_den_mpz_t());
    for (std::size_t j = 0; j < a.cols(); ++j) out[i][j] = a(i, j).get_num() * (l / a(i, j).get_den());
  }
  return out;
}

// Bareiss elimination in place; returns the rank and the sign of the row permutation.
inline std::pair<std::size_t, int> bareiss(std::vector<std::vector<Integer>>& m, std::size_t cols)
{
  const std::size_t rows = m.size();
  Integer prev = 1;
  std::size_t r = 0;
  int sign = 1;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t p = r;
    while (p < rows && m[p][c] == 0) ++p;
    if (p == rows) continue;
    if (p != r) {
      std::swap(m[p], m[r]);
      sign = -sign;
    }
    for (std::size_t i = r + 1; i < rows; ++i) {
      for (std::size_t j = c + 1; j < cols; ++j) {
        Integer t = m[r][c] * m[i][j] - m[i][c] * m[r][j];
        mpz_divexact(m[i][j].get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
      }
      m[i][c] = 0;
    }
    prev = m[r][c];
    ++r;
  }
  return {r, sign};
}

}  // namespace detail

inline std::size_t rank(const RationalMatrix& a)
{
  // Eliminate along the shorter dimension.
  if (a.rows() > a.cols()) return rank(a.transposed());
  auto m = detail::integer_rows(a);
  return detail::bareiss(m, a.cols()).first;
}

inline Rational determinant(const RationalMatrix& a)
{
  if (a.rows() != a.cols()) throw std::invalid_argument("determinant of a non-square matrix");
  const std::size_t n = a.rows();
  if (n == 0) return 1;
  Rational scale = 1;
  for (std::size_t i = 0; i < n; ++i) {
    Integer l = 1;
    for (std::size_t j = 0; j < n; ++j) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), a(i, j).get_den_mpz_t());
    scale *= Rational(l);
  }
  auto m = detail::integer_rows(a);
  auto [r, sign] = detail::bareiss(m, n);
  if (r < n) return 0;
  Rational det(m[n - 1][n - 1]);
  det /= scale;
  return sign < 0 ? Rational(-det) : det;
}

/// Reduced row echelon form; returns the pivot columns.
inline std::vector<std::size_t> rref(RationalMatrix& m)
{
  std::vector<std::size_t> pivots;
  std::size_t r = 0;
  for (std::size_t c = 0; c < m.cols() && r < m.rows(); ++c) {
    std::size_t p = r;
    while (p < m.rows() && sgn(m(p, c)) == 0) ++p;
    if (p == m.rows()) continue;
    if (p != r)
      for (std::size_t j = 0; j < m.cols(); ++j) std::swap(m(p, j), m(r, j));
    Rational inv = 1 / m(r, c);
    for (std::size_t j = c; j < m.cols(); ++j) m(r, j) *= inv;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (i == r || sgn(m(i, c)) == 0) continue;
      Rational f = m(i, c);
      for (std::size_t j = c; j < m.cols(); ++j)
        if (sgn(m(r, j)) != 0) m(i, j) -= f * m(r, j);
    }
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}

/// Basis of the right kernel, one vector per free column.
inline std::vector<std::vector<Rational>> nullspace(const RationalMatrix& a)
{
  RationalMatrix m = a;
  auto pivots = rref(m);
  std::vector<bool> is_pivot(a.cols(), false);
  for (auto p : pivots) is_pivot[p] = true;
  std::vector<std::vector<Rational>> basis;
  for (std::size_t free = 0; free < a.cols(); ++free) {
    if (is_pivot[free]) continue;
    std::vector<Rational> v(a.cols());
    v[free] = 1;
    for (std::size_t r = 0; r < pivots.size(); ++r) v[pivots[r]] = -m(r, free);
    basis.push_back(std::move(v));
  }
  return basis;
}

/// Inverse of a square matrix, or nullopt when it is singular.
inline std::optional<RationalMatrix> inverse(const RationalMatrix& a)
{
  if (a.rows() != a.cols()) throw std::invalid_argument("inverse of a non-square matrix");
  const std::size_t n = a.rows();
  RationalMatrix aug(n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) aug(i, j) = a(i, j);
    aug(i, n + i) = 1;
  }
  auto pivots = rref(aug);
  if (pivots.size() < n || pivots[n - 1] != n - 1) return std::nullopt;
  return aug.block(0, n, n, 2 * n);
}

/// Solves a x = b; nullopt when the system is inconsistent. Free variables are set to zero.
inline std::optional<std::vector<Rational>> solve(const RationalMatrix& a, const std::vector<Rational>& b)
{
  if (a.rows() != b.size()) throw std::invalid_argument("solve: shape mismatch");
  RationalMatrix aug(a.rows(), a.cols() + 1);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) aug(i, j) = a(i, j);
    aug(i, a.cols()) = b[i];
  }
  auto pivots = rref(aug);
  if (!pivots.empty() && pivots.back() == a.cols()) return std::nullopt;
  std::vector<Rational> x(a.cols());
  for (std::size_t r = 0; r < pivots.size(); ++r) x[pivots[r]] = aug(r, a.cols());
  return x;
}

}  // namespace airyfem
