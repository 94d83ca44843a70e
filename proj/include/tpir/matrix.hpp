#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tpir/field.hpp"

namespace tpir {

/// Dense row-major matrix over F_q. Entries are kept reduced to [0, q);
/// the field modulus travels separately with the operations.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<u64> a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0) {}

  u64& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  u64 at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
  const u64* row(std::size_t r) const { return a.data() + r * cols; }
  u64* row(std::size_t r) { return a.data() + r * cols; }

  bool operator==(const Matrix& o) const { return rows == o.rows && cols == o.cols && a == o.a; }
};

struct singular_matrix_error : std::runtime_error {
  std::size_t pivot_col;
  explicit singular_matrix_error(std::size_t col)
      : std::runtime_error("singular matrix: no pivot in column " + std::to_string(col)),
        pivot_col(col) {}
};

inline Matrix identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1;
  return m;
}

/// Row-major reshape of a length s*t vector into an s x t matrix.
inline Matrix from_vec(const std::vector<u64>& v, std::size_t s, std::size_t t) {
  if (v.size() != s * t)
    throw std::invalid_argument("from_vec: vector length " + std::to_string(v.size()) +
                                " does not match " + std::to_string(s) + "x" + std::to_string(t));
  Matrix m(s, t);
  m.a = v;
  return m;
}

inline std::vector<u64> to_vec(const Matrix& m) { return m.a; }

namespace detail {

// Gauss-Jordan sweep with deferred reduction. Working values are kept
// unreduced in W; only pivot rows are reduced, so the inner loop is a plain
// multiply-add. Requires (q-1) + nrows*(q-1)^2 to fit in W.
template <typename W>
std::size_t jordan_unreduced(const PrimeField& F, std::vector<W>& m, std::size_t nrows,
                             std::size_t ncols, std::size_t* singular_col) {
  const u64 q = F.q();
  for (std::size_t k = 0; k < nrows; ++k) {
    std::size_t piv = nrows;
    for (std::size_t r = k; r < nrows; ++r) {
      if (m[r * ncols + k] % q != 0) { piv = r; break; }
    }
    if (piv == nrows) {
      if (singular_col) *singular_col = k;
      return k;
    }
    if (piv != k) {
      for (std::size_t c = 0; c < ncols; ++c) std::swap(m[k * ncols + c], m[piv * ncols + c]);
    }
    const u64 s = F.inv(m[k * ncols + k] % q);
    W* pk = m.data() + k * ncols;
    for (std::size_t c = 0; c < ncols; ++c) pk[c] = static_cast<W>(F.mul(pk[c] % q, s));
    for (std::size_t r = 0; r < nrows; ++r) {
      if (r == k) continue;
      const u64 g = m[r * ncols + k] % q;
      if (g == 0) continue;
      const W mf = static_cast<W>(q - g);
      W* pr = m.data() + r * ncols;
      for (std::size_t c = 0; c < ncols; ++c) pr[c] += mf * pk[c];
    }
  }
  return nrows;
}

// Fallback for moduli too large for deferred reduction: reduce every step.
inline std::size_t jordan_reduced(const PrimeField& F, std::vector<u64>& m, std::size_t nrows,
                                  std::size_t ncols, std::size_t* singular_col) {
  const u64 q = F.q();
  for (std::size_t k = 0; k < nrows; ++k) {
    std::size_t piv = nrows;
    for (std::size_t r = k; r < nrows; ++r) {
      if (m[r * ncols + k] != 0) { piv = r; break; }
    }
    if (piv == nrows) {
      if (singular_col) *singular_col = k;
      return k;
    }
    if (piv != k) {
      for (std::size_t c = 0; c < ncols; ++c) std::swap(m[k * ncols + c], m[piv * ncols + c]);
    }
    const u64 s = F.inv(m[k * ncols + k]);
    u64* pk = m.data() + k * ncols;
    for (std::size_t c = 0; c < ncols; ++c) pk[c] = F.mul(pk[c], s);
    for (std::size_t r = 0; r < nrows; ++r) {
      if (r == k) continue;
      const u64 g = m[r * ncols + k];
      if (g == 0) continue;
      const u64 mf = q - g;
      u64* pr = m.data() + r * ncols;
      for (std::size_t c = 0; c < ncols; ++c)
        pr[c] = static_cast<u64>((u128(mf) * pk[c] + pr[c]) % q);
    }
  }
  return nrows;
}

// Forward-only elimination for rank checking; same deferred-reduction scheme
// as the Jordan sweep but touching only the rows below each pivot.
template <typename W>
bool full_rank_unreduced(const PrimeField& F, std::vector<W>& m, std::size_t n) {
  const u64 q = F.q();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = n;
    for (std::size_t r = k; r < n; ++r) {
      if (m[r * n + k] % q != 0) { piv = r; break; }
    }
    if (piv == n) return false;
    if (piv != k) {
      for (std::size_t c = k; c < n; ++c) std::swap(m[k * n + c], m[piv * n + c]);
    }
    const u64 s = F.inv(m[k * n + k] % q);
    W* pk = m.data() + k * n;
    for (std::size_t c = k; c < n; ++c) pk[c] = static_cast<W>(F.mul(pk[c] % q, s));
    for (std::size_t r = k + 1; r < n; ++r) {
      const u64 g = m[r * n + k] % q;
      if (g == 0) continue;
      const W mf = static_cast<W>(q - g);
      W* pr = m.data() + r * n;
      for (std::size_t c = k; c < n; ++c) pr[c] += mf * pk[c];
    }
  }
  return true;
}

// True when the unreduced bound (q-1) + steps*(q-1)^2 fits in Limit.
inline bool fits_unreduced(u64 q, std::size_t steps, u64 limit) {
  const u64 g = q - 1;
  if (g != 0 && g > limit / g) return false;
  const u64 g2 = g * g;
  if (g2 != 0 && steps > (limit - g) / g2) return false;
  return true;
}

template <typename W>
std::size_t run_jordan(const PrimeField& F, std::vector<u64>& m, std::size_t nrows,
                       std::size_t ncols, std::size_t* singular_col) {
  std::vector<W> w(m.begin(), m.end());
  std::size_t rank = jordan_unreduced<W>(F, w, nrows, ncols, singular_col);
  const u64 q = F.q();
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = w[i] % q;
  return rank;
}

inline std::size_t gauss_jordan(const PrimeField& F, std::vector<u64>& m, std::size_t nrows,
                                std::size_t ncols, std::size_t* singular_col) {
  if (fits_unreduced(F.q(), nrows, std::numeric_limits<u32>::max()))
    return run_jordan<u32>(F, m, nrows, ncols, singular_col);
  if (fits_unreduced(F.q(), nrows, std::numeric_limits<u64>::max()))
    return run_jordan<u64>(F, m, nrows, ncols, singular_col);
  return jordan_reduced(F, m, nrows, ncols, singular_col);
}

}  // namespace detail

inline bool is_invertible(const PrimeField& F, const Matrix& m) {
  if (m.rows != m.cols) return false;
  const std::size_t n = m.rows;
  if (detail::fits_unreduced(F.q(), n, std::numeric_limits<u32>::max())) {
    std::vector<u32> w(m.a.begin(), m.a.end());
    return detail::full_rank_unreduced<u32>(F, w, n);
  }
  if (detail::fits_unreduced(F.q(), n, std::numeric_limits<u64>::max())) {
    std::vector<u64> w = m.a;
    return detail::full_rank_unreduced<u64>(F, w, n);
  }
  std::vector<u64> w = m.a;
  return detail::jordan_reduced(F, w, n, n, nullptr) == n;
}

/// Inverse by Gauss-Jordan elimination on [A | I] with first-nonzero pivoting.
inline Matrix mat_inverse(const PrimeField& F, const Matrix& m) {
  if (m.rows != m.cols)
    throw std::invalid_argument("mat_inverse: matrix is " + std::to_string(m.rows) + "x" +
                                std::to_string(m.cols) + ", not square");
  const std::size_t n = m.rows;
  std::vector<u64> w(n * 2 * n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) w[r * 2 * n + c] = m.at(r, c);
    w[r * 2 * n + n + r] = 1;
  }
  std::size_t bad_col = 0;
  if (detail::gauss_jordan(F, w, n, 2 * n, &bad_col) != n) throw singular_matrix_error(bad_col);
  Matrix inv(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) inv.at(r, c) = w[r * 2 * n + n + c];
  return inv;
}

namespace detail {

template <typename W>
void mul_rows_unreduced(const PrimeField& F, const Matrix& A, const Matrix& B, Matrix& out) {
  const u64 q = F.q();
  std::vector<W> acc(B.cols);
  for (std::size_t i = 0; i < A.rows; ++i) {
    std::fill(acc.begin(), acc.end(), W(0));
    for (std::size_t k = 0; k < A.cols; ++k) {
      const W f = static_cast<W>(A.at(i, k));
      if (f == 0) continue;
      const u64* bk = B.row(k);
      for (std::size_t j = 0; j < B.cols; ++j) acc[j] += f * static_cast<W>(bk[j]);
    }
    u64* oi = out.row(i);
    for (std::size_t j = 0; j < B.cols; ++j) oi[j] = acc[j] % q;
  }
}

}  // namespace detail

inline Matrix mat_mul(const PrimeField& F, const Matrix& A, const Matrix& B) {
  if (A.cols != B.rows)
    throw std::invalid_argument("mat_mul: inner dimensions " + std::to_string(A.cols) + " and " +
                                std::to_string(B.rows) + " differ");
  Matrix out(A.rows, B.cols);
  if (detail::fits_unreduced(F.q(), A.cols, std::numeric_limits<u32>::max())) {
    detail::mul_rows_unreduced<u32>(F, A, B, out);
  } else if (detail::fits_unreduced(F.q(), A.cols, std::numeric_limits<u64>::max())) {
    detail::mul_rows_unreduced<u64>(F, A, B, out);
  } else {
    const u64 q = F.q();
    for (std::size_t i = 0; i < A.rows; ++i)
      for (std::size_t j = 0; j < B.cols; ++j) {
        u64 acc = 0;
        for (std::size_t k = 0; k < A.cols; ++k)
          acc = static_cast<u64>((u128(A.at(i, k)) * B.at(k, j) + acc) % q);
        out.at(i, j) = acc;
      }
  }
  return out;
}

/// v (length n) times an n x m matrix, as a length-m vector.
inline std::vector<u64> vec_mat_mul(const PrimeField& F, const std::vector<u64>& v,
                                    const Matrix& S) {
  if (v.size() != S.rows)
    throw std::invalid_argument("vec_mat_mul: vector length " + std::to_string(v.size()) +
                                " vs " + std::to_string(S.rows) + " rows");
  Matrix row(1, v.size());
  row.a = v;
  return mat_mul(F, row, S).a;
}

inline u64 dot_mod(const PrimeField& F, const u64* a, const u64* b, std::size_t n) {
  const u64 q = F.q();
  if (detail::fits_unreduced(q, n, std::numeric_limits<u64>::max())) {
    u64 acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc % q;
  }
  u64 acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc = static_cast<u64>((u128(a[i]) * b[i] + acc) % q);
  return acc;
}

inline Matrix random_matrix(const PrimeField& F, std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (auto& x : m.a) x = rng.below(F.q());
  return m;
}

/// Uniform sample from the invertible dim x dim matrices, by rejection:
/// draw uniformly, accept iff nonsingular. Acceptance probability exceeds
/// prod_{i>=1}(1 - q^-i) > 0.288, so the loop terminates quickly.
inline Matrix random_invertible(const PrimeField& F, std::size_t dim, Rng& rng) {
  if (dim < 1) throw std::invalid_argument("random_invertible: dim must be >= 1");
  for (;;) {
    Matrix m = random_matrix(F, dim, dim, rng);
    if (is_invertible(F, m)) return m;
  }
}

/// Mixes a record through S and spreads it over codewords: takes the first
/// T*Ltilde coordinates of w*S and encodes each consecutive block of T with
/// the generator G, one codeword per output row. The Kronecker-structured
/// product is applied block by block; the big block-diagonal matrix is never
/// materialized.
inline Matrix mix_interference(const PrimeField& F, const std::vector<u64>& w, const Matrix& S,
                               std::size_t Ltilde, const Matrix& G) {
  const std::size_t L = w.size();
  const std::size_t N = G.cols;
  const std::size_t T = G.rows;
  if (S.rows != L || S.cols != L)
    throw std::invalid_argument("mix_interference: S must be LxL for L = " + std::to_string(L));
  if (L != N * Ltilde)
    throw std::invalid_argument("mix_interference: record length " + std::to_string(L) +
                                " != N*Ltilde = " + std::to_string(N * Ltilde));
  if (T * Ltilde > L)
    throw std::invalid_argument("mix_interference: T*Ltilde exceeds record length");
  const std::vector<u64> y = vec_mat_mul(F, w, S);
  Matrix out(Ltilde, N);
  for (std::size_t b = 0; b < Ltilde; ++b) {
    const u64* block = y.data() + b * T;
    for (std::size_t j = 0; j < N; ++j) {
      u64 acc = 0;
      for (std::size_t c = 0; c < T; ++c) acc = F.add(acc, F.mul(block[c], G.at(c, j)));
      out.at(b, j) = acc;
    }
  }
  return out;
}

}  // namespace tpir
