#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpir/params.hpp"

namespace tpir {

struct BitMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> bits;

  BitMatrix() = default;
  BitMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), bits(r * c, 0) {}
  std::uint8_t& at(std::size_t r, std::size_t c) { return bits[r * cols + c]; }
  std::uint8_t at(std::size_t r, std::size_t c) const { return bits[r * cols + c]; }
  bool operator==(const BitMatrix& o) const {
    return rows == o.rows && cols == o.cols && bits == o.bits;
  }
};

/// Binary m x n matrix with row weight u and column weight v, built from
/// cyclic right shifts of (1^u 0^(n-u)) by u positions per row. The column
/// weights are re-counted after construction; a mismatch is an error, never
/// silently accepted.
inline BitMatrix make_E(std::size_t u, std::size_t v, std::size_t m, std::size_t n) {
  if (m * u != n * v)
    throw std::invalid_argument("make_E: weight balance m*u = n*v fails (" + std::to_string(m) +
                                "*" + std::to_string(u) + " vs " + std::to_string(n) + "*" +
                                std::to_string(v) + ")");
  if (u > n || v > m) throw std::invalid_argument("make_E: weight exceeds dimension");
  BitMatrix e(m, n);
  if (m == 0 || u == 0) return e;
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t shift = (u * k) % n;
    for (std::size_t c = 0; c < u; ++c) e.at(k, (shift + c) % n) = 1;
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t w = 0;
    for (std::size_t r = 0; r < m; ++r) w += e.at(r, c);
    if (w != v)
      throw std::logic_error("make_E: cyclic construction gives column " + std::to_string(c) +
                             " weight " + std::to_string(w) + ", expected " + std::to_string(v));
  }
  return e;
}

/// The d_i x N placement matrix for interference types of cardinality i:
/// a 1 at (r, j) puts the r-th row's entry at server j into a pure
/// interference sum, a 0 pairs it with a fresh desired symbol in a mixed sum.
struct LocatorMatrix {
  u32 size_class = 0;  // type cardinality i, 1-based
  BitMatrix bits;
};

namespace detail {

inline void paste(BitMatrix& dst, const BitMatrix& src, std::size_t r0, std::size_t c0) {
  for (std::size_t r = 0; r < src.rows; ++r)
    for (std::size_t c = 0; c < src.cols; ++c) dst.at(r0 + r, c0 + c) = src.at(r, c);
}

}  // namespace detail

/// Checks the defining weight properties by direct counting. Returns a
/// description of the first violation, or nothing if the matrix is valid.
inline std::optional<std::string> validate_locator(const SchemeParams& p, u32 i,
                                                   const BitMatrix& m) {
  const u64 a = p.alpha[i - 1], b = p.beta[i - 1];
  if (m.rows != p.d_arr[i - 1] || m.cols != p.N)
    return "locator M_" + std::to_string(i) + " has shape " + std::to_string(m.rows) + "x" +
           std::to_string(m.cols) + ", expected " + std::to_string(p.d_arr[i - 1]) + "x" +
           std::to_string(p.N);
  for (std::size_t r = 0; r < m.rows; ++r) {
    std::size_t w = 0;
    for (std::size_t c = 0; c < m.cols; ++c) w += m.at(r, c);
    if (w != p.T)
      return "locator M_" + std::to_string(i) + " row " + std::to_string(r) + " has weight " +
             std::to_string(w) + ", expected T = " + std::to_string(p.T);
  }
  for (std::size_t c = 0; c < m.cols; ++c) {
    std::size_t w = 0;
    for (std::size_t r = 0; r < m.rows; ++r) w += m.at(r, c);
    const u64 want = c < p.T ? a : b;
    if (w != want)
      return "locator M_" + std::to_string(i) + " column " + std::to_string(c) + " has weight " +
             std::to_string(w) + ", expected " + std::to_string(want);
  }
  return std::nullopt;
}

inline LocatorMatrix make_locator(u32 i, const SchemeParams& p) {
  if (i < 1 || i > p.M - 1)
    throw std::invalid_argument("make_locator: size class " + std::to_string(i) +
                                " outside [1, M-1]");
  const u64 a = p.alpha[i - 1], b = p.beta[i - 1];
  const u64 di = p.d_arr[i - 1];
  const std::size_t N = p.N, T = p.T;
  BitMatrix m(di, N);
  if (u64(N) >= 2 * u64(T)) {
    if ((N - T) * b % T != 0)
      throw std::logic_error("make_locator: (N-T)*beta not divisible by T at class " +
                             std::to_string(i));
    const std::size_t top = (N - T) * b / T;
    detail::paste(m, make_E(T, b, top, N - T), 0, T);
    detail::paste(m, make_E(T, a, a, T), top, 0);
  } else {
    if ((2 * T - N) * b % T != 0)
      throw std::logic_error("make_locator: (2T-N)*beta not divisible by T at class " +
                             std::to_string(i));
    const std::size_t c = (2 * T - N) * b / T;
    if (a < c)
      throw std::logic_error("make_locator: negative block height at class " + std::to_string(i));
    detail::paste(m, make_E(2 * T - N, c, b, T), 0, 0);
    detail::paste(m, make_E(N - T, b, b, N - T), 0, T);
    detail::paste(m, make_E(T, a - c, a - c, T), b, 0);
  }
  if (auto err = validate_locator(p, i, m)) throw std::logic_error("make_locator: " + *err);
  return LocatorMatrix{i, std::move(m)};
}

inline std::vector<LocatorMatrix> make_all_locators(const SchemeParams& p) {
  std::vector<LocatorMatrix> out;
  out.reserve(p.M - 1);
  for (u32 i = 1; i <= p.M - 1; ++i) out.push_back(make_locator(i, p));
  return out;
}

}  // namespace tpir
