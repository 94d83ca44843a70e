#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tpir/field.hpp"
#include "tpir/matrix.hpp"

namespace tpir {

/// An [N, T] Reed-Solomon code over F_q with the Vandermonde generator
/// G[r][j] = j^r, evaluation points 0..N-1 (0^0 = 1). Any T coordinates of a
/// codeword determine the rest, which is what erasure recovery exploits.
struct MdsCode {
  std::size_t N = 0;
  std::size_t T = 0;
  PrimeField field;
  Matrix G;
  std::vector<u64> eval_points;
};

inline MdsCode make_mds(std::size_t N, std::size_t T, const PrimeField& field) {
  if (T < 1 || T >= N)
    throw std::invalid_argument("make_mds: need 1 <= T < N, got T=" + std::to_string(T) +
                                " N=" + std::to_string(N));
  if (field.q() < N)
    throw std::invalid_argument("make_mds: field size " + std::to_string(field.q()) +
                                " below code length " + std::to_string(N));
  MdsCode code{N, T, field, Matrix(T, N), {}};
  code.eval_points.resize(N);
  for (std::size_t j = 0; j < N; ++j) {
    code.eval_points[j] = j;  // distinct since q >= N
    u64 p = 1;
    for (std::size_t r = 0; r < T; ++r) {
      code.G.at(r, j) = p;
      p = field.mul(p, j % field.q());
    }
  }
  return code;
}

inline std::vector<u64> mds_encode(const MdsCode& code, const std::vector<u64>& msg) {
  if (msg.size() != code.T)
    throw std::invalid_argument("mds_encode: message length " + std::to_string(msg.size()) +
                                " != T = " + std::to_string(code.T));
  return vec_mat_mul(code.field, msg, code.G);
}

/// Recovers the unique codeword agreeing with T known coordinates, given as
/// (position, value) pairs with 0-based positions. Solves the TxT column
/// submatrix for the message and re-encodes.
inline std::vector<u64> mds_recover(const MdsCode& code,
                                    const std::vector<std::pair<std::size_t, u64>>& known) {
  if (known.size() != code.T)
    throw std::invalid_argument("mds_recover: need exactly T = " + std::to_string(code.T) +
                                " known coordinates, got " + std::to_string(known.size()));
  Matrix sub(code.T, code.T);
  std::vector<u64> vals(code.T);
  for (std::size_t i = 0; i < code.T; ++i) {
    const auto [pos, val] = known[i];
    if (pos >= code.N)
      throw std::invalid_argument("mds_recover: position " + std::to_string(pos) + " out of range");
    for (std::size_t j = i + 1; j < code.T; ++j) {
      if (known[j].first == pos)
        throw std::invalid_argument("mds_recover: duplicate position " + std::to_string(pos));
    }
    for (std::size_t r = 0; r < code.T; ++r) sub.at(r, i) = code.G.at(r, pos);
    vals[i] = val;
  }
  Matrix sub_inv;
  try {
    sub_inv = mat_inverse(code.field, sub);
  } catch (const singular_matrix_error&) {
    // Every TxT submatrix of a Vandermonde generator is invertible; reaching
    // this means the code object was corrupted.
    throw std::logic_error("mds_recover: singular column submatrix in an MDS generator");
  }
  const std::vector<u64> msg = vec_mat_mul(code.field, vals, sub_inv);
  return mds_encode(code, msg);
}

}  // namespace tpir
