#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpir/field.hpp"

namespace tpir {

/// Exact nonnegative rational, always kept in lowest terms.
struct Rational {
  u64 num = 0;
  u64 den = 1;

  static Rational make(u64 n, u64 d) {
    if (d == 0) throw std::invalid_argument("Rational: zero denominator");
    const u64 g = std::gcd(n, d);
    return Rational{n / g, d / g};
  }
  bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
  std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }
};

inline u64 ipow_checked(u64 base, u32 exp) {
  u64 r = 1;
  for (u32 i = 0; i < exp; ++i) {
    if (base != 0 && r > UINT64_MAX / base) throw std::overflow_error("integer power overflows");
    r *= base;
  }
  return r;
}

inline u64 binomial(u32 n, u32 k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  u64 r = 1;
  for (u32 i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Highest achievable rate for M records, N servers and collusion
/// threshold T: (1 - T/N) / (1 - (T/N)^M), as an exact fraction
/// (N-T) N^(M-1) / (N^M - T^M).
inline Rational capacity(u32 M, u32 N, u32 T) {
  if (M < 1) throw std::invalid_argument("capacity: M must be >= 1");
  if (T < 1 || T >= N)
    throw std::invalid_argument("capacity: need 1 <= T < N, got T=" + std::to_string(T) +
                                " N=" + std::to_string(N));
  const u64 num = u64(N - T) * ipow_checked(N, M - 1);
  const u64 den = ipow_checked(N, M) - ipow_checked(T, M);
  return Rational::make(num, den);
}

inline u64 default_q(u32 N) { return next_prime_at_least(N < 2 ? 2 : N); }

/// All scheme integers for one (M, N, T, q) instance. alpha/beta/d_arr use
/// 1-based size classes in the math; here index [i] holds the class i+1
/// value. Everything is validated on construction, so a SchemeParams in
/// hand satisfies all the counting identities.
struct SchemeParams {
  u32 M = 0;           // records
  u32 N = 0;           // servers
  u32 T = 0;           // collusion threshold
  u64 q = 0;           // field modulus
  u32 d = 0, n = 0, t = 0;  // d = gcd(N,T), n = N/d, t = T/d
  u64 Ltilde = 0;      // n^(M-2)
  u64 L = 0;           // N*Ltilde = d*n^(M-1), symbols per record
  std::vector<u64> alpha;  // size M
  std::vector<u64> beta;   // size M
  std::vector<u64> d_arr;  // size M-1, rows per type of each cardinality
  u64 D = 0;           // total downloaded symbols per round
  Rational rate;       // L/D, reduced
};

/// (answers per server for servers 1..T, answers per server for the rest).
inline std::pair<u64, u64> per_server_counts(const SchemeParams& p) {
  u64 head = 0, tail = 0;
  for (u32 i = 1; i <= p.M; ++i) {
    head += binomial(p.M, i) * p.alpha[i - 1];
    tail += binomial(p.M, i) * p.beta[i - 1];
  }
  return {head, tail};
}

inline SchemeParams derive_params(u32 M, u32 N, u32 T, u64 q) {
  if (M < 2) throw std::invalid_argument("derive_params: M must be >= 2");
  if (T < 1 || T >= N)
    throw std::invalid_argument("derive_params: need 1 <= T < N, got T=" + std::to_string(T) +
                                " N=" + std::to_string(N));
  if (q < N)
    throw std::invalid_argument("derive_params: q = " + std::to_string(q) +
                                " is below the server count " + std::to_string(N));
  if (!is_prime(q)) throw std::invalid_argument("derive_params: q = " + std::to_string(q) + " is not prime");

  SchemeParams p;
  p.M = M;
  p.N = N;
  p.T = T;
  p.q = q;
  p.d = std::gcd(N, T);
  p.n = N / p.d;
  p.t = T / p.d;
  p.Ltilde = ipow_checked(p.n, M - 2);
  p.L = u64(N) * p.Ltilde;

  p.d_arr.resize(M - 1);
  for (u32 i = 1; i <= M - 1; ++i)
    p.d_arr[i - 1] = ipow_checked(p.n - p.t, i - 1) * ipow_checked(p.t, M - 1 - i);

  // Seed values, then the recurrence alpha[i+1] = d_i - alpha[i] (same for
  // beta). The closed forms involve negative exponents at boundary indices,
  // so only the i = 1 values are evaluated directly; the recurrence plus the
  // validation below covers the rest.
  using i128 = __int128;
  const i128 tt = p.t, nn = p.n;
  auto spow = [](i128 b, u32 e) {
    i128 r = 1;
    for (u32 i = 0; i < e; ++i) r *= b;
    return r;
  };
  i128 a1, b1;
  if (u64(N) >= 2 * u64(T)) {
    a1 = spow(tt, M - 2);
    b1 = 0;
  } else {
    a1 = (spow(tt, M - 1) - spow(tt - nn, M - 1)) / nn;
    b1 = tt * (spow(tt, M - 2) - spow(tt - nn, M - 2)) / nn;
    if ((spow(tt, M - 1) - spow(tt - nn, M - 1)) % nn != 0 ||
        (tt * (spow(tt, M - 2) - spow(tt - nn, M - 2))) % nn != 0)
      throw std::logic_error("derive_params: seed values are not integral");
  }
  std::vector<i128> as(M), bs(M);
  as[0] = a1;
  bs[0] = b1;
  for (u32 i = 1; i < M; ++i) {
    as[i] = i128(p.d_arr[i - 1]) - as[i - 1];
    bs[i] = i128(p.d_arr[i - 1]) - bs[i - 1];
  }
  p.alpha.resize(M);
  p.beta.resize(M);
  for (u32 i = 0; i < M; ++i) {
    if (as[i] < 0 || bs[i] < 0)
      throw std::logic_error("derive_params: negative count at size class " + std::to_string(i + 1));
    p.alpha[i] = static_cast<u64>(as[i]);
    p.beta[i] = static_cast<u64>(bs[i]);
  }

  // Validate every counting identity before handing the params out.
  for (u32 i = 1; i <= M; ++i) {
    const u64 lhs = u64(T) * p.alpha[i - 1] + u64(N - T) * p.beta[i - 1];
    const u64 rhs = u64(p.d) * ipow_checked(p.n - p.t, i - 1) * ipow_checked(p.t, M - i);
    if (lhs != rhs)
      throw std::logic_error("derive_params: balance identity fails at size class " + std::to_string(i));
    if (i <= M - 1) {
      if (lhs != p.d_arr[i - 1] * u64(T))
        throw std::logic_error("derive_params: per-type balance fails at size class " + std::to_string(i));
      if (p.alpha[i - 1] + p.alpha[i] != p.d_arr[i - 1] || p.beta[i - 1] + p.beta[i] != p.d_arr[i - 1])
        throw std::logic_error("derive_params: recurrence fails at size class " + std::to_string(i));
    }
  }
  u64 sum_a = 0, sum_b = 0, sum_d = 0;
  for (u32 i = 1; i <= M; ++i) {
    sum_a += binomial(M - 1, i - 1) * p.alpha[i - 1];
    sum_b += binomial(M - 1, i - 1) * p.beta[i - 1];
  }
  for (u32 i = 1; i <= M - 1; ++i) sum_d += binomial(M - 2, i - 1) * p.d_arr[i - 1];
  if (sum_a != p.Ltilde || sum_b != p.Ltilde || sum_d != p.Ltilde)
    throw std::logic_error("derive_params: type counts do not tile the row space");
  if (p.L != u64(p.d) * ipow_checked(p.n, M - 1))
    throw std::logic_error("derive_params: sub-packetization identity fails");

  p.D = u64(p.d) * (ipow_checked(p.n, M) - ipow_checked(p.t, M)) / (p.n - p.t);
  const auto [head, tail] = per_server_counts(p);
  if (u64(T) * head + u64(N - T) * tail != p.D)
    throw std::logic_error("derive_params: per-server counts do not sum to D");
  p.rate = Rational::make(p.L, p.D);
  if (!(p.rate == capacity(M, N, T)))
    throw std::logic_error("derive_params: rate does not match capacity");
  return p;
}

}  // namespace tpir
