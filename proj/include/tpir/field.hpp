#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace tpir {

using u32 = std::uint32_t;
using u64 = std::uint64_t;
using u128 = unsigned __int128;

inline u64 mulmod(u64 a, u64 b, u64 q) { return static_cast<u64>(u128(a) * b % q); }

inline u64 powmod(u64 base, u64 exp, u64 q) {
  u64 r = 1 % q;
  base %= q;
  while (exp) {
    if (exp & 1) r = mulmod(r, base, q);
    base = mulmod(base, base, q);
    exp >>= 1;
  }
  return r;
}

/// Deterministic Miller-Rabin, valid for the full u64 range.
inline bool is_prime(u64 n) {
  if (n < 2) return false;
  for (u64 p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % p == 0) return n == p;
  }
  u64 d = n - 1;
  int s = 0;
  while ((d & 1) == 0) { d >>= 1; ++s; }
  for (u64 a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    u64 x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool witness = true;
    for (int i = 1; i < s; ++i) {
      x = mulmod(x, x, n);
      if (x == n - 1) { witness = false; break; }
    }
    if (witness) return false;
  }
  return true;
}

inline u64 next_prime_at_least(u64 n) {
  if (n < 2) return 2;
  while (!is_prime(n)) ++n;
  return n;
}

/// Arithmetic in the prime field F_q. Elements are u64 values in [0, q).
class PrimeField {
 public:
  explicit PrimeField(u64 q) : q_(q) {
    if (!is_prime(q)) throw std::invalid_argument("field modulus " + std::to_string(q) + " is not prime");
  }

  u64 q() const { return q_; }

  u64 add(u64 a, u64 b) const {
    u64 s = a + b;  // a, b < q <= 2^63, no overflow
    return s >= q_ ? s - q_ : s;
  }
  u64 sub(u64 a, u64 b) const { return a >= b ? a - b : q_ - (b - a); }
  u64 neg(u64 a) const { return a == 0 ? 0 : q_ - a; }
  u64 mul(u64 a, u64 b) const { return mulmod(a, b, q_); }
  u64 pow(u64 a, u64 e) const { return powmod(a, e, q_); }

  u64 inv(u64 a) const {
    if (a == 0) throw std::domain_error("inverse of zero in F_" + std::to_string(q_));
    return powmod(a, q_ - 2, q_);
  }

  bool operator==(const PrimeField& o) const { return q_ == o.q_; }

 private:
  u64 q_;
};

inline u64 splitmix64(u64 x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline u64 derive_seed(u64 seed, u64 salt) { return splitmix64(seed ^ splitmix64(salt)); }

/// Seeded random source. mt19937_64 gives a bit-reproducible stream across
/// platforms; bounded draws use rejection so every value in [0, m) is
/// exactly equally likely.
class Rng {
 public:
  explicit Rng(u64 seed) : eng_(seed) {}

  u64 next() { return eng_(); }

  u64 below(u64 m) {
    if (m == 0) throw std::invalid_argument("Rng::below(0)");
    if ((m & (m - 1)) == 0) return eng_() & (m - 1);
    const u64 limit = UINT64_MAX - UINT64_MAX % m;
    u64 v;
    do {
      v = eng_();
    } while (v >= limit);
    return v % m;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace tpir
