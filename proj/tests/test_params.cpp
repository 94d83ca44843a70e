#include <catch2/catch_amalgamated.hpp>

#include "tpir/audit.hpp"
#include "tpir/params.hpp"

using namespace tpir;

TEST_CASE("parameters for the three-server two-colluding example", "[params]") {
  const SchemeParams p = derive_params(3, 3, 2, 3);
  CHECK(p.d == 1);
  CHECK(p.n == 3);
  CHECK(p.t == 2);
  CHECK(p.L == 9);
  CHECK(p.Ltilde == 3);
  CHECK(p.alpha == std::vector<u64>{1, 1, 0});
  CHECK(p.beta == std::vector<u64>{2, 0, 1});
  CHECK(p.d_arr == std::vector<u64>{2, 1});
  CHECK(p.D == 19);
  CHECK(p.rate == Rational::make(9, 19));
  CHECK(per_server_counts(p) == std::pair<u64, u64>{6, 7});
}

TEST_CASE("parameters for the minimal instance", "[params]") {
  const SchemeParams p = derive_params(2, 2, 1, 2);
  CHECK(p.d == 1);
  CHECK(p.n == 2);
  CHECK(p.L == 2);
  CHECK(p.alpha == std::vector<u64>{1, 0});
  CHECK(p.beta == std::vector<u64>{0, 1});
  CHECK(p.d_arr == std::vector<u64>{1});
  CHECK(p.D == 3);
  CHECK(p.rate == Rational::make(2, 3));
  CHECK(per_server_counts(p) == std::pair<u64, u64>{2, 1});
}

TEST_CASE("parameters with a nontrivial gcd", "[params]") {
  const SchemeParams p = derive_params(3, 4, 2, 5);
  CHECK(p.d == 2);
  CHECK(p.n == 2);
  CHECK(p.t == 1);
  CHECK(p.L == 8);
  CHECK(p.alpha == std::vector<u64>{1, 0, 1});
  CHECK(p.beta == std::vector<u64>{0, 1, 0});
  CHECK(p.d_arr == std::vector<u64>{1, 1});
  CHECK(p.D == 14);
  CHECK(p.rate == Rational::make(4, 7));
}

TEST_CASE("capacity values", "[params]") {
  CHECK(capacity(3, 3, 2) == Rational::make(9, 19));
  CHECK(capacity(2, 2, 1) == Rational::make(2, 3));
  CHECK(capacity(1, 4, 2) == Rational::make(1, 1));  // single record: rate 1
  CHECK_THROWS_AS(capacity(0, 4, 2), std::invalid_argument);
  CHECK_THROWS_AS(capacity(3, 4, 4), std::invalid_argument);
}

TEST_CASE("parameter validation", "[params]") {
  CHECK_THROWS_AS(derive_params(1, 3, 2, 3), std::invalid_argument);   // M < 2
  CHECK_THROWS_AS(derive_params(3, 3, 3, 3), std::invalid_argument);   // T >= N
  CHECK_THROWS_AS(derive_params(3, 3, 0, 3), std::invalid_argument);   // T < 1
  CHECK_THROWS_AS(derive_params(3, 3, 2, 2), std::invalid_argument);   // q < N
  CHECK_THROWS_AS(derive_params(3, 4, 2, 4), std::invalid_argument);   // q composite
}

TEST_CASE("grid-wide identities", "[params]") {
  for (u32 M = 2; M <= 5; ++M)
    for (u32 N = 2; N <= 6; ++N)
      for (u32 T = 1; T < N; ++T) {
        CAPTURE(M, N, T);
        const SchemeParams p = derive_params(M, N, T, default_q(N));
        CHECK(p.L == u64(p.d) * ipow_checked(p.n, M - 1));
        CHECK(p.rate == capacity(M, N, T));
        // balance per size class, recomputed here from scratch
        for (u32 i = 1; i <= M; ++i) {
          const u64 lhs = u64(T) * p.alpha[i - 1] + u64(N - T) * p.beta[i - 1];
          CHECK(lhs == u64(p.d) * ipow_checked(p.n - p.t, i - 1) * ipow_checked(p.t, M - i));
        }
        u64 sa = 0, sb = 0, sd = 0;
        for (u32 i = 1; i <= M; ++i) {
          sa += binomial(M - 1, i - 1) * p.alpha[i - 1];
          sb += binomial(M - 1, i - 1) * p.beta[i - 1];
        }
        for (u32 i = 1; i <= M - 1; ++i) sd += binomial(M - 2, i - 1) * p.d_arr[i - 1];
        CHECK(sa == p.Ltilde);
        CHECK(sb == p.Ltilde);
        CHECK(sd == p.Ltilde);
        const auto [head, tail] = per_server_counts(p);
        CHECK(u64(T) * head + u64(N - T) * tail == p.D);
      }
}

TEST_CASE("closed form agrees with the brute-force solver on the boundary", "[params]") {
  // N = 2T sits exactly on the regime split
  for (auto [M, N, T] : std::vector<std::tuple<u32, u32, u32>>{
           {2, 2, 1}, {3, 2, 1}, {4, 2, 1}, {2, 4, 2}, {3, 4, 2}, {4, 4, 2}, {3, 6, 3}}) {
    CAPTURE(M, N, T);
    const SchemeParams p = derive_params(M, N, T, default_q(N));
    const OracleSolution sol = oracle_solve_system(M, N, T);
    CHECK(p.alpha == sol.alpha);
    CHECK(p.beta == sol.beta);
    CHECK(p.d_arr == sol.d_arr);
  }
}
