#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"
#include "tpir/mds.hpp"

using namespace tpir;
using test_util::mk;

namespace {

// every size-T position subset, by simple recursion
void subsets(std::size_t n, std::size_t k, std::size_t start, std::vector<std::size_t>& cur,
             std::vector<std::vector<std::size_t>>& out) {
  if (cur.size() == k) {
    out.push_back(cur);
    return;
  }
  for (std::size_t i = start; i < n; ++i) {
    cur.push_back(i);
    subsets(n, k, i + 1, cur, out);
    cur.pop_back();
  }
}

std::vector<std::vector<std::size_t>> all_subsets(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  subsets(n, k, 0, cur, out);
  return out;
}

}  // namespace

TEST_CASE("generator matrices", "[mds]") {
  CHECK(make_mds(3, 2, PrimeField(3)).G == mk(2, 3, {1, 1, 1, 0, 1, 2}));
  CHECK(make_mds(2, 1, PrimeField(2)).G == mk(1, 2, {1, 1}));
  CHECK_THROWS_AS(make_mds(3, 2, PrimeField(2)), std::invalid_argument);  // q < N
  CHECK_THROWS_AS(make_mds(3, 3, PrimeField(5)), std::invalid_argument);  // T >= N
  CHECK_THROWS_AS(make_mds(3, 0, PrimeField(5)), std::invalid_argument);
}

TEST_CASE("every TxT column submatrix is invertible", "[mds]") {
  for (auto [N, T, q] : std::vector<std::tuple<std::size_t, std::size_t, u64>>{
           {4, 2, 5}, {3, 2, 3}, {5, 3, 5}, {6, 4, 7}, {6, 1, 7}}) {
    const PrimeField F(q);
    const MdsCode code = make_mds(N, T, F);
    for (const auto& cols : all_subsets(N, T)) {
      Matrix sub(T, T);
      for (std::size_t r = 0; r < T; ++r)
        for (std::size_t c = 0; c < T; ++c) sub.at(r, c) = code.G.at(r, cols[c]);
      CHECK(is_invertible(F, sub));
    }
  }
}

TEST_CASE("encoding", "[mds]") {
  const MdsCode code = make_mds(3, 2, PrimeField(3));
  CHECK(mds_encode(code, {0, 0}) == std::vector<u64>{0, 0, 0});
  CHECK(mds_encode(code, {1, 0}) == std::vector<u64>{1, 1, 1});
  CHECK(mds_encode(code, {0, 1}) == std::vector<u64>{0, 1, 2});
  CHECK_THROWS_AS(mds_encode(code, {1, 2, 0}), std::invalid_argument);
}

TEST_CASE("erasure recovery", "[mds]") {
  const MdsCode code = make_mds(3, 2, PrimeField(3));
  SECTION("consistency with the first T coordinates") {
    const std::vector<u64> cw = mds_encode(code, {2, 1});
    CHECK(mds_recover(code, {{0, cw[0]}, {1, cw[1]}}) == cw);
  }
  SECTION("unique codeword through two points") {
    CHECK(mds_recover(code, {{0, 1}, {2, 1}}) == std::vector<u64>{1, 1, 1});
  }
  SECTION("zero knowns give the zero codeword") {
    CHECK(mds_recover(code, {{0, 0}, {2, 0}}) == std::vector<u64>{0, 0, 0});
  }
  SECTION("duplicate and out-of-range positions are rejected") {
    CHECK_THROWS_AS(mds_recover(code, {{1, 0}, {1, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(mds_recover(code, {{0, 0}, {3, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(mds_recover(code, {{0, 0}}), std::invalid_argument);
  }
}

TEST_CASE("round-trip through every erasure pattern", "[mds]") {
  for (auto [N, T, q] : std::vector<std::tuple<std::size_t, std::size_t, u64>>{
           {3, 2, 3}, {4, 2, 5}, {5, 2, 5}, {6, 3, 7}, {4, 3, 5}}) {
    const PrimeField F(q);
    const MdsCode code = make_mds(N, T, F);
    Rng rng(N * 100 + T);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<u64> msg(T);
      for (auto& x : msg) x = rng.below(q);
      const std::vector<u64> cw = mds_encode(code, msg);
      for (const auto& keep : all_subsets(N, T)) {
        std::vector<std::pair<std::size_t, u64>> known;
        for (std::size_t pos : keep) known.emplace_back(pos, cw[pos]);
        CHECK(mds_recover(code, known) == cw);
      }
    }
  }
}

TEST_CASE("recovery is linear in the known values", "[mds]") {
  const PrimeField F(7);
  const MdsCode code = make_mds(5, 2, F);
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<u64> cx = mds_encode(code, {rng.below(7), rng.below(7)});
    const std::vector<u64> cy = mds_encode(code, {rng.below(7), rng.below(7)});
    const std::vector<std::size_t> pos{1, 4};
    std::vector<std::pair<std::size_t, u64>> kx, ky, kxy;
    for (std::size_t p : pos) {
      kx.emplace_back(p, cx[p]);
      ky.emplace_back(p, cy[p]);
      kxy.emplace_back(p, F.add(cx[p], cy[p]));
    }
    const auto rx = mds_recover(code, kx), ry = mds_recover(code, ky),
               rxy = mds_recover(code, kxy);
    for (std::size_t j = 0; j < 5; ++j) CHECK(rxy[j] == F.add(rx[j], ry[j]));
  }
}
