#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "test_util.hpp"
#include "tpir/protocol.hpp"
#include "tpir/wire.hpp"

using namespace tpir;
using test_util::all_matrices;

namespace {

std::vector<Matrix> identity_secrets(const SchemeParams& p) {
  return std::vector<Matrix>(p.M, identity(p.L));
}

std::set<u32> row_support(const Query& q, std::size_t slot) {
  std::set<u32> s;
  const u64* row = q.slot_row(slot);
  for (u32 k = 0; k < q.records; ++k)
    for (u64 c = 0; c < q.record_len; ++c)
      if (row[std::size_t(k) * q.record_len + c] != 0) {
        s.insert(k);
        break;
      }
  return s;
}

}  // namespace

TEST_CASE("singleton slots select single mixing columns", "[protocol]") {
  const SchemeParams p = derive_params(3, 3, 2, 3);
  const MdsCode code = make_mds(3, 2, PrimeField(3));
  const u32 theta = 0;
  const ClientRound round = client_query_with_secrets(p, theta, code, identity_secrets(p));
  for (u32 j = 0; j < p.N; ++j) {
    const auto& slots = round.state.plan.slots[j];
    for (std::size_t s = 0; s < slots.size(); ++s) {
      if (slots[s].full_type != TypeSet{theta}) continue;
      // with S = I the coefficient block is a unit vector at row*N + column
      const u64* row = round.queries[j].slot_row(s);
      const std::size_t hot = std::size_t(theta) * p.L + *slots[s].desired_row * p.N + j;
      for (std::size_t c = 0; c < std::size_t(p.M) * p.L; ++c)
        CHECK(row[c] == (c == hot ? 1 : 0));
    }
  }
}

TEST_CASE("per-server query row counts", "[protocol]") {
  const SchemeParams p = derive_params(3, 3, 2, 3);
  const MdsCode code = make_mds(3, 2, PrimeField(3));
  Rng rng(17);
  const ClientRound round = client_query(p, 0, code, rng);
  CHECK(round.queries[0].slots() == 6);
  CHECK(round.queries[1].slots() == 6);
  CHECK(round.queries[2].slots() == 7);
}

TEST_CASE("query row supports equal the slot types", "[protocol]") {
  const SchemeParams p = derive_params(3, 3, 2, 3);
  const MdsCode code = make_mds(3, 2, PrimeField(3));
  for (u64 seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const u32 theta = static_cast<u32>(seed % 3);
    const ClientRound round = client_query(p, theta, code, rng);
    for (u32 j = 0; j < p.N; ++j)
      for (std::size_t s = 0; s < round.state.plan.slots[j].size(); ++s) {
        const TypeSet& ft = round.state.plan.slots[j][s].full_type;
        CHECK(row_support(round.queries[j], s) == std::set<u32>(ft.begin(), ft.end()));
      }
  }
}

TEST_CASE("server answering is a plain inner product", "[protocol]") {
  const PrimeField F(5);
  RecordSet db;
  db.q = 5;
  db.record_len = 2;
  db.records = {{1, 2}, {3, 4}};

  Query q;
  q.q = 5;
  q.records = 2;
  q.record_len = 2;

  SECTION("zero records give zero answers") {
    RecordSet zeros = db;
    for (auto& w : zeros.records) std::fill(w.begin(), w.end(), 0);
    q.coeffs = {1, 2, 3, 4};
    CHECK(server_answer(q, zeros).values == std::vector<u64>{0});
  }
  SECTION("a unit row selects one symbol") {
    q.coeffs = {0, 0, 0, 1};  // picks record 1, symbol 1
    CHECK(server_answer(q, db).values == std::vector<u64>{4});
  }
  SECTION("answers are linear in the records") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
      q.coeffs.assign(8, 0);
      for (auto& c : q.coeffs) c = rng.below(5);
      RecordSet x = db, y = db, xy = db;
      for (auto& w : x.records)
        for (auto& v : w) v = rng.below(5);
      for (auto& w : y.records)
        for (auto& v : w) v = rng.below(5);
      for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t c = 0; c < 2; ++c)
          xy.records[k][c] = F.add(x.records[k][c], y.records[k][c]);
      const auto ax = server_answer(q, x).values, ay = server_answer(q, y).values,
                 axy = server_answer(q, xy).values;
      for (std::size_t s = 0; s < ax.size(); ++s) CHECK(axy[s] == F.add(ax[s], ay[s]));
    }
  }
  SECTION("shape mismatches are rejected") {
    q.coeffs = {1, 2, 3, 4};
    q.record_len = 3;
    CHECK_THROWS_AS(server_answer(q, db), std::invalid_argument);
  }
}

TEST_CASE("answers equal sums of the mixed record matrices", "[protocol]") {
  // ties the coefficient construction back to its definition: each answer is
  // the corresponding sum of entries of the mixed matrices
  const SchemeParams p = derive_params(3, 3, 2, 3);
  const PrimeField F(3);
  const MdsCode code = make_mds(3, 2, F);
  Rng rng(99);
  const RecordSet db = random_records(F, p.M, p.L, rng);
  for (u32 theta = 0; theta < p.M; ++theta) {
    std::vector<Matrix> secrets;
    for (u32 k = 0; k < p.M; ++k) secrets.push_back(random_invertible(F, p.L, rng));
    const ClientRound round = client_query_with_secrets(p, theta, code, secrets);

    std::vector<Matrix> U(p.M);
    U[theta] = from_vec(vec_mat_mul(F, db.records[theta], secrets[theta]), p.Ltilde, p.N);
    for (u32 k = 0; k < p.M; ++k)
      if (k != theta) U[k] = mix_interference(F, db.records[k], secrets[k], p.Ltilde, code.G);

    for (u32 j = 0; j < p.N; ++j) {
      const Answer ans = server_answer(round.queries[j], db);
      const auto& slots = round.state.plan.slots[j];
      for (std::size_t s = 0; s < slots.size(); ++s) {
        u64 want = 0;
        for (const auto& [k, row] : slots[s].contributions) want = F.add(want, U[k].at(row, j));
        if (slots[s].desired_row) want = F.add(want, U[theta].at(*slots[s].desired_row, j));
        CHECK(ans.values[s] == want);
      }
    }
  }
}

TEST_CASE("end-to-end retrieval is exact", "[protocol]") {
  const SchemeParams p = derive_params(3, 3, 2, 3);
  const PrimeField F(3);
  const MdsCode code = make_mds(3, 2, F);
  Rng rng(7);
  const RecordSet db = random_records(F, p.M, p.L, rng);
  for (u32 theta = 0; theta < p.M; ++theta) {
    const RoundResult rr = run_round(db, p, theta, code, rng);
    CHECK(rr.reconstructed == db.records[theta]);
    CHECK(rr.downloaded == p.D);
  }
}

TEST_CASE("exhaustive sweep of the minimal instance", "[protocol]") {
  // all 16 databases x both indices x all 36 secret pairs
  const SchemeParams p = derive_params(2, 2, 1, 2);
  const PrimeField F(2);
  const MdsCode code = make_mds(2, 1, F);
  std::vector<Matrix> gl;
  for (const Matrix& m : all_matrices(2, 2, 2))
    if (is_invertible(F, m)) gl.push_back(m);
  REQUIRE(gl.size() == 6);

  std::size_t rounds = 0;
  for (u64 dbv = 0; dbv < 16; ++dbv) {
    RecordSet db;
    db.q = 2;
    db.record_len = 2;
    db.records = {{dbv & 1, (dbv >> 1) & 1}, {(dbv >> 2) & 1, (dbv >> 3) & 1}};
    for (u32 theta = 0; theta < 2; ++theta)
      for (const Matrix& s0 : gl)
        for (const Matrix& s1 : gl) {
          const ClientRound round = client_query_with_secrets(p, theta, code, {s0, s1});
          std::vector<Answer> answers;
          for (u32 j = 0; j < p.N; ++j) answers.push_back(server_answer(round.queries[j], db));
          REQUIRE(reconstruct(round.state, answers, code) == db.records[theta]);
          ++rounds;
        }
  }
  CHECK(rounds == 16 * 2 * 36);
}

TEST_CASE("zero records reconstruct to zero", "[protocol]") {
  const SchemeParams p = derive_params(3, 4, 2, 5);
  const PrimeField F(5);
  const MdsCode code = make_mds(4, 2, F);
  RecordSet db;
  db.q = 5;
  db.record_len = p.L;
  db.records.assign(p.M, std::vector<u64>(p.L, 0));
  Rng rng(13);
  const RoundResult rr = run_round(db, p, 1, code, rng);
  CHECK(rr.reconstructed == std::vector<u64>(p.L, 0));
}

TEST_CASE("fixed seeds give byte-identical transcripts", "[protocol]") {
  const SchemeParams p = derive_params(3, 3, 2, 3);
  const PrimeField F(3);
  const MdsCode code = make_mds(3, 2, F);
  Rng dbrng(1);
  const RecordSet db = random_records(F, p.M, p.L, dbrng);
  const auto run = [&] {
    Rng rng(42);
    std::vector<Bytes> bytes;
    const ClientRound round = client_query(p, 1, code, rng);
    for (u32 j = 0; j < p.N; ++j) {
      bytes.push_back(encode_query(round.queries[j]));
      bytes.push_back(encode_answer(server_answer(round.queries[j], db)));
    }
    return bytes;
  };
  CHECK(run() == run());
}

TEST_CASE("round rejects mismatched databases", "[protocol]") {
  const SchemeParams p = derive_params(2, 2, 1, 2);
  const PrimeField F(2);
  const MdsCode code = make_mds(2, 1, F);
  Rng rng(1);
  RecordSet db = random_records(F, 3, p.L, rng);  // wrong record count
  CHECK_THROWS_AS(run_round(db, p, 0, code, rng), std::invalid_argument);
}
