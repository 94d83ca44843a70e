#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpir/matrix.hpp"
#include "tpir/mds.hpp"
#include "tpir/plan.hpp"

namespace tpir {

/// The replicated database: M records of L symbols each, identical at every
/// server.
struct RecordSet {
  u64 q = 0;
  u64 record_len = 0;
  std::vector<std::vector<u64>> records;

  u32 count() const { return static_cast<u32>(records.size()); }
};

inline RecordSet random_records(const PrimeField& F, u32 M, u64 L, Rng& rng) {
  RecordSet db;
  db.q = F.q();
  db.record_len = L;
  db.records.resize(M);
  for (auto& w : db.records) {
    w.resize(L);
    for (auto& x : w) x = rng.below(F.q());
  }
  return db;
}

/// One server's query: a coefficient matrix with one row per answer slot,
/// each row of width M*L over F_q. The server's whole job is inner products
/// of these rows against the concatenated records.
struct Query {
  u64 q = 0;
  u32 records = 0;
  u64 record_len = 0;
  std::vector<u64> coeffs;  // slot-major, slots() x (records * record_len)

  std::size_t width() const { return std::size_t(records) * record_len; }
  std::size_t slots() const { return width() == 0 ? 0 : coeffs.size() / width(); }
  const u64* slot_row(std::size_t s) const { return coeffs.data() + s * width(); }
};

struct Answer {
  std::vector<u64> values;  // one per slot, in query row order
};

/// Everything the client must remember to decode the answers. The mixing
/// secrets for the other records are discarded once the queries exist; only
/// the inverse for the wanted record is kept, and it never leaves the client.
struct ClientState {
  SchemeParams params;
  u32 theta = 0;
  AnswerPlan plan;
  Matrix s_theta_inv;
};

struct ClientRound {
  ClientState state;
  std::vector<Query> queries;  // one per server
};

/// Builds the per-server queries from explicitly supplied mixing matrices.
/// For a slot at server j, the coefficient block of the wanted record is a
/// single column of its mixing matrix; the block of any other record k in
/// the slot's type is the row's T-column slice of S_k combined by column j
/// of G. Blocks of records outside the type stay zero.
inline ClientRound client_query_with_secrets(const SchemeParams& p, u32 theta,
                                             const MdsCode& code,
                                             const std::vector<Matrix>& secrets,
                                             SlotOrder order = SlotOrder::canonical) {
  if (theta >= p.M) throw std::invalid_argument("client_query: theta out of range");
  if (code.N != p.N || code.T != p.T || code.field.q() != p.q)
    throw std::invalid_argument("client_query: MDS code does not match scheme parameters");
  if (secrets.size() != p.M)
    throw std::invalid_argument("client_query: need one mixing matrix per record");
  for (const Matrix& s : secrets)
    if (s.rows != p.L || s.cols != p.L)
      throw std::invalid_argument("client_query: mixing matrices must be LxL");

  const PrimeField F(p.q);
  ClientRound round;
  round.state.params = p;
  round.state.theta = theta;
  round.state.plan = build_plan(p, theta, order);
  round.state.s_theta_inv = mat_inverse(F, secrets[theta]);
  if (mat_mul(F, round.state.s_theta_inv, secrets[theta]) != identity(p.L))
    throw std::logic_error("client_query: inverse check failed");

  const std::size_t width = std::size_t(p.M) * p.L;
  round.queries.resize(p.N);
  for (u32 j = 0; j < p.N; ++j) {
    const auto& slots = round.state.plan.slots[j];
    Query& qy = round.queries[j];
    qy.q = p.q;
    qy.records = p.M;
    qy.record_len = p.L;
    qy.coeffs.assign(slots.size() * width, 0);
    for (std::size_t s = 0; s < slots.size(); ++s) {
      const AnswerSlot& slot = slots[s];
      u64* row = qy.coeffs.data() + s * width;
      if (slot.desired_row) {
        const std::size_t col = *slot.desired_row * p.N + j;
        const Matrix& st = secrets[theta];
        u64* block = row + std::size_t(theta) * p.L;
        for (std::size_t r = 0; r < p.L; ++r) block[r] = st.at(r, col);
      }
      for (const auto& [k, krow] : slot.contributions) {
        const Matrix& sk = secrets[k];
        u64* block = row + std::size_t(k) * p.L;
        for (std::size_t c = 0; c < p.T; ++c) {
          const u64 g = code.G.at(c, j);
          if (g == 0) continue;
          const std::size_t col = krow * p.T + c;
          for (std::size_t r = 0; r < p.L; ++r)
            block[r] = F.add(block[r], F.mul(g, sk.at(r, col)));
        }
      }
    }
  }
  return round;
}

/// Draws the M mixing matrices uniformly from the invertible LxL matrices,
/// independently, then defers to the explicit-secrets path.
inline ClientRound client_query(const SchemeParams& p, u32 theta, const MdsCode& code, Rng& rng,
                                SlotOrder order = SlotOrder::canonical) {
  const PrimeField F(p.q);
  std::vector<Matrix> secrets;
  secrets.reserve(p.M);
  for (u32 k = 0; k < p.M; ++k) secrets.push_back(random_invertible(F, p.L, rng));
  return client_query_with_secrets(p, theta, code, secrets, order);
}

/// Stateless server: one inner product per query row against the
/// concatenation of all records.
inline Answer server_answer(const Query& query, const RecordSet& db) {
  if (query.q != db.q) throw std::invalid_argument("server_answer: field modulus mismatch");
  if (query.records != db.count() || query.record_len != db.record_len)
    throw std::invalid_argument("server_answer: query shape does not match the database");
  const PrimeField F(db.q);
  Answer ans;
  ans.values.resize(query.slots());
  for (std::size_t s = 0; s < query.slots(); ++s) {
    const u64* row = query.slot_row(s);
    u64 acc = 0;
    for (u32 k = 0; k < db.count(); ++k) {
      const u64 part = dot_mod(F, row + std::size_t(k) * db.record_len, db.records[k].data(),
                               db.record_len);
      acc = F.add(acc, part);
    }
    ans.values[s] = acc;
  }
  return ans;
}

/// Rebuilds the wanted record from the answers: singleton slots hand over
/// desired symbols directly; each interference group is completed to a full
/// codeword from its T pure sums, and the codeword coordinates are peeled
/// off the mixed sums. The assembled vector times the stored inverse is the
/// record.
inline std::vector<u64> reconstruct(const ClientState& state, const std::vector<Answer>& answers,
                                    const MdsCode& code) {
  const SchemeParams& p = state.params;
  if (answers.size() != p.N) throw std::invalid_argument("reconstruct: need one answer per server");
  for (u32 j = 0; j < p.N; ++j)
    if (answers[j].values.size() != state.plan.slots[j].size())
      throw std::invalid_argument("reconstruct: answer " + std::to_string(j) +
                                  " has wrong slot count");
  const PrimeField F(p.q);
  std::vector<u64> u(p.L, 0);
  std::vector<bool> have(p.L, false);
  const auto put = [&](u64 row, u32 j, u64 val) {
    const std::size_t idx = row * p.N + j;
    if (have[idx]) throw std::logic_error("reconstruct: desired symbol produced twice");
    have[idx] = true;
    u[idx] = val;
  };

  // group (type mask, row) -> slot positions, split by pure/mixed
  std::map<std::pair<u32, u64>, std::vector<std::pair<u32, std::size_t>>> groups;
  for (u32 j = 0; j < p.N; ++j) {
    const auto& slots = state.plan.slots[j];
    for (std::size_t s = 0; s < slots.size(); ++s) {
      const AnswerSlot& slot = slots[s];
      if (slot.group_mask == 0) {
        put(*slot.desired_row, j, answers[j].values[s]);
      } else {
        groups[{slot.group_mask, slot.group_row}].emplace_back(j, s);
      }
    }
  }
  for (const auto& [gk, members] : groups) {
    std::vector<std::pair<std::size_t, u64>> known;
    for (const auto& [j, s] : members) {
      const AnswerSlot& slot = state.plan.slots[j][s];
      if (!slot.desired_row) known.emplace_back(j, answers[j].values[s]);
    }
    if (known.size() != p.T)
      throw std::logic_error("reconstruct: group has " + std::to_string(known.size()) +
                             " pure sums, expected T");
    const std::vector<u64> codeword = mds_recover(code, known);
    for (const auto& [j, s] : members) {
      const AnswerSlot& slot = state.plan.slots[j][s];
      if (slot.desired_row)
        put(*slot.desired_row, j, F.sub(answers[j].values[s], codeword[j]));
    }
  }
  for (bool h : have)
    if (!h) throw std::logic_error("reconstruct: missing desired symbols");
  return vec_mat_mul(F, u, state.s_theta_inv);
}

struct RoundResult {
  ClientRound client;
  std::vector<Answer> answers;
  std::vector<u64> reconstructed;
  u64 downloaded = 0;
};

/// One full in-process round against a replicated database.
inline RoundResult run_round(const RecordSet& db, const SchemeParams& p, u32 theta,
                             const MdsCode& code, Rng& rng) {
  if (db.count() != p.M || db.record_len != p.L || db.q != p.q)
    throw std::invalid_argument("run_round: database does not match scheme parameters");
  RoundResult rr;
  rr.client = client_query(p, theta, code, rng);
  rr.answers.reserve(p.N);
  for (u32 j = 0; j < p.N; ++j) {
    rr.answers.push_back(server_answer(rr.client.queries[j], db));
    rr.downloaded += rr.answers.back().values.size();
  }
  rr.reconstructed = reconstruct(rr.client.state, rr.answers, code);
  return rr;
}

}  // namespace tpir
