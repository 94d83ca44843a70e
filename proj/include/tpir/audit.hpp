#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "tpir/locator.hpp"
#include "tpir/params.hpp"
#include "tpir/plan.hpp"
#include "tpir/protocol.hpp"
#include "tpir/wire.hpp"

namespace tpir {

struct infeasible_enumeration : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Outcome of one audit run. Failing verdicts carry a reproduction seed when
/// randomness was involved.
struct AuditReport {
  std::string check;
  std::string params_desc;
  bool pass = false;
  bool exact = true;      // exact comparison vs. sampled estimate
  double distance = 0.0;  // 0 for exact matches, estimated TV otherwise
  u64 samples = 0;
  std::string details;
  std::optional<u64> repro_seed;

  std::string to_text() const {
    std::ostringstream os;
    os << "check=" << check << "\n";
    os << "params=" << params_desc << "\n";
    os << "verdict=" << (pass ? "pass" : "fail") << "\n";
    os << "exact=" << (exact ? "true" : "false") << "\n";
    os << "distance=" << distance << "\n";
    os << "samples=" << samples << "\n";
    os << "details=" << details << "\n";
    if (repro_seed) os << "seed=" << *repro_seed << "\n";
    return os.str();
  }
};

/// Test-only switches. Nothing in the CLI sets any of these; they exist so
/// the test suite can prove the audits catch what they claim to catch.
struct FaultInjection {
  bool corrupt_locator = false;       // flip one locator bit
  bool tamper_answer = false;         // corrupt one answer value
  bool theta_dependent_order = false; // order slots by whether they touch theta
};

inline std::string describe_params(const SchemeParams& p) {
  return "M=" + std::to_string(p.M) + ",N=" + std::to_string(p.N) + ",T=" + std::to_string(p.T) +
         ",q=" + std::to_string(p.q);
}

namespace detail {

inline void parallel_chunks(std::size_t chunks, const std::function<void(std::size_t)>& fn) {
  const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const std::size_t nthreads = std::min(hw, chunks);
  if (nthreads <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) fn(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t tde = 0; tde < nthreads; ++tde) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t c = next.fetch_add(1);
        if (c >= chunks) return;
        try {
          fn(c);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline u64 fnv1a64(const std::uint8_t* p, std::size_t n, u64 h = 0xcbf29ce484222325ULL) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline u64 sat_mul(u64 a, u64 b) {
  if (a != 0 && b > UINT64_MAX / a) return UINT64_MAX;
  return a * b;
}

}  // namespace detail

/// Number of invertible LxL matrices over F_q, saturating at u64 max.
inline u64 gl_order(u64 L, u64 q) {
  const u64 qL = [&] {
    u64 r = 1;
    for (u64 i = 0; i < L; ++i) r = detail::sat_mul(r, q);
    return r;
  }();
  if (qL == UINT64_MAX) return UINT64_MAX;
  u64 total = 1;
  u64 qi = 1;
  for (u64 i = 0; i < L; ++i) {
    total = detail::sat_mul(total, qL - qi);
    qi = detail::sat_mul(qi, q);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Structural audit
// ---------------------------------------------------------------------------

/// Independent recount of one plan's books, returning the first violation.
inline std::optional<std::string> validate_plan(const SchemeParams& p, const AnswerPlan& plan) {
  const u32 theta = plan.theta;
  const auto [head, tail] = per_server_counts(p);
  u64 total = 0;
  for (u32 j = 0; j < p.N; ++j) {
    const u64 want = j < p.T ? head : tail;
    if (plan.slots[j].size() != want)
      return "server " + std::to_string(j) + " has " + std::to_string(plan.slots[j].size()) +
             " slots, expected " + std::to_string(want);
    total += plan.slots[j].size();
  }
  if (total != p.D) return "total slots " + std::to_string(total) + " != D";

  for (u32 j = 0; j < p.N; ++j) {
    std::map<u32, u64> per_type;
    for (const AnswerSlot& s : plan.slots[j]) per_type[mask_of(s.full_type)]++;
    for (u32 mask = 1; mask < (u32(1) << p.M); ++mask) {
      const u32 size = static_cast<u32>(__builtin_popcount(mask));
      const u64 want = j < p.T ? p.alpha[size - 1] : p.beta[size - 1];
      const u64 got = per_type.count(mask) ? per_type[mask] : 0;
      if (got != want)
        return "server " + std::to_string(j) + " has " + std::to_string(got) +
               " sums of type mask " + std::to_string(mask) + ", expected " + std::to_string(want);
    }
  }

  // every interference entry (record, row, column) in exactly one slot
  for (u32 k = 0; k < p.M; ++k) {
    if (k == theta) continue;
    std::vector<u32> hits(p.Ltilde * p.N, 0);
    for (u32 j = 0; j < p.N; ++j)
      for (const AnswerSlot& s : plan.slots[j])
        for (const auto& [rec, row] : s.contributions)
          if (rec == k) hits[row * p.N + j]++;
    for (u64 row = 0; row < p.Ltilde; ++row)
      for (u32 j = 0; j < p.N; ++j)
        if (hits[row * p.N + j] != 1)
          return "record " + std::to_string(k) + " entry (" + std::to_string(row) + "," +
                 std::to_string(j) + ") appears " + std::to_string(hits[row * p.N + j]) +
                 " times";
  }

  // every desired row consumed exactly once per server
  for (u32 j = 0; j < p.N; ++j) {
    std::vector<u32> seen(p.Ltilde, 0);
    for (const AnswerSlot& s : plan.slots[j])
      if (s.desired_row) seen[*s.desired_row]++;
    for (u64 r = 0; r < p.Ltilde; ++r)
      if (seen[r] != 1)
        return "server " + std::to_string(j) + " consumes desired row " + std::to_string(r) +
               " " + std::to_string(seen[r]) + " times";
  }

  // each group: T pure sums at the locator's 1-positions, N-T mixed at the 0s
  std::map<std::pair<u32, u64>, std::pair<std::set<u32>, std::set<u32>>> groups;
  for (u32 j = 0; j < p.N; ++j)
    for (const AnswerSlot& s : plan.slots[j]) {
      if (s.group_mask == 0) continue;
      auto& g = groups[{s.group_mask, s.group_row}];
      (s.desired_row ? g.second : g.first).insert(j);
    }
  for (const auto& [gk, g] : groups) {
    const u32 size = static_cast<u32>(__builtin_popcount(gk.first));
    const BitMatrix& loc = plan.locators[size - 1].bits;
    std::set<u32> ones, zeros;
    for (u32 j = 0; j < p.N; ++j) (loc.at(gk.second, j) ? ones : zeros).insert(j);
    if (g.first != ones || g.second != zeros)
      return "group (mask " + std::to_string(gk.first) + ", row " + std::to_string(gk.second) +
             ") does not follow its locator row";
  }
  return std::nullopt;
}

/// Checks, for every theta: locator weight properties, plan bookkeeping,
/// per-server counts, total download and the exact rate.
inline AuditReport audit_structure(const SchemeParams& p, const FaultInjection& fault = {}) {
  AuditReport rep;
  rep.check = "structure";
  rep.params_desc = describe_params(p);
  rep.exact = true;

  for (u32 i = 1; i <= p.M - 1; ++i) {
    LocatorMatrix loc = make_locator(i, p);
    if (fault.corrupt_locator && i == 1) loc.bits.at(0, 0) ^= 1;
    if (auto err = validate_locator(p, i, loc.bits)) {
      rep.pass = false;
      rep.details = *err;
      return rep;
    }
  }
  for (u32 theta = 0; theta < p.M; ++theta) {
    const AnswerPlan plan = build_plan(p, theta);
    if (auto err = validate_plan(p, plan)) {
      rep.pass = false;
      rep.details = "theta=" + std::to_string(theta) + ": " + *err;
      return rep;
    }
  }
  if (!(p.rate == capacity(p.M, p.N, p.T))) {
    rep.pass = false;
    rep.details = "rate " + p.rate.str() + " != capacity";
    return rep;
  }
  const auto [head, tail] = per_server_counts(p);
  rep.pass = true;
  rep.details = "D=" + std::to_string(p.D) + " per_server=(" + std::to_string(head) + "," +
                std::to_string(tail) + ") rate=" + p.rate.str();
  return rep;
}

// ---------------------------------------------------------------------------
// Correctness audit
// ---------------------------------------------------------------------------

/// Full random rounds; passes only if every reconstruction equals the stored
/// record exactly and every round downloads exactly D symbols.
inline AuditReport audit_correctness(const SchemeParams& p, u64 trials, u64 seed,
                                     const FaultInjection& fault = {}) {
  if (trials < 1) throw std::invalid_argument("audit_correctness: trials must be >= 1");
  AuditReport rep;
  rep.check = "correctness";
  rep.params_desc = describe_params(p);
  rep.exact = true;
  rep.samples = trials;

  const PrimeField F(p.q);
  const MdsCode code = make_mds(p.N, p.T, F);
  std::mutex mu;
  std::optional<std::string> failure;
  std::optional<u64> failure_seed;

  detail::parallel_chunks(trials, [&](std::size_t trial) {
    {
      std::lock_guard<std::mutex> lk(mu);
      if (failure) return;
    }
    const u64 trial_seed = derive_seed(seed, trial);
    Rng rng(trial_seed);
    const u32 theta = static_cast<u32>(rng.below(p.M));
    const RecordSet db = random_records(F, p.M, p.L, rng);
    ClientRound round = client_query(p, theta, code, rng);
    std::vector<Answer> answers;
    u64 downloaded = 0;
    for (u32 j = 0; j < p.N; ++j) {
      answers.push_back(server_answer(round.queries[j], db));
      downloaded += answers.back().values.size();
    }
    if (fault.tamper_answer && trial == 0 && !answers[0].values.empty())
      answers[0].values[0] = F.add(answers[0].values[0], 1);
    const std::vector<u64> got = reconstruct(round.state, answers, code);
    std::string err;
    if (downloaded != p.D)
      err = "downloaded " + std::to_string(downloaded) + " symbols, expected D";
    else if (got != db.records[theta])
      err = "reconstruction differs from stored record (theta=" + std::to_string(theta) + ")";
    if (!err.empty()) {
      std::lock_guard<std::mutex> lk(mu);
      if (!failure) {
        failure = "trial " + std::to_string(trial) + ": " + err;
        failure_seed = trial_seed;
      }
    }
  });

  rep.pass = !failure;
  rep.details = failure ? *failure : std::to_string(trials) + " rounds, all exact";
  rep.repro_seed = failure_seed;
  return rep;
}

// ---------------------------------------------------------------------------
// Privacy audits
// ---------------------------------------------------------------------------

namespace detail {

/// Joint query bytes for the coalition in gamma_mask, serialized canonically
/// (ascending server order, standard query encoding).
inline std::string coalition_bytes(const std::vector<Query>& queries, u32 gamma_mask) {
  std::string out;
  for (u32 j = 0; j < queries.size(); ++j) {
    if (!(gamma_mask >> j & 1)) continue;
    const Bytes enc = encode_query(queries[j]);
    out.append(reinterpret_cast<const char*>(enc.data()), enc.size());
  }
  return out;
}

/// What a coalition can read off a transcript structurally: per server, the
/// slot count and each slot's record-support mask, in transmission order.
/// Coefficient values are deliberately left out: the sampled audit buckets
/// this fingerprint, and hashing high-entropy coefficient bytes would bury
/// any structural difference in uniform noise.
inline u64 structural_fingerprint(const std::vector<Query>& queries, u32 gamma_mask) {
  std::vector<std::uint8_t> buf;
  for (u32 j = 0; j < queries.size(); ++j) {
    if (!(gamma_mask >> j & 1)) continue;
    const Query& q = queries[j];
    buf.push_back(static_cast<std::uint8_t>(j));
    const std::size_t slots = q.slots();
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(slots >> (8 * i)));
    for (std::size_t s = 0; s < slots; ++s) {
      const u64* row = q.slot_row(s);
      u32 support = 0;
      for (u32 k = 0; k < q.records; ++k) {
        const u64* block = row + std::size_t(k) * q.record_len;
        for (u64 c = 0; c < q.record_len; ++c)
          if (block[c] != 0) {
            support |= u32(1) << k;
            break;
          }
      }
      for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(support >> (8 * i)));
    }
  }
  return fnv1a64(buf.data(), buf.size());
}

inline std::vector<u32> subsets_of_size(u32 n, u32 k) {
  std::vector<u32> out;
  for (u32 mask = 1; mask < (u32(1) << n); ++mask)
    if (static_cast<u32>(__builtin_popcount(mask)) == k) out.push_back(mask);
  return out;
}

}  // namespace detail

/// Enumerates every secret tuple and compares the exact distribution of the
/// joint query bytes seen by every coalition of size <= T, for every pair of
/// retrieved indices. Distributions must match outright.
inline AuditReport audit_privacy_exact(const SchemeParams& p, const FaultInjection& fault = {}) {
  AuditReport rep;
  rep.check = "privacy-exact";
  rep.params_desc = describe_params(p);
  rep.exact = true;

  const u64 gl = gl_order(p.L, p.q);
  const u64 tuples = [&] {
    u64 r = 1;
    for (u32 k = 0; k < p.M; ++k) r = detail::sat_mul(r, gl);
    return r;
  }();
  if (tuples > 1000000)
    throw infeasible_enumeration(
        "privacy-exact: " +
        (gl == UINT64_MAX ? std::string("well over 10^19") : std::to_string(gl)) + "^" +
        std::to_string(p.M) +
        " secret tuples exceed the enumeration bound of 10^6; use the sampled audit");

  const PrimeField F(p.q);
  const MdsCode code = make_mds(p.N, p.T, F);
  const SlotOrder order =
      fault.theta_dependent_order ? SlotOrder::desired_first : SlotOrder::canonical;

  // all invertible LxL matrices, by filtering the full matrix space
  std::vector<Matrix> invertibles;
  {
    u64 space = 1;
    for (u64 i = 0; i < u64(p.L) * p.L; ++i) space = detail::sat_mul(space, p.q);
    if (space > 20000000)
      throw infeasible_enumeration("privacy-exact: matrix space too large to enumerate");
    Matrix m(p.L, p.L);
    for (u64 idx = 0; idx < space; ++idx) {
      u64 x = idx;
      for (auto& e : m.a) {
        e = x % p.q;
        x /= p.q;
      }
      if (is_invertible(F, m)) invertibles.push_back(m);
    }
  }
  if (invertibles.size() != gl) throw std::logic_error("privacy-exact: GL enumeration miscount");

  std::vector<u32> gammas;
  for (u32 k = 1; k <= p.T; ++k)
    for (u32 g : detail::subsets_of_size(p.N, k)) gammas.push_back(g);

  // distribution[theta][gamma] : transcript -> multiplicity
  std::vector<std::vector<std::unordered_map<std::string, u64>>> dist(
      p.M, std::vector<std::unordered_map<std::string, u64>>(gammas.size()));

  std::vector<Matrix> secrets(p.M);
  std::vector<std::size_t> idx(p.M, 0);
  for (u64 count = 0; count < tuples; ++count) {
    for (u32 k = 0; k < p.M; ++k) secrets[k] = invertibles[idx[k]];
    for (u32 theta = 0; theta < p.M; ++theta) {
      const ClientRound round = client_query_with_secrets(p, theta, code, secrets, order);
      for (std::size_t g = 0; g < gammas.size(); ++g)
        dist[theta][g][detail::coalition_bytes(round.queries, gammas[g])]++;
    }
    for (u32 k = 0; k < p.M; ++k) {
      if (++idx[k] < invertibles.size()) break;
      idx[k] = 0;
    }
  }

  for (std::size_t g = 0; g < gammas.size(); ++g)
    for (u32 a = 0; a < p.M; ++a)
      for (u32 b = a + 1; b < p.M; ++b)
        if (dist[a][g] != dist[b][g]) {
          rep.pass = false;
          rep.distance = 1.0;  // nonzero; exact value is immaterial once unequal
          rep.details = "coalition mask " + std::to_string(gammas[g]) +
                        ": query distribution differs between theta=" + std::to_string(a) +
                        " and theta=" + std::to_string(b);
          return rep;
        }

  rep.pass = true;
  rep.distance = 0.0;
  rep.samples = tuples;
  rep.details = std::to_string(tuples) + " secret tuples, " + std::to_string(gammas.size()) +
                " coalitions, all distributions identical";
  return rep;
}

/// Monte-Carlo privacy check at scales the exact audit cannot reach. Each
/// sampled transcript is reduced to its structural fingerprint, hashed into
/// 2^16 buckets, and the empirical bucket distributions for each pair of
/// retrieved indices are compared by total-variation distance against a
/// noise-floor threshold of 3*sqrt(occupied_buckets/samples).
inline AuditReport audit_privacy_sampled(const SchemeParams& p, u64 samples, u64 seed,
                                         const FaultInjection& fault = {}) {
  if (samples < 10000)
    throw std::invalid_argument("audit_privacy_sampled: need at least 10^4 samples");
  AuditReport rep;
  rep.check = "privacy-sampled";
  rep.params_desc = describe_params(p);
  rep.exact = false;
  rep.samples = samples;
  rep.repro_seed = seed;

  constexpr std::size_t kBuckets = 1 << 16;
  const PrimeField F(p.q);
  const MdsCode code = make_mds(p.N, p.T, F);
  const SlotOrder order =
      fault.theta_dependent_order ? SlotOrder::desired_first : SlotOrder::canonical;
  const std::vector<u32> gammas = detail::subsets_of_size(p.N, p.T);

  // counts[theta][gamma][bucket]
  std::vector<std::vector<std::vector<u64>>> counts(
      p.M, std::vector<std::vector<u64>>(gammas.size(), std::vector<u64>(kBuckets, 0)));

  constexpr std::size_t kChunks = 64;  // fixed, so results do not depend on thread count
  std::mutex merge_mu;
  for (u32 theta = 0; theta < p.M; ++theta) {
    detail::parallel_chunks(kChunks, [&, theta](std::size_t chunk) {
      const u64 begin = samples * chunk / kChunks;
      const u64 end = samples * (chunk + 1) / kChunks;
      if (begin == end) return;
      Rng rng(derive_seed(seed, u64(theta) * kChunks + chunk));
      std::vector<std::vector<u64>> local(gammas.size(), std::vector<u64>(kBuckets, 0));
      for (u64 s = begin; s < end; ++s) {
        const ClientRound round = client_query(p, theta, code, rng, order);
        for (std::size_t g = 0; g < gammas.size(); ++g) {
          const u64 h = detail::structural_fingerprint(round.queries, gammas[g]);
          local[g][h & (kBuckets - 1)]++;
        }
      }
      std::lock_guard<std::mutex> lk(merge_mu);
      for (std::size_t g = 0; g < gammas.size(); ++g)
        for (std::size_t b = 0; b < kBuckets; ++b) counts[theta][g][b] += local[g][b];
    });
  }

  double max_tv = 0.0;
  double threshold_at_max = 0.0;
  std::string where;
  bool pass = true;
  for (std::size_t g = 0; g < gammas.size(); ++g)
    for (u32 a = 0; a < p.M; ++a)
      for (u32 b = a + 1; b < p.M; ++b) {
        double l1 = 0.0;
        u64 occupied = 0;
        for (std::size_t bk = 0; bk < kBuckets; ++bk) {
          const u64 ca = counts[a][g][bk], cb = counts[b][g][bk];
          if (ca + cb > 0) ++occupied;
          l1 += std::abs(double(ca) - double(cb));
        }
        const double tv = l1 / (2.0 * double(samples));
        const double threshold = 3.0 * std::sqrt(double(occupied) / double(samples));
        if (tv > threshold) pass = false;
        if (tv > max_tv || where.empty()) {
          max_tv = tv;
          threshold_at_max = threshold;
          where = "gamma mask " + std::to_string(gammas[g]) + ", theta pair (" +
                  std::to_string(a) + "," + std::to_string(b) + ")";
        }
      }

  rep.pass = pass;
  rep.distance = max_tv;
  rep.details = "max_tv=" + std::to_string(max_tv) + " threshold=" +
                std::to_string(threshold_at_max) + (where.empty() ? "" : " at " + where);
  return rep;
}

// ---------------------------------------------------------------------------
// Independent parameter oracle
// ---------------------------------------------------------------------------

struct OracleSolution {
  std::vector<u64> alpha, beta, d_arr;
};

/// Brute-force solver for the per-class counting system, independent of the
/// closed forms: enumerates alpha_1, derives the rest by the recurrence, and
/// keeps every all-nonnegative assignment. At N = 2T the system has a
/// mirrored pair of solutions; the one with minimal beta_1 is the scheme's.
inline OracleSolution oracle_solve_system(u32 M, u32 N, u32 T) {
  if (M < 2 || T < 1 || T >= N) throw std::invalid_argument("oracle_solve_system: bad parameters");
  const u32 d = std::gcd(N, T);
  const u32 n = N / d, t = T / d;
  OracleSolution sol;
  sol.d_arr.resize(M - 1);
  for (u32 i = 1; i <= M - 1; ++i)
    sol.d_arr[i - 1] = ipow_checked(n - t, i - 1) * ipow_checked(t, M - 1 - i);

  using i64s = long long;
  std::vector<std::pair<std::vector<i64s>, std::vector<i64s>>> found;
  for (u64 a1 = 0; a1 <= sol.d_arr[0]; ++a1) {
    const u64 rem = (sol.d_arr[0] - a1) * T;
    if (rem % (N - T) != 0) continue;
    std::vector<i64s> as(M), bs(M);
    as[0] = static_cast<i64s>(a1);
    bs[0] = static_cast<i64s>(rem / (N - T));
    bool ok = bs[0] >= 0;
    for (u32 i = 1; i < M && ok; ++i) {
      as[i] = i64s(sol.d_arr[i - 1]) - as[i - 1];
      bs[i] = i64s(sol.d_arr[i - 1]) - bs[i - 1];
      if (as[i] < 0 || bs[i] < 0) ok = false;
    }
    for (u32 i = 1; i <= M - 1 && ok; ++i) {
      if (u64(T) * u64(as[i - 1]) + u64(N - T) * u64(bs[i - 1]) != sol.d_arr[i - 1] * u64(T))
        ok = false;
    }
    if (ok) found.emplace_back(std::move(as), std::move(bs));
  }
  if (found.empty()) throw std::runtime_error("oracle_solve_system: no solution");
  std::sort(found.begin(), found.end(),
            [](const auto& x, const auto& y) { return x.second[0] < y.second[0]; });
  if (found.size() > 1 && found[0].second[0] == found[1].second[0])
    throw std::runtime_error("oracle_solve_system: multiple solutions with equal beta_1");
  sol.alpha.assign(found[0].first.begin(), found[0].first.end());
  sol.beta.assign(found[0].second.begin(), found[0].second.end());
  return sol;
}

}  // namespace tpir
