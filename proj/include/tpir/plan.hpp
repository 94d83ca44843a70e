#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "tpir/locator.hpp"
#include "tpir/params.hpp"

namespace tpir {

/// Record subsets are carried both as sorted index vectors (for ordering)
/// and as bitmasks (for map keys). Indices are 0-based.
using TypeSet = std::vector<u32>;

inline u32 mask_of(const TypeSet& s) {
  u32 m = 0;
  for (u32 k : s) m |= u32(1) << k;
  return m;
}

inline TypeSet members_of(u32 mask) {
  TypeSet s;
  for (u32 k = 0; mask >> k; ++k)
    if (mask >> k & 1) s.push_back(k);
  return s;
}

/// All interference types for record k when retrieving theta: subsets of
/// [0, M) that contain k but not theta, in increasing cardinality and then
/// lexicographic order. There are 2^(M-2) of them.
inline std::vector<TypeSet> enumerate_types(u32 M, u32 theta, u32 k) {
  if (theta >= M || k >= M || k == theta)
    throw std::invalid_argument("enumerate_types: need theta != k, both in [0, M)");
  std::vector<u32> others;
  for (u32 r = 0; r < M; ++r)
    if (r != theta && r != k) others.push_back(r);
  std::vector<TypeSet> out;
  out.reserve(std::size_t(1) << others.size());
  for (u32 sub = 0; sub < (u32(1) << others.size()); ++sub) {
    TypeSet lam{k};
    for (std::size_t b = 0; b < others.size(); ++b)
      if (sub >> b & 1) lam.push_back(others[b]);
    std::sort(lam.begin(), lam.end());
    out.push_back(std::move(lam));
  }
  std::sort(out.begin(), out.end(), [](const TypeSet& x, const TypeSet& y) {
    if (x.size() != y.size()) return x.size() < y.size();
    return x < y;
  });
  return out;
}

/// Start row (0-based) of each record's block of d_|type| rows, walking the
/// type list in enumeration order. For every record the blocks tile
/// [0, Ltilde) exactly.
struct BlockAssignment {
  std::map<std::pair<u32, u32>, u64> start;  // (record k, type mask) -> first row

  u64 at(u32 k, u32 type_mask) const {
    auto it = start.find({k, type_mask});
    if (it == start.end()) throw std::invalid_argument("BlockAssignment: unknown (record, type)");
    return it->second;
  }
};

inline BlockAssignment assign_blocks(const SchemeParams& p, u32 theta) {
  if (theta >= p.M) throw std::invalid_argument("assign_blocks: theta out of range");
  BlockAssignment out;
  for (u32 k = 0; k < p.M; ++k) {
    if (k == theta) continue;
    u64 next = 0;
    for (const TypeSet& lam : enumerate_types(p.M, theta, k)) {
      out.start[{k, mask_of(lam)}] = next;
      next += p.d_arr[lam.size() - 1];
    }
    if (next != p.Ltilde)
      throw std::logic_error("assign_blocks: blocks for record " + std::to_string(k) +
                             " cover " + std::to_string(next) + " rows, expected Ltilde");
  }
  return out;
}

/// One answer a server will return: the sum of one entry per record in
/// full_type. Interference slots carry only contributions; slots containing
/// theta also consume a fresh desired row.
struct AnswerSlot {
  u32 server = 0;                                   // 0-based
  TypeSet full_type;                                // records appearing in the sum
  std::vector<std::pair<u32, u64>> contributions;   // (record k != theta, row), sorted by k
  std::optional<u64> desired_row;                   // row of the theta matrix, if theta in type
  u32 group_mask = 0;                               // interference type, 0 for pure singletons
  u64 group_row = 0;                                // row within the group's block
};

enum class SlotOrder {
  canonical,      // (|type|, lexicographic type, group row) - a function of the type only
  desired_first,  // fault-injection hook: slots containing theta sort first
};

struct AnswerPlan {
  SchemeParams params;
  u32 theta = 0;
  std::vector<std::vector<AnswerSlot>> slots;  // [server][slot], in transmission order
  std::vector<u64> desired_usage;              // rows of the theta matrix consumed per server
  std::vector<LocatorMatrix> locators;         // size classes 1..M-1
  BlockAssignment blocks;
};

/// Builds the full theta-specific blueprint. Pure function of (M, N, T,
/// theta) plus the ordering flag; no randomness, independent of record
/// contents.
inline AnswerPlan build_plan(const SchemeParams& p, u32 theta,
                             SlotOrder order = SlotOrder::canonical) {
  if (theta >= p.M) throw std::invalid_argument("build_plan: theta out of range");
  if (p.M > 24) throw std::invalid_argument("build_plan: plan has 2^(M-1) type groups; M > 24 unsupported");
  AnswerPlan plan;
  plan.params = p;
  plan.theta = theta;
  plan.locators = make_all_locators(p);
  plan.blocks = assign_blocks(p, theta);
  plan.slots.assign(p.N, {});

  for (u32 j = 0; j < p.N; ++j) {
    const u64 singles = j < p.T ? p.alpha[0] : p.beta[0];
    for (u64 c = 0; c < singles; ++c) {
      AnswerSlot s;
      s.server = j;
      s.full_type = {theta};
      s.group_mask = 0;
      s.group_row = c;
      plan.slots[j].push_back(std::move(s));
    }
  }

  const u32 theta_bit = u32(1) << theta;
  const u32 all_mask = (u32(1) << p.M) - 1;
  for (u32 lam = 1; lam <= all_mask; ++lam) {
    if (lam & theta_bit) continue;
    const TypeSet members = members_of(lam);
    const u32 s_card = static_cast<u32>(members.size());
    const BitMatrix& loc = plan.locators[s_card - 1].bits;
    TypeSet mixed_type = members;
    mixed_type.push_back(theta);
    std::sort(mixed_type.begin(), mixed_type.end());
    for (u64 r = 0; r < loc.rows; ++r) {
      std::vector<std::pair<u32, u64>> contrib;
      contrib.reserve(members.size());
      for (u32 k : members) contrib.emplace_back(k, plan.blocks.at(k, lam) + r);
      for (u32 j = 0; j < p.N; ++j) {
        AnswerSlot s;
        s.server = j;
        s.contributions = contrib;
        s.group_mask = lam;
        s.group_row = r;
        if (loc.at(r, j)) {
          s.full_type = members;
        } else {
          s.full_type = mixed_type;
          s.desired_row = 0;  // placeholder, assigned after ordering
        }
        plan.slots[j].push_back(std::move(s));
      }
    }
  }

  const auto key = [order, theta](const AnswerSlot& s) {
    const bool has_theta =
        std::find(s.full_type.begin(), s.full_type.end(), theta) != s.full_type.end();
    const int lead = order == SlotOrder::desired_first ? (has_theta ? 0 : 1) : 0;
    return std::make_tuple(lead, s.full_type.size(), s.full_type, s.group_row);
  };
  plan.desired_usage.assign(p.N, 0);
  for (u32 j = 0; j < p.N; ++j) {
    std::sort(plan.slots[j].begin(), plan.slots[j].end(),
              [&key](const AnswerSlot& x, const AnswerSlot& y) { return key(x) < key(y); });
    u64 next_row = 0;
    for (AnswerSlot& s : plan.slots[j]) {
      const bool has_theta =
          std::find(s.full_type.begin(), s.full_type.end(), theta) != s.full_type.end();
      if (has_theta) {
        if (next_row >= p.Ltilde)
          throw std::logic_error("build_plan: desired rows exhausted at server " +
                                 std::to_string(j));
        s.desired_row = next_row++;
      }
    }
    if (next_row != p.Ltilde)
      throw std::logic_error("build_plan: server " + std::to_string(j) + " consumed " +
                             std::to_string(next_row) + " desired rows, expected Ltilde");
    plan.desired_usage[j] = next_row;
  }
  return plan;
}

/// Debug rendering of a plan as an answer table, one column per server,
/// symbols named letter + row + column (1-based). Format is for human
/// inspection only.
inline std::string render_plan(const AnswerPlan& plan) {
  const auto sym = [&](u32 record, u64 row, u32 server) {
    std::string letter = plan.params.M <= 26 ? std::string(1, char('a' + record))
                                             : "r" + std::to_string(record + 1) + "_";
    if (row + 1 <= 9 && server + 1 <= 9)
      return letter + std::to_string(row + 1) + std::to_string(server + 1);
    return letter + "(" + std::to_string(row + 1) + "," + std::to_string(server + 1) + ")";
  };
  std::vector<std::vector<std::string>> cells(plan.params.N);
  std::size_t depth = 0;
  for (u32 j = 0; j < plan.params.N; ++j) {
    for (const AnswerSlot& s : plan.slots[j]) {
      std::string txt;
      std::size_t ci = 0;
      for (u32 k : s.full_type) {
        if (!txt.empty()) txt += "+";
        if (k == plan.theta && s.desired_row)
          txt += sym(k, *s.desired_row, j);
        else
          txt += sym(k, s.contributions[ci++].second, j);
      }
      cells[j].push_back(std::move(txt));
    }
    depth = std::max(depth, cells[j].size());
  }
  std::vector<std::size_t> width(plan.params.N);
  std::ostringstream os;
  for (u32 j = 0; j < plan.params.N; ++j) {
    width[j] = std::string("Serv(" + std::to_string(j + 1) + ")").size();
    for (const auto& c : cells[j]) width[j] = std::max(width[j], c.size());
    os << (j ? " | " : "") << "Serv(" << j + 1 << ")"
       << std::string(width[j] - std::to_string(j + 1).size() - 6, ' ');
  }
  os << "\n";
  for (std::size_t r = 0; r < depth; ++r) {
    for (u32 j = 0; j < plan.params.N; ++j) {
      const std::string c = r < cells[j].size() ? cells[j][r] : "";
      os << (j ? " | " : "") << c << std::string(width[j] - c.size(), ' ');
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace tpir
