#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpir/protocol.hpp"

namespace tpir {

// Binary formats, all little-endian:
//   database  "PIRD" | u32 version | u64 q | u32 M | u64 L | M*L u64 values
//   query     "PIRQ" | u32 version | u64 q | u32 M | u64 L | u32 slots | slots*M*L u64 values
//   answer    "PIRA" | u32 version | u32 slots | slots u64 values
// Every value must be < q where the message carries q.

inline constexpr std::uint32_t kWireVersion = 1;

struct wire_error : std::runtime_error {
  enum class Kind { bad_magic, bad_version, truncated, bad_value, bad_size };
  Kind kind;
  wire_error(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

using Bytes = std::vector<std::uint8_t>;

namespace detail {

inline void put_u32(Bytes& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_u64(Bytes& b, u64 v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

struct Reader {
  const Bytes& b;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > b.size())
      throw wire_error(wire_error::Kind::truncated,
                       "message truncated at byte " + std::to_string(pos));
  }
  std::uint32_t u32v() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  u64 u64v() {
    need(8);
    u64 v = 0;
    for (int i = 0; i < 8; ++i) v |= u64(b[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  void magic(const char* m) {
    need(4);
    for (int i = 0; i < 4; ++i)
      if (b[pos + i] != static_cast<std::uint8_t>(m[i]))
        throw wire_error(wire_error::Kind::bad_magic, std::string("bad magic, expected ") + m);
    pos += 4;
  }
  void version() {
    const std::uint32_t v = u32v();
    if (v != kWireVersion)
      throw wire_error(wire_error::Kind::bad_version, "unknown version " + std::to_string(v));
  }
  void done() const {
    if (pos != b.size())
      throw wire_error(wire_error::Kind::bad_size,
                       std::to_string(b.size() - pos) + " trailing bytes");
  }
};

inline void read_values(Reader& r, std::size_t count, u64 q, std::vector<u64>& out) {
  r.need(count * 8);
  out.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = r.u64v();
    if (out[i] >= q)
      throw wire_error(wire_error::Kind::bad_value,
                       "value " + std::to_string(out[i]) + " not below q = " + std::to_string(q));
  }
}

}  // namespace detail

inline Bytes encode_db(const RecordSet& db) {
  Bytes b;
  b.reserve(28 + db.records.size() * db.record_len * 8);
  b.insert(b.end(), {'P', 'I', 'R', 'D'});
  detail::put_u32(b, kWireVersion);
  detail::put_u64(b, db.q);
  detail::put_u32(b, db.count());
  detail::put_u64(b, db.record_len);
  for (const auto& w : db.records)
    for (u64 v : w) detail::put_u64(b, v);
  return b;
}

inline RecordSet decode_db(const Bytes& b) {
  detail::Reader r{b};
  r.magic("PIRD");
  r.version();
  RecordSet db;
  db.q = r.u64v();
  const std::uint32_t M = r.u32v();
  db.record_len = r.u64v();
  if (db.q < 2) throw wire_error(wire_error::Kind::bad_value, "q below 2");
  if (M == 0 || db.record_len == 0)
    throw wire_error(wire_error::Kind::bad_size, "empty database dimensions");
  if (u128(M) * db.record_len * 8 > b.size())
    throw wire_error(wire_error::Kind::truncated, "database body shorter than header claims");
  db.records.resize(M);
  for (auto& w : db.records) detail::read_values(r, db.record_len, db.q, w);
  r.done();
  return db;
}

inline Bytes encode_query(const Query& q) {
  Bytes b;
  b.reserve(32 + q.coeffs.size() * 8);
  b.insert(b.end(), {'P', 'I', 'R', 'Q'});
  detail::put_u32(b, kWireVersion);
  detail::put_u64(b, q.q);
  detail::put_u32(b, q.records);
  detail::put_u64(b, q.record_len);
  detail::put_u32(b, static_cast<std::uint32_t>(q.slots()));
  for (u64 v : q.coeffs) detail::put_u64(b, v);
  return b;
}

inline Query decode_query(const Bytes& b) {
  detail::Reader r{b};
  r.magic("PIRQ");
  r.version();
  Query q;
  q.q = r.u64v();
  q.records = r.u32v();
  q.record_len = r.u64v();
  const std::uint32_t slots = r.u32v();
  if (q.q < 2) throw wire_error(wire_error::Kind::bad_value, "q below 2");
  if (q.records == 0 || q.record_len == 0)
    throw wire_error(wire_error::Kind::bad_size, "empty query dimensions");
  const u128 total = u128(slots) * q.records * q.record_len;
  if (total * 8 > b.size())
    throw wire_error(wire_error::Kind::truncated, "query body shorter than header claims");
  detail::read_values(r, static_cast<std::size_t>(total), q.q, q.coeffs);
  r.done();
  return q;
}

inline Bytes encode_answer(const Answer& a) {
  Bytes b;
  b.reserve(12 + a.values.size() * 8);
  b.insert(b.end(), {'P', 'I', 'R', 'A'});
  detail::put_u32(b, kWireVersion);
  detail::put_u32(b, static_cast<std::uint32_t>(a.values.size()));
  for (u64 v : a.values) detail::put_u64(b, v);
  return b;
}

inline Answer decode_answer(const Bytes& b) {
  detail::Reader r{b};
  r.magic("PIRA");
  r.version();
  const std::uint32_t slots = r.u32v();
  Answer a;
  r.need(std::size_t(slots) * 8);
  a.values.resize(slots);
  for (std::uint32_t i = 0; i < slots; ++i) a.values[i] = r.u64v();
  r.done();
  return a;
}

}  // namespace tpir
