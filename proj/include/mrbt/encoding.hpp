#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mrbt/bytes.hpp"
#include "mrbt/geometry.hpp"
#include "mrbt/metadata.hpp"

namespace mrbt {

// Canonical byte encodings. Every digest in the project is computed over
// these forms, never over JSON or in-memory layouts. The record encoding is
// injective on valid records and self-delimiting given the schema:
//
//   owner_id            u32le length + bytes
//   continuous[i]       f64le, schema dimension order
//   discrete values     u32le length + bytes, schema attribute order,
//                       absent attribute encoded as length 0

inline void encode_record(ByteWriter& w, const Schema& schema, const MetadataRecord& rec) {
  w.str32(rec.owner_id);
  for (double v : rec.continuous) w.f64le(v);
  for (const auto& attr : schema.discrete_attrs) {
    auto it = rec.discrete.find(attr);
    w.str32(it == rec.discrete.end() ? std::string_view{} : std::string_view(it->second));
  }
}

inline std::vector<std::uint8_t> canonical_encode(const Schema& schema,
                                                  const MetadataRecord& rec) {
  validate_record(schema, rec);
  ByteWriter w;
  encode_record(w, schema, rec);
  return std::move(w).take();
}

inline MetadataRecord canonical_decode(const Schema& schema, ByteReader& r) {
  MetadataRecord rec;
  rec.owner_id = r.str32();
  rec.continuous.resize(schema.dims());
  for (std::size_t i = 0; i < schema.dims(); ++i) rec.continuous[i] = r.f64le();
  for (const auto& attr : schema.discrete_attrs) {
    std::string value = r.str32();
    if (!value.empty()) rec.discrete.emplace(attr, std::move(value));
  }
  return rec;
}

inline MetadataRecord canonical_decode(const Schema& schema,
                                       std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  MetadataRecord rec = canonical_decode(schema, r);
  if (!r.done()) throw std::runtime_error("record decode: trailing bytes");
  return rec;
}

/// low[0..d) then high[0..d), f64le each.
inline void encode_mbr(ByteWriter& w, const Mbr& mbr) {
  for (double v : mbr.lows()) w.f64le(v);
  for (double v : mbr.highs()) w.f64le(v);
}

inline std::vector<std::uint8_t> canonical_mbr_bytes(const Mbr& mbr) {
  ByteWriter w;
  encode_mbr(w, mbr);
  return std::move(w).take();
}

inline Mbr decode_mbr(ByteReader& r, std::size_t dims) {
  std::vector<double> low(dims), high(dims);
  for (std::size_t i = 0; i < dims; ++i) low[i] = r.f64le();
  for (std::size_t i = 0; i < dims; ++i) high[i] = r.f64le();
  return Mbr(std::move(low), std::move(high));
}

}  // namespace mrbt
