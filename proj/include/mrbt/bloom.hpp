#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mrbt/digest.hpp"

namespace mrbt {

/// Double-hashing probe schedule for one key: probe_j = (h1 + j*h2) mod m.
/// h1 and h2 come from disjoint halves of sha256(key) (bytes [0,8) and
/// [16,24), little-endian), so the schedule is identical across runs and
/// platforms and needs no family of independent hash functions.
struct BloomProbe {
  std::uint64_t h1 = 0;
  std::uint64_t h2 = 0;
};

inline BloomProbe bloom_probe(std::span<const std::uint8_t> key) {
  const Digest d = sha256(key);
  BloomProbe p;
  for (int i = 0; i < 8; ++i) {
    p.h1 |= static_cast<std::uint64_t>(d[static_cast<std::size_t>(i)]) << (8 * i);
    p.h2 |= static_cast<std::uint64_t>(d[static_cast<std::size_t>(16 + i)]) << (8 * i);
  }
  return p;
}

/// Fixed-width bloom filter. No false negatives: after insert(x) (or a union
/// with a filter that saw x), contains(x) is always true. Filters only union
/// or compare when their (m, k) parameters match.
class BloomFilter {
 public:
  BloomFilter(std::uint32_t bit_count, std::uint32_t hash_count)
      : m_(bit_count), k_(hash_count), bits_((bit_count + 7) / 8, 0) {
    if (m_ == 0) throw std::invalid_argument("bloom filter: bit count must be positive");
    if (k_ == 0) throw std::invalid_argument("bloom filter: hash count must be positive");
  }

  /// Wraps raw stored bytes without normalizing them; verification compares
  /// stored bytes against a recomputation, so tampered padding bits must
  /// survive the load.
  static BloomFilter from_bytes(std::uint32_t bit_count, std::uint32_t hash_count,
                                std::vector<std::uint8_t> raw) {
    BloomFilter f(bit_count, hash_count);
    if (raw.size() != f.bits_.size())
      throw std::invalid_argument("bloom filter: byte size does not match bit count");
    f.bits_ = std::move(raw);
    return f;
  }

  void insert(const BloomProbe& p) {
    for (std::uint32_t j = 0; j < k_; ++j) set_bit((p.h1 + j * p.h2) % m_);
  }

  void insert(std::span<const std::uint8_t> key) { insert(bloom_probe(key)); }

  bool contains(const BloomProbe& p) const {
    for (std::uint32_t j = 0; j < k_; ++j) {
      if (!bit((p.h1 + j * p.h2) % m_)) return false;
    }
    return true;
  }

  bool contains(std::span<const std::uint8_t> key) const { return contains(bloom_probe(key)); }

  void union_with(const BloomFilter& other) {
    if (!same_params(other))
      throw std::invalid_argument("bloom filter: union requires identical parameters");
    for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
  }

  bool same_params(const BloomFilter& other) const {
    return m_ == other.m_ && k_ == other.k_;
  }

  bool bit(std::uint64_t i) const {
    return (bits_[i >> 3] >> (i & 7)) & 1;
  }

  std::uint64_t popcount() const {
    std::uint64_t n = 0;
    for (auto b : bits_) n += static_cast<std::uint64_t>(std::popcount(b));
    return n;
  }

  std::uint32_t bit_count() const { return m_; }
  std::uint32_t hash_count() const { return k_; }

  /// Canonical bit bytes: bit i lives at byte i/8, mask 1 << (i%8). This is
  /// the byte form used by digests and the file formats.
  const std::vector<std::uint8_t>& bytes() const { return bits_; }

  bool operator==(const BloomFilter&) const = default;

 private:
  void set_bit(std::uint64_t i) { bits_[i >> 3] |= static_cast<std::uint8_t>(1u << (i & 7)); }

  std::uint32_t m_;
  std::uint32_t k_;
  std::vector<std::uint8_t> bits_;
};

inline BloomFilter bf_union(const BloomFilter& a, const BloomFilter& b) {
  BloomFilter out = a;
  out.union_with(b);
  return out;
}

}  // namespace mrbt
