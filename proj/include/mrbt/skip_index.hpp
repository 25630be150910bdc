#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mrbt/chain.hpp"
#include "mrbt/chain_io.hpp"

namespace mrbt {

/// One skip level at a block: the union of block_bf / block_mbr over the
/// covered span of heights [span_begin, span_end] (inclusive, clamped at the
/// tip). Level i at block b covers [b, b + alpha^i].
struct SkipLevel {
  std::uint32_t level = 0;
  std::uint64_t span_begin = 0;
  std::uint64_t span_end = 0;
  BloomFilter bf;
  Mbr mbr;

  bool operator==(const SkipLevel&) const = default;
};

/// Deterministic alpha-ary inter-block index. A level at block b summarizes
/// FUTURE blocks, which cannot exist when b is appended, so the index is a
/// side structure owned by the query layer: rebuildable from block headers
/// alone and checkable bit-for-bit against them.
class SkipIndex {
 public:
  static SkipIndex build(const Chain& chain, std::uint32_t alpha) {
    if (alpha < 2) throw std::invalid_argument("skip index: alpha must be >= 2");
    SkipIndex idx;
    idx.alpha_ = alpha;
    idx.block_count_ = chain.size();
    idx.tip_digest_ = chain.tip_digest();
    idx.levels_.resize(chain.size());
    if (chain.empty()) return idx;
    const std::uint64_t tip = chain.size() - 1;
    for (std::uint64_t b = 0; b < tip; ++b) {  // the tip has nothing ahead to summarize
      const std::uint32_t top = max_level(alpha, tip, b);
      for (std::uint32_t i = 0; i <= top; ++i)
        idx.levels_[b].push_back(make_level(chain, alpha, b, i, tip));
    }
    return idx;
  }

  /// Reassembles an index from stored parts (deserialization); rebuild_check
  /// validates it against a chain.
  static SkipIndex from_parts(std::uint32_t alpha, std::uint64_t block_count, Digest tip_digest,
                              std::vector<std::vector<SkipLevel>> levels) {
    if (alpha < 2) throw std::invalid_argument("skip index: alpha must be >= 2");
    if (levels.size() != block_count)
      throw std::invalid_argument("skip index: level table size mismatch");
    SkipIndex idx;
    idx.alpha_ = alpha;
    idx.block_count_ = block_count;
    idx.tip_digest_ = tip_digest;
    idx.levels_ = std::move(levels);
    return idx;
  }

  /// Incremental maintenance after one append: recomputes exactly the levels
  /// whose span now reaches the new tip (those with b + alpha^i beyond the
  /// old tip), plus the new tip's empty slot.
  void update_for_append(const Chain& chain) {
    if (chain.size() != block_count_ + 1)
      throw std::invalid_argument("skip index: update expects exactly one appended block");
    const std::uint64_t tip = chain.size() - 1;
    const std::uint64_t old_tip_plus1 = block_count_;  // == old block count
    levels_.resize(chain.size());
    for (std::uint64_t b = 0; b < tip; ++b) {
      const std::uint32_t top = max_level(alpha_, tip, b);
      for (std::uint32_t i = 0; i <= top; ++i) {
        const std::uint64_t reach = b + pow_u64(alpha_, i);
        if (reach < old_tip_plus1) continue;  // span unchanged
        const SkipLevel lvl = make_level(chain, alpha_, b, i, tip);
        if (i < levels_[b].size())
          levels_[b][i] = lvl;
        else
          levels_[b].push_back(lvl);
      }
    }
    block_count_ = chain.size();
    tip_digest_ = chain.tip_digest();
  }

  std::uint32_t alpha() const { return alpha_; }
  std::uint64_t block_count() const { return block_count_; }
  const Digest& tip_digest() const { return tip_digest_; }
  const std::vector<SkipLevel>& levels_at(std::uint64_t height) const {
    return levels_.at(height);
  }

  bool matches_chain(const Chain& chain) const {
    return block_count_ == chain.size() && tip_digest_ == chain.tip_digest();
  }

  /// Recomputes every level from the chain's headers and compares
  /// bit-exactly. False for any divergence, including a stale tip.
  bool rebuild_check(const Chain& chain) const {
    if (!matches_chain(chain)) return false;
    const SkipIndex fresh = build(chain, alpha_);
    return fresh.levels_ == levels_;
  }

  /// Inter-block query. The cursor starts at height 0; at cursor b the block
  /// itself is checked (and queried if its header passes), then the smallest
  /// passing level decides the jump:
  ///   - no level passes: skip past the largest span, b <- span_end + 1
  ///   - level 0 passes:  b <- b + 1
  ///   - level i > 0 passes, level i-1 does not: candidates lie in
  ///     (b + alpha^(i-1), b + alpha^i], so b <- b + alpha^(i-1) + 1
  /// A span is skipped only when its summary rules every covered block out,
  /// so the result always equals a linear scan.
  std::vector<Match> query(const Chain& chain, const Query& q,
                           QueryStats* stats = nullptr,
                           MerkleRbTree::QueryOptions opts = {}) const {
    if (!matches_chain(chain))
      throw std::runtime_error("skip index: stale or mismatched index for this chain");
    validate_query(chain.schema(), q);
    std::vector<Match> out;
    if (chain.empty()) return out;

    const auto keys = query_keys(q);
    std::vector<BloomProbe> probes;
    probes.reserve(keys.size());
    for (const auto& k : keys) probes.push_back(bloom_probe(k));

    const std::uint64_t tip = chain.size() - 1;
    std::uint64_t b = 0;
    while (b <= tip) {
      if (stats) ++stats->blocks_checked;
      const Block& blk = chain.block(b);
      if (chain.header_passes(blk.header, q, probes, stats)) {
        for (std::uint32_t idx : blk.tree.query(q, stats, opts))
          out.push_back({b, idx});
      }
      if (b == tip) break;

      const auto& lv = levels_[b];
      std::int64_t passing = -1;
      for (std::size_t i = 0; i < lv.size(); ++i) {
        if (stats) ++stats->level_checks;
        if (level_passes(lv[i], q, probes, stats)) {
          passing = static_cast<std::int64_t>(i);
          break;
        }
      }
      if (passing < 0)
        b = lv.back().span_end + 1;
      else if (passing == 0)
        b = b + 1;
      else
        b = b + pow_u64(alpha_, static_cast<std::uint32_t>(passing - 1)) + 1;
    }
    return out;
  }

  bool operator==(const SkipIndex&) const = default;

 private:
  static std::uint64_t pow_u64(std::uint64_t base, std::uint32_t exp) {
    std::uint64_t v = 1;
    for (std::uint32_t i = 0; i < exp; ++i) v *= base;
    return v;
  }

  /// Largest level L with alpha^L <= tip - b; levels 0..L exist at b.
  static std::uint32_t max_level(std::uint32_t alpha, std::uint64_t tip, std::uint64_t b) {
    if (tip <= b) return 0;
    const std::uint64_t dist = tip - b;
    std::uint32_t level = 0;
    std::uint64_t reach = alpha;
    while (reach <= dist) {
      ++level;
      reach *= alpha;
    }
    return level;
  }

  static SkipLevel make_level(const Chain& chain, std::uint32_t alpha, std::uint64_t b,
                              std::uint32_t i, std::uint64_t tip) {
    const std::uint64_t end = std::min(b + pow_u64(alpha, i), tip);
    const BlockHeader& first = chain.block(b).header;
    SkipLevel lvl{i, b, end, first.block_bf, first.block_mbr};
    for (std::uint64_t h = b + 1; h <= end; ++h) {
      const BlockHeader& hd = chain.block(h).header;
      lvl.bf.union_with(hd.block_bf);
      lvl.mbr.expand(hd.block_mbr);
    }
    return lvl;
  }

  bool level_passes(const SkipLevel& lvl, const Query& q, std::span<const BloomProbe> probes,
                    QueryStats* stats) const {
    if (!ranges_intersect(q, lvl.mbr)) return false;
    for (const auto& p : probes) {
      if (stats) ++stats->bf_checks;
      if (!lvl.bf.contains(p)) return false;
    }
    return true;
  }

  std::uint32_t alpha_ = 2;
  std::uint64_t block_count_ = 0;
  Digest tip_digest_ = kZeroDigest;
  std::vector<std::vector<SkipLevel>> levels_;
};

// Index file layout (version 1): "MRBI", u32le version, u32le alpha,
// u64le block count, chain file digest, tip header digest, u32le dims,
// u32le bloom bits, u32le bloom hashes, then per block a u32le level count
// and the levels (u32le level, u64le span begin/end, MBR bytes, bloom
// bytes). Keyed by (chain file digest, alpha) so staleness is detectable
// without touching any block.

inline constexpr char kIndexMagic[4] = {'M', 'R', 'B', 'I'};
inline constexpr std::uint32_t kIndexVersion = 1;

struct StoredIndex {
  SkipIndex index;
  Digest chain_file_digest = kZeroDigest;
};

inline void save_index(const SkipIndex& index, const Digest& chain_file_digest,
                       std::size_t dims, std::uint32_t bloom_bits, std::uint32_t bloom_hashes,
                       const std::filesystem::path& path) {
  ByteWriter w;
  w.bytes({reinterpret_cast<const std::uint8_t*>(kIndexMagic), 4});
  w.u32le(kIndexVersion);
  w.u32le(index.alpha());
  w.u64le(index.block_count());
  w.bytes(chain_file_digest);
  w.bytes(index.tip_digest());
  w.u32le(static_cast<std::uint32_t>(dims));
  w.u32le(bloom_bits);
  w.u32le(bloom_hashes);
  for (std::uint64_t b = 0; b < index.block_count(); ++b) {
    const auto& lv = index.levels_at(b);
    w.u32le(static_cast<std::uint32_t>(lv.size()));
    for (const auto& level : lv) {
      w.u32le(level.level);
      w.u64le(level.span_begin);
      w.u64le(level.span_end);
      encode_mbr(w, level.mbr);
      w.bytes(level.bf.bytes());
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(w.data().data()),
            static_cast<std::streamsize>(w.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline StoredIndex load_index(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  ByteReader r(bytes);
  auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(),
                  reinterpret_cast<const std::uint8_t*>(kIndexMagic)))
    throw std::runtime_error("not an index file (bad magic)");
  if (r.u32le() != kIndexVersion) throw std::runtime_error("unsupported index file version");

  const std::uint32_t alpha = r.u32le();
  if (alpha < 2) throw std::runtime_error("index file: bad alpha");
  const std::uint64_t block_count = r.u64le();
  StoredIndex stored;
  auto chain_digest = r.bytes(32);
  std::copy(chain_digest.begin(), chain_digest.end(), stored.chain_file_digest.begin());
  Digest tip{};
  auto tip_raw = r.bytes(32);
  std::copy(tip_raw.begin(), tip_raw.end(), tip.begin());
  const std::uint32_t dims = r.u32le();
  const std::uint32_t bloom_bits = r.u32le();
  const std::uint32_t bloom_hashes = r.u32le();
  if (bloom_bits == 0 || bloom_hashes == 0) throw std::runtime_error("index file: bad bloom params");

  std::vector<std::vector<SkipLevel>> levels(block_count);
  const std::size_t bf_bytes = (bloom_bits + 7) / 8;
  for (std::uint64_t b = 0; b < block_count; ++b) {
    const std::uint32_t count = r.u32le();
    levels[b].reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
      const std::uint32_t level = r.u32le();
      const std::uint64_t begin = r.u64le();
      const std::uint64_t end = r.u64le();
      Mbr mbr = decode_mbr(r, dims);
      auto bits = r.bytes(bf_bytes);
      BloomFilter bf = BloomFilter::from_bytes(
          bloom_bits, bloom_hashes, std::vector<std::uint8_t>(bits.begin(), bits.end()));
      levels[b].push_back(SkipLevel{level, begin, end, std::move(bf), std::move(mbr)});
    }
  }
  if (!r.done()) throw std::runtime_error("index file: trailing bytes");
  stored.index = SkipIndex::from_parts(alpha, block_count, tip, std::move(levels));
  return stored;
}

}  // namespace mrbt
