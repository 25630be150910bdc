#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mrbt/bloom.hpp"
#include "mrbt/bytes.hpp"
#include "mrbt/digest.hpp"
#include "mrbt/encoding.hpp"
#include "mrbt/merkle_rb_tree.hpp"
#include "mrbt/metadata.hpp"
#include "mrbt/query_stats.hpp"

namespace mrbt {

/// Block header: hash link plus the block-level summaries used for
/// inter-block pruning. block_bf and block_mbr are bit-for-bit the block
/// tree's root summaries.
struct BlockHeader {
  std::uint64_t height = 0;
  Digest prev_digest = kZeroDigest;
  Digest tree_root = kZeroDigest;
  Mbr block_mbr;
  BloomFilter block_bf;
  std::uint64_t tx_count = 0;
};

/// Canonical header bytes: height u64le, prev digest, tree root, MBR bytes,
/// bloom bit bytes, tx count u64le. Hash-link material and file layout.
inline void encode_header(ByteWriter& w, const BlockHeader& h) {
  w.u64le(h.height);
  w.bytes(h.prev_digest);
  w.bytes(h.tree_root);
  encode_mbr(w, h.block_mbr);
  w.bytes(h.block_bf.bytes());
  w.u64le(h.tx_count);
}

inline Digest header_digest(const BlockHeader& h) {
  ByteWriter w;
  encode_header(w, h);
  return sha256(w.data());
}

struct Block {
  BlockHeader header;
  MerkleRbTree tree;

  const std::vector<MetadataRecord>& records() const { return tree.records(); }
};

/// One query hit: block height plus record index within the block.
struct Match {
  std::uint64_t height = 0;
  std::uint32_t index = 0;

  auto operator<=>(const Match&) const = default;
};

struct VerifyResult {
  bool ok = true;
  std::uint64_t first_bad_height = 0;
  std::string reason;

  static VerifyResult failure(std::uint64_t height, std::string why) {
    return {false, height, std::move(why)};
  }
};

/// Append-only block store. Appends are externally serialized; readers may
/// query any prefix snapshot concurrently.
class Chain {
 public:
  Chain(Schema schema, TreeConfig config) : schema_(std::move(schema)), config_(config) {
    schema_.validate();
    config_.validate();
  }

  /// Reassembles a chain from stored parts without recomputation; verify()
  /// checks the result.
  static Chain from_parts(Schema schema, TreeConfig config, std::vector<Block> blocks) {
    Chain c(std::move(schema), config);
    c.blocks_ = std::move(blocks);
    return c;
  }

  const Block& append_block(std::vector<MetadataRecord> records) {
    if (records.empty()) throw std::invalid_argument("append: empty record list");
    MerkleRbTree tree = MerkleRbTree::build(std::move(records), schema_, config_);
    BlockHeader header{
        .height = blocks_.size(),
        .prev_digest = blocks_.empty() ? kZeroDigest : header_digest(blocks_.back().header),
        .tree_root = tree.root().digest,
        .block_mbr = tree.root().mbr,
        .block_bf = tree.root().bf,
        .tx_count = tree.record_count(),
    };
    blocks_.push_back(Block{std::move(header), std::move(tree)});
    return blocks_.back();
  }

  std::size_t size() const { return blocks_.size(); }
  bool empty() const { return blocks_.empty(); }
  const Block& block(std::uint64_t height) const { return blocks_.at(height); }
  const std::vector<Block>& blocks() const { return blocks_; }
  const Schema& schema() const { return schema_; }
  const TreeConfig& config() const { return config_; }

  Digest tip_digest() const {
    return blocks_.empty() ? kZeroDigest : header_digest(blocks_.back().header);
  }

  /// Exact filter over every record of every block. The paper-style naive
  /// baseline and the correctness oracle for every other engine.
  std::vector<Match> linear_scan(const Query& q, QueryStats* stats = nullptr) const {
    validate_query(schema_, q);
    std::vector<Match> out;
    for (const auto& blk : blocks_) {
      if (stats) ++stats->blocks_checked;
      const auto& records = blk.records();
      for (std::uint32_t i = 0; i < records.size(); ++i) {
        if (matches(q, records[i])) out.push_back({blk.header.height, i});
      }
    }
    return out;
  }

  /// True iff the block's header summaries cannot rule the query out.
  bool header_passes(const BlockHeader& h, const Query& q,
                     std::span<const BloomProbe> probes, QueryStats* stats = nullptr) const {
    if (!ranges_intersect(q, h.block_mbr)) return false;
    for (const auto& p : probes) {
      if (stats) ++stats->bf_checks;
      if (!h.block_bf.contains(p)) return false;
    }
    return true;
  }

  /// Baseline without the skip index: every block's header summary is
  /// checked; only blocks that pass run an intra-block query.
  std::vector<Match> header_scan_query(const Query& q, QueryStats* stats = nullptr,
                                       MerkleRbTree::QueryOptions opts = {}) const {
    validate_query(schema_, q);
    const auto keys = query_keys(q);
    std::vector<BloomProbe> probes;
    probes.reserve(keys.size());
    for (const auto& k : keys) probes.push_back(bloom_probe(k));

    std::vector<Match> out;
    for (const auto& blk : blocks_) {
      if (stats) ++stats->blocks_checked;
      if (!header_passes(blk.header, q, probes, stats)) continue;
      for (std::uint32_t idx : blk.tree.query(q, stats, opts))
        out.push_back({blk.header.height, idx});
    }
    return out;
  }

  /// Verifies every block tree bottom-up, every header summary, and every
  /// hash link. Reports the first failing height.
  VerifyResult verify() const {
    for (std::uint64_t h = 0; h < blocks_.size(); ++h) {
      const Block& blk = blocks_[h];
      if (blk.header.height != h) return VerifyResult::failure(h, "height out of sequence");
      const Digest expected_prev = h == 0 ? kZeroDigest : header_digest(blocks_[h - 1].header);
      if (blk.header.prev_digest != expected_prev)
        return VerifyResult::failure(h, "hash link broken");
      if (blk.header.tx_count != blk.records().size())
        return VerifyResult::failure(h, "tx count mismatch");
      if (!blk.tree.verify(blk.header.tree_root))
        return VerifyResult::failure(h, "tree verification failed");
      if (canonical_mbr_bytes(blk.header.block_mbr) != canonical_mbr_bytes(blk.tree.root().mbr))
        return VerifyResult::failure(h, "header MBR does not match tree root");
      if (!(blk.header.block_bf == blk.tree.root().bf))
        return VerifyResult::failure(h, "header bloom filter does not match tree root");
    }
    return {};
  }

 private:
  Schema schema_;
  TreeConfig config_;
  std::vector<Block> blocks_;
};

}  // namespace mrbt
