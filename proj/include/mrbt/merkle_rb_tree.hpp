#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mrbt/bloom.hpp"
#include "mrbt/bytes.hpp"
#include "mrbt/digest.hpp"
#include "mrbt/encoding.hpp"
#include "mrbt/geometry.hpp"
#include "mrbt/metadata.hpp"
#include "mrbt/query_stats.hpp"

namespace mrbt {

struct TreeConfig {
  std::uint32_t leaf_fanout = 4;
  std::uint32_t internal_fanout = 4;
  std::uint32_t bloom_bits = 1024;
  std::uint32_t bloom_hashes = 7;

  void validate() const {
    if (leaf_fanout < 2) throw std::invalid_argument("tree config: leaf fanout must be >= 2");
    if (internal_fanout < 2)
      throw std::invalid_argument("tree config: internal fanout must be >= 2");
    if (bloom_bits == 0) throw std::invalid_argument("tree config: bloom bits must be positive");
    if (bloom_hashes == 0)
      throw std::invalid_argument("tree config: bloom hash count must be positive");
  }

  bool operator==(const TreeConfig&) const = default;
};

/// One tree node: Merkle digest, bloom filter over the discrete keys of the
/// subtree, and the MBR of its points. Leaves hold record indexes into the
/// tree's record list (input order); internal nodes hold children.
struct TreeNode {
  Digest digest;
  BloomFilter bf;
  Mbr mbr;
  std::vector<std::unique_ptr<TreeNode>> children;
  std::vector<std::uint32_t> entries;

  TreeNode(Digest d, BloomFilter b, Mbr m) : digest(d), bf(std::move(b)), mbr(std::move(m)) {}

  bool is_leaf() const { return children.empty(); }
};

/// Digest of a leaf: 0x00 followed by the canonical encodings of its entries
/// in leaf order.
inline Digest leaf_digest(const Schema& schema, const std::vector<MetadataRecord>& records,
                          std::span<const std::uint32_t> entries) {
  ByteWriter w;
  w.u8(0x00);
  for (std::uint32_t idx : entries) encode_record(w, schema, records[idx]);
  return sha256(w.data());
}

/// Digest of an internal node: 0x01, child digests in order, then the node's
/// canonical MBR bytes and bloom bit bytes. Covering the summaries makes a
/// tampered filter or rectangle detectable even when child hashes are intact.
inline Digest internal_digest(std::span<const Digest> child_digests, const Mbr& mbr,
                              const BloomFilter& bf) {
  ByteWriter w;
  w.u8(0x01);
  for (const Digest& d : child_digests) w.bytes(d);
  encode_mbr(w, mbr);
  w.bytes(bf.bytes());
  return sha256(w.data());
}

/// Pruning toggles; disabling either only costs node visits, never answers.
struct TreeQueryOptions {
  bool bloom_prune = true;
  bool mbr_prune = true;
};

/// Per-block authenticated spatial index. Bulk-loaded with Sort-Tile-
/// Recursive packing, immutable afterwards; concurrent queries are safe.
class MerkleRbTree {
 public:
  using QueryOptions = TreeQueryOptions;

  static MerkleRbTree build(std::vector<MetadataRecord> records, Schema schema,
                            TreeConfig config) {
    schema.validate();
    config.validate();
    if (records.empty()) throw std::invalid_argument("tree build: no records");
    for (const auto& r : records) validate_record(schema, r);

    MerkleRbTree tree(std::move(records), std::move(schema), config);
    std::vector<std::unique_ptr<TreeNode>> level = tree.pack_leaves();
    while (level.size() > 1) {
      std::vector<std::unique_ptr<TreeNode>> parents;
      parents.reserve((level.size() + config.internal_fanout - 1) / config.internal_fanout);
      for (std::size_t i = 0; i < level.size(); i += config.internal_fanout) {
        const std::size_t end = std::min(level.size(), i + config.internal_fanout);
        parents.push_back(tree.make_internal(
            {std::make_move_iterator(level.begin() + static_cast<std::ptrdiff_t>(i)),
             std::make_move_iterator(level.begin() + static_cast<std::ptrdiff_t>(end))}));
      }
      level = std::move(parents);
    }
    tree.root_ = std::move(level.front());
    return tree;
  }

  /// Reassembles a tree from stored parts (deserialization). Summaries are
  /// taken as-is; call verify() to check them.
  static MerkleRbTree from_parts(std::vector<MetadataRecord> records, Schema schema,
                                 TreeConfig config, std::unique_ptr<TreeNode> root) {
    MerkleRbTree tree(std::move(records), std::move(schema), config);
    tree.root_ = std::move(root);
    return tree;
  }

  const TreeNode& root() const { return *root_; }
  const std::vector<MetadataRecord>& records() const { return records_; }
  const Schema& schema() const { return schema_; }
  const TreeConfig& config() const { return config_; }
  std::size_t record_count() const { return records_.size(); }

  int height() const {
    int h = 1;
    const TreeNode* n = root_.get();
    while (!n->is_leaf()) {
      ++h;
      n = n->children.front().get();
    }
    return h;
  }

  std::size_t node_count() const { return count_nodes(*root_); }

  /// Recursive descent: a child is entered iff its MBR intersects the query
  /// ranges and its bloom filter possibly contains every discrete key. Leaf
  /// entries are then rechecked exactly, which filters bloom false positives.
  /// Returns matching record indexes in ascending order; always equal to a
  /// linear scan of the records.
  std::vector<std::uint32_t> query(const Query& q, QueryStats* stats = nullptr,
                                   QueryOptions opts = {}) const {
    validate_query(schema_, q);
    QueryStats local;
    QueryStats& st = stats ? *stats : local;
    const auto keys = query_keys(q);
    std::vector<BloomProbe> probes;
    probes.reserve(keys.size());
    for (const auto& k : keys) probes.push_back(bloom_probe(k));

    std::vector<std::uint32_t> out;
    if (node_passes(*root_, q, probes, opts, st)) {
      visit(*root_, q, probes, opts, st, out);
    } else {
      count_visit(*root_, st);  // the root was still examined
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Recomputes every summary (MBR, bloom filter, digest) bottom-up from the
  /// leaf records and compares with what the tree stores. True iff all match,
  /// the recomputed root digest equals expected_root, and the leaf entries
  /// cover each record exactly once.
  bool verify(const Digest& expected_root) const {
    std::vector<std::uint8_t> seen(records_.size(), 0);
    Digest recomputed{};
    if (!verify_node(*root_, seen, recomputed)) return false;
    if (recomputed != expected_root) return false;
    for (auto s : seen)
      if (!s) return false;
    return true;
  }

  /// Same traversal as query(), returning (visited internal, visited leaf).
  std::pair<std::uint64_t, std::uint64_t> count_node_accesses(const Query& q,
                                                              QueryOptions opts = {}) const {
    QueryStats st;
    query(q, &st, opts);
    return {st.nodes_visited_internal, st.nodes_visited_leaf};
  }

 private:
  MerkleRbTree(std::vector<MetadataRecord> records, Schema schema, TreeConfig config)
      : records_(std::move(records)), schema_(std::move(schema)), config_(config) {}

  // Sort-Tile-Recursive: sort by the current dimension (ties by record
  // index), slice into ceil(P^(1/remaining_dims)) slabs, recurse; the last
  // dimension packs runs of leaf_fanout entries. Deterministic for a given
  // input order.
  std::vector<std::unique_ptr<TreeNode>> pack_leaves() const {
    std::vector<std::uint32_t> idx(records_.size());
    std::iota(idx.begin(), idx.end(), 0u);
    std::vector<std::unique_ptr<TreeNode>> leaves;
    leaves.reserve((idx.size() + config_.leaf_fanout - 1) / config_.leaf_fanout);
    tile(std::span<std::uint32_t>(idx), 0, leaves);
    return leaves;
  }

  void tile(std::span<std::uint32_t> idx, std::size_t dim,
            std::vector<std::unique_ptr<TreeNode>>& leaves) const {
    const std::size_t d = schema_.dims();
    const std::size_t cap = config_.leaf_fanout;
    if (idx.size() <= cap || dim + 1 >= std::max<std::size_t>(d, 1)) {
      if (d > 0) sort_by_dim(idx, std::min(dim, d - 1));
      for (std::size_t i = 0; i < idx.size(); i += cap) {
        const std::size_t end = std::min(idx.size(), i + cap);
        leaves.push_back(make_leaf(idx.subspan(i, end - i)));
      }
      return;
    }
    sort_by_dim(idx, dim);
    const double pages = std::ceil(static_cast<double>(idx.size()) / static_cast<double>(cap));
    const auto slabs = static_cast<std::size_t>(
        std::ceil(std::pow(pages, 1.0 / static_cast<double>(d - dim))));
    const std::size_t slab_size = (idx.size() + slabs - 1) / slabs;
    for (std::size_t i = 0; i < idx.size(); i += slab_size) {
      const std::size_t end = std::min(idx.size(), i + slab_size);
      tile(idx.subspan(i, end - i), dim + 1, leaves);
    }
  }

  void sort_by_dim(std::span<std::uint32_t> idx, std::size_t dim) const {
    std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
      const double va = records_[a].continuous[dim];
      const double vb = records_[b].continuous[dim];
      if (va != vb) return va < vb;
      return a < b;
    });
  }

  std::unique_ptr<TreeNode> make_leaf(std::span<const std::uint32_t> entries) const {
    Mbr mbr = Mbr::point(records_[entries.front()].continuous);
    BloomFilter bf(config_.bloom_bits, config_.bloom_hashes);
    for (std::uint32_t idx : entries) {
      mbr.expand(Mbr::point(records_[idx].continuous));
      for (const auto& [attr, value] : records_[idx].discrete) bf.insert(discrete_key(attr, value));
    }
    auto node = std::make_unique<TreeNode>(leaf_digest(schema_, records_, entries), std::move(bf),
                                           std::move(mbr));
    node->entries.assign(entries.begin(), entries.end());
    return node;
  }

  std::unique_ptr<TreeNode> make_internal(std::vector<std::unique_ptr<TreeNode>> children) const {
    Mbr mbr = children.front()->mbr;
    BloomFilter bf = children.front()->bf;
    std::vector<Digest> child_digests;
    child_digests.reserve(children.size());
    child_digests.push_back(children.front()->digest);
    for (std::size_t i = 1; i < children.size(); ++i) {
      mbr.expand(children[i]->mbr);
      bf.union_with(children[i]->bf);
      child_digests.push_back(children[i]->digest);
    }
    auto node = std::make_unique<TreeNode>(internal_digest(child_digests, mbr, bf), std::move(bf),
                                           std::move(mbr));
    node->children = std::move(children);
    return node;
  }

  bool node_passes(const TreeNode& node, const Query& q, std::span<const BloomProbe> probes,
                   QueryOptions opts, QueryStats& st) const {
    if (opts.mbr_prune && !ranges_intersect(q, node.mbr)) return false;
    if (opts.bloom_prune) {
      for (const auto& p : probes) {
        ++st.bf_checks;
        if (!node.bf.contains(p)) return false;
      }
    }
    return true;
  }

  static void count_visit(const TreeNode& node, QueryStats& st) {
    if (node.is_leaf())
      ++st.nodes_visited_leaf;
    else
      ++st.nodes_visited_internal;
  }

  void visit(const TreeNode& node, const Query& q, std::span<const BloomProbe> probes,
             QueryOptions opts, QueryStats& st, std::vector<std::uint32_t>& out) const {
    count_visit(node, st);
    if (node.is_leaf()) {
      for (std::uint32_t idx : node.entries) {
        if (matches(q, records_[idx])) out.push_back(idx);
      }
      return;
    }
    for (const auto& child : node.children) {
      if (node_passes(*child, q, probes, opts, st)) visit(*child, q, probes, opts, st, out);
    }
  }

  static std::size_t count_nodes(const TreeNode& node) {
    std::size_t n = 1;
    for (const auto& c : node.children) n += count_nodes(*c);
    return n;
  }

  bool verify_node(const TreeNode& node, std::vector<std::uint8_t>& seen,
                   Digest& recomputed) const {
    Mbr mbr(std::vector<double>(schema_.dims(), 0.0), std::vector<double>(schema_.dims(), 0.0));
    BloomFilter bf(node.bf.bit_count(), node.bf.hash_count());
    if (node.is_leaf()) {
      if (node.entries.empty()) return false;
      mbr = Mbr::point(records_[node.entries.front()].continuous);
      for (std::uint32_t idx : node.entries) {
        if (idx >= records_.size() || seen[idx]) return false;
        seen[idx] = 1;
        mbr.expand(Mbr::point(records_[idx].continuous));
        for (const auto& [attr, value] : records_[idx].discrete)
          bf.insert(discrete_key(attr, value));
      }
      recomputed = leaf_digest(schema_, records_, node.entries);
    } else {
      std::vector<Digest> child_digests;
      child_digests.reserve(node.children.size());
      bool first = true;
      for (const auto& child : node.children) {
        Digest child_recomputed{};
        if (!verify_node(*child, seen, child_recomputed)) return false;
        child_digests.push_back(child_recomputed);
        if (first) {
          mbr = child->mbr;
          bf = child->bf;
          first = false;
        } else {
          mbr.expand(child->mbr);
          bf.union_with(child->bf);
        }
      }
      recomputed = internal_digest(child_digests, mbr, bf);
    }
    if (canonical_mbr_bytes(mbr) != canonical_mbr_bytes(node.mbr)) return false;
    if (!(bf == node.bf)) return false;
    if (recomputed != node.digest) return false;
    return true;
  }

  std::vector<MetadataRecord> records_;
  Schema schema_;
  TreeConfig config_;
  std::unique_ptr<TreeNode> root_;
};

}  // namespace mrbt
