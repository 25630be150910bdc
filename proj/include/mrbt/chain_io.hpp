#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mrbt/chain.hpp"

namespace mrbt {

// Chain file layout (version 1):
//
//   "MRBC"                       4-byte magic
//   u32le version
//   u64le json length, JSON      schema + tree config, human-inspectable
//   u64le block count
//   per block: u64le payload length, payload
//
// Block payload: canonical header bytes, u32le record count, the records'
// canonical encodings, then the tree nodes depth-first (kind byte, digest,
// MBR bytes, bloom bytes, u32le count, then child nodes or u32le entry
// indexes). Digests are always computed over canonical bytes, never JSON.

inline constexpr char kChainMagic[4] = {'M', 'R', 'B', 'C'};
inline constexpr std::uint32_t kChainVersion = 1;

/// A load failure that can be pinned to one block.
class ChainFormatError : public std::runtime_error {
 public:
  ChainFormatError(std::optional<std::uint64_t> height, const std::string& message)
      : std::runtime_error(message), height_(height) {}

  std::optional<std::uint64_t> block_height() const { return height_; }

 private:
  std::optional<std::uint64_t> height_;
};

namespace detail {

inline void encode_tree_node(ByteWriter& w, const TreeNode& node) {
  w.u8(node.is_leaf() ? 0x00 : 0x01);
  w.bytes(node.digest);
  encode_mbr(w, node.mbr);
  w.bytes(node.bf.bytes());
  if (node.is_leaf()) {
    w.u32le(static_cast<std::uint32_t>(node.entries.size()));
    for (std::uint32_t idx : node.entries) w.u32le(idx);
  } else {
    w.u32le(static_cast<std::uint32_t>(node.children.size()));
    for (const auto& child : node.children) encode_tree_node(w, *child);
  }
}

inline std::unique_ptr<TreeNode> decode_tree_node(ByteReader& r, const Schema& schema,
                                                  const TreeConfig& config, int depth = 0) {
  if (depth > 64) throw std::runtime_error("tree decode: nesting too deep");
  const std::uint8_t kind = r.u8();
  if (kind > 1) throw std::runtime_error("tree decode: bad node kind");
  Digest digest{};
  auto raw = r.bytes(32);
  std::copy(raw.begin(), raw.end(), digest.begin());
  Mbr mbr = decode_mbr(r, schema.dims());
  const std::size_t bf_bytes = (config.bloom_bits + 7) / 8;
  auto bits = r.bytes(bf_bytes);
  BloomFilter bf = BloomFilter::from_bytes(
      config.bloom_bits, config.bloom_hashes,
      std::vector<std::uint8_t>(bits.begin(), bits.end()));
  auto node = std::make_unique<TreeNode>(digest, std::move(bf), std::move(mbr));
  const std::uint32_t count = r.u32le();
  if (count == 0) throw std::runtime_error("tree decode: empty node");
  if (kind == 0x00) {
    node->entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) node->entries.push_back(r.u32le());
  } else {
    node->children.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i)
      node->children.push_back(decode_tree_node(r, schema, config, depth + 1));
  }
  return node;
}

inline std::vector<std::uint8_t> encode_block(const Schema& schema, const Block& blk) {
  ByteWriter w;
  encode_header(w, blk.header);
  w.u32le(static_cast<std::uint32_t>(blk.records().size()));
  for (const auto& rec : blk.records()) encode_record(w, schema, rec);
  encode_tree_node(w, blk.tree.root());
  return std::move(w).take();
}

}  // namespace detail

inline void save_chain(const Chain& chain, const std::filesystem::path& path) {
  ByteWriter w;
  w.bytes({reinterpret_cast<const std::uint8_t*>(kChainMagic), 4});
  w.u32le(kChainVersion);

  nlohmann::json meta;
  meta["schema"]["continuous"] = chain.schema().continuous_dims;
  meta["schema"]["discrete"] = chain.schema().discrete_attrs;
  meta["tree"]["leaf_fanout"] = chain.config().leaf_fanout;
  meta["tree"]["internal_fanout"] = chain.config().internal_fanout;
  meta["tree"]["bloom_bits"] = chain.config().bloom_bits;
  meta["tree"]["bloom_hashes"] = chain.config().bloom_hashes;
  const std::string json = meta.dump();
  w.u64le(json.size());
  w.bytes({reinterpret_cast<const std::uint8_t*>(json.data()), json.size()});

  w.u64le(chain.size());
  for (const auto& blk : chain.blocks()) {
    const auto payload = detail::encode_block(chain.schema(), blk);
    w.u64le(payload.size());
    w.bytes(payload);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(w.data().data()),
            static_cast<std::streamsize>(w.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

inline Digest file_digest(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return sha256(bytes);
}

inline Chain load_chain(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  ByteReader r(bytes);
  auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(),
                  reinterpret_cast<const std::uint8_t*>(kChainMagic)))
    throw ChainFormatError(std::nullopt, "not a chain file (bad magic)");
  const std::uint32_t version = r.u32le();
  if (version != kChainVersion)
    throw ChainFormatError(std::nullopt, "unsupported chain file version");

  const std::uint64_t json_len = r.u64le();
  auto json_bytes = r.bytes(json_len);
  Schema schema;
  TreeConfig config;
  try {
    const auto meta = nlohmann::json::parse(json_bytes.begin(), json_bytes.end());
    schema.continuous_dims = meta.at("schema").at("continuous").get<std::vector<std::string>>();
    schema.discrete_attrs = meta.at("schema").at("discrete").get<std::vector<std::string>>();
    config.leaf_fanout = meta.at("tree").at("leaf_fanout").get<std::uint32_t>();
    config.internal_fanout = meta.at("tree").at("internal_fanout").get<std::uint32_t>();
    config.bloom_bits = meta.at("tree").at("bloom_bits").get<std::uint32_t>();
    config.bloom_hashes = meta.at("tree").at("bloom_hashes").get<std::uint32_t>();
    schema.validate();
    config.validate();
  } catch (const ChainFormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw ChainFormatError(std::nullopt, std::string("bad chain metadata: ") + e.what());
  }

  const std::uint64_t block_count = r.u64le();
  std::vector<Block> blocks;
  blocks.reserve(block_count);
  for (std::uint64_t h = 0; h < block_count; ++h) {
    try {
      const std::uint64_t payload_len = r.u64le();
      auto payload = r.bytes(payload_len);
      ByteReader br(payload);

      const std::uint64_t height = br.u64le();
      Digest prev{}, root{};
      auto prev_raw = br.bytes(32);
      std::copy(prev_raw.begin(), prev_raw.end(), prev.begin());
      auto root_raw = br.bytes(32);
      std::copy(root_raw.begin(), root_raw.end(), root.begin());
      Mbr block_mbr = decode_mbr(br, schema.dims());
      const std::size_t bf_bytes = (config.bloom_bits + 7) / 8;
      auto bits = br.bytes(bf_bytes);
      BloomFilter block_bf = BloomFilter::from_bytes(
          config.bloom_bits, config.bloom_hashes,
          std::vector<std::uint8_t>(bits.begin(), bits.end()));
      const std::uint64_t tx_count = br.u64le();

      const std::uint32_t record_count = br.u32le();
      std::vector<MetadataRecord> records;
      records.reserve(record_count);
      for (std::uint32_t i = 0; i < record_count; ++i)
        records.push_back(canonical_decode(schema, br));
      for (const auto& rec : records) validate_record(schema, rec);

      auto tree_root = detail::decode_tree_node(br, schema, config);
      if (!br.done()) throw std::runtime_error("trailing bytes in block payload");

      BlockHeader header{
          .height = height,
          .prev_digest = prev,
          .tree_root = root,
          .block_mbr = std::move(block_mbr),
          .block_bf = std::move(block_bf),
          .tx_count = tx_count,
      };
      blocks.push_back(Block{
          std::move(header),
          MerkleRbTree::from_parts(std::move(records), schema, config, std::move(tree_root))});
    } catch (const std::exception& e) {
      throw ChainFormatError(h, "block " + std::to_string(h) + ": " + e.what());
    }
  }
  if (!r.done()) throw ChainFormatError(std::nullopt, "trailing bytes after last block");
  return Chain::from_parts(std::move(schema), config, std::move(blocks));
}

struct FileVerifyResult {
  bool ok = false;
  std::optional<std::uint64_t> first_bad_height;
  std::string message;
};

/// Loads and fully verifies a chain file. A parse failure inside block h
/// reports h as the first affected block, the same as a content mismatch.
inline FileVerifyResult verify_chain_file(const std::filesystem::path& path) {
  try {
    const Chain chain = load_chain(path);
    const VerifyResult r = chain.verify();
    if (!r.ok) return {false, r.first_bad_height, r.reason};
    return {true, std::nullopt, "chain verified: " + std::to_string(chain.size()) + " blocks"};
  } catch (const ChainFormatError& e) {
    return {false, e.block_height(), e.what()};
  } catch (const std::exception& e) {
    return {false, std::nullopt, e.what()};
  }
}

}  // namespace mrbt
