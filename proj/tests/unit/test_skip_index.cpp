#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <random>

#include "mrbt/skip_index.hpp"

#include "../support/fixtures.hpp"

using namespace mrbt;

namespace {

Chain chain_with_unique_city_per_block(std::mt19937_64& rng, std::size_t blocks,
                                       std::size_t block_size) {
  Chain chain(fixtures::two_dim_schema(), {});
  std::uint64_t serial = 0;
  for (std::size_t b = 0; b < blocks; ++b) {
    std::vector<MetadataRecord> records;
    for (std::size_t i = 0; i < block_size; ++i) {
      auto rec = fixtures::random_record(rng, records, serial++);
      rec.discrete["city"] = "block-" + std::to_string(b);
      records.push_back(std::move(rec));
    }
    chain.append_block(std::move(records));
  }
  return chain;
}

Query city_only(const std::string& city) {
  Query q;
  q.ranges.resize(2);
  q.discrete_conds.emplace_back("city", city);
  return q;
}

}  // namespace

TEST_CASE("level spans and summaries match a direct fold") {
  std::mt19937_64 rng(31);
  const Chain chain = fixtures::random_chain(rng, 8, 6);
  const SkipIndex index = SkipIndex::build(chain, 2);

  // 8 blocks, alpha=2: block 0 carries levels 0..2 with spans [0,1],[0,2],[0,4]
  const auto& lv = index.levels_at(0);
  REQUIRE(lv.size() == 3);
  CHECK(lv[0].span_begin == 0);
  CHECK(lv[0].span_end == 1);
  CHECK(lv[1].span_end == 2);
  CHECK(lv[2].span_end == 4);

  // level-2 filter equals the OR of block filters 0..4
  BloomFilter expect = chain.block(0).header.block_bf;
  Mbr expect_mbr = chain.block(0).header.block_mbr;
  for (std::uint64_t h = 1; h <= 4; ++h) {
    expect.union_with(chain.block(h).header.block_bf);
    expect_mbr.expand(chain.block(h).header.block_mbr);
  }
  CHECK(lv[2].bf == expect);
  CHECK(lv[2].mbr == expect_mbr);

  // the tip has nothing ahead to summarize
  CHECK(index.levels_at(7).empty());

  // span nesting: each level absorbs the one below it
  for (std::uint64_t b = 0; b < chain.size(); ++b) {
    const auto& levels = index.levels_at(b);
    for (std::size_t i = 1; i < levels.size(); ++i) {
      CHECK(levels[i].mbr.contains(levels[i - 1].mbr));
      for (std::uint64_t bit = 0; bit < levels[i - 1].bf.bit_count(); ++bit) {
        if (levels[i - 1].bf.bit(bit)) {
          CHECK(levels[i].bf.bit(bit));
        }
      }
    }
  }
}

TEST_CASE("single-block chain has no levels") {
  std::mt19937_64 rng(32);
  const Chain chain = fixtures::random_chain(rng, 1, 6);
  const SkipIndex index = SkipIndex::build(chain, 2);
  CHECK(index.levels_at(0).empty());
}

TEST_CASE("alpha below 2 is rejected") {
  std::mt19937_64 rng(33);
  const Chain chain = fixtures::random_chain(rng, 3, 4);
  CHECK_THROWS_AS(SkipIndex::build(chain, 1), std::invalid_argument);
}

TEST_CASE("inter query equals linear scan across alphas") {
  std::mt19937_64 rng(34);
  for (std::uint32_t alpha : {2u, 3u, 4u}) {
    const Chain chain = fixtures::random_chain(rng, 30 + rng() % 40, 8);
    const SkipIndex index = SkipIndex::build(chain, alpha);
    for (int t = 0; t < 40; ++t) {
      const Query q = fixtures::random_query(rng);
      CHECK(index.query(chain, q) == chain.linear_scan(q));
    }
  }
}

TEST_CASE("no false negatives at any level") {
  std::mt19937_64 rng(35);
  const Chain chain = fixtures::random_chain(rng, 24, 8);
  const SkipIndex index = SkipIndex::build(chain, 2);
  for (std::uint64_t b = 0; b < chain.size(); ++b) {
    for (const auto& lvl : index.levels_at(b)) {
      for (std::uint64_t h = lvl.span_begin; h <= lvl.span_end; ++h) {
        for (const auto& rec : chain.block(h).records()) {
          for (const auto& [attr, value] : rec.discrete)
            CHECK(lvl.bf.contains(discrete_key(attr, value)));
          CHECK(lvl.mbr.contains_point(rec.continuous));
        }
      }
    }
  }
}

TEST_CASE("stale index is rejected and rebuild_check notices divergence") {
  std::mt19937_64 rng(36);
  Chain chain = fixtures::random_chain(rng, 10, 6);
  const SkipIndex index = SkipIndex::build(chain, 2);
  CHECK(index.rebuild_check(chain));

  chain.append_block(fixtures::random_records(rng, 5));
  chain.append_block(fixtures::random_records(rng, 5));
  CHECK_FALSE(index.rebuild_check(chain));  // built at tip 9, chain grown
  CHECK_THROWS_AS(index.query(chain, city_only("Pune")), std::runtime_error);

  // shrink one level's MBR: bit-exact recomputation must notice
  auto levels = std::vector<std::vector<SkipLevel>>{};
  const SkipIndex fresh = SkipIndex::build(chain, 2);
  for (std::uint64_t b = 0; b < chain.size(); ++b) levels.push_back(fresh.levels_at(b));
  auto lows = levels[0][1].mbr.lows();
  auto highs = levels[0][1].mbr.highs();
  highs[0] = lows[0];  // collapse
  levels[0][1].mbr = Mbr(lows, highs);
  const SkipIndex tampered =
      SkipIndex::from_parts(2, fresh.block_count(), fresh.tip_digest(), std::move(levels));
  CHECK_FALSE(tampered.rebuild_check(chain));
}

TEST_CASE("incremental append update equals a full rebuild") {
  std::mt19937_64 rng(37);
  Chain chain = fixtures::random_chain(rng, 5, 6);
  SkipIndex index = SkipIndex::build(chain, 2);
  for (int step = 0; step < 9; ++step) {
    chain.append_block(fixtures::random_records(rng, 4 + rng() % 5));
    index.update_for_append(chain);
    const SkipIndex fresh = SkipIndex::build(chain, 2);
    CHECK(index == fresh);
    CHECK(index.rebuild_check(chain));
  }
  for (std::uint32_t alpha : {3u, 4u}) {
    SkipIndex idx = SkipIndex::build(chain, alpha);
    chain.append_block(fixtures::random_records(rng, 3));
    idx.update_for_append(chain);
    CHECK(idx == SkipIndex::build(chain, alpha));
  }
}

TEST_CASE("match in the last of 64 blocks needs only logarithmic probes") {
  std::mt19937_64 rng(38);
  const Chain chain = chain_with_unique_city_per_block(rng, 64, 6);
  const SkipIndex index = SkipIndex::build(chain, 2);
  QueryStats st;
  const auto res = index.query(chain, city_only("block-63"), &st);
  CHECK(res.size() == 6);
  // cursor positions are bounded by ~2*log2(n) + a small descent constant
  CHECK(st.blocks_checked <= 2 * 6 + 4);
  QueryStats header_st;
  chain.header_scan_query(city_only("block-63"), &header_st);
  CHECK(header_st.blocks_checked == 64);
}

TEST_CASE("no match anywhere advances by the largest spans") {
  std::mt19937_64 rng(39);
  const Chain chain = chain_with_unique_city_per_block(rng, 64, 4);
  const SkipIndex index = SkipIndex::build(chain, 2);
  QueryStats st;
  const auto res = index.query(chain, city_only("nowhere"), &st);
  CHECK(res.empty());
  // each jump region costs O(log n) level checks
  CHECK(st.blocks_checked <= 10);
  CHECK(st.level_checks <= 64);
}

TEST_CASE("summary checks stay within the alpha-log bound for a single match") {
  std::mt19937_64 rng(40);
  for (std::uint32_t alpha : {2u, 3u, 4u}) {
    for (std::size_t blocks : {27u, 81u, 200u}) {
      const Chain chain = chain_with_unique_city_per_block(rng, blocks, 3);
      const SkipIndex index = SkipIndex::build(chain, alpha);
      // worst placement: the match sits at the tip
      QueryStats st;
      index.query(chain, city_only("block-" + std::to_string(blocks - 1)), &st);
      const double bound =
          4.0 * alpha * (std::log(static_cast<double>(blocks)) / std::log(alpha)) + 8.0;
      CHECK(static_cast<double>(st.summary_checks()) <= bound);
    }
  }
}

TEST_CASE("every block matching degrades gracefully to a full walk") {
  std::mt19937_64 rng(41);
  Chain chain(fixtures::two_dim_schema(), {});
  for (int b = 0; b < 20; ++b) {
    auto records = fixtures::random_records(rng, 5);
    for (auto& r : records) r.discrete["city"] = "Everywhere";
    chain.append_block(std::move(records));
  }
  const SkipIndex index = SkipIndex::build(chain, 2);
  const Query q = city_only("Everywhere");
  CHECK(index.query(chain, q) == chain.linear_scan(q));
}

TEST_CASE("index files round-trip") {
  std::mt19937_64 rng(42);
  const Chain chain = fixtures::random_chain(rng, 16, 6);
  const SkipIndex index = SkipIndex::build(chain, 3);
  const auto path = std::filesystem::temp_directory_path() / "mrbt_test_index.idx";
  const Digest fake_chain_digest = sha256(std::string_view{"chain-bytes"});
  save_index(index, fake_chain_digest, chain.schema().dims(), chain.config().bloom_bits,
             chain.config().bloom_hashes, path);
  const StoredIndex loaded = load_index(path);
  CHECK(loaded.chain_file_digest == fake_chain_digest);
  CHECK(loaded.index == index);
  CHECK(loaded.index.rebuild_check(chain));
  std::filesystem::remove(path);
}
