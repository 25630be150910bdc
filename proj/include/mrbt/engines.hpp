#pragma once

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mrbt/chain.hpp"
#include "mrbt/skip_index.hpp"

namespace mrbt {

/// The query paths under comparison. All of them return the same matches for
/// the same query; they differ only in how much work they do.
enum class Engine {
  linear,          // exact scan of every record (oracle/baseline)
  header_scan,     // per-block header summaries, no skip index
  skip,            // skip-index cursor over block summaries
  intra,           // per-block tree query on every block, full pruning
  intra_no_bloom,  // per-block tree query with bloom pruning disabled
};

inline const char* engine_name(Engine e) {
  switch (e) {
    case Engine::linear: return "linear";
    case Engine::header_scan: return "header";
    case Engine::skip: return "skip";
    case Engine::intra: return "intra";
    case Engine::intra_no_bloom: return "intra_nobloom";
  }
  return "?";
}

inline std::optional<Engine> parse_engine(std::string_view name) {
  if (name == "linear") return Engine::linear;
  if (name == "header") return Engine::header_scan;
  if (name == "skip") return Engine::skip;
  if (name == "intra") return Engine::intra;
  if (name == "intra_nobloom") return Engine::intra_no_bloom;
  return std::nullopt;
}

inline std::vector<Match> run_query(const Chain& chain, const SkipIndex* index, const Query& q,
                                    Engine engine, QueryStats* stats = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Match> out;
  switch (engine) {
    case Engine::linear:
      out = chain.linear_scan(q, stats);
      break;
    case Engine::header_scan:
      out = chain.header_scan_query(q, stats);
      break;
    case Engine::skip:
      if (!index) throw std::invalid_argument("skip engine requires an index");
      out = index->query(chain, q, stats);
      break;
    case Engine::intra:
    case Engine::intra_no_bloom: {
      MerkleRbTree::QueryOptions opts;
      opts.bloom_prune = engine == Engine::intra;
      validate_query(chain.schema(), q);
      for (const auto& blk : chain.blocks()) {
        if (stats) ++stats->blocks_checked;
        for (std::uint32_t idx : blk.tree.query(q, stats, opts))
          out.push_back({blk.header.height, idx});
      }
      break;
    }
  }
  if (stats) {
    stats->wall_ns += static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() -
                                                             t0)
            .count());
  }
  return out;
}

}  // namespace mrbt
