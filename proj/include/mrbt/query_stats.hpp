#pragma once

#include <cstdint>

namespace mrbt {

/// Machine-independent work counters collected by every query path. Counter
/// columns are deterministic for a fixed seed; only wall_ns varies between
/// runs.
struct QueryStats {
  std::uint64_t blocks_checked = 0;   // block header summaries examined
  std::uint64_t level_checks = 0;     // skip-index level summaries examined
  std::uint64_t nodes_visited_internal = 0;
  std::uint64_t nodes_visited_leaf = 0;
  std::uint64_t bf_checks = 0;        // bloom membership evaluations
  std::uint64_t wall_ns = 0;

  std::uint64_t nodes_visited() const { return nodes_visited_internal + nodes_visited_leaf; }
  std::uint64_t summary_checks() const { return blocks_checked + level_checks; }

  void add_counters(const QueryStats& o) {
    blocks_checked += o.blocks_checked;
    level_checks += o.level_checks;
    nodes_visited_internal += o.nodes_visited_internal;
    nodes_visited_leaf += o.nodes_visited_leaf;
    bf_checks += o.bf_checks;
  }
};

}  // namespace mrbt
