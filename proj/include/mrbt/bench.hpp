#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "mrbt/chain.hpp"
#include "mrbt/engines.hpp"
#include "mrbt/ingest.hpp"
#include "mrbt/skip_index.hpp"

namespace mrbt::bench {

enum class Mix { discrete_only, range_only, mixed };

inline const char* mix_name(Mix m) {
  switch (m) {
    case Mix::discrete_only: return "discrete";
    case Mix::range_only: return "range";
    case Mix::mixed: return "mixed";
  }
  return "?";
}

/// Comparative-run matrix: one cell per (tx_total, block_size, engine, mix).
struct BenchSpec {
  std::vector<std::uint64_t> tx_totals = {3400, 3600, 3800, 4000, 4200, 4400};
  std::vector<std::uint32_t> block_sizes = {10, 20, 40};
  std::uint32_t alpha = 2;
  std::uint32_t query_count = 20;
  std::uint64_t seed = 42;
  std::vector<Mix> mixes = {Mix::discrete_only, Mix::range_only, Mix::mixed};
  std::vector<Engine> engines = {Engine::linear, Engine::header_scan, Engine::skip,
                                 Engine::intra, Engine::intra_no_bloom};
  TreeConfig tree;
  std::uint32_t threads = 1;

  void validate() const {
    if (tx_totals.empty() || block_sizes.empty() || mixes.empty() || engines.empty())
      throw std::invalid_argument("bench spec: empty list");
    if (query_count == 0) throw std::invalid_argument("bench spec: query count must be positive");
    if (alpha < 2) throw std::invalid_argument("bench spec: alpha must be >= 2");
  }
};

/// Synthetic chain shaped like the comparative experiments: two continuous
/// dimensions in the unit square with records sorted along dimension 0
/// before chunking (so blocks cover narrow slabs), one discrete attribute
/// drawn from a small common pool, and `rare_count` planted values that each
/// occur in about `rare_block_fraction` of the blocks (one record per
/// planted block). Queries for a planted value therefore match only a small
/// fraction of blocks.
struct ChainFixture {
  Chain chain;
  std::vector<std::string> rare_values;
  std::uint64_t seed = 0;
};

inline ChainFixture make_bench_chain(std::uint64_t tx_total, std::uint32_t block_size,
                                     const TreeConfig& tree, std::uint64_t seed,
                                     double rare_block_fraction = 0.02,
                                     std::uint32_t rare_count = 8,
                                     std::uint32_t common_pool = 30) {
  if (tx_total == 0 || block_size == 0)
    throw std::invalid_argument("bench chain: sizes must be positive");
  Schema schema{{"x", "y"}, {"city"}};
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  auto next_unit = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  std::vector<MetadataRecord> records;
  records.reserve(tx_total);
  for (std::uint64_t i = 0; i < tx_total; ++i) {
    MetadataRecord rec;
    rec.owner_id = "owner-" + std::to_string(i);
    rec.continuous = {next_unit(), next_unit()};
    rec.discrete.emplace("city", "city-" + std::to_string(rng() % common_pool));
    records.push_back(std::move(rec));
  }
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return a.continuous[0] < b.continuous[0];
  });

  const std::uint64_t block_count = (tx_total + block_size - 1) / block_size;
  ChainFixture fx{Chain(schema, tree), {}, seed};
  const auto planted_per_value = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(rare_block_fraction * static_cast<double>(block_count)));
  std::vector<std::uint32_t> plants_in_block(block_count, 0);
  for (std::uint32_t r = 0; r < rare_count; ++r) {
    const std::string value = "rare-" + std::to_string(r);
    fx.rare_values.push_back(value);
    for (std::uint64_t p = 0; p < planted_per_value; ++p) {
      const std::uint64_t b = rng() % block_count;
      const std::uint64_t base = b * block_size;
      const std::uint64_t in_block = std::min<std::uint64_t>(block_size, tx_total - base);
      if (plants_in_block[b] >= in_block) continue;  // block full of plants; drop this one
      records[base + plants_in_block[b]].discrete["city"] = value;
      ++plants_in_block[b];
    }
  }

  for (std::uint64_t b = 0; b < block_count; ++b) {
    const std::uint64_t base = b * block_size;
    const std::uint64_t end = std::min<std::uint64_t>(base + block_size, tx_total);
    fx.chain.append_block({records.begin() + static_cast<std::ptrdiff_t>(base),
                           records.begin() + static_cast<std::ptrdiff_t>(end)});
  }
  return fx;
}

/// Chain where every block holds exactly one record with the planted value
/// "needle" (first record of the block), for intra-block pruning
/// comparisons at a fixed per-block match rate of 1/block_size.
inline Chain make_needle_chain(std::uint64_t tx_total, std::uint32_t block_size,
                               const TreeConfig& tree, std::uint64_t seed,
                               std::uint32_t common_pool = 30) {
  Schema schema{{"x", "y"}, {"city"}};
  std::mt19937_64 rng(seed ^ 0x6a09e667f3bcc908ull);
  auto next_unit = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  Chain chain(schema, tree);
  const std::uint64_t block_count = (tx_total + block_size - 1) / block_size;
  for (std::uint64_t b = 0; b < block_count; ++b) {
    const std::uint64_t n = std::min<std::uint64_t>(block_size, tx_total - b * block_size);
    std::vector<MetadataRecord> records;
    records.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      MetadataRecord rec;
      rec.owner_id = "owner-" + std::to_string(b * block_size + i);
      rec.continuous = {next_unit(), next_unit()};
      rec.discrete.emplace("city", i == 0 ? std::string("needle")
                                          : "city-" + std::to_string(rng() % common_pool));
      records.push_back(std::move(rec));
    }
    chain.append_block(std::move(records));
  }
  return chain;
}

/// Deterministic query workload over a fixture. Discrete queries target the
/// planted rare values; range queries are thin slabs along dimension 0 (so
/// they intersect few block MBRs of the dimension-0-sorted fixture); mixed
/// queries combine both.
inline std::vector<Query> make_workload(const ChainFixture& fx, Mix mix, std::uint32_t count,
                                        std::uint64_t seed, double range_width = 0.02) {
  std::mt19937_64 rng(seed ^ 0xbb67ae8584caa73bull);
  auto next_unit = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<Query> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Query q;
    q.ranges.resize(2);
    const bool want_range = mix != Mix::discrete_only;
    const bool want_discrete = mix != Mix::range_only;
    if (want_range) {
      const double lo = next_unit() * (1.0 - range_width);
      q.ranges[0] = Interval{lo, lo + range_width};
      if (mix == Mix::mixed) {
        const double ylo = next_unit() * 0.6;
        q.ranges[1] = Interval{ylo, ylo + 0.4};
      }
    }
    if (want_discrete && !fx.rare_values.empty()) {
      q.discrete_conds.emplace_back("city", fx.rare_values[i % fx.rare_values.size()]);
    } else if (want_discrete) {
      q.discrete_conds.emplace_back("city", "city-" + std::to_string(rng() % 30));
    }
    out.push_back(std::move(q));
  }
  return out;
}

/// Aggregates for one (chain, workload, engine) cell. Counter means are
/// deterministic for a fixed seed; wall times are not.
struct CellStats {
  double mean_wall_ns = 0;
  double median_wall_ns = 0;
  double mean_blocks_checked = 0;
  double mean_level_checks = 0;
  double mean_nodes_visited = 0;
  double mean_bf_checks = 0;
  std::uint64_t result_records = 0;
  std::uint32_t queries = 0;
};

inline CellStats run_cell(const Chain& chain, const SkipIndex* index,
                          const std::vector<Query>& workload, Engine engine,
                          std::uint32_t threads = 1) {
  std::vector<QueryStats> stats(workload.size());
  std::vector<std::uint64_t> hits(workload.size(), 0);
  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      hits[i] = run_query(chain, index, workload[i], engine, &stats[i]).size();
    }
  };
  if (threads <= 1) {
    run_range(0, workload.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (workload.size() + threads - 1) / threads;
    for (std::uint32_t t = 0; t < threads; ++t) {
      const std::size_t begin = std::min<std::size_t>(t * chunk, workload.size());
      const std::size_t end = std::min<std::size_t>(begin + chunk, workload.size());
      if (begin < end) pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  CellStats out;
  out.queries = static_cast<std::uint32_t>(workload.size());
  std::vector<double> walls;
  walls.reserve(stats.size());
  for (std::size_t i = 0; i < stats.size(); ++i) {
    out.mean_wall_ns += static_cast<double>(stats[i].wall_ns);
    out.mean_blocks_checked += static_cast<double>(stats[i].blocks_checked);
    out.mean_level_checks += static_cast<double>(stats[i].level_checks);
    out.mean_nodes_visited += static_cast<double>(stats[i].nodes_visited());
    out.mean_bf_checks += static_cast<double>(stats[i].bf_checks);
    out.result_records += hits[i];
    walls.push_back(static_cast<double>(stats[i].wall_ns));
  }
  const double n = static_cast<double>(stats.size());
  out.mean_wall_ns /= n;
  out.mean_blocks_checked /= n;
  out.mean_level_checks /= n;
  out.mean_nodes_visited /= n;
  out.mean_bf_checks /= n;
  std::sort(walls.begin(), walls.end());
  out.median_wall_ns = walls.empty() ? 0 : walls[walls.size() / 2];
  return out;
}

inline constexpr const char* kBenchCsvHeader =
    "tx_total,block_size,alpha,mix,engine,queries,result_records,mean_wall_ns,"
    "median_wall_ns,mean_blocks_checked,mean_level_checks,mean_nodes_visited,mean_bf_checks";

struct BenchRow {
  std::uint64_t tx_total;
  std::uint32_t block_size;
  std::uint32_t alpha;
  Mix mix;
  Engine engine;
  CellStats stats;
};

inline void write_csv_row(std::ostream& os, const BenchRow& row) {
  os << row.tx_total << ',' << row.block_size << ',' << row.alpha << ',' << mix_name(row.mix)
     << ',' << engine_name(row.engine) << ',' << row.stats.queries << ','
     << row.stats.result_records << ',' << row.stats.mean_wall_ns << ','
     << row.stats.median_wall_ns << ',' << row.stats.mean_blocks_checked << ','
     << row.stats.mean_level_checks << ',' << row.stats.mean_nodes_visited << ','
     << row.stats.mean_bf_checks << '\n';
}

/// Runs the whole matrix. Engines disagreeing on any query is a hard error:
/// every bench run doubles as an equivalence check against the linear scan.
inline std::vector<BenchRow> run_bench(const BenchSpec& spec, std::ostream* csv = nullptr) {
  spec.validate();
  if (csv) *csv << kBenchCsvHeader << '\n';
  std::vector<BenchRow> rows;
  for (std::uint64_t tx_total : spec.tx_totals) {
    for (std::uint32_t block_size : spec.block_sizes) {
      const ChainFixture fx =
          make_bench_chain(tx_total, block_size, spec.tree, spec.seed + tx_total + block_size);
      const SkipIndex index = SkipIndex::build(fx.chain, spec.alpha);
      for (Mix mix : spec.mixes) {
        const auto workload =
            make_workload(fx, mix, spec.query_count, spec.seed + static_cast<int>(mix));
        // cross-engine agreement on every query
        for (const auto& q : workload) {
          const auto expect = fx.chain.linear_scan(q);
          for (Engine e : spec.engines) {
            if (run_query(fx.chain, &index, q, e) != expect)
              throw std::logic_error("bench: engine disagreement detected");
          }
        }
        for (Engine engine : spec.engines) {
          BenchRow row{tx_total, block_size, spec.alpha, mix, engine,
                       run_cell(fx.chain, &index, workload, engine, spec.threads)};
          if (csv) write_csv_row(*csv, row);
          rows.push_back(row);
        }
      }
    }
  }
  return rows;
}

}  // namespace mrbt::bench
