// mrbt: build, query, verify and benchmark authenticated multi-dimensional
// metadata chains.
//
// Exit codes: 0 success, 1 verification failure, 2 usage error.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mrbt/mrbt.hpp"

namespace {

constexpr const char* kChainEnvVar = "MRBT_CHAIN";

std::filesystem::path index_path_for(const std::filesystem::path& chain_path) {
  auto p = chain_path;
  p += ".idx";
  return p;
}

std::string default_chain_path() {
  const char* env = std::getenv(kChainEnvVar);
  return env ? std::string(env) : std::string();
}

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  return out;
}

struct QueryFlags {
  std::vector<std::string> ranges;  // name=lo..hi
  std::vector<std::string> eqs;     // name=value
};

mrbt::Query parse_query_flags(const mrbt::Schema& schema, const QueryFlags& flags) {
  mrbt::Query q;
  q.ranges.resize(schema.dims());
  for (const auto& spec : flags.ranges) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--range", "expected name=lo..hi: " + spec);
    const std::string name = spec.substr(0, eq);
    const std::string body = spec.substr(eq + 1);
    const auto dots = body.find("..");
    if (dots == std::string::npos)
      throw CLI::ValidationError("--range", "expected name=lo..hi: " + spec);
    const auto dim = schema.dim_index(name);
    if (!dim)
      throw CLI::ValidationError("--range", "unknown continuous dimension: " + name);
    try {
      const double lo = std::stod(body.substr(0, dots));
      const double hi = std::stod(body.substr(dots + 2));
      q.ranges[*dim] = mrbt::Interval{lo, hi};
    } catch (const std::exception&) {
      throw CLI::ValidationError("--range", "bad interval bounds: " + spec);
    }
  }
  for (const auto& spec : flags.eqs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--eq", "expected name=value: " + spec);
    q.discrete_conds.emplace_back(spec.substr(0, eq), spec.substr(eq + 1));
  }
  return q;
}

nlohmann::json record_json(const mrbt::Schema& schema, const mrbt::MetadataRecord& rec) {
  nlohmann::json attrs;
  for (std::size_t i = 0; i < schema.dims(); ++i)
    attrs[schema.continuous_dims[i]] = rec.continuous[i];
  for (const auto& [attr, value] : rec.discrete) attrs[attr] = value;
  return attrs;
}

int cmd_build(const std::string& out_path, std::optional<std::string> csv_path,
              const std::vector<std::string>& continuous_cols,
              const std::vector<std::string>& discrete_cols,
              std::optional<std::string> id_col, std::uint64_t synthetic_n,
              std::uint32_t synthetic_dims, const std::vector<std::string>& universe_flags,
              std::uint64_t seed, std::uint32_t block_size, std::uint32_t alpha,
              const mrbt::TreeConfig& tree) {
  std::vector<mrbt::MetadataRecord> records;
  mrbt::Schema schema;

  if (csv_path) {
    if (continuous_cols.empty()) {
      std::cerr << "build: --continuous is required with --csv\n";
      return 2;
    }
    schema.continuous_dims = continuous_cols;
    schema.discrete_attrs = discrete_cols;
    mrbt::CsvMapping mapping{continuous_cols, discrete_cols, id_col};
    const auto result = mrbt::parse_csv(*csv_path, mapping, schema);
    for (const auto& rej : result.rejects)
      std::cerr << "build: rejected line " << rej.line << ": " << rej.reason << "\n";
    records = result.records;
    if (records.empty()) {
      std::cerr << "build: no usable rows in " << *csv_path << "\n";
      return 1;
    }
  } else {
    for (std::uint32_t i = 0; i < synthetic_dims; ++i)
      schema.continuous_dims.push_back("dim" + std::to_string(i));
    std::vector<std::pair<std::string, std::vector<std::string>>> universe;
    for (const auto& u : universe_flags) {
      const auto eq = u.find('=');
      if (eq == std::string::npos) {
        std::cerr << "build: --universe expects attr=v1,v2,...\n";
        return 2;
      }
      universe.emplace_back(u.substr(0, eq), split_list(u.substr(eq + 1)));
      schema.discrete_attrs.push_back(u.substr(0, eq));
    }
    records = mrbt::gen_uniform(synthetic_n, seed, mrbt::unit_space(synthetic_dims), universe);
  }

  mrbt::Chain chain(schema, tree);
  for (std::size_t i = 0; i < records.size(); i += block_size) {
    const std::size_t end = std::min(records.size(), i + block_size);
    chain.append_block({records.begin() + static_cast<std::ptrdiff_t>(i),
                        records.begin() + static_cast<std::ptrdiff_t>(end)});
  }
  mrbt::save_chain(chain, out_path);

  const mrbt::SkipIndex index = mrbt::SkipIndex::build(chain, alpha);
  mrbt::save_index(index, mrbt::file_digest(out_path), schema.dims(), tree.bloom_bits,
                   tree.bloom_hashes, index_path_for(out_path));

  std::cout << "blocks: " << chain.size() << "\n";
  std::cout << "records: " << records.size() << "\n";
  std::cout << "tip: " << mrbt::to_hex(chain.tip_digest()) << "\n";
  return 0;
}

int cmd_query(const std::string& chain_path, const QueryFlags& flags,
              const std::string& engine_name) {
  const auto engine = mrbt::parse_engine(engine_name);
  if (!engine) {
    std::cerr << "query: unknown engine: " << engine_name << "\n";
    return 2;
  }
  const mrbt::Chain chain = mrbt::load_chain(chain_path);
  mrbt::Query q;
  try {
    q = parse_query_flags(chain.schema(), flags);
    mrbt::validate_query(chain.schema(), q);
  } catch (const std::exception& e) {
    std::cerr << "query: " << e.what() << "\n";
    return 2;
  }

  std::optional<mrbt::SkipIndex> index;
  if (*engine == mrbt::Engine::skip) {
    const mrbt::Digest current = mrbt::file_digest(chain_path);
    const auto idx_path = index_path_for(chain_path);
    bool fresh = false;
    std::uint32_t alpha = 2;
    if (std::filesystem::exists(idx_path)) {
      try {
        auto stored = mrbt::load_index(idx_path);
        alpha = stored.index.alpha();
        if (stored.chain_file_digest == current && stored.index.matches_chain(chain)) {
          index = std::move(stored.index);
          fresh = true;
        }
      } catch (const std::exception&) {
        // unreadable index file; rebuild below
      }
    }
    if (!fresh) {
      index = mrbt::SkipIndex::build(chain, alpha);
      mrbt::save_index(*index, current, chain.schema().dims(), chain.config().bloom_bits,
                       chain.config().bloom_hashes, idx_path);
      std::cerr << "query: skip index rebuilt (stale or missing)\n";
    }
  }

  mrbt::QueryStats stats;
  const auto matches =
      mrbt::run_query(chain, index ? &*index : nullptr, q, *engine, &stats);
  for (const auto& m : matches) {
    const auto& rec = chain.block(m.height).records()[m.index];
    nlohmann::json line;
    line["height"] = m.height;
    line["index"] = m.index;
    line["owner_id"] = rec.owner_id;
    line["attrs"] = record_json(chain.schema(), rec);
    std::cout << line.dump() << "\n";
  }
  nlohmann::json stats_line;
  stats_line["blocks_checked"] = stats.blocks_checked;
  stats_line["nodes_visited"] = stats.nodes_visited();
  stats_line["bf_checks"] = stats.bf_checks;
  stats_line["wall_ns"] = stats.wall_ns;
  std::cout << stats_line.dump() << "\n";
  return 0;
}

int cmd_verify(const std::string& chain_path) {
  const auto result = mrbt::verify_chain_file(chain_path);
  if (!result.ok) {
    if (result.first_bad_height)
      std::cerr << "verify: FAILED at block " << *result.first_bad_height << ": "
                << result.message << "\n";
    else
      std::cerr << "verify: FAILED: " << result.message << "\n";
    return 1;
  }
  std::cout << result.message << "\n";

  const auto idx_path = index_path_for(chain_path);
  if (std::filesystem::exists(idx_path)) {
    try {
      const auto stored = mrbt::load_index(idx_path);
      if (stored.chain_file_digest != mrbt::file_digest(chain_path)) {
        std::cerr << "verify: FAILED: skip index is stale (chain file digest mismatch)\n";
        return 1;
      }
      const mrbt::Chain chain = mrbt::load_chain(chain_path);
      if (!stored.index.rebuild_check(chain)) {
        std::cerr << "verify: FAILED: skip index does not match header recomputation\n";
        return 1;
      }
      std::cout << "skip index verified: alpha=" << stored.index.alpha() << "\n";
    } catch (const std::exception& e) {
      std::cerr << "verify: FAILED: index: " << e.what() << "\n";
      return 1;
    }
  }
  return 0;
}

int cmd_bench(const mrbt::bench::BenchSpec& spec, const std::string& out_csv) {
  std::ofstream out(out_csv);
  if (!out) {
    std::cerr << "bench: cannot open " << out_csv << "\n";
    return 1;
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = mrbt::bench::run_bench(spec, &out);
  const auto secs =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0)
          .count() /
      1000.0;
  std::cout << "bench: " << rows.size() << " rows -> " << out_csv << " (" << secs << "s)\n";
  return 0;
}

int cmd_predict(const mrbt::CostParams& params, double r2_len, bool validate,
                std::uint64_t seed) {
  nlohmann::json out;
  std::vector<double> r2(params.dims, r2_len);
  out["p_overlap"] = mrbt::p_overlap(params.query_lengths, r2);
  out["tree_height_formula"] = mrbt::tree_height(params);
  out["tree_height_effective"] = mrbt::effective_height(params);
  out["expected_nodes"] = mrbt::expected_nodes(params);
  out["cost_range"] = mrbt::cost_range(params);
  out["p_bf"] = mrbt::p_bf(params.theta, params.block_txs);
  out["cost_discrete"] = mrbt::cost_discrete(params);
  out["cost_total"] = mrbt::cost_total(params);

  if (validate) {
    // Monte Carlo checks of the two assertable predictors.
    std::mt19937_64 rng(seed);
    auto next_unit = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    std::uint64_t overlaps = 0;
    const std::uint64_t samples = 1000000;
    for (std::uint64_t s = 0; s < samples; ++s) {
      bool all = true;
      for (std::uint32_t i = 0; i < params.dims; ++i) {
        const double gap = std::abs(next_unit() - next_unit());
        const double circ = std::min(gap, 1.0 - gap);
        if (circ > (params.query_lengths[i] + r2[i]) / 2.0) {
          all = false;
          break;
        }
      }
      if (all) ++overlaps;
    }
    out["p_overlap_measured"] = static_cast<double>(overlaps) / static_cast<double>(samples);

    const auto records = mrbt::gen_uniform(static_cast<std::size_t>(params.block_txs), seed,
                                           mrbt::unit_space(params.dims), {});
    mrbt::TreeConfig cfg;
    cfg.leaf_fanout = static_cast<std::uint32_t>(params.leaf_fanout);
    cfg.internal_fanout = static_cast<std::uint32_t>(params.internal_fanout);
    mrbt::Schema schema;
    for (std::uint32_t i = 0; i < params.dims; ++i)
      schema.continuous_dims.push_back("dim" + std::to_string(i));
    const auto tree = mrbt::MerkleRbTree::build(records, schema, cfg);
    out["tree_height_measured"] = tree.height();
    double nodes = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
      mrbt::Query q;
      q.ranges.resize(params.dims);
      for (std::uint32_t i = 0; i < params.dims; ++i) {
        const double side = params.query_lengths[i];
        const double lo = next_unit() * std::max(0.0, 1.0 - side);
        q.ranges[i] = mrbt::Interval{lo, lo + side};
      }
      const auto [internal, leaf] = tree.count_node_accesses(q);
      nodes += static_cast<double>(internal + leaf);
    }
    out["expected_nodes_measured"] = nodes / trials;
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Authenticated multi-dimensional metadata chain: build, query, verify, bench"};
  app.require_subcommand(1);

  // build
  auto* build = app.add_subcommand("build", "Build a chain file from CSV or synthetic data");
  std::string out_path = default_chain_path();
  std::string csv_path;
  std::vector<std::string> continuous_cols, discrete_cols, universe_flags;
  std::string id_col;
  std::uint64_t synthetic_n = 1000;
  std::uint32_t synthetic_dims = 2;
  std::uint64_t seed = 42;
  std::uint32_t block_size = 20;
  std::uint32_t alpha = 2;
  mrbt::TreeConfig tree;
  build->add_option("--out", out_path, "Chain file path (default: $MRBT_CHAIN)");
  build->add_option("--csv", csv_path, "CSV source file");
  build->add_option("--continuous", continuous_cols, "Continuous columns in dimension order");
  build->add_option("--discrete", discrete_cols, "Discrete columns");
  build->add_option("--id", id_col, "Owner id column (default: row index)");
  build->add_option("--synthetic", synthetic_n, "Generate N uniform records instead of CSV");
  build->add_option("--dims", synthetic_dims, "Synthetic dimension count");
  build->add_option("--universe", universe_flags,
                    "Synthetic discrete universe, attr=v1,v2,... (repeatable)");
  build->add_option("--seed", seed, "Synthetic generator seed");
  build->add_option("--block-size", block_size, "Records per block")->check(CLI::PositiveNumber);
  build->add_option("--alpha", alpha, "Skip index branching factor")->check(CLI::Range(2u, 64u));
  build->add_option("--leaf-fanout", tree.leaf_fanout, "Tree leaf fanout");
  build->add_option("--internal-fanout", tree.internal_fanout, "Tree internal fanout");
  build->add_option("--bloom-bits", tree.bloom_bits, "Bloom filter bits");
  build->add_option("--bloom-hashes", tree.bloom_hashes, "Bloom filter hash count");

  // query
  auto* query = app.add_subcommand("query", "Query a chain; NDJSON results + stats line");
  std::string q_chain = default_chain_path();
  std::string engine = "skip";
  QueryFlags qflags;
  query->add_option("--chain", q_chain, "Chain file (default: $MRBT_CHAIN)");
  query->add_option("--engine", engine, "linear | header | skip | intra | intra_nobloom");
  query->add_option("--range", qflags.ranges, "Range condition name=lo..hi (repeatable)");
  query->add_option("--eq", qflags.eqs, "Equality condition name=value (repeatable)");

  // verify
  auto* verify = app.add_subcommand("verify", "Verify a chain file and its skip index");
  std::string v_chain = default_chain_path();
  verify->add_option("--chain", v_chain, "Chain file (default: $MRBT_CHAIN)");

  // bench
  auto* bench = app.add_subcommand("bench", "Run the comparative benchmark matrix");
  mrbt::bench::BenchSpec spec;
  std::string bench_out = "bench.csv";
  std::vector<std::string> engine_names;
  std::string mix_flag = "all";
  bench->add_option("--out", bench_out, "Output CSV path");
  bench->add_option("--tx-totals", spec.tx_totals, "Transaction totals");
  bench->add_option("--block-sizes", spec.block_sizes, "Records per block");
  bench->add_option("--alpha", spec.alpha, "Skip index branching factor");
  bench->add_option("--queries", spec.query_count, "Queries per cell");
  bench->add_option("--seed", spec.seed, "Workload seed");
  bench->add_option("--engines", engine_names, "Engines to compare");
  bench->add_option("--mix", mix_flag, "discrete | range | mixed | all");
  bench->add_option("--threads", spec.threads, "Concurrent query workers");

  // predict
  auto* predict = app.add_subcommand("predict", "Evaluate the analytic cost model");
  mrbt::CostParams params;
  double r2_len = 0.0;
  bool validate_flag = false;
  params.query_lengths = {0.1, 0.1};
  predict->add_option("--dims", params.dims, "Dimensions d");
  predict->add_option("--leaf-fanout", params.leaf_fanout, "Leaf fanout d_f");
  predict->add_option("--internal-fanout", params.internal_fanout, "Internal fanout d_l");
  predict->add_option("--n-block", params.block_txs, "Transactions per block N_block");
  predict->add_option("--space-volume", params.space_volume, "Sample space volume s");
  predict->add_option("--q-len", params.query_lengths, "Query side length per dimension");
  predict->add_option("--r2-len", r2_len, "Second rectangle side length for p_overlap");
  predict->add_option("--c-access", params.node_access_cost, "Cost per node access");
  predict->add_option("--c-bf", params.bf_check_cost, "Cost per bloom check");
  predict->add_option("--theta", params.theta, "Occurrences of the discrete value per block");
  double fn = -1;
  predict->add_option("--fn", fn, "Pruning survival factor override");
  std::uint64_t predict_seed = 7;
  predict->add_option("--seed", predict_seed, "Validation seed");
  predict->add_flag("--validate", validate_flag, "Also run Monte Carlo validators");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (build->parsed()) {
      if (out_path.empty()) {
        std::cerr << "build: --out or $MRBT_CHAIN required\n";
        return 2;
      }
      return cmd_build(out_path,
                       csv_path.empty() ? std::nullopt : std::make_optional(csv_path),
                       continuous_cols, discrete_cols,
                       id_col.empty() ? std::nullopt : std::make_optional(id_col), synthetic_n,
                       synthetic_dims, universe_flags, seed, block_size, alpha, tree);
    }
    if (query->parsed()) {
      if (q_chain.empty()) {
        std::cerr << "query: --chain or $MRBT_CHAIN required\n";
        return 2;
      }
      return cmd_query(q_chain, qflags, engine);
    }
    if (verify->parsed()) {
      if (v_chain.empty()) {
        std::cerr << "verify: --chain or $MRBT_CHAIN required\n";
        return 2;
      }
      return cmd_verify(v_chain);
    }
    if (bench->parsed()) {
      if (!engine_names.empty()) {
        spec.engines.clear();
        for (const auto& name : engine_names) {
          const auto e = mrbt::parse_engine(name);
          if (!e) {
            std::cerr << "bench: unknown engine: " << name << "\n";
            return 2;
          }
          spec.engines.push_back(*e);
        }
      }
      if (mix_flag == "discrete") spec.mixes = {mrbt::bench::Mix::discrete_only};
      else if (mix_flag == "range") spec.mixes = {mrbt::bench::Mix::range_only};
      else if (mix_flag == "mixed") spec.mixes = {mrbt::bench::Mix::mixed};
      else if (mix_flag != "all") {
        std::cerr << "bench: unknown mix: " << mix_flag << "\n";
        return 2;
      }
      return cmd_bench(spec, bench_out);
    }
    if (predict->parsed()) {
      if (fn >= 0) params.pruning_survival = fn;
      if (params.query_lengths.size() != params.dims)
        params.query_lengths.assign(params.dims, params.query_lengths.empty()
                                                     ? 0.1
                                                     : params.query_lengths.front());
      return cmd_predict(params, r2_len, validate_flag, predict_seed);
    }
  } catch (const mrbt::ChainFormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
