#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace mrbt {

/// Inputs of the analytic query-cost predictors. The model assumes uniform
/// data in the space [0, s^(1/d)]^d and equally sized nodes per level; the
/// validators in the test suite quantify how far real trees deviate.
struct CostParams {
  std::uint32_t dims = 2;              // d
  double leaf_fanout = 4;              // average leaf fan-out d_f
  double internal_fanout = 4;          // average internal fan-out d_l
  double block_txs = 64;               // transactions per block N_block
  double space_volume = 1.0;           // s
  std::vector<double> query_lengths;   // per-dimension query side lengths
  double node_access_cost = 1.0;       // C_access
  double bf_check_cost = 1.0;          // C_BF
  double theta = 1.0;                  // occurrences of the discrete value in a block
  std::optional<double> pruning_survival;  // f_n; defaults to theta / block_txs

  void validate() const {
    if (dims == 0) throw std::invalid_argument("cost params: dims must be >= 1");
    if (leaf_fanout < 2 || internal_fanout < 2)
      throw std::invalid_argument("cost params: fanouts must be >= 2");
    if (block_txs < leaf_fanout)
      throw std::invalid_argument("cost params: block txs must be >= leaf fanout");
    if (space_volume <= 0) throw std::invalid_argument("cost params: space volume must be > 0");
    if (query_lengths.size() != dims)
      throw std::invalid_argument("cost params: one query length per dimension required");
    for (double q : query_lengths)
      if (q < 0) throw std::invalid_argument("cost params: negative query length");
    if (theta < 0 || theta > block_txs)
      throw std::invalid_argument("cost params: theta must be in [0, block txs]");
  }
};

/// Probability that two rectangles with the given per-dimension side lengths
/// overlap when placed uniformly in the unit space. Per dimension the
/// probability is min(1, len1 + len2); dimensions are independent, so the
/// product form matches a Monte Carlo placement oracle even when one
/// dimension saturates.
inline double p_overlap(std::span<const double> r1_lengths, std::span<const double> r2_lengths) {
  if (r1_lengths.size() != r2_lengths.size())
    throw std::invalid_argument("p_overlap: dimension mismatch");
  double p = 1.0;
  for (std::size_t i = 0; i < r1_lengths.size(); ++i) {
    if (r1_lengths[i] < 0 || r2_lengths[i] < 0)
      throw std::invalid_argument("p_overlap: negative length");
    p *= std::min(1.0, r1_lengths[i] + r2_lengths[i]);
  }
  return p;
}

/// The height expression as printed: 1 + log_{d_l}(s * d_f / N_block),
/// real-valued. It is self-consistent only when s * d_f / N_block equals the
/// leaf count N_block / d_f; compare with a built tree via
/// MerkleRbTree::height().
inline double tree_height(const CostParams& p) {
  p.validate();
  return 1.0 + std::log(p.space_volume * p.leaf_fanout / p.block_txs) /
                   std::log(p.internal_fanout);
}

/// Integer height of a packed tree: leaves = ceil(N/d_f), then parents in
/// groups of d_l until a single root remains. This is what bulk loading
/// produces and what the level sums below use for h.
inline int effective_height(const CostParams& p) {
  p.validate();
  double nodes = std::ceil(p.block_txs / p.leaf_fanout);
  int h = 1;
  while (nodes > 1.0) {
    nodes = std::ceil(nodes / p.internal_fanout);
    ++h;
  }
  return h;
}

/// Expected node accesses N_q of a range query: the leaf term
/// d_f * prod_i((s*d_f/N)^(1/d) + q_i) plus, for each internal level j from
/// the root down, d_l^j * prod_i((s/d_l^j)^(1/d) + q_i).
inline double expected_nodes(const CostParams& p) {
  p.validate();
  const double d = static_cast<double>(p.dims);
  const double leaf_side = std::pow(p.space_volume * p.leaf_fanout / p.block_txs, 1.0 / d);
  double leaf_prod = 1.0;
  for (double q : p.query_lengths) leaf_prod *= leaf_side + q;
  double total = p.leaf_fanout * leaf_prod;

  const int h = effective_height(p);
  for (int j = 0; j <= h - 2; ++j) {
    const double level_nodes = std::pow(p.internal_fanout, j);
    const double side = std::pow(p.space_volume / level_nodes, 1.0 / d);
    double prod = 1.0;
    for (double q : p.query_lengths) prod *= side + q;
    total += level_nodes * prod;
  }
  return total;
}

inline double cost_range(const CostParams& p) { return p.node_access_cost * expected_nodes(p); }

/// Probability that a block-level bloom filter passes a discrete condition
/// occurring theta times among N_block transactions.
inline double p_bf(double theta, double block_txs) {
  if (block_txs <= 0) throw std::invalid_argument("p_bf: block txs must be positive");
  if (theta < 0 || theta > block_txs)
    throw std::invalid_argument("p_bf: theta must be in [0, block txs]");
  return theta / block_txs;
}

inline double pruning_survival(const CostParams& p) {
  return p.pruning_survival ? *p.pruning_survival : p_bf(p.theta, p.block_txs);
}

/// Discrete-condition cost: C_BF * (d_f/N + sum_{j=0}^{h-2} d_l^j * d_f *
/// f_n^{h-2-j} / N).
inline double cost_discrete(const CostParams& p) {
  p.validate();
  const double fn = pruning_survival(p);
  const int h = effective_height(p);
  double sum = p.leaf_fanout / p.block_txs;
  for (int j = 0; j <= h - 2; ++j) {
    sum += std::pow(p.internal_fanout, j) * p.leaf_fanout * std::pow(fn, h - 2 - j) /
           p.block_txs;
  }
  return p.bf_check_cost * sum;
}

/// Combined mixed-query cost: C_access * (d_f/N) * prod_i(leaf_side + q_i)
/// + sum_{j=0}^{h-2} d_l^j * prod_i((s/d_l^j)^(1/d) + q_i) * d_f *
/// f_n^{h-2-j} / N, evaluated verbatim.
inline double cost_total(const CostParams& p) {
  p.validate();
  const double d = static_cast<double>(p.dims);
  const double fn = pruning_survival(p);
  const int h = effective_height(p);
  const double leaf_side = std::pow(p.space_volume * p.leaf_fanout / p.block_txs, 1.0 / d);
  double leaf_prod = 1.0;
  for (double q : p.query_lengths) leaf_prod *= leaf_side + q;
  double total = p.node_access_cost * (p.leaf_fanout / p.block_txs) * leaf_prod;
  for (int j = 0; j <= h - 2; ++j) {
    const double level_nodes = std::pow(p.internal_fanout, j);
    const double side = std::pow(p.space_volume / level_nodes, 1.0 / d);
    double prod = 1.0;
    for (double q : p.query_lengths) prod *= side + q;
    total += level_nodes * prod * p.leaf_fanout * std::pow(fn, h - 2 - j) / p.block_txs;
  }
  return total;
}

}  // namespace mrbt
