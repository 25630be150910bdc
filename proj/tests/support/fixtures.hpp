#pragma once

// Shared randomized fixtures for the unit and acceptance suites. Everything
// is seed-deterministic.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mrbt/chain.hpp"
#include "mrbt/metadata.hpp"

namespace fixtures {

inline double next_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline mrbt::Schema two_dim_schema() { return mrbt::Schema{{"x", "y"}, {"city", "kind"}}; }

/// The four-record fixture used across the discrete/range examples.
inline std::vector<mrbt::MetadataRecord> employee_fixture() {
  return {
      {"a", {2018, 34}, {{"city", "Pune"}}},
      {"b", {2015, 28}, {{"city", "Bangalore"}}},
      {"c", {2017, 30}, {{"city", "Pune"}}},
      {"d", {2012, 25}, {{"city", "NewDelhi"}}},
  };
}

inline mrbt::Schema employee_schema() { return mrbt::Schema{{"year", "age"}, {"city"}}; }

inline std::vector<std::string> city_pool() {
  return {"Pune", "Bangalore", "NewDelhi", "Chennai", "Mumbai", "Kolkata", "Jaipur", "Kochi"};
}

/// Random record in [0,10]^2 with cities from a small pool; sometimes the
/// second attribute is absent, sometimes coordinates repeat an earlier
/// record (duplicates are legal and index-disambiguated).
inline mrbt::MetadataRecord random_record(std::mt19937_64& rng,
                                          const std::vector<mrbt::MetadataRecord>& prior,
                                          std::uint64_t serial) {
  const auto cities = city_pool();
  mrbt::MetadataRecord rec;
  rec.owner_id = "o" + std::to_string(serial);
  if (!prior.empty() && rng() % 16 == 0) {
    rec.continuous = prior[rng() % prior.size()].continuous;
  } else {
    rec.continuous = {next_unit(rng) * 10.0, next_unit(rng) * 10.0};
  }
  rec.discrete.emplace("city", cities[rng() % cities.size()]);
  if (rng() % 3 != 0) rec.discrete.emplace("kind", rng() % 2 ? "image" : "text");
  return rec;
}

inline std::vector<mrbt::MetadataRecord> random_records(std::mt19937_64& rng, std::size_t n) {
  std::vector<mrbt::MetadataRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_record(rng, out, i));
  return out;
}

/// Random conjunctive query against two_dim_schema(): each dimension is
/// constrained with probability ~1/2 (occasionally degenerate), discrete
/// conditions sometimes name values absent from the data.
inline mrbt::Query random_query(std::mt19937_64& rng) {
  const auto cities = city_pool();
  mrbt::Query q;
  q.ranges.resize(2);
  bool any = false;
  for (std::size_t dim = 0; dim < 2; ++dim) {
    if (rng() % 2 == 0) continue;
    double a = next_unit(rng) * 10.0;
    double b = rng() % 8 == 0 ? a : next_unit(rng) * 10.0;
    if (b < a) std::swap(a, b);
    q.ranges[dim] = mrbt::Interval{a, b};
    any = true;
  }
  const std::uint64_t pick = rng() % 4;
  if (!any || pick != 0) {
    switch (pick) {
      case 1:
        q.discrete_conds.emplace_back("kind", rng() % 2 ? "image" : "text");
        break;
      case 2:
        q.discrete_conds.emplace_back("city", "Atlantis");  // matches nothing
        break;
      default:
        q.discrete_conds.emplace_back("city", cities[rng() % cities.size()]);
        break;
    }
  }
  return q;
}

inline mrbt::Chain random_chain(std::mt19937_64& rng, std::size_t blocks,
                                std::uint32_t block_size, mrbt::TreeConfig cfg = {}) {
  mrbt::Chain chain(two_dim_schema(), cfg);
  std::uint64_t serial = 0;
  for (std::size_t b = 0; b < blocks; ++b) {
    std::vector<mrbt::MetadataRecord> records;
    const std::size_t n = 1 + rng() % block_size;
    records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) records.push_back(random_record(rng, records, serial++));
    chain.append_block(std::move(records));
  }
  return chain;
}

/// Exhaustive oracle: exact linear filter over explicit records.
inline std::vector<std::uint32_t> brute_force(const std::vector<mrbt::MetadataRecord>& records,
                                              const mrbt::Query& q) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < records.size(); ++i) {
    if (mrbt::matches(q, records[i])) out.push_back(i);
  }
  return out;
}

}  // namespace fixtures
