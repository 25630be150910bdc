#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mrbt/geometry.hpp"

namespace mrbt {

/// Column layout shared by every record, block and query of one chain.
/// Continuous dimensions are ordered; their order fixes coordinate meaning
/// and the canonical encoding. Names must be unique, non-empty and free of
/// '=' (the discrete-key separator).
struct Schema {
  std::vector<std::string> continuous_dims;
  std::vector<std::string> discrete_attrs;

  std::size_t dims() const { return continuous_dims.size(); }

  void validate() const {
    std::set<std::string_view> seen;
    for (const auto* list : {&continuous_dims, &discrete_attrs}) {
      for (const auto& name : *list) {
        if (name.empty()) throw std::invalid_argument("schema: empty name");
        if (name.find('=') != std::string::npos)
          throw std::invalid_argument("schema: name may not contain '=': " + name);
        if (!seen.insert(name).second)
          throw std::invalid_argument("schema: duplicate name: " + name);
      }
    }
  }

  std::optional<std::size_t> dim_index(std::string_view name) const {
    for (std::size_t i = 0; i < continuous_dims.size(); ++i)
      if (continuous_dims[i] == name) return i;
    return std::nullopt;
  }

  bool has_attr(std::string_view name) const {
    for (const auto& a : discrete_attrs)
      if (a == name) return true;
    return false;
  }

  bool operator==(const Schema&) const = default;
};

/// One data owner's published metadata: a point in the continuous space plus
/// discrete attribute values. An absent attribute and an empty value are the
/// same thing in the canonical encoding, so empty values are rejected;
/// absence is expressed by omitting the key.
struct MetadataRecord {
  std::string owner_id;
  std::vector<double> continuous;
  std::map<std::string, std::string> discrete;

  bool operator==(const MetadataRecord&) const = default;
};

inline void validate_record(const Schema& schema, const MetadataRecord& rec) {
  if (rec.continuous.size() != schema.dims())
    throw std::invalid_argument("record: coordinate count does not match schema");
  for (double v : rec.continuous) {
    if (!std::isfinite(v)) throw std::invalid_argument("record: non-finite coordinate");
  }
  for (const auto& [attr, value] : rec.discrete) {
    if (!schema.has_attr(attr))
      throw std::invalid_argument("record: unknown discrete attribute: " + attr);
    if (value.empty())
      throw std::invalid_argument("record: empty value for attribute '" + attr +
                                  "'; omit the attribute instead");
  }
}

/// Key under which a discrete (attribute, value) pair enters the bloom
/// filters: "attr=value" as UTF-8. Qualifying by attribute name keeps equal
/// values of different attributes from colliding.
inline std::vector<std::uint8_t> discrete_key(std::string_view attr, std::string_view value) {
  if (attr.find('=') != std::string_view::npos)
    throw std::invalid_argument("discrete key: attribute name may not contain '='");
  std::vector<std::uint8_t> out;
  out.reserve(attr.size() + 1 + value.size());
  out.insert(out.end(), attr.begin(), attr.end());
  out.push_back('=');
  out.insert(out.end(), value.begin(), value.end());
  return out;
}

struct Interval {
  double lo = 0;
  double hi = 0;
  bool operator==(const Interval&) const = default;
};

/// Conjunctive query: a record matches iff every present range contains its
/// coordinate (closed intervals) and every discrete condition equals its
/// attribute value exactly.
struct Query {
  std::vector<std::optional<Interval>> ranges;  // one slot per schema dimension
  std::vector<std::pair<std::string, std::string>> discrete_conds;

  bool has_range() const {
    for (const auto& r : ranges)
      if (r) return true;
    return false;
  }
};

inline void validate_query(const Schema& schema, const Query& q) {
  if (q.ranges.size() != schema.dims())
    throw std::invalid_argument("query: range slot count does not match schema");
  bool any = false;
  for (const auto& r : q.ranges) {
    if (!r) continue;
    any = true;
    if (!(r->lo <= r->hi)) throw std::invalid_argument("query: interval with lo > hi");
  }
  for (const auto& [attr, value] : q.discrete_conds) {
    any = true;
    if (!schema.has_attr(attr))
      throw std::invalid_argument("query: unknown discrete attribute: " + attr);
    (void)value;
  }
  if (!any) throw std::invalid_argument("query: at least one condition required");
}

inline bool matches(const Query& q, const MetadataRecord& rec) {
  for (std::size_t i = 0; i < q.ranges.size(); ++i) {
    if (!q.ranges[i]) continue;
    const double v = rec.continuous[i];
    if (v < q.ranges[i]->lo || v > q.ranges[i]->hi) return false;
  }
  for (const auto& [attr, value] : q.discrete_conds) {
    auto it = rec.discrete.find(attr);
    if (it == rec.discrete.end() || it->second != value) return false;
  }
  return true;
}

/// Bloom keys of the query's discrete conditions, in condition order.
inline std::vector<std::vector<std::uint8_t>> query_keys(const Query& q) {
  std::vector<std::vector<std::uint8_t>> keys;
  keys.reserve(q.discrete_conds.size());
  for (const auto& [attr, value] : q.discrete_conds) keys.push_back(discrete_key(attr, value));
  return keys;
}

/// Materializes the query rectangle: query interval on constrained
/// dimensions, full space extent on unconstrained ones.
inline Mbr query_to_mbr(const Query& q, const Mbr& space) {
  if (q.ranges.size() != space.dims())
    throw std::invalid_argument("query: dimension mismatch with space");
  std::vector<double> low(space.dims()), high(space.dims());
  for (std::size_t i = 0; i < space.dims(); ++i) {
    if (q.ranges[i]) {
      if (!(q.ranges[i]->lo <= q.ranges[i]->hi))
        throw std::invalid_argument("query: interval with lo > hi");
      low[i] = q.ranges[i]->lo;
      high[i] = q.ranges[i]->hi;
    } else {
      low[i] = space.low(i);
      high[i] = space.high(i);
    }
  }
  return Mbr(std::move(low), std::move(high));
}

/// Intersection test between the query's constrained dimensions and a box;
/// unconstrained dimensions always intersect. Equivalent to materializing
/// the query over an all-covering space, without needing that space.
inline bool ranges_intersect(const Query& q, const Mbr& box) {
  for (std::size_t i = 0; i < q.ranges.size(); ++i) {
    if (!q.ranges[i]) continue;
    if (q.ranges[i]->lo > box.high(i) || box.low(i) > q.ranges[i]->hi) return false;
  }
  return true;
}

}  // namespace mrbt
