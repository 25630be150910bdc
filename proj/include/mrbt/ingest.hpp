#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mrbt/geometry.hpp"
#include "mrbt/metadata.hpp"

namespace mrbt {

/// Maps CSV columns onto a schema: continuous columns align with
/// schema.continuous_dims by position, discrete columns with
/// schema.discrete_attrs. Without an id column the data-row index becomes
/// the owner id.
struct CsvMapping {
  std::vector<std::string> continuous_columns;
  std::vector<std::string> discrete_columns;
  std::optional<std::string> id_column;
};

struct CsvReject {
  std::size_t line;  // 1-based file line number (header is line 1)
  std::string reason;
};

struct CsvResult {
  std::vector<MetadataRecord> records;
  std::vector<CsvReject> rejects;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

/// Splits one CSV line: comma separators, double-quoted fields with ""
/// escapes, whitespace trimmed outside quotes. Embedded newlines are not
/// supported.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool in_quotes = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(was_quoted ? cur : trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(was_quoted ? cur : trim(cur));
  return fields;
}

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/// Loads a CSV file into records. Rows with unparseable mapped cells are
/// collected as rejects with their line numbers; everything else loads in
/// file order.
inline CsvResult parse_csv(const std::filesystem::path& path, const CsvMapping& mapping,
                           const Schema& schema) {
  schema.validate();
  if (mapping.continuous_columns.size() != schema.dims())
    throw std::invalid_argument("csv mapping: continuous column count does not match schema");
  if (mapping.discrete_columns.size() != schema.discrete_attrs.size())
    throw std::invalid_argument("csv mapping: discrete column count does not match schema");

  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: missing header row");
  const auto header = detail::split_csv_line(line);
  auto column_index = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw std::runtime_error("csv: missing column: " + name);
  };

  std::vector<std::size_t> cont_idx, disc_idx;
  for (const auto& c : mapping.continuous_columns) cont_idx.push_back(column_index(c));
  for (const auto& c : mapping.discrete_columns) disc_idx.push_back(column_index(c));
  std::optional<std::size_t> id_idx;
  if (mapping.id_column) id_idx = column_index(*mapping.id_column);

  CsvResult result;
  std::size_t line_no = 1;
  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    const auto fields = detail::split_csv_line(line);
    auto cell = [&](std::size_t idx) -> const std::string& {
      static const std::string kEmpty;
      return idx < fields.size() ? fields[idx] : kEmpty;
    };

    MetadataRecord rec;
    rec.owner_id = id_idx ? cell(*id_idx) : std::to_string(data_row);
    bool ok = true;
    for (std::size_t i = 0; i < cont_idx.size(); ++i) {
      const auto v = detail::parse_double(cell(cont_idx[i]));
      if (!v) {
        result.rejects.push_back(
            {line_no, "bad numeric cell in column '" + mapping.continuous_columns[i] + "'"});
        ok = false;
        break;
      }
      rec.continuous.push_back(*v);
    }
    if (!ok) {
      ++data_row;
      continue;
    }
    for (std::size_t i = 0; i < disc_idx.size(); ++i) {
      const std::string& v = cell(disc_idx[i]);
      if (!v.empty()) rec.discrete.emplace(schema.discrete_attrs[i], v);
    }
    result.records.push_back(std::move(rec));
    ++data_row;
  }
  return result;
}

/// Deterministic uniform synthetic records: coordinates uniform in the given
/// space, discrete values uniform over the given universes. Output depends
/// only on (n, seed, space, universe).
inline std::vector<MetadataRecord> gen_uniform(
    std::size_t n, std::uint64_t seed, const Mbr& space,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& universe) {
  if (n == 0) throw std::invalid_argument("gen_uniform: n must be positive");
  std::mt19937_64 rng(seed);
  // 53-bit mantissa draw; avoids distribution objects whose output can vary
  // between standard library implementations.
  auto next_unit = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  std::vector<MetadataRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    MetadataRecord rec;
    rec.owner_id = "owner-" + std::to_string(i);
    rec.continuous.reserve(space.dims());
    for (std::size_t dim = 0; dim < space.dims(); ++dim) {
      rec.continuous.push_back(space.low(dim) +
                               next_unit() * (space.high(dim) - space.low(dim)));
    }
    for (const auto& [attr, values] : universe) {
      if (values.empty()) continue;
      rec.discrete.emplace(attr, values[rng() % values.size()]);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

/// The unit cube [0,1]^d.
inline Mbr unit_space(std::size_t dims) {
  return Mbr(std::vector<double>(dims, 0.0), std::vector<double>(dims, 1.0));
}

}  // namespace mrbt
