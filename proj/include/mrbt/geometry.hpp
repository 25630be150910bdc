#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace mrbt {

/// d-dimensional minimum bounding rectangle over closed intervals
/// [low[i], high[i]]. Shared boundaries count as intersecting, so point
/// queries on a face still match.
class Mbr {
 public:
  Mbr(std::vector<double> low, std::vector<double> high)
      : low_(std::move(low)), high_(std::move(high)) {
    if (low_.size() != high_.size())
      throw std::invalid_argument("mbr: low/high dimension mismatch");
    for (std::size_t i = 0; i < low_.size(); ++i) {
      if (!(low_[i] <= high_[i]))  // also rejects NaN
        throw std::invalid_argument("mbr: low > high (or non-finite bound)");
    }
  }

  static Mbr point(std::span<const double> p) {
    std::vector<double> v(p.begin(), p.end());
    return Mbr(v, v);
  }

  std::size_t dims() const { return low_.size(); }
  double low(std::size_t i) const { return low_[i]; }
  double high(std::size_t i) const { return high_[i]; }
  const std::vector<double>& lows() const { return low_; }
  const std::vector<double>& highs() const { return high_; }

  void expand(const Mbr& other) {
    check_dims(other);
    for (std::size_t i = 0; i < low_.size(); ++i) {
      low_[i] = std::min(low_[i], other.low_[i]);
      high_[i] = std::max(high_[i], other.high_[i]);
    }
  }

  bool intersects(const Mbr& other) const {
    check_dims(other);
    for (std::size_t i = 0; i < low_.size(); ++i) {
      if (low_[i] > other.high_[i] || other.low_[i] > high_[i]) return false;
    }
    return true;
  }

  bool contains(const Mbr& inner) const {
    check_dims(inner);
    for (std::size_t i = 0; i < low_.size(); ++i) {
      if (inner.low_[i] < low_[i] || inner.high_[i] > high_[i]) return false;
    }
    return true;
  }

  bool contains_point(std::span<const double> p) const {
    if (p.size() != low_.size())
      throw std::invalid_argument("mbr: point dimension mismatch");
    for (std::size_t i = 0; i < low_.size(); ++i) {
      if (p[i] < low_[i] || p[i] > high_[i]) return false;
    }
    return true;
  }

  bool operator==(const Mbr&) const = default;

 private:
  void check_dims(const Mbr& other) const {
    if (low_.size() != other.low_.size())
      throw std::invalid_argument("mbr: dimension mismatch");
  }

  std::vector<double> low_;
  std::vector<double> high_;
};

inline Mbr mbr_union(const Mbr& a, const Mbr& b) {
  Mbr out = a;
  out.expand(b);
  return out;
}

inline bool mbr_intersects(const Mbr& a, const Mbr& b) { return a.intersects(b); }

}  // namespace mrbt
