#pragma once

#include "supermoment/core.hpp"

#include <bit>
#include <cstdint>
#include <vector>

namespace supermoment {

/// Bitmask over {1..n}; bit i-1 stands for z_i.
using SubsetKey = std::uint32_t;

inline int subsetSize(SubsetKey key) { return std::popcount(key); }

/// Bell numbers by the Bell triangle.
inline std::uint64_t bellNumber(int n) {
  require(n >= 0 && n <= 25, "bellNumber: n must lie in [0, 25]");
  std::vector<std::uint64_t> row{1};
  for (int i = 0; i < n; ++i) {
    std::vector<std::uint64_t> next{row.back()};
    for (auto v : row) next.push_back(next.back() + v);
    row = std::move(next);
  }
  return row.front();
}

/// Calls fn(blocks) once for every set partition of {1..n}; blocks is a
/// vector of nonempty disjoint SubsetKeys covering the full mask. Partitions
/// are generated as restricted growth strings in lexicographic order.
template <class Fn>
void forEachPartition(int n, Fn&& fn) {
  require(n >= 1 && n <= 10, "partitions: n must lie in [1, 10]");
  std::vector<int> a(n, 0), maxPrefix(n, 0);
  std::vector<SubsetKey> blocks;
  for (;;) {
    int count = 0;
    for (int v : a) count = std::max(count, v + 1);
    blocks.assign(count, 0);
    for (int i = 0; i < n; ++i) blocks[a[i]] |= SubsetKey{1} << i;
    fn(static_cast<const std::vector<SubsetKey>&>(blocks));
    // next restricted growth string: a[0] = 0, a[i] <= 1 + max(a[0..i-1])
    int i = n - 1;
    while (i > 0 && a[i] == maxPrefix[i - 1] + 1) --i;
    if (i == 0) return;
    ++a[i];
    maxPrefix[i] = std::max(maxPrefix[i - 1], a[i]);
    for (int k = i + 1; k < n; ++k) {
      a[k] = 0;
      maxPrefix[k] = maxPrefix[i];
    }
  }
}

inline std::vector<std::vector<SubsetKey>> enumeratePartitions(int n) {
  std::vector<std::vector<SubsetKey>> out;
  forEachPartition(n, [&](const std::vector<SubsetKey>& b) { out.push_back(b); });
  return out;
}

}  // namespace supermoment
