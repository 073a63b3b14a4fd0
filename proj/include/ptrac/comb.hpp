#pragma once

#include <algorithm>
#include <span>
#include <stdexcept>
#include <vector>

namespace ptrac {

inline long binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

inline constexpr int kMaxCombN = 8;

/// Strictly increasing k-tuples out of {0..n-1}, lexicographic.
/// Backed by fixed storage so returned references stay valid.
inline const std::vector<std::vector<int>>& combinations(int n, int k) {
  static thread_local std::vector<std::vector<int>> cache[kMaxCombN + 1][kMaxCombN + 1];
  if (n < 0 || n > kMaxCombN || k < 0 || k > kMaxCombN) throw std::out_of_range("combinations");
  auto& slot = cache[n][k];
  if (slot.empty() && binom(n, k) > 0) {
    std::vector<int> cur(k);
    auto rec = [&](auto&& self, int start, int depth) -> void {
      if (depth == k) {
        slot.push_back(cur);
        return;
      }
      for (int i = start; i < n; ++i) {
        cur[depth] = i;
        self(self, i + 1, depth + 1);
      }
    };
    rec(rec, 0, 0);
  }
  return slot;
}

/// Rank of a sorted tuple within combinations(n,k).
inline int comb_rank(int n, std::span<const int> sorted) {
  int k = static_cast<int>(sorted.size());
  long r = 0;
  int prev = -1;
  for (int i = 0; i < k; ++i) {
    for (int x = prev + 1; x < sorted[i]; ++x) r += binom(n - 1 - x, k - 1 - i);
    prev = sorted[i];
  }
  return static_cast<int>(r);
}

/// Sorts `idx` in place; returns the permutation sign, or 0 on repeats.
inline int sort_sign(std::span<int> idx) {
  int sign = 1;
  for (size_t i = 0; i < idx.size(); ++i)
    for (size_t j = i + 1; j < idx.size(); ++j) {
      if (idx[i] == idx[j]) return 0;
      if (idx[i] > idx[j]) {
        std::swap(idx[i], idx[j]);
        sign = -sign;
      }
    }
  return sign;
}

/// Sign of the permutation taking (a..., b...) to sorted order; 0 on overlap.
inline int merge_sign(std::span<const int> a, std::span<const int> b, std::vector<int>& merged) {
  merged.assign(a.begin(), a.end());
  merged.insert(merged.end(), b.begin(), b.end());
  return sort_sign(merged);
}

}  // namespace ptrac
