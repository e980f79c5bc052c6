#pragma once

// Test-only ground truth, written independently of the library's
// implementation path: plain loops, no shared helpers.

#include <optional>
#include <vector>

namespace oracle {

using Digits = std::vector<int>;

// Straight transliteration of the two recurrence equations.
inline Digits response_original(const Digits& x, int a, const Digits& y,
                                int c, int z) {
  int n = static_cast<int>(x.size());
  Digits k(n);
  k[0] = (a * x[0] + y[0] + x[1] + c) % z;
  for (int i = 1; i < n; ++i) {
    int succ = (i + 1) % n;  // 0-based successor of x_{i+1}
    k[i] = (a * k[i - 1] + y[i] + x[i] + c + x[succ]) % z;
  }
  return k;
}

// Exhaustive c scan, smallest match first.
inline std::optional<int> verify_original(const Digits& x, int a,
                                          const Digits& y, const Digits& k,
                                          int z) {
  for (int c = 0; c < z; ++c) {
    if (response_original(x, a, y, c, z) == k) return c;
  }
  return std::nullopt;
}

// All X consistent with one transcript for fixed (a, c), by brute force
// over the full X space.
inline std::vector<Digits> solve_single_bruteforce(const Digits& y,
                                                   const Digits& k, int a,
                                                   int c, int z) {
  int n = static_cast<int>(y.size());
  std::vector<Digits> out;
  Digits x(n, 0);
  while (true) {
    if (response_original(x, a, y, c, z) == k) out.push_back(x);
    int pos = n - 1;
    while (pos >= 0 && ++x[pos] == z) x[pos--] = 0;
    if (pos < 0) break;
  }
  return out;
}

inline int gcd(int a, int b) { return b == 0 ? a : gcd(b, a % b); }

}  // namespace oracle
