#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vps/core.hpp"
#include "vps/rng.hpp"

namespace vps {

// One observed login: the public salt and the virtual password sent back.
struct Transcript {
  Salt salt;
  Response response;

  int length() const { return salt.length(); }
};

struct CandidateKey {
  DigitVec digits;
  int multiplier = 0;

  auto operator<=>(const CandidateKey&) const = default;
};

struct AttackReport {
  std::vector<CandidateKey> candidates;  // canonical sorted order
  std::vector<std::size_t> per_transcript_counts;
  std::uint64_t work = 0;  // (a, c) pairs examined
};

namespace detail {

inline int mod(long long v, int z) {
  long long r = v % z;
  return static_cast<int>(r < 0 ? r + z : r);
}

// All x in [0, Z) with u*x = v (mod Z). Coefficient 0 means gcd Z:
// every residue solves 0 = 0, none solves 0 = v != 0.
inline std::vector<int> solve_linear_congruence(int u, int v, int z) {
  int g = std::gcd(u, z);  // gcd(0, z) == z
  if (v % g != 0) return {};
  int m = z / g;
  int x0 = 0;
  if (m > 1) {
    // Inverse of u/g modulo m via extended Euclid.
    long long a = (u / g) % m, b = m, s0 = 1, s1 = 0;
    while (b) {
      long long q = a / b;
      std::swap(a -= q * b, b);
      std::swap(s0 -= q * s1, s1);
    }
    long long inv = ((s0 % m) + m) % m;
    x0 = static_cast<int>((inv * ((v / g) % m)) % m);
  }
  std::vector<int> out;
  out.reserve(g);
  for (int t = 0; t < g; ++t) out.push_back(x0 + t * m);
  return out;
}

}  // namespace detail

// With (a, c) fixed, every k_{i-1} in the transcript is known, so the
// recurrence is linear in X:
//   a*x_1 + x_2        = k_1 - y_1 - c                  (mod Z)
//   x_i + x_{wrap(i)}  = k_i - a*k_{i-1} - y_i - c      (mod Z), 2 <= i <= n
// Forward substitution writes each x_j as alpha_j + beta_j * x_1; the wrap
// equation collapses to one linear congruence in x_1.
inline std::vector<DigitVec> solve_single(const Transcript& t, int a, int c,
                                          int z) {
  const int n = t.length();
  if (n < 2 || t.response.length() != n) {
    throw std::invalid_argument("solve_single: malformed transcript");
  }
  if (!is_valid_multiplier(a, z)) {
    throw std::invalid_argument("solve_single: a must be a unit mod Z");
  }
  const auto& y = t.salt.digits;
  const auto& k = t.response.digits;

  std::vector<int> rhs(n + 1);
  rhs[1] = detail::mod(static_cast<long long>(k[0]) - y[0] - c, z);
  for (int i = 2; i <= n; ++i) {
    rhs[i] = detail::mod(
        static_cast<long long>(k[i - 1]) - static_cast<long long>(a) * k[i - 2] -
            y[i - 1] - c,
        z);
  }

  // x_j = alpha[j] + beta[j] * x_1 (mod Z), j >= 2.
  std::vector<int> alpha(n + 1), beta(n + 1);
  alpha[2] = rhs[1];
  beta[2] = detail::mod(-a, z);
  for (int i = 2; i < n; ++i) {
    alpha[i + 1] = detail::mod(rhs[i] - alpha[i], z);
    beta[i + 1] = detail::mod(-beta[i], z);
  }

  // Equation n: x_n + x_1 = rhs[n]  ->  (beta_n + 1) x_1 = rhs[n] - alpha_n.
  int coeff = detail::mod(beta[n] + 1, z);
  int constant = detail::mod(rhs[n] - alpha[n], z);

  std::vector<DigitVec> solutions;
  for (int x1 : detail::solve_linear_congruence(coeff, constant, z)) {
    DigitVec x(n);
    x[0] = x1;
    for (int j = 2; j <= n; ++j) {
      x[j - 1] = detail::mod(alpha[j] + static_cast<long long>(beta[j]) * x1, z);
    }
    solutions.push_back(std::move(x));
  }
  return solutions;
}

inline bool key_reproduces(const CandidateKey& key, const Transcript& t, int z,
                           std::uint64_t& work) {
  SecretCredential cred{key.digits, key.multiplier};
  for (int c = 0; c < z; ++c) {
    ++work;
    if (compute_response_original(cred, t.salt, SessionNonce{c}, z) ==
        t.response) {
      return true;
    }
  }
  return false;
}

// Known-transcript key recovery: solve the first transcript for every
// unit (a, c), then intersect with each further transcript.
inline AttackReport attack(const std::vector<Transcript>& transcripts, int z,
                           int n) {
  if (transcripts.empty()) {
    throw std::invalid_argument("attack: need at least one transcript");
  }
  for (const auto& t : transcripts) {
    if (t.length() != n || t.response.length() != n) {
      throw std::invalid_argument("attack: transcript length mismatch");
    }
  }

  AttackReport report;
  std::set<CandidateKey> candidates;
  for (int a = 0; a < z; ++a) {
    if (std::gcd(a, z) != 1) continue;
    for (int c = 0; c < z; ++c) {
      ++report.work;
      for (auto& x : solve_single(transcripts[0], a, c, z)) {
        candidates.insert(CandidateKey{std::move(x), a});
      }
    }
  }
  report.per_transcript_counts.push_back(candidates.size());

  for (std::size_t ti = 1; ti < transcripts.size(); ++ti) {
    std::set<CandidateKey> survivors;
    for (const auto& key : candidates) {
      if (key_reproduces(key, transcripts[ti], z, report.work)) {
        survivors.insert(key);
      }
    }
    candidates = std::move(survivors);
    report.per_transcript_counts.push_back(candidates.size());
  }

  report.candidates.assign(candidates.begin(), candidates.end());
  return report;
}

// Ground truth by definition: try every (X, a) against every transcript.
inline std::vector<CandidateKey> oracle_enumerate(
    const std::vector<Transcript>& transcripts, int z, int n) {
  if (transcripts.empty()) {
    throw std::invalid_argument("oracle_enumerate: need >= 1 transcript");
  }
  double space = std::pow(static_cast<double>(z), n);
  if (space > 1e6) {
    throw std::invalid_argument(
        "oracle_enumerate: key space exceeds the 10^6 enumeration guard");
  }

  std::vector<CandidateKey> out;
  DigitVec x(n, 0);
  std::uint64_t ignored_work = 0;
  while (true) {
    for (int a = 0; a < z; ++a) {
      if (std::gcd(a, z) != 1) continue;
      CandidateKey key{x, a};
      bool all = true;
      for (const auto& t : transcripts) {
        if (!key_reproduces(key, t, z, ignored_work)) {
          all = false;
          break;
        }
      }
      if (all) out.push_back(std::move(key));
    }
    int pos = n - 1;
    while (pos >= 0 && ++x[pos] == z) x[pos--] = 0;
    if (pos < 0) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct ExperimentResult {
  int z = 0;
  int n = 0;
  int transcripts_per_trial = 0;
  int trials = 0;
  double unique_rate = 0.0;      // trials where candidates == {true key}
  double true_key_rate = 0.0;    // trials where the true key survived
  double mean_candidates = 0.0;
  std::uint64_t work = 0;
};

inline ExperimentResult attack_success_experiment(int z, int n, int trials,
                                                  int transcripts_per_trial,
                                                  Rng& rng) {
  if (z < 2 || n < 2 || trials < 1 || transcripts_per_trial < 1) {
    throw std::invalid_argument("attack_success_experiment: bad parameters");
  }
  // Symbols are irrelevant here; only the modulus matters.
  Alphabet alphabet = [z] {
    std::string symbols;
    for (int i = 0; i < z; ++i) symbols.push_back(static_cast<char>(i + 1));
    return Alphabet(std::move(symbols));
  }();

  ExperimentResult result{z, n, transcripts_per_trial, trials, 0, 0, 0, 0};
  int unique_hits = 0, survived = 0;
  double total_candidates = 0;

  for (int trial = 0; trial < trials; ++trial) {
    DigitVec x(n);
    for (int& d : x) d = static_cast<int>(rng.below(z));
    int a;
    do {
      a = static_cast<int>(rng.below(z));
    } while (std::gcd(a, z) != 1);
    SecretCredential cred{x, a};

    std::vector<Transcript> transcripts;
    for (int i = 0; i < transcripts_per_trial; ++i) {
      Salt salt = random_salt(n, alphabet, rng);
      SessionNonce nonce = random_nonce(alphabet, rng);
      Response resp = compute_response_original(cred, salt, nonce, z);
      transcripts.push_back(Transcript{std::move(salt), std::move(resp)});
    }

    AttackReport report = attack(transcripts, z, n);
    result.work += report.work;
    total_candidates += static_cast<double>(report.candidates.size());
    CandidateKey truth{x, a};
    bool found = std::binary_search(report.candidates.begin(),
                                    report.candidates.end(), truth);
    if (found) ++survived;
    if (found && report.candidates.size() == 1) ++unique_hits;
  }

  result.unique_rate = static_cast<double>(unique_hits) / trials;
  result.true_key_rate = static_cast<double>(survived) / trials;
  result.mean_candidates = total_candidates / trials;
  return result;
}

inline std::string experiment_csv_header() {
  return "Z,n,transcripts,trials,unique_rate,mean_candidates,work";
}

inline std::string experiment_csv_row(const ExperimentResult& r) {
  std::ostringstream oss;
  oss << r.z << ',' << r.n << ',' << r.transcripts_per_trial << ',' << r.trials
      << ',' << r.unique_rate << ',' << r.mean_candidates << ',' << r.work;
  return oss.str();
}

// Keys consistent with an observed response when the salt is sealed and
// unknown: (X, a) survives if any salt reproduces K under the modified
// scheme. Used to demonstrate that a lone K eliminates nothing.
inline std::vector<CandidateKey> keys_consistent_with_modified_response(
    const Response& response, int z, int n) {
  double space = std::pow(static_cast<double>(z), 2 * n);
  if (space > 1e8) {
    throw std::invalid_argument("enumeration guard exceeded");
  }
  std::vector<CandidateKey> out;
  DigitVec x(n, 0);
  while (true) {
    for (int a = 0; a < z; ++a) {
      if (std::gcd(a, z) != 1) continue;
      SecretCredential cred{x, a};
      DigitVec y(n, 0);
      bool reachable = false;
      while (!reachable) {
        if (compute_response_modified(cred, Salt{y}, z) == response) {
          reachable = true;
          break;
        }
        int pos = n - 1;
        while (pos >= 0 && ++y[pos] == z) y[pos--] = 0;
        if (pos < 0) break;
      }
      if (reachable) out.push_back(CandidateKey{x, a});
    }
    int pos = n - 1;
    while (pos >= 0 && ++x[pos] == z) x[pos--] = 0;
    if (pos < 0) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace vps
