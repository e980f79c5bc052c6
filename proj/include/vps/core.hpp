#pragma once

#include <numeric>
#include <optional>
#include <stdexcept>
#include <utility>

#include "vps/alphabet.hpp"
#include "vps/rng.hpp"

namespace vps {

// 1-based successor with wrap: successor of n is 1, successor of 1 is 2.
inline int wrap_index(int i, int n) {
  if (n < 2 || i < 1 || i > n) {
    throw std::invalid_argument("wrap_index: position out of range");
  }
  return (i % n) + 1;
}

inline bool is_valid_multiplier(int a, int z) {
  if (z < 2 || a < 0 || a >= z) {
    throw std::invalid_argument("is_valid_multiplier: bad arguments");
  }
  return std::gcd(a, z) == 1;
}

inline void check_digits_in_range(const DigitVec& digits, int z,
                                  const char* what) {
  for (int d : digits) {
    if (d < 0 || d >= z) {
      throw std::invalid_argument(std::string(what) + ": digit out of range");
    }
  }
}

// The long-term shared secret: fixed digit string plus the ring unit
// that scales the recurrence.
struct SecretCredential {
  DigitVec digits;    // x_1 .. x_n
  int multiplier = 0; // a, gcd(a, Z) = 1

  static SecretCredential checked(DigitVec digits, int multiplier, int z) {
    if (digits.size() < 2) {
      throw std::invalid_argument("credential needs at least 2 digits");
    }
    check_digits_in_range(digits, z, "credential");
    if (!is_valid_multiplier(multiplier, z)) {
      throw std::invalid_argument("multiplier must satisfy gcd(a, Z) = 1");
    }
    return SecretCredential{std::move(digits), multiplier};
  }

  int length() const { return static_cast<int>(digits.size()); }

  bool operator==(const SecretCredential&) const = default;
};

struct Salt {
  DigitVec digits;  // y_1 .. y_n

  static Salt checked(DigitVec digits, int z) {
    check_digits_in_range(digits, z, "salt");
    return Salt{std::move(digits)};
  }

  int length() const { return static_cast<int>(digits.size()); }

  bool operator==(const Salt&) const = default;
};

struct Response {
  DigitVec digits;  // k_1 .. k_n

  int length() const { return static_cast<int>(digits.size()); }

  bool operator==(const Response&) const = default;
};

struct SessionNonce {
  int c = 0;  // in [0, Z)
};

// Original scheme response:
//   k_1 = (a x_1 + y_1 + x_2 + c) mod Z
//   k_i = (a k_{i-1} + y_i + x_i + c + x_{wrap(i)}) mod Z   for 2 <= i <= n
inline Response compute_response_original(const SecretCredential& cred,
                                          const Salt& salt,
                                          SessionNonce nonce, int z) {
  const int n = cred.length();
  if (salt.length() != n) {
    throw std::invalid_argument("salt length must match credential length");
  }
  if (n < 2) throw std::invalid_argument("credential too short");
  const long long a = cred.multiplier;
  const long long c = nonce.c;
  const auto& x = cred.digits;
  const auto& y = salt.digits;

  DigitVec k(n);
  k[0] = static_cast<int>((a * x[0] + y[0] + x[1] + c) % z);
  for (int i = 2; i <= n; ++i) {
    long long v = a * k[i - 2] + y[i - 1] + x[i - 1] + c + x[wrap_index(i, n) - 1];
    k[i - 1] = static_cast<int>(v % z);
  }
  return Response{std::move(k)};
}

// Modified scheme: the original recurrence with the session nonce removed.
inline Response compute_response_modified(const SecretCredential& cred,
                                          const Salt& salt, int z) {
  return compute_response_original(cred, salt, SessionNonce{0}, z);
}

struct VerifyOutcome {
  bool accepted = false;
  int matched_c = -1;    // smallest matching c when accepted
  int computations = 0;  // response recomputations performed
};

// Server-side check for the original scheme: scan c = 0 .. Z-1 and accept
// on the smallest c reproducing the response.
inline VerifyOutcome verify_original(const SecretCredential& cred,
                                     const Salt& salt,
                                     const Response& response, int z) {
  if (response.length() != cred.length()) {
    throw std::invalid_argument("response length must match credential length");
  }
  VerifyOutcome out;
  for (int c = 0; c < z; ++c) {
    ++out.computations;
    if (compute_response_original(cred, salt, SessionNonce{c}, z) == response) {
      out.accepted = true;
      out.matched_c = c;
      return out;
    }
  }
  return out;
}

inline bool verify_modified(const SecretCredential& cred, const Salt& salt,
                            const Response& response, int z) {
  if (response.length() != cred.length()) {
    throw std::invalid_argument("response length must match credential length");
  }
  return compute_response_modified(cred, salt, z) == response;
}

inline Salt random_salt(int n, const Alphabet& alphabet, Rng& rng) {
  if (n < 2) throw std::invalid_argument("salt length must be at least 2");
  DigitVec digits(n);
  for (int& d : digits) d = static_cast<int>(rng.below(alphabet.size()));
  return Salt{std::move(digits)};
}

inline SessionNonce random_nonce(const Alphabet& alphabet, Rng& rng) {
  return SessionNonce{static_cast<int>(rng.below(alphabet.size()))};
}

}  // namespace vps
